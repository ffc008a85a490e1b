#include "pmelab/runner.hpp"

#include "pmelab/csv.hpp"

#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <future>
#include <iomanip>
#include <ostream>
#include <sstream>

namespace pmelab {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string fmt_short(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

std::string run_dir_name(double m) { return "run_m" + fmt_short(m); }

void write_assumptions_csv(const std::string& path, const AssumptionReport& report) {
  auto out = csv::open_output(path);
  out << "name,pass,margin,worst_point,detail\n";
  for (const auto& c : report.checks)
    out << c.name << ',' << (c.pass ? "1" : "0") << ',' << csv::format(c.margin) << ",\""
        << c.worst_point << "\",\"" << c.detail << "\"\n";
  for (const auto& note : report.notes) out << "note,,,,\"" << note << "\"\n";
}

void print_assumption_table(std::ostream& out, const AssumptionReport& report) {
  out << std::left << std::setw(32) << "assumption" << std::setw(6) << "state"
      << std::setw(14) << "margin" << "worst at\n";
  for (const auto& c : report.checks) {
    out << std::left << std::setw(32) << c.name << std::setw(6) << (c.pass ? "PASS" : "FAIL")
        << std::setw(14) << fmt_short(c.margin) << c.worst_point << '\n';
    if (!c.pass && !c.detail.empty()) out << "    " << c.detail << '\n';
  }
  for (const auto& note : report.notes) out << "note: " << note << '\n';
}

void write_report_csv(const std::string& path, const DiagnosticsRow& row) {
  row.ensure_finite();
  auto out = csv::open_output(path);
  out << "quantity,value\n";
  auto put = [&](const char* name, double v) { out << name << ',' << csv::format(v) << '\n'; };
  put("m", row.m);
  put("ab_threshold", row.ab_threshold);
  put("below_ab_threshold", row.below_ab_threshold ? 1.0 : 0.0);
  put("sup_p", row.sup_p);
  put("gradp_L2_QT", row.gradp_l2);
  put("gradp_L4_OT", row.gradp_l4);
  put("lap_p_L1_OT", row.lap_p_l1);
  put("wneg_L3_OT", row.wneg_l3);
  put("dtu_L1", row.dtu_l1);
  put("gradu_L1", row.gradu_l1);
  put("dtp_L1", row.dtp_l1);
  put("complementarity_L1", row.complementarity_l1);
  put("max_clamp_fraction", row.max_clamp_fraction);
  put("support_radius_initial", row.support_radius.empty() ? 0.0 : row.support_radius.front());
  put("support_radius_final", row.support_radius.empty() ? 0.0 : row.support_radius.back());
  put("front_level", row.front.level);
  put("front_position_final", row.front.final_position);
  put("front_position_final_level_x10", row.front.final_position_level_x10);
  put("front_position_final_level_div10", row.front.final_position_level_div10);
}

void write_front_csv(const std::string& path, const FrontSeries& front) {
  auto out = csv::open_output(path);
  out << "t,R,v_measured,v_predicted\n";
  for (const auto& pt : front.points)
    out << csv::format(pt.t) << ',' << csv::format(pt.position) << ','
        << csv::format(pt.v_measured) << ',' << csv::format(pt.v_predicted) << '\n';
}

void write_series_csv(const std::string& path, const Trajectory& traj,
                      const DiagnosticsRow& row) {
  auto out = csv::open_output(path);
  out << "t,support_radius,pressure_eq_residual\n";
  for (std::size_t k = 0; k < traj.states.size(); ++k) {
    out << csv::format(traj.states[k].t) << ',' << csv::format(row.support_radius[k]) << ',';
    // The residual uses centered time differences, so it exists only on
    // interior snapshots.
    if (k >= 1 && k - 1 < row.pressure_eq_residual.size())
      out << csv::format(row.pressure_eq_residual[k - 1]);
    out << '\n';
  }
}

class CsvStepSink : public StepSink {
 public:
  explicit CsvStepSink(const std::string& path) : out_(csv::open_output(path)) {
    out_ << "t,dt,mass,sup_p,support_radius,clamped_mass\n";
  }
  void on_step(const StepStats& s) override {
    out_ << csv::format(s.t) << ',' << csv::format(s.dt) << ',' << csv::format(s.mass) << ','
         << csv::format(s.sup_p) << ',' << csv::format(s.support_radius) << ','
         << csv::format(s.clamped_mass) << '\n';
  }

 private:
  std::ofstream out_;
};

struct MemberRun {
  double m = 0.0;
  Trajectory traj;
  DiagnosticsRow row;
  double seconds = 0.0;
  std::vector<std::string> files;  // relative to the output root
};

// Simulates one m and writes its run directory (snapshots, steps.csv,
// report, front, series). Paths in the returned list are relative to root.
MemberRun run_one_member(const Config& cfg, double m, const fs::path& root) {
  MemberRun result;
  result.m = m;
  const std::string dir_name = run_dir_name(m);
  const fs::path dir = root / dir_name;
  fs::create_directories(dir);

  auto t0 = std::chrono::steady_clock::now();
  const std::string steps_name = dir_name + "/steps.csv";
  {
    CsvStepSink sink((root / steps_name).string());
    SimulateOptions opts;
    opts.sink = &sink;
    result.traj = simulate(cfg.spec, m, opts);
  }
  result.files.push_back(steps_name);

  for (const State& s : result.traj.states) {
    std::string name = dir_name + "/u_m" + fmt_short(m) + "_t" + fmt_short(s.t) + ".csv";
    csv::write_field_snapshot((root / name).string(), result.traj.grid, s.u);
    result.files.push_back(name);
  }

  result.row = estimate_norms(result.traj, cfg.spec);

  std::string report_name = dir_name + "/report_m" + fmt_short(m) + ".csv";
  write_report_csv((root / report_name).string(), result.row);
  result.files.push_back(report_name);

  std::string front_name = dir_name + "/front_m" + fmt_short(m) + ".csv";
  write_front_csv((root / front_name).string(), result.row.front);
  result.files.push_back(front_name);

  std::string series_name = dir_name + "/series_m" + fmt_short(m) + ".csv";
  write_series_csv((root / series_name).string(), result.traj, result.row);
  result.files.push_back(series_name);

  result.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return result;
}

struct Preamble {
  Config cfg;
  AssumptionReport report;
  bool forced = false;
  fs::path root;
  std::vector<std::string> files;
};

// Loads the config, runs the checker, applies the force policy, creates the
// output root and writes the config copy and the assumption report.
Preamble prepare(const std::string& config_path, const RunOptions& opts, std::ostream& out) {
  Preamble pre;
  pre.cfg = load_config(config_path);
  if (opts.outdir) pre.cfg.outdir = *opts.outdir;
  pre.report = check_assumptions(pre.cfg.spec);
  bool force = pre.cfg.force || opts.force;
  if (!pre.report.all_pass()) {
    print_assumption_table(out, pre.report);
    if (!force) throw ConfigError("assumption check failed (use force to override)");
    pre.forced = true;
    out << "continuing despite failed assumptions (forced)\n";
  }
  pre.root = pre.cfg.outdir;
  fs::create_directories(pre.root);
  {
    auto copy = csv::open_output((pre.root / "config.txt").string());
    copy << pre.cfg.source_text;
  }
  pre.files.push_back("config.txt");
  write_assumptions_csv((pre.root / "assumptions.csv").string(), pre.report);
  pre.files.push_back("assumptions.csv");
  return pre;
}

void write_manifest(const Preamble& pre, const std::string& command,
                    const std::vector<std::string>& files, const json& timings,
                    const std::string& status, const std::vector<std::string>& errors) {
  json manifest;
  manifest["tool"] = kToolVersion;
  manifest["command"] = command;
  manifest["config"] = pre.cfg.name;
  manifest["config_copy"] = "config.txt";
  manifest["assumptions_pass"] = pre.report.all_pass();
  manifest["forced"] = pre.forced;
  manifest["ab_threshold"] = ab_m_threshold(pre.cfg.spec);
  manifest["status"] = status;
  if (!errors.empty()) manifest["errors"] = errors;
  manifest["timings_seconds"] = timings;
  json listed = json::array();
  for (const auto& f : files) {
    listed.push_back(f);
    if (!fs::exists(pre.root / f)) throw std::runtime_error("manifest references missing " + f);
  }
  manifest["outputs"] = listed;
  auto out = csv::open_output((pre.root / "manifest.json").string());
  out << manifest.dump(2) << '\n';
}

int classify(const std::exception& e, std::ostream& out) {
  out << "error: " << e.what() << '\n';
  if (dynamic_cast<const ConfigError*>(&e) || dynamic_cast<const std::invalid_argument*>(&e) ||
      dynamic_cast<const expr::ParseError*>(&e) || dynamic_cast<const expr::EvalError*>(&e))
    return 1;
  return 2;
}

std::vector<FrontPoint> read_front_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::vector<FrontPoint> points;
  std::string line;
  std::getline(in, line);  // header
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    FrontPoint pt;
    if (std::sscanf(line.c_str(), "%lf,%lf,%lf,%lf", &pt.t, &pt.position, &pt.v_measured,
                    &pt.v_predicted) != 4)
      throw std::runtime_error("malformed front row in " + path.string());
    points.push_back(pt);
  }
  return points;
}

}  // namespace

std::optional<OracleParams> oracle_compatibility(const ProblemSpec& spec) {
  Grid fine(spec.dim, 2 * spec.n, spec.half_width);
  CellCoords coords(fine);
  std::vector<double> times;
  if (spec.horizon == 0.0)
    times = {0.0};
  else
    for (int k = 0; k <= 8; ++k) times.push_back(spec.horizon * k / 8.0);

  OracleParams params;
  double a_lo = 1e300, a_hi = -1e300, b_lo = 1e300, b_hi = -1e300;
  for (double t : times) {
    Field a = spec.a_expr.eval(coords.env(t));
    Field b = spec.b_expr.eval(coords.env(t));
    a_lo = std::min(a_lo, a.minCoeff());
    a_hi = std::max(a_hi, a.maxCoeff());
    b_lo = std::min(b_lo, b.minCoeff());
    b_hi = std::max(b_hi, b.maxCoeff());
  }
  if (a_hi - a_lo > 1e-12 * std::max(1.0, std::abs(a_hi))) return std::nullopt;
  if (b_hi - b_lo > 1e-12 * std::max(1.0, std::abs(b_hi))) return std::nullopt;
  params.a = 0.5 * (a_lo + a_hi);
  params.b = 0.5 * (b_lo + b_hi);

  for (double t : times) {
    for (int j = 0; j <= 8; ++j) {
      double level = spec.p_ceiling * j / 8.0;
      Field p = Field::Constant(fine.cells(), level);
      Field phi = spec.phi_expr.eval(coords.env(t, p));
      double expected = spec.lambda * (spec.p_ceiling - level);
      if ((phi - expected).abs().maxCoeff() > 1e-9) return std::nullopt;
    }
  }
  return params;
}

double initial_support_radius(const ProblemSpec& spec) {
  const int samples = 8192;
  Field ray(samples);
  for (int i = 0; i < samples; ++i) ray[i] = spec.half_width * (i + 0.5) / samples;
  expr::BatchEnv env;
  env.x = &ray;
  Field zero;
  if (spec.dim == 2) {
    zero = Field::Zero(samples);
    env.y = &zero;
  }
  env.t = 0.0;
  Field u0 = spec.u0_expr.eval(env);
  double radius = 0.0;
  for (int i = 0; i < samples; ++i)
    if (u0[i] > kSupportTol) radius = ray[i];
  return radius;
}

std::optional<double> front_speed_error(const FrontSeries& front, double a, double lambda,
                                        double p_ceiling, double t_min) {
  std::vector<double> errors;
  for (const auto& pt : front.points) {
    if (pt.t < t_min) continue;
    double oracle = limit_front_speed(pt.position, a, lambda, p_ceiling);
    if (oracle <= 0.0) continue;
    errors.push_back(std::abs(pt.v_measured / oracle - 1.0));
  }
  if (errors.size() < 3) return std::nullopt;
  std::sort(errors.begin(), errors.end());
  std::size_t n = errors.size();
  return n % 2 == 1 ? errors[n / 2] : 0.5 * (errors[n / 2 - 1] + errors[n / 2]);
}

int run_check(const std::string& config_path, const RunOptions& opts, std::ostream& out) {
  try {
    Config cfg = load_config(config_path);
    if (opts.outdir) cfg.outdir = *opts.outdir;
    AssumptionReport report = check_assumptions(cfg.spec);
    print_assumption_table(out, report);
    fs::create_directories(cfg.outdir);
    write_assumptions_csv((fs::path(cfg.outdir) / "assumptions.csv").string(), report);
    return report.all_pass() ? 0 : 1;
  } catch (const std::exception& e) {
    return classify(e, out);
  }
}

int run_simulate(const std::string& config_path, const RunOptions& opts, std::ostream& out) {
  try {
    Preamble pre = prepare(config_path, opts, out);
    double m = opts.m ? *opts.m : pre.cfg.spec.m_list.front();
    if (!(m >= 2.0)) throw ConfigError("m must be at least 2");

    MemberRun member = run_one_member(pre.cfg, m, pre.root);
    auto files = pre.files;
    files.insert(files.end(), member.files.begin(), member.files.end());
    json timings;
    timings["m" + fmt_short(m)] = member.seconds;
    write_manifest(pre, "simulate", files, timings, "ok", {});
    out << "simulate m=" << fmt_short(m) << ": " << member.traj.steps << " steps, sup p = "
        << fmt_short(member.row.sup_p) << ", outputs in " << pre.root.string() << '\n';
    return 0;
  } catch (const std::exception& e) {
    return classify(e, out);
  }
}

int run_sweep(const std::string& config_path, const RunOptions& opts, std::ostream& out) {
  try {
    Preamble pre = prepare(config_path, opts, out);
    const auto& m_list = pre.cfg.spec.m_list;
    if (m_list.size() < 2) throw ConfigError("sweep requires at least two entries in m_list");

    const int jobs = opts.jobs > 0 ? opts.jobs : static_cast<int>(m_list.size());
    std::vector<MemberRun> members(m_list.size());
    std::vector<std::string> errors(m_list.size());
    for (std::size_t begin = 0; begin < m_list.size(); begin += jobs) {
      std::size_t end = std::min(m_list.size(), begin + jobs);
      std::vector<std::future<void>> batch;
      for (std::size_t i = begin; i < end; ++i) {
        batch.push_back(std::async(std::launch::async, [&, i] {
          try {
            members[i] = run_one_member(pre.cfg, m_list[i], pre.root);
          } catch (const std::exception& e) {
            errors[i] = "m=" + fmt_short(m_list[i]) + ": " + e.what();
          }
        }));
      }
      for (auto& f : batch) f.get();
    }

    auto files = pre.files;
    json timings;
    std::vector<std::string> failures;
    for (std::size_t i = 0; i < members.size(); ++i) {
      if (!errors[i].empty()) {
        failures.push_back(errors[i]);
        continue;
      }
      files.insert(files.end(), members[i].files.begin(), members[i].files.end());
      timings["m" + fmt_short(m_list[i])] = members[i].seconds;
    }
    if (!failures.empty()) {
      write_manifest(pre, "sweep", files, timings, "failed", failures);
      for (const auto& f : failures) out << "member run failed: " << f << '\n';
      return 2;
    }

    std::vector<Trajectory> trajs;
    for (auto& mr : members) trajs.push_back(std::move(mr.traj));
    CauchyTable table = m_sweep(trajs, pre.cfg.spec);
    {
      auto cauchy = csv::open_output((pre.root / "cauchy.csv").string());
      cauchy << "m_low,m_high,du_L1,dp_L1\n";
      for (const auto& row : table.rows)
        cauchy << csv::format(row.m_low) << ',' << csv::format(row.m_high) << ','
               << csv::format(row.du_l1) << ',' << csv::format(row.dp_l1) << '\n';
      files.push_back("cauchy.csv");
    }

    auto compat = oracle_compatibility(pre.cfg.spec);
    {
      auto summary = csv::open_output((pre.root / "sweep_summary.csv").string());
      summary << "m,sup_p,comp_residual,L4_gradp,L3_wneg,front_err\n";
      for (const auto& mr : members) {
        summary << csv::format(mr.m) << ',' << csv::format(mr.row.sup_p) << ','
                << csv::format(mr.row.complementarity_l1) << ','
                << csv::format(mr.row.gradp_l4) << ',' << csv::format(mr.row.wneg_l3) << ',';
        if (compat) {
          auto err = front_speed_error(mr.row.front, compat->a, pre.cfg.spec.lambda,
                                       pre.cfg.spec.p_ceiling, 0.2 * pre.cfg.spec.horizon);
          if (err) summary << csv::format(*err);
        }
        summary << '\n';
      }
      files.push_back("sweep_summary.csv");
    }

    if (table.ratio_u)
      out << "cauchy ratio (u): " << fmt_short(*table.ratio_u) << ", (p): "
          << fmt_short(table.ratio_p.value_or(0.0)) << '\n';
    write_manifest(pre, "sweep", files, timings, "ok", {});
    out << "sweep of " << m_list.size() << " m values complete, outputs in "
        << pre.root.string() << '\n';
    return 0;
  } catch (const std::exception& e) {
    return classify(e, out);
  }
}

int run_oracle(const std::string& config_path, const RunOptions& opts, std::ostream& out) {
  try {
    Config cfg = load_config(config_path);
    if (opts.outdir) cfg.outdir = *opts.outdir;
    auto compat = oracle_compatibility(cfg.spec);
    if (!compat)
      throw ConfigError(
          "oracle requires constant a, b and phi == lambda (p_M - p); this config is not of "
          "that form");
    double r0 = initial_support_radius(cfg.spec);
    if (!(r0 > 0.0)) throw ConfigError("oracle: initial data has empty support");

    fs::path root(cfg.outdir);
    fs::create_directories(root);
    std::vector<std::string> files;

    FrontCurve curve =
        front_ode(r0, compat->a, cfg.spec.lambda, cfg.spec.p_ceiling, cfg.spec.horizon);
    SaturatedProfile profile =
        saturated_profile(curve.radius.back(), cfg.spec.lambda, cfg.spec.p_ceiling);
    {
      auto prof = csv::open_output((root / "oracle_profile.csv").string());
      prof << "x,p\n";
      for (std::size_t i = 0; i < profile.x.size(); ++i)
        prof << csv::format(profile.x[i]) << ',' << csv::format(profile.p[i]) << '\n';
      files.push_back("oracle_profile.csv");
    }

    if (!opts.sweep_dir) {
      auto front = csv::open_output((root / "oracle_front.csv").string());
      front << "t,R\n";
      for (std::size_t i = 0; i < curve.t.size(); ++i)
        front << csv::format(curve.t[i]) << ',' << csv::format(curve.radius[i]) << '\n';
      files.push_back("oracle_front.csv");
    } else {
      // Align with a measured front: rows at the measured snapshot times,
      // with the ODE radius interpolated and per-time speed errors appended.
      double m_big = *std::max_element(cfg.spec.m_list.begin(), cfg.spec.m_list.end());
      fs::path front_path = fs::path(*opts.sweep_dir) / run_dir_name(m_big) /
                            ("front_m" + fmt_short(m_big) + ".csv");
      auto measured = read_front_csv(front_path);
      auto ode_radius = [&](double t) {
        if (curve.t.size() == 1 || t <= 0.0) return curve.radius.front();
        double dt = curve.t[1] - curve.t[0];
        auto idx = static_cast<std::size_t>(t / dt);
        if (idx + 1 >= curve.t.size()) return curve.radius.back();
        double frac = (t - curve.t[idx]) / dt;
        return curve.radius[idx] + frac * (curve.radius[idx + 1] - curve.radius[idx]);
      };
      auto front = csv::open_output((root / "oracle_front.csv").string());
      front << "t,R,R_measured,v_measured,v_oracle,speed_rel_err\n";
      for (const auto& pt : measured) {
        double v_oracle =
            limit_front_speed(pt.position, compat->a, cfg.spec.lambda, cfg.spec.p_ceiling);
        double rel = v_oracle > 0.0 ? std::abs(pt.v_measured / v_oracle - 1.0) : 0.0;
        front << csv::format(pt.t) << ',' << csv::format(ode_radius(pt.t)) << ','
              << csv::format(pt.position) << ',' << csv::format(pt.v_measured) << ','
              << csv::format(v_oracle) << ',' << csv::format(rel) << '\n';
      }
      files.push_back("oracle_front.csv");
    }

    json manifest;
    manifest["tool"] = kToolVersion;
    manifest["command"] = "oracle";
    manifest["config"] = cfg.name;
    manifest["r0"] = r0;
    manifest["profile_radius"] = profile.radius;
    manifest["center_pressure"] = profile.center_pressure;
    manifest["outputs"] = files;
    manifest["status"] = "ok";
    auto mout = csv::open_output((root / "manifest.json").string());
    mout << manifest.dump(2) << '\n';

    out << "oracle: R0 = " << fmt_short(r0) << ", R(T) = " << fmt_short(profile.radius)
        << ", p(0) = " << fmt_short(profile.center_pressure) << '\n';
    return 0;
  } catch (const std::exception& e) {
    return classify(e, out);
  }
}

}  // namespace pmelab
