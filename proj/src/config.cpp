#include "pmelab/config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace pmelab {

namespace {

const std::set<std::string> kKnownKeys = {
    "dim",  "L",   "n",           "T",      "a",            "b",
    "phi",  "u0",  "lambda",      "p_M",    "Lambda",       "tilde_lambda",
    "m_list", "epsilon_lift", "cfl", "snapshots", "outdir", "force"};

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

struct RawEntry {
  std::string value;
  int line;
};

double parse_number(const std::string& key, const RawEntry& e) {
  std::string_view v(e.value);
  double out = 0.0;
  auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size())
    throw ConfigError("line " + std::to_string(e.line) + ": key '" + key +
                      "' expects a number, got '" + e.value + "'");
  return out;
}

int parse_int(const std::string& key, const RawEntry& e) {
  double v = parse_number(key, e);
  int out = static_cast<int>(v);
  if (out != v)
    throw ConfigError("line " + std::to_string(e.line) + ": key '" + key +
                      "' expects an integer");
  return out;
}

bool parse_bool(const std::string& key, const RawEntry& e) {
  if (e.value == "true") return true;
  if (e.value == "false") return false;
  throw ConfigError("line " + std::to_string(e.line) + ": key '" + key +
                    "' expects true or false");
}

expr::Expr parse_expression(const std::string& key, const RawEntry& e) {
  try {
    return expr::Expr::parse(e.value);
  } catch (const expr::ParseError& err) {
    throw ConfigError("line " + std::to_string(e.line) + ": key '" + key + "': " + err.what());
  }
}

std::vector<double> parse_list(const std::string& key, const RawEntry& e) {
  std::vector<double> out;
  std::stringstream ss(e.value);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::string_view v = trim(item);
    double value = 0.0;
    auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), value);
    if (ec != std::errc() || ptr != v.data() + v.size() || v.empty())
      throw ConfigError("line " + std::to_string(e.line) + ": key '" + key +
                        "' expects comma-separated numbers");
    out.push_back(value);
  }
  if (out.empty())
    throw ConfigError("line " + std::to_string(e.line) + ": key '" + key + "' is empty");
  return out;
}

}  // namespace

Config parse_config(const std::string& text, const std::string& name) {
  std::map<std::string, RawEntry> entries;
  std::istringstream stream(text);
  std::string line;
  int line_no = 0;
  while (std::getline(stream, line)) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::string_view body = trim(line);
    if (body.empty()) continue;
    auto eq = body.find('=');
    if (eq == std::string_view::npos)
      throw ConfigError(name + ": line " + std::to_string(line_no) +
                        ": expected 'key = value'");
    std::string key(trim(body.substr(0, eq)));
    std::string value(trim(body.substr(eq + 1)));
    if (!kKnownKeys.count(key))
      throw ConfigError(name + ": line " + std::to_string(line_no) + ": unknown key '" + key +
                        "'");
    if (entries.count(key))
      throw ConfigError(name + ": line " + std::to_string(line_no) + ": duplicate key '" + key +
                        "' (first on line " + std::to_string(entries[key].line) + ")");
    if (value.empty())
      throw ConfigError(name + ": line " + std::to_string(line_no) + ": key '" + key +
                        "' has no value");
    entries[key] = RawEntry{value, line_no};
  }

  auto required = [&](const std::string& key) -> const RawEntry& {
    auto it = entries.find(key);
    if (it == entries.end()) throw ConfigError(name + ": missing required key '" + key + "'");
    return it->second;
  };

  Config cfg;
  cfg.source_text = text;
  cfg.name = name;
  try {
    cfg.spec.dim = parse_int("dim", required("dim"));
    cfg.spec.half_width = parse_number("L", required("L"));
    cfg.spec.n = parse_int("n", required("n"));
    cfg.spec.horizon = parse_number("T", required("T"));
    cfg.spec.a_expr = parse_expression("a", required("a"));
    cfg.spec.b_expr = parse_expression("b", required("b"));
    cfg.spec.phi_expr = parse_expression("phi", required("phi"));
    cfg.spec.u0_expr = parse_expression("u0", required("u0"));
    cfg.spec.lambda = parse_number("lambda", required("lambda"));
    cfg.spec.p_ceiling = parse_number("p_M", required("p_M"));
    cfg.spec.coeff_bound = parse_number("Lambda", required("Lambda"));
    cfg.spec.tilde_lambda = parse_number("tilde_lambda", required("tilde_lambda"));
    cfg.spec.m_list = parse_list("m_list", required("m_list"));
    if (entries.count("epsilon_lift"))
      cfg.spec.epsilon_lift = parse_number("epsilon_lift", entries["epsilon_lift"]);
    if (entries.count("cfl")) cfg.spec.cfl = parse_number("cfl", entries["cfl"]);
    if (entries.count("snapshots")) cfg.spec.snapshots = parse_int("snapshots", entries["snapshots"]);
    if (entries.count("outdir")) cfg.outdir = entries["outdir"].value;
    if (entries.count("force")) cfg.force = parse_bool("force", entries["force"]);
  } catch (const ConfigError&) {
    throw;
  }
  try {
    cfg.spec.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(name + ": " + e.what());
  }
  return cfg;
}

Config load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read config file '" + path + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_config(buffer.str(), path);
}

}  // namespace pmelab
