#pragma once

#include "pmelab/assumptions.hpp"
#include "pmelab/config.hpp"
#include "pmelab/diagnostics.hpp"
#include "pmelab/oracle.hpp"

#include <iosfwd>
#include <optional>
#include <string>

namespace pmelab {

inline constexpr const char* kToolVersion = "pmelab 0.1.0";

struct RunOptions {
  std::optional<double> m;              // simulate: which exponent (default m_list front)
  bool force = false;                   // run despite assumption failures
  int jobs = 0;                         // sweep workers; 0 = one per m
  std::optional<std::string> outdir;    // overrides the config key
  std::optional<std::string> sweep_dir; // oracle: compare against this sweep
};

// Exit codes: 0 success, 1 validation/assumption failure, 2 runtime failure.
int run_check(const std::string& config_path, const RunOptions& opts, std::ostream& out);
int run_simulate(const std::string& config_path, const RunOptions& opts, std::ostream& out);
int run_sweep(const std::string& config_path, const RunOptions& opts, std::ostream& out);
int run_oracle(const std::string& config_path, const RunOptions& opts, std::ostream& out);

/// Constant coefficient values when the config is oracle-compatible
/// (a, b constant over the sampling box and phi == lambda (p_M - p)).
struct OracleParams {
  double a = 1.0;
  double b = 1.0;
};
std::optional<OracleParams> oracle_compatibility(const ProblemSpec& spec);

/// Support radius of the initial data, from a fine sampling of u0 along the
/// positive-x ray; 0 if u0 vanishes.
double initial_support_radius(const ProblemSpec& spec);

/// Median over front samples with t >= t_min of the relative mismatch
/// between the measured speed and the closed-form limit speed at the
/// measured radius. Absent when fewer than three samples qualify.
std::optional<double> front_speed_error(const FrontSeries& front, double a, double lambda,
                                        double p_ceiling, double t_min);

}  // namespace pmelab
