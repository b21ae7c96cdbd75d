#pragma once

#include <cstdint>

namespace quiverbl {

// Tolerances shared by the numeric modules. Floors marked "relative" are
// multiplied by trace/dim (or a comparable scale) of the matrix they guard.
struct NumericConfig {
  double perp_tol = 1e-12;           // absolute, |sum d_i - sum p_j n_j|
  double geometric_tol = 1e-8;       // max Frobenius residual to call a datum geometric
  double fixed_point_tol = 1e-8;     // max Frobenius residual for fixed-point membership
  double singularity_floor = 1e-12;  // relative eigenvalue floor for inversions/roots
  double pd_floor = 1e-12;           // relative eigenvalue floor for the PD check
  double closure_tol = 1e-12;        // entry magnitude treated as zero in subrep closure
  double triangular_tol = 1e-10;     // below-block-diagonal magnitude allowed
};

struct ScalingConfig {
  double tolerance = 1e-10;
  int max_iterations = 10000;
  double singularity_floor = 1e-12;  // relative; collapse threshold for S_j / T_i
  bool sources_first = false;        // default sweep order is sinks then sources
  double stagnation_improvement = 1e-14;
  int stagnation_window = 100;
};

struct OracleConfig {
  int restarts = 8;
  double gradient_tol = 1e-8;
  int max_steps = 2000;
  std::uint64_t seed = 0;
  bool finite_diff_gradient = false;  // fallback for the analytic chain rule
  double collapse_log_floor = -80.0;  // log objective below this counts as capacity-0 evidence
};

struct GridConfig {
  double log_range = 3.0;  // t in [10^-r, 10^r]
  int points = 25;         // per axis
  int max_sinks = 4;       // grid budget
};

}  // namespace quiverbl
