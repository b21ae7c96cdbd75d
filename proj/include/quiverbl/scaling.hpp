#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "quiverbl/objective.hpp"

namespace quiverbl {

enum class ScalingStatus { Converged, MaxIterations, Collapsed };

inline const char* to_string(ScalingStatus s) {
  switch (s) {
    case ScalingStatus::Converged: return "Converged";
    case ScalingStatus::MaxIterations: return "MaxIterations";
    case ScalingStatus::Collapsed: return "Collapsed";
  }
  return "Unknown";
}

// Outcome of an alternating scaling run. The bookkeeping identity
// W_a = H_{head} V_a G_{tail}^-1 ties final_datum back to the input, and
// log_cap accumulates 2 sum logdet G_i - 2 sum p_j logdet H_j step by step.
struct ScalingResult {
  QuiverDatum final_datum;
  std::vector<Matrix> source_transforms;  // G_i
  std::vector<Matrix> sink_transforms;    // H_j
  std::vector<double> residual_history;   // geometric residual, input state first
  int iterations = 0;
  double log_cap = 0.0;
  ScalingStatus status = ScalingStatus::MaxIterations;
  bool stalled = false;
  std::string collapse_vertex;      // set when status == Collapsed
  double collapse_eigenvalue = 0.0; // min eigenvalue that triggered the collapse

  double capacity_estimate() const {
    return status == ScalingStatus::Collapsed ? 0.0 : std::exp(log_cap);
  }
};

// Alternating scaling: the sink step replaces W_a by S_j^-1/2 W_a where
// S_j = sum_i sum_{a in A_ij} W_a W_a^T, the source step replaces W_a by
// W_a T_i^-1/2 where T_i = sum_j p_j sum_a W_a^T W_a. Each half-step solves
// its own geometric condition exactly; convergence is measured on the other
// family's residual. Collapse of an S_j or T_i is capacity-0 evidence.
inline ScalingResult scale(const QuiverDatum& datum, const ScalingConfig& cfg = {},
                           const NumericConfig& num = {}) {
  {
    const ValidationReport report = validate_datum(datum);
    if (!report.ok())
      throw Error(ErrorCode::InvalidInput, "scale: invalid datum: " + report.violations.front());
    const PerpCheck perp = check_perp(datum.dims, datum.weights, num.perp_tol);
    if (!perp.perpendicular)
      throw Error(ErrorCode::InvalidInput,
                  "scale: sum d_i != sum p_j n_j (residual " + num_str(perp.residual) + ")");
  }

  const int k = datum.quiver.num_sources;
  const int m = datum.quiver.num_sinks;
  ScalingResult result;
  result.final_datum = datum;
  for (int d : datum.dims.source_dims) result.source_transforms.push_back(Matrix::Identity(d, d));
  for (int n : datum.dims.sink_dims) result.sink_transforms.push_back(Matrix::Identity(n, n));

  GeometricResidual res = geometric_residual(result.final_datum);
  result.residual_history.push_back(res.max);
  if (res.max < cfg.tolerance) {
    result.status = ScalingStatus::Converged;
    return result;
  }

  std::vector<Matrix>& w = result.final_datum.matrices;
  const std::vector<Arrow>& arrows = datum.quiver.arrows;

  // Returns false on collapse.
  auto sink_step = [&]() {
    for (int j = 0; j < m; ++j) {
      Matrix s = Matrix::Zero(datum.dims.sink_dims[j], datum.dims.sink_dims[j]);
      for (std::size_t e = 0; e < arrows.size(); ++e)
        if (arrows[e].head == j) s += w[e] * w[e].transpose();
      s = symmetrized(s);
      SymEig eig = sym_eig(s);
      const double min_eig = eig.eigenvalues.minCoeff();
      if (min_eig <= detail::spd_floor(s, cfg.singularity_floor)) {
        result.status = ScalingStatus::Collapsed;
        result.collapse_vertex = "sink " + std::to_string(j + 1);
        result.collapse_eigenvalue = min_eig;
        return false;
      }
      const Matrix inv_sqrt =
          symmetrized(eig.eigenvectors * eig.eigenvalues.cwiseSqrt().cwiseInverse().asDiagonal() *
                      eig.eigenvectors.transpose());
      for (std::size_t e = 0; e < arrows.size(); ++e)
        if (arrows[e].head == j) w[e] = inv_sqrt * w[e];
      result.sink_transforms[j] = inv_sqrt * result.sink_transforms[j];
      result.log_cap += datum.weights[j] * eig.eigenvalues.array().log().sum();
    }
    return true;
  };

  auto source_step = [&]() {
    for (int i = 0; i < k; ++i) {
      Matrix t = Matrix::Zero(datum.dims.source_dims[i], datum.dims.source_dims[i]);
      for (std::size_t e = 0; e < arrows.size(); ++e)
        if (arrows[e].tail == i)
          t += datum.weights[arrows[e].head] * (w[e].transpose() * w[e]);
      t = symmetrized(t);
      SymEig eig = sym_eig(t);
      const double min_eig = eig.eigenvalues.minCoeff();
      if (min_eig <= detail::spd_floor(t, cfg.singularity_floor)) {
        result.status = ScalingStatus::Collapsed;
        result.collapse_vertex = "source " + std::to_string(i + 1);
        result.collapse_eigenvalue = min_eig;
        return false;
      }
      const Matrix sqrt = symmetrized(eig.eigenvectors * eig.eigenvalues.cwiseSqrt().asDiagonal() *
                                      eig.eigenvectors.transpose());
      const Matrix inv_sqrt =
          symmetrized(eig.eigenvectors * eig.eigenvalues.cwiseSqrt().cwiseInverse().asDiagonal() *
                      eig.eigenvectors.transpose());
      for (std::size_t e = 0; e < arrows.size(); ++e)
        if (arrows[e].tail == i) w[e] = w[e] * inv_sqrt;
      result.source_transforms[i] = sqrt * result.source_transforms[i];
      result.log_cap += eig.eigenvalues.array().log().sum();
    }
    return true;
  };

  for (int sweep = 1; sweep <= cfg.max_iterations; ++sweep) {
    const bool ok = cfg.sources_first ? (source_step() && sink_step())
                                      : (sink_step() && source_step());
    result.iterations = sweep;
    if (!ok) return result;  // Collapsed

    for (const Matrix& we : w)
      if (!all_finite(we))
        throw Error(ErrorCode::NumericError,
                    "scale: non-finite matrix entries at iteration " + std::to_string(sweep));

    res = geometric_residual(result.final_datum);
    result.residual_history.push_back(res.max);
    if (res.max < cfg.tolerance) {
      result.status = ScalingStatus::Converged;
      return result;
    }
    if (sweep >= cfg.stagnation_window) {
      const double before = result.residual_history[sweep - cfg.stagnation_window];
      if (before - res.max < cfg.stagnation_improvement) {
        result.stalled = true;
        result.status = ScalingStatus::MaxIterations;
        return result;
      }
    }
  }
  result.status = ScalingStatus::MaxIterations;
  return result;
}

struct CapacityResult {
  LogValue cap;
  ScalingStatus status = ScalingStatus::MaxIterations;
  bool conclusive = false;
  ScalingResult run;
};

// Scaling read-out of the capacity: cap = prod det(G_i)^2 / prod det(H_j)^{2 p_j}
// once the datum has been transformed into geometric position.
inline CapacityResult capacity(const QuiverDatum& datum, const ScalingConfig& cfg = {},
                               const NumericConfig& num = {}) {
  CapacityResult out;
  out.run = scale(datum, cfg, num);
  out.status = out.run.status;
  switch (out.run.status) {
    case ScalingStatus::Converged:
      out.cap = LogValue::from_log(out.run.log_cap);
      out.conclusive = true;
      break;
    case ScalingStatus::Collapsed:
      out.cap = LogValue::zero();
      out.conclusive = true;
      break;
    case ScalingStatus::MaxIterations:
      out.cap = LogValue::from_log(out.run.log_cap);  // last estimate, inconclusive
      out.conclusive = false;
      break;
  }
  return out;
}

// Extremizers from a converged run: Y_j = H_j^T H_j.
inline PdTuple extremizer_from_scaling(const ScalingResult& result) {
  if (result.status != ScalingStatus::Converged)
    throw Error(ErrorCode::NotConverged, "extremizer_from_scaling: run did not converge");
  PdTuple y;
  y.reserve(result.sink_transforms.size());
  for (const Matrix& h : result.sink_transforms) y.push_back(symmetrized(h.transpose() * h));
  return y;
}

struct CovarianceReport {
  double cap_original = 0.0;
  double cap_transformed = 0.0;
  double predicted = 0.0;
  double relative_error = 0.0;
};

// Checks cap(A.V) = prod det(A_x)^-2 / prod det(A_y)^{-2 p_y} * cap(V) with
// both capacities computed by scaling.
inline CovarianceReport group_covariance_check(const QuiverDatum& datum, const GroupElement& a,
                                               const ScalingConfig& cfg = {},
                                               const NumericConfig& num = {}) {
  const CapacityResult before = capacity(datum, cfg, num);
  const CapacityResult after = capacity(act(a, datum, num), cfg, num);
  if (before.status != ScalingStatus::Converged || after.status != ScalingStatus::Converged)
    throw Error(ErrorCode::NotConverged, "group_covariance_check: a capacity run was inconclusive");

  double log_factor = 0.0;
  for (const Matrix& g : a.source_parts)
    log_factor -= 2.0 * std::log(std::abs(g.determinant()));
  for (std::size_t j = 0; j < a.sink_parts.size(); ++j)
    log_factor += 2.0 * datum.weights[j] * std::log(std::abs(a.sink_parts[j].determinant()));

  CovarianceReport report;
  report.cap_original = before.cap.value;
  report.cap_transformed = after.cap.value;
  report.predicted = std::exp(before.cap.log + log_factor);
  report.relative_error = std::abs(report.cap_transformed - report.predicted) / report.predicted;
  return report;
}

}  // namespace quiverbl
