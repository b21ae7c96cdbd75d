#pragma once

#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "quiverbl/quiver.hpp"

namespace quiverbl {

namespace detail {

// M_i = sum_j p_j sum_{a in A_ij} V_a^T Y_j V_a, symmetric PSD by construction.
inline std::vector<Matrix> source_moment_matrices(const QuiverDatum& datum, const PdTuple& y) {
  std::vector<Matrix> m;
  m.reserve(datum.dims.source_dims.size());
  for (int d : datum.dims.source_dims) m.push_back(Matrix::Zero(d, d));
  for (std::size_t e = 0; e < datum.quiver.arrows.size(); ++e) {
    const Arrow& a = datum.quiver.arrows[e];
    const Matrix& v = datum.matrices[e];
    m[a.tail] += datum.weights[a.head] * (v.transpose() * y[a.head] * v);
  }
  for (Matrix& mi : m) mi = symmetrized(mi);
  return m;
}

inline void require_y_matches(const QuiverDatum& datum, const PdTuple& y, const NumericConfig& cfg,
                              const char* who) {
  if (y.size() != datum.dims.sink_dims.size())
    throw Error(ErrorCode::WrongShape, std::string(who) + ": expected one Y per sink");
  for (std::size_t j = 0; j < y.size(); ++j) {
    if (y[j].rows() != datum.dims.sink_dims[j] || y[j].cols() != datum.dims.sink_dims[j])
      throw Error(ErrorCode::WrongShape,
                  std::string(who) + ": Y shape mismatch at sink " + std::to_string(j + 1));
    require_spd(y[j], cfg.pd_floor, who);
  }
}

}  // namespace detail

// The capacity objective at one PD tuple, in log space. A singular M_i means
// this Y witnesses capacity 0, so the value is 0 rather than an error.
inline LogValue objective_value(const QuiverDatum& datum, const PdTuple& y,
                                const NumericConfig& cfg = {}) {
  detail::require_y_matches(datum, y, cfg, "objective_value");
  const std::vector<Matrix> m = detail::source_moment_matrices(datum, y);

  double log_num = 0.0;
  for (const Matrix& mi : m) {
    SymEig eig = sym_eig(mi);
    const double floor = detail::spd_floor(mi, cfg.singularity_floor);
    if (eig.eigenvalues.minCoeff() <= floor) return LogValue::zero();
    log_num += eig.eigenvalues.array().log().sum();
  }
  double log_den = 0.0;
  for (std::size_t j = 0; j < y.size(); ++j)
    log_den += datum.weights[j] * logdet_spd(y[j], cfg.singularity_floor);
  return LogValue::from_log(log_num - log_den);
}

inline double bl_constant(double cap) {
  if (std::isnan(cap) || cap < 0.0)
    throw Error(ErrorCode::InvalidInput, "bl_constant: capacity must be non-negative");
  if (cap == 0.0) return std::numeric_limits<double>::infinity();
  return 1.0 / std::sqrt(cap);
}

struct GeometricResidual {
  double source = 0.0;  // max_i ||sum_j p_j sum_a V^T V - I||_F
  double sink = 0.0;    // max_j ||sum_i sum_a V V^T - I||_F
  double max = 0.0;

  bool is_geometric(double tol = NumericConfig{}.geometric_tol) const { return max < tol; }
};

inline GeometricResidual geometric_residual(const QuiverDatum& datum) {
  GeometricResidual r;
  std::vector<Matrix> src, snk;
  for (int d : datum.dims.source_dims) src.push_back(Matrix::Zero(d, d));
  for (int n : datum.dims.sink_dims) snk.push_back(Matrix::Zero(n, n));
  for (std::size_t e = 0; e < datum.quiver.arrows.size(); ++e) {
    const Arrow& a = datum.quiver.arrows[e];
    const Matrix& v = datum.matrices[e];
    src[a.tail] += datum.weights[a.head] * (v.transpose() * v);
    snk[a.head] += v * v.transpose();
  }
  for (std::size_t i = 0; i < src.size(); ++i)
    r.source = std::max(r.source, (src[i] - Matrix::Identity(src[i].rows(), src[i].rows())).norm());
  for (std::size_t j = 0; j < snk.size(); ++j)
    r.sink = std::max(r.sink, (snk[j] - Matrix::Identity(snk[j].rows(), snk[j].rows())).norm());
  r.max = std::max(r.source, r.sink);
  return r;
}

// Membership report for the fixed-point locus: each M_i invertible and
// sum_i sum_a V_a M_i^-1 V_a^T = Y_j^-1 for every sink.
struct FixedPointReport {
  std::vector<double> sink_residuals;
  std::vector<double> m_min_eigenvalues;
  double max_residual = 0.0;
  bool member = false;
};

struct FixedPointPair {
  QuiverDatum datum;
  PdTuple y;
  std::vector<Matrix> m;  // the source moment matrices at (datum, y)
};

inline FixedPointPair make_fixed_point_pair(const QuiverDatum& datum, const PdTuple& y,
                                            const NumericConfig& cfg = {}) {
  detail::require_y_matches(datum, y, cfg, "make_fixed_point_pair");
  return {datum, y, detail::source_moment_matrices(datum, y)};
}

inline FixedPointReport fixed_point_residual(const QuiverDatum& datum, const PdTuple& y,
                                             const NumericConfig& cfg = {}) {
  detail::require_y_matches(datum, y, cfg, "fixed_point_residual");
  const std::vector<Matrix> m = detail::source_moment_matrices(datum, y);

  FixedPointReport report;
  bool invertible = true;
  std::vector<Matrix> m_inv(m.size());
  for (std::size_t i = 0; i < m.size(); ++i) {
    SymEig eig = sym_eig(m[i]);
    const double min_eig = eig.eigenvalues.minCoeff();
    report.m_min_eigenvalues.push_back(min_eig);
    if (min_eig <= detail::spd_floor(m[i], cfg.singularity_floor)) {
      invertible = false;
    } else {
      m_inv[i] = symmetrized(eig.eigenvectors * eig.eigenvalues.cwiseInverse().asDiagonal() *
                             eig.eigenvectors.transpose());
    }
  }

  const double inf = std::numeric_limits<double>::infinity();
  if (!invertible) {
    report.sink_residuals.assign(y.size(), inf);
    report.max_residual = inf;
    report.member = false;
    return report;
  }

  std::vector<Matrix> sums;
  for (int n : datum.dims.sink_dims) sums.push_back(Matrix::Zero(n, n));
  for (std::size_t e = 0; e < datum.quiver.arrows.size(); ++e) {
    const Arrow& a = datum.quiver.arrows[e];
    const Matrix& v = datum.matrices[e];
    sums[a.head] += v * m_inv[a.tail] * v.transpose();
  }
  for (std::size_t j = 0; j < y.size(); ++j) {
    SymEig eig = detail::spd_eig_checked(y[j], cfg.singularity_floor, "fixed_point_residual");
    const Matrix y_inv = symmetrized(eig.eigenvectors * eig.eigenvalues.cwiseInverse().asDiagonal() *
                                     eig.eigenvectors.transpose());
    report.sink_residuals.push_back((sums[j] - y_inv).norm());
    report.max_residual = std::max(report.max_residual, report.sink_residuals.back());
  }
  report.member = report.max_residual < cfg.fixed_point_tol;
  return report;
}

// cap = prod det(M_i) / prod det(Y_j)^{p_j}, valid on the fixed-point locus.
inline LogValue capacity_at_fixed_point(const FixedPointPair& pair, const NumericConfig& cfg = {}) {
  FixedPointReport membership = fixed_point_residual(pair.datum, pair.y, cfg);
  if (!membership.member)
    throw Error(ErrorCode::NotAFixedPoint,
                "capacity_at_fixed_point: max residual " + num_str(membership.max_residual));
  double lg = 0.0;
  for (const Matrix& mi : pair.m) lg += logdet_spd(mi, cfg.singularity_floor);
  for (std::size_t j = 0; j < pair.y.size(); ++j)
    lg -= pair.datum.weights[j] * logdet_spd(pair.y[j], cfg.singularity_floor);
  return LogValue::from_log(lg);
}

// Gradient of log objective with respect to Y_j:
//   p_j (sum_i sum_{a in A_ij} V_a M_i^-1 V_a^T - Y_j^-1).
// Vanishes exactly on the fixed-point locus.
inline std::vector<Matrix> log_objective_gradient(const QuiverDatum& datum, const PdTuple& y,
                                                  const NumericConfig& cfg = {}) {
  detail::require_y_matches(datum, y, cfg, "log_objective_gradient");
  const std::vector<Matrix> m = detail::source_moment_matrices(datum, y);
  std::vector<Matrix> m_inv;
  m_inv.reserve(m.size());
  for (const Matrix& mi : m) {
    SymEig eig = detail::spd_eig_checked(mi, cfg.singularity_floor, "log_objective_gradient");
    m_inv.push_back(symmetrized(eig.eigenvectors * eig.eigenvalues.cwiseInverse().asDiagonal() *
                                eig.eigenvectors.transpose()));
  }
  std::vector<Matrix> grad;
  for (int n : datum.dims.sink_dims) grad.push_back(Matrix::Zero(n, n));
  for (std::size_t e = 0; e < datum.quiver.arrows.size(); ++e) {
    const Arrow& a = datum.quiver.arrows[e];
    const Matrix& v = datum.matrices[e];
    grad[a.head] += datum.weights[a.head] * (v * m_inv[a.tail] * v.transpose());
  }
  for (std::size_t j = 0; j < y.size(); ++j) {
    SymEig eig = detail::spd_eig_checked(y[j], cfg.singularity_floor, "log_objective_gradient");
    grad[j] -= datum.weights[j] *
               symmetrized(eig.eigenvectors * eig.eigenvalues.cwiseInverse().asDiagonal() *
                           eig.eigenvectors.transpose());
    grad[j] = symmetrized(grad[j]);
  }
  return grad;
}

// Eigenvalue/weight data witnessing the rank-one AM-GM argument: R(t) is the
// weighted sum of the block-diagonal R_j, sigma its spectrum, and
// a_{lj} = u_l^T R_j u_l. Row sums are 1 and column sums p_j for geometric
// input; det R(t) >= prod t_j^{p_j} follows by weighted AM-GM.
struct AmgmCertificate {
  Vector sigma;        // eigenvalues of R(t), descending
  Matrix a;            // D x m, entries a_{lj}
  Vector row_sums;     // length D
  Vector col_sums;     // length m
  double det_rt = 0.0;        // prod sigma_l
  double weighted_gm = 0.0;   // prod t_j^{p_j}
};

inline AmgmCertificate amgm_certificate(const QuiverDatum& datum, const std::vector<double>& t,
                                        const NumericConfig& cfg = {}) {
  for (int n : datum.dims.sink_dims)
    if (n != 1)
      throw Error(ErrorCode::WrongShape, "amgm_certificate: all sink dimensions must equal 1");
  const GeometricResidual res = geometric_residual(datum);
  if (!res.is_geometric(cfg.geometric_tol))
    throw Error(ErrorCode::NotGeometric, "amgm_certificate: geometric residual " +
                                             num_str(res.max) + " exceeds tolerance");
  const int m = datum.quiver.num_sinks;
  if (static_cast<int>(t.size()) != m)
    throw Error(ErrorCode::WrongShape, "amgm_certificate: expected one t per sink");
  for (double tj : t)
    if (!(tj > 0.0) || !std::isfinite(tj))
      throw Error(ErrorCode::InvalidInput, "amgm_certificate: t entries must be positive");

  const int total = datum.dims.total_source_dim();
  std::vector<int> offset(datum.dims.source_dims.size(), 0);
  for (std::size_t i = 1; i < offset.size(); ++i)
    offset[i] = offset[i - 1] + datum.dims.source_dims[i - 1];

  // R_j = blockdiag_i( p_j sum_{a in A_ij} V_a^T V_a ).
  std::vector<Matrix> r(m, Matrix::Zero(total, total));
  for (std::size_t e = 0; e < datum.quiver.arrows.size(); ++e) {
    const Arrow& arrow = datum.quiver.arrows[e];
    const Matrix& v = datum.matrices[e];
    const int d = datum.dims.source_dims[arrow.tail];
    r[arrow.head].block(offset[arrow.tail], offset[arrow.tail], d, d) +=
        datum.weights[arrow.head] * (v.transpose() * v);
  }

  Matrix rt = Matrix::Zero(total, total);
  for (int j = 0; j < m; ++j) rt += t[j] * r[j];
  SymEig eig = sym_eig(rt);

  AmgmCertificate cert;
  cert.sigma = eig.eigenvalues;
  cert.a.resize(total, m);
  for (int l = 0; l < total; ++l)
    for (int j = 0; j < m; ++j)
      cert.a(l, j) = eig.eigenvectors.col(l).dot(r[j] * eig.eigenvectors.col(l));
  cert.row_sums = cert.a.rowwise().sum();
  cert.col_sums = cert.a.colwise().sum();
  cert.det_rt = cert.sigma.prod();
  double log_gm = 0.0;
  for (int j = 0; j < m; ++j) log_gm += datum.weights[j] * std::log(t[j]);
  cert.weighted_gm = std::exp(log_gm);
  return cert;
}

}  // namespace quiverbl
