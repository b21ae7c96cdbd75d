#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "quiverbl/config.hpp"
#include "quiverbl/error.hpp"

namespace quiverbl {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// One symmetric positive definite matrix per sink vertex.
using PdTuple = std::vector<Matrix>;

// A value tracked in log space alongside its exponentiated form. value is 0
// when log is -inf.
struct LogValue {
  double log = 0.0;
  double value = 1.0;

  static LogValue from_log(double lg) {
    if (std::isinf(lg) && lg < 0) return {lg, 0.0};
    return {lg, std::exp(lg)};
  }
  static LogValue zero() { return {-std::numeric_limits<double>::infinity(), 0.0}; }
};

inline bool all_finite(const Matrix& a) { return a.allFinite(); }

inline double max_abs(const Matrix& a) {
  return a.size() == 0 ? 0.0 : a.cwiseAbs().maxCoeff();
}

inline Matrix symmetrized(const Matrix& s) { return 0.5 * (s + s.transpose()); }

// Eigendecomposition of a symmetric matrix. Eigenvalues descend; eigenvectors
// are the matching columns, each with its first nonzero coordinate positive.
struct SymEig {
  Vector eigenvalues;
  Matrix eigenvectors;

  Matrix reconstruct() const {
    return eigenvectors * eigenvalues.asDiagonal() * eigenvectors.transpose();
  }
};

namespace detail {

inline void canonicalize_sign(Eigen::Ref<Vector> v) {
  const double scale = v.cwiseAbs().maxCoeff();
  if (scale == 0.0) return;
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (std::abs(v[i]) > 1e-12 * scale) {
      if (v[i] < 0) v = -v;
      return;
    }
  }
}

}  // namespace detail

// Input is symmetrized first; asymmetry beyond 1e-8 * max|S| is an error,
// below that a silent repair.
inline SymEig sym_eig(const Matrix& s) {
  if (s.rows() != s.cols())
    throw Error(ErrorCode::WrongShape, "sym_eig expects a square matrix");
  if (!all_finite(s)) throw Error(ErrorCode::NumericError, "sym_eig: non-finite entries");
  const double scale = max_abs(s);
  const double asym = max_abs(s - s.transpose());
  if (asym > 1e-8 * (1.0 + scale))
    throw Error(ErrorCode::NumericError,
                "sym_eig: asymmetry " + num_str(asym) + " exceeds tolerance");

  Eigen::SelfAdjointEigenSolver<Matrix> solver(symmetrized(s));
  if (solver.info() != Eigen::Success)
    throw Error(ErrorCode::NumericError, "sym_eig: eigendecomposition failed");

  const Eigen::Index n = s.rows();
  SymEig out;
  out.eigenvalues.resize(n);
  out.eigenvectors.resize(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {  // Eigen sorts ascending; flip.
    out.eigenvalues[i] = solver.eigenvalues()[n - 1 - i];
    out.eigenvectors.col(i) = solver.eigenvectors().col(n - 1 - i);
    detail::canonicalize_sign(out.eigenvectors.col(i));
  }
  return out;
}

namespace detail {

// Relative singularity floor: eigenvalues at or below floor * trace/dim are
// treated as zero.
inline double spd_floor(const Matrix& s, double floor_rel) {
  const double mean_diag = s.rows() == 0 ? 0.0 : s.trace() / static_cast<double>(s.rows());
  return floor_rel * mean_diag;
}

inline SymEig spd_eig_checked(const Matrix& s, double floor_rel, const char* who) {
  SymEig eig = sym_eig(s);
  const double min_eig = eig.eigenvalues.size() == 0 ? 0.0 : eig.eigenvalues.minCoeff();
  if (eig.eigenvalues.size() == 0 || min_eig <= spd_floor(s, floor_rel))
    throw SingularMatrixError(std::string(who) + ": matrix not positive definite", min_eig);
  return eig;
}

}  // namespace detail

inline Matrix spd_sqrt(const Matrix& s, double floor_rel = NumericConfig{}.singularity_floor) {
  SymEig eig = detail::spd_eig_checked(s, floor_rel, "spd_sqrt");
  return symmetrized(eig.eigenvectors * eig.eigenvalues.cwiseSqrt().asDiagonal() *
                     eig.eigenvectors.transpose());
}

inline Matrix spd_inv_sqrt(const Matrix& s, double floor_rel = NumericConfig{}.singularity_floor) {
  SymEig eig = detail::spd_eig_checked(s, floor_rel, "spd_inv_sqrt");
  return symmetrized(eig.eigenvectors * eig.eigenvalues.cwiseSqrt().cwiseInverse().asDiagonal() *
                     eig.eigenvectors.transpose());
}

inline double logdet_spd(const Matrix& s, double floor_rel = NumericConfig{}.singularity_floor) {
  if (s.rows() != s.cols())
    throw Error(ErrorCode::WrongShape, "logdet_spd expects a square matrix");
  // Exact for diagonal inputs.
  if (max_abs(s - Matrix(s.diagonal().asDiagonal())) == 0.0) {
    double sum = 0.0;
    double min_diag = std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < s.rows(); ++i) min_diag = std::min(min_diag, s(i, i));
    if (s.rows() == 0) min_diag = 0.0;
    if (s.rows() == 0 || min_diag <= detail::spd_floor(s, floor_rel))
      throw SingularMatrixError("logdet_spd: matrix not positive definite", min_diag);
    for (Eigen::Index i = 0; i < s.rows(); ++i) sum += std::log(s(i, i));
    return sum;
  }
  SymEig eig = detail::spd_eig_checked(s, floor_rel, "logdet_spd");
  return eig.eigenvalues.array().log().sum();
}

// PD check used by operation preconditions. Returns the minimum eigenvalue.
inline double require_spd(const Matrix& y, double pd_floor_rel, const char* who) {
  if (y.rows() != y.cols()) throw Error(ErrorCode::WrongShape, std::string(who) + ": non-square Y");
  if (!all_finite(y))
    throw Error(ErrorCode::NotPositiveDefinite, std::string(who) + ": non-finite entries in Y");
  if (max_abs(y - y.transpose()) > 1e-12 * (1.0 + max_abs(y)))
    throw Error(ErrorCode::NotPositiveDefinite, std::string(who) + ": Y is not symmetric");
  if (y.rows() == 0) throw Error(ErrorCode::NotPositiveDefinite, std::string(who) + ": empty Y");
  Eigen::SelfAdjointEigenSolver<Matrix> solver(symmetrized(y));
  const double min_eig = solver.eigenvalues().minCoeff();
  if (y.trace() <= 0.0 || min_eig <= detail::spd_floor(y, pd_floor_rel))
    throw Error(ErrorCode::NotPositiveDefinite,
                std::string(who) + ": Y has min eigenvalue " + num_str(min_eig));
  return min_eig;
}

}  // namespace quiverbl
