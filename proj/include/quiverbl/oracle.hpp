#pragma once

#include <cmath>
#include <random>
#include <vector>

#include "quiverbl/objective.hpp"
#include "quiverbl/random.hpp"

namespace quiverbl {

struct OracleResult {
  PdTuple best_y;
  LogValue best_value;
  int restarts_used = 0;
  double converged_gradient_norm = 0.0;
  bool collapsed = false;  // objective driven below the collapse floor
};

namespace detail {

// Y = exp(Z) for symmetric Z, plus the spectral data needed by the chain rule.
struct ExpChart {
  SymEig eig;  // of Z
  Matrix y;
};

inline ExpChart exp_chart(const Matrix& z) {
  ExpChart chart;
  chart.eig = sym_eig(z);
  chart.y = symmetrized(chart.eig.eigenvectors * chart.eig.eigenvalues.array().exp().matrix().asDiagonal() *
                        chart.eig.eigenvectors.transpose());
  return chart;
}

// Divided difference of exp: (e^a - e^b)/(a - b), handled stably near a = b.
inline double exp_divided_difference(double a, double b) {
  const double delta = a - b;
  const double mid = 0.5 * (a + b);
  if (std::abs(delta) < 1e-9) return std::exp(mid) * (1.0 + delta * delta / 24.0);
  return std::exp(mid) * (std::sinh(0.5 * delta) / (0.5 * delta));
}

// Adjoint of the Frechet derivative of exp at Z applied to P (Daleckii-Krein).
inline Matrix exp_chain_adjoint(const ExpChart& chart, const Matrix& p) {
  const Vector& z = chart.eig.eigenvalues;
  const Matrix& u = chart.eig.eigenvectors;
  Matrix inner = u.transpose() * p * u;
  for (Eigen::Index r = 0; r < z.size(); ++r)
    for (Eigen::Index c = 0; c < z.size(); ++c)
      inner(r, c) *= exp_divided_difference(z[r], z[c]);
  return symmetrized(u * inner * u.transpose());
}

struct OracleObjective {
  const QuiverDatum& datum;
  const NumericConfig& num;

  // F(Z) = sum_i logdet M_i(exp Z) - sum_j p_j tr(Z_j); -inf when M_i singular.
  double eval(const std::vector<Matrix>& z, std::vector<ExpChart>* charts = nullptr) const {
    PdTuple y;
    y.reserve(z.size());
    if (charts) charts->clear();
    for (const Matrix& zj : z) {
      ExpChart chart = exp_chart(zj);
      y.push_back(chart.y);
      if (charts) charts->push_back(std::move(chart));
    }
    const std::vector<Matrix> m = source_moment_matrices(datum, y);
    double value = 0.0;
    for (const Matrix& mi : m) {
      SymEig eig = sym_eig(mi);
      if (eig.eigenvalues.minCoeff() <= spd_floor(mi, num.singularity_floor))
        return -std::numeric_limits<double>::infinity();
      value += eig.eigenvalues.array().log().sum();
    }
    for (std::size_t j = 0; j < z.size(); ++j) value -= datum.weights[j] * z[j].trace();
    return value;
  }

  std::vector<Matrix> analytic_gradient(const std::vector<Matrix>& z,
                                        const std::vector<ExpChart>& charts) const {
    PdTuple y;
    y.reserve(charts.size());
    for (const ExpChart& c : charts) y.push_back(c.y);
    const std::vector<Matrix> m = source_moment_matrices(datum, y);
    std::vector<Matrix> m_inv;
    m_inv.reserve(m.size());
    for (const Matrix& mi : m) {
      SymEig eig = spd_eig_checked(mi, num.singularity_floor, "oracle gradient");
      m_inv.push_back(symmetrized(eig.eigenvectors * eig.eigenvalues.cwiseInverse().asDiagonal() *
                                  eig.eigenvectors.transpose()));
    }
    // P_j = p_j sum_i sum_{a in A_ij} V_a M_i^-1 V_a^T, pushed through exp.
    std::vector<Matrix> p;
    for (int n : datum.dims.sink_dims) p.push_back(Matrix::Zero(n, n));
    for (std::size_t e = 0; e < datum.quiver.arrows.size(); ++e) {
      const Arrow& a = datum.quiver.arrows[e];
      p[a.head] += datum.weights[a.head] *
                   (datum.matrices[e] * m_inv[a.tail] * datum.matrices[e].transpose());
    }
    std::vector<Matrix> grad(z.size());
    for (std::size_t j = 0; j < z.size(); ++j) {
      grad[j] = exp_chain_adjoint(charts[j], symmetrized(p[j])) -
                datum.weights[j] * Matrix::Identity(z[j].rows(), z[j].cols());
      grad[j] = symmetrized(grad[j]);
    }
    return grad;
  }

  std::vector<Matrix> finite_diff_gradient(const std::vector<Matrix>& z) const {
    const double h = 1e-6;
    std::vector<Matrix> grad;
    std::vector<Matrix> probe = z;
    for (std::size_t j = 0; j < z.size(); ++j) {
      const Eigen::Index n = z[j].rows();
      Matrix g = Matrix::Zero(n, n);
      for (Eigen::Index r = 0; r < n; ++r) {
        for (Eigen::Index c = r; c < n; ++c) {
          Matrix basis = Matrix::Zero(n, n);
          basis(r, c) = 1.0;
          basis(c, r) = 1.0;
          probe[j] = z[j] + h * basis;
          const double up = eval(probe);
          probe[j] = z[j] - h * basis;
          const double down = eval(probe);
          probe[j] = z[j];
          const double slope = (up - down) / (2.0 * h);  // = tr(G * basis)
          g(r, c) = r == c ? slope : 0.5 * slope;
          g(c, r) = g(r, c);
        }
      }
      grad.push_back(g);
    }
    return grad;
  }
};

inline double gradient_norm(const std::vector<Matrix>& grad) {
  double sq = 0.0;
  for (const Matrix& g : grad) sq += g.squaredNorm();
  return std::sqrt(sq);
}

}  // namespace detail

// First-order minimization of the capacity objective over the PD cone in the
// unconstrained chart Y_j = exp(Z_j): gradient descent with backtracking line
// search and seeded restarts. Independent of the scaling solver; the returned
// value is an upper bound on the capacity.
inline OracleResult oracle_minimize(const QuiverDatum& datum, const OracleConfig& cfg = {},
                                    const NumericConfig& num = {}) {
  {
    const ValidationReport report = validate_datum(datum);
    if (!report.ok())
      throw Error(ErrorCode::InvalidInput,
                  "oracle_minimize: invalid datum: " + report.violations.front());
  }
  const detail::OracleObjective objective{datum, num};

  std::vector<Matrix> best_z;
  double best_f = std::numeric_limits<double>::infinity();
  double best_gnorm = std::numeric_limits<double>::infinity();
  bool collapsed = false;
  int restarts_used = 0;

  for (int restart = 0; restart < cfg.restarts && !collapsed; ++restart) {
    ++restarts_used;
    std::vector<Matrix> z;
    if (restart == 0) {
      for (int n : datum.dims.sink_dims) z.push_back(Matrix::Zero(n, n));
    } else {
      std::mt19937_64 rng(detail::derive_seed(cfg.seed, static_cast<std::uint64_t>(restart)));
      std::normal_distribution<double> normal(0.0, 0.5);
      for (int n : datum.dims.sink_dims) {
        Matrix g(n, n);
        for (int r = 0; r < n; ++r)
          for (int c = 0; c < n; ++c) g(r, c) = normal(rng);
        z.push_back(symmetrized(g));
      }
    }

    std::vector<detail::ExpChart> charts;
    double f = objective.eval(z, &charts);
    double gnorm = std::numeric_limits<double>::infinity();
    if (std::isinf(f)) {
      collapsed = true;
    } else {
      for (int step = 0; step < cfg.max_steps; ++step) {
        const std::vector<Matrix> grad = cfg.finite_diff_gradient
                                             ? objective.finite_diff_gradient(z)
                                             : objective.analytic_gradient(z, charts);
        gnorm = detail::gradient_norm(grad);
        if (gnorm <= cfg.gradient_tol) break;

        double alpha = 1.0 / (1.0 + gnorm);
        bool accepted = false;
        for (int backtrack = 0; backtrack < 60; ++backtrack) {
          std::vector<Matrix> trial = z;
          for (std::size_t j = 0; j < z.size(); ++j) trial[j] -= alpha * grad[j];
          std::vector<detail::ExpChart> trial_charts;
          const double trial_f = objective.eval(trial, &trial_charts);
          if (trial_f <= f - 1e-4 * alpha * gnorm * gnorm) {
            z = std::move(trial);
            charts = std::move(trial_charts);
            f = trial_f;
            accepted = true;
            break;
          }
          alpha *= 0.5;
        }
        if (!accepted) break;
        if (std::isinf(f) || f < cfg.collapse_log_floor) {
          collapsed = true;
          break;
        }
      }
    }
    if (f < best_f) {
      best_f = f;
      best_z = z;
      best_gnorm = gnorm;
    }
  }

  OracleResult result;
  result.restarts_used = restarts_used;
  result.collapsed = collapsed;
  if (collapsed) {
    result.best_value = LogValue::zero();
    result.converged_gradient_norm = std::numeric_limits<double>::infinity();
    return result;
  }
  for (const Matrix& zj : best_z) result.best_y.push_back(detail::exp_chart(zj).y);
  result.best_value = objective_value(datum, result.best_y, num);
  result.converged_gradient_norm = best_gnorm;
  return result;
}

struct GridResult {
  double value = 0.0;
  double log_value = 0.0;
  std::vector<double> argmin;  // the minimizing t
};

// Exhaustive log-uniform grid minimization for rank-one sink data: one
// positive scalar t_j per sink, refined once around the argmin. The result is
// an upper bound on the capacity, tight to grid resolution.
inline GridResult grid_min_rank_one(const QuiverDatum& datum, const GridConfig& cfg = {},
                                    const NumericConfig& num = {}) {
  for (int n : datum.dims.sink_dims)
    if (n != 1)
      throw Error(ErrorCode::WrongShape, "grid_min_rank_one: all sink dimensions must equal 1");
  const int m = datum.quiver.num_sinks;
  if (m > cfg.max_sinks)
    throw Error(ErrorCode::BudgetExceeded,
                "grid_min_rank_one: " + std::to_string(m) + " sinks exceed the grid budget of " +
                    std::to_string(cfg.max_sinks));

  // M_i(t) = sum_j t_j B_ij with B_ij = p_j sum_{a in A_ij} V_a^T V_a.
  const int k = datum.quiver.num_sources;
  std::vector<std::vector<Matrix>> b(k);
  for (int i = 0; i < k; ++i)
    b[i].assign(m, Matrix::Zero(datum.dims.source_dims[i], datum.dims.source_dims[i]));
  for (std::size_t e = 0; e < datum.quiver.arrows.size(); ++e) {
    const Arrow& a = datum.quiver.arrows[e];
    b[a.tail][a.head] +=
        datum.weights[a.head] * (datum.matrices[e].transpose() * datum.matrices[e]);
  }

  auto log_objective = [&](const std::vector<double>& t) {
    double value = 0.0;
    for (int i = 0; i < k; ++i) {
      Matrix mi = Matrix::Zero(b[i][0].rows(), b[i][0].cols());
      for (int j = 0; j < m; ++j) mi += t[j] * b[i][j];
      Eigen::SelfAdjointEigenSolver<Matrix> eig(symmetrized(mi));
      if (eig.eigenvalues().minCoeff() <= detail::spd_floor(mi, num.singularity_floor))
        return -std::numeric_limits<double>::infinity();
      value += eig.eigenvalues().array().log().sum();
    }
    for (int j = 0; j < m; ++j) value -= datum.weights[j] * std::log(t[j]);
    return value;
  };

  auto sweep = [&](const std::vector<double>& center_log10, double half_range,
                   std::vector<double>* best_t, double* best_log) {
    std::vector<int> index(m, 0);
    std::vector<double> t(m);
    const int points = cfg.points;
    while (true) {
      for (int j = 0; j < m; ++j) {
        const double frac = points == 1 ? 0.0 : -1.0 + 2.0 * index[j] / (points - 1.0);
        t[j] = std::pow(10.0, center_log10[j] + frac * half_range);
      }
      const double value = log_objective(t);
      if (value < *best_log) {
        *best_log = value;
        *best_t = t;
      }
      int axis = 0;
      while (axis < m && ++index[axis] == points) index[axis++] = 0;
      if (axis == m) break;
    }
  };

  std::vector<double> best_t(m, 1.0);
  double best_log = std::numeric_limits<double>::infinity();
  sweep(std::vector<double>(m, 0.0), cfg.log_range, &best_t, &best_log);

  // One refinement pass around the argmin, one coarse grid step wide.
  const double step = cfg.points > 1 ? 2.0 * cfg.log_range / (cfg.points - 1) : cfg.log_range;
  std::vector<double> center(m);
  for (int j = 0; j < m; ++j) center[j] = std::log10(best_t[j]);
  sweep(center, step, &best_t, &best_log);

  GridResult result;
  result.log_value = best_log;
  result.value = std::isinf(best_log) && best_log < 0 ? 0.0 : std::exp(best_log);
  result.argmin = best_t;
  return result;
}

}  // namespace quiverbl
