#pragma once

#include <cstdint>
#include <random>
#include <string>

#include "quiverbl/scaling.hpp"

namespace quiverbl {

enum class RandomMode { Generic, GeometricAttempt };

namespace detail {

// Deterministic stream splitting so restarts and sub-draws stay reproducible.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline Matrix gaussian_matrix(int rows, int cols, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix v(rows, cols);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) v(r, c) = normal(rng);
  return v;
}

}  // namespace detail

// Generic mode draws i.i.d. standard normal entries in canonical arrow order.
// Geometric-attempt additionally runs the scaling solver and returns the
// scaled datum; a non-converged run is a generation failure.
inline QuiverDatum random_datum(const BipartiteQuiver& quiver, const DimVector& dims,
                                const Weights& weights, std::uint64_t seed,
                                RandomMode mode = RandomMode::Generic,
                                const ScalingConfig& cfg = {}, const NumericConfig& num = {}) {
  QuiverDatum datum;
  datum.quiver = quiver;
  datum.quiver.canonicalize();
  datum.dims = dims;
  datum.weights = weights;

  if (mode == RandomMode::GeometricAttempt &&
      !check_perp(dims, weights, num.perp_tol).perpendicular)
    throw Error(ErrorCode::InvalidInput,
                "random_datum: geometric-attempt requires sum d_i = sum p_j n_j");

  std::mt19937_64 rng(seed);
  for (const Arrow& a : datum.quiver.arrows)
    datum.matrices.push_back(
        detail::gaussian_matrix(dims.sink_dims[a.head], dims.source_dims[a.tail], rng));

  if (mode == RandomMode::Generic) return datum;

  const ScalingResult run = scale(datum, cfg, num);
  if (run.status != ScalingStatus::Converged)
    throw Error(ErrorCode::GenerationFailed,
                std::string("random_datum: scaling ended with status ") + to_string(run.status) +
                    " after " + std::to_string(run.iterations) + " sweeps (residual " +
                    num_str(run.residual_history.back()) + ")");
  return run.final_datum;
}

// Random PD matrix with eigenvalues log-uniform in [exp(-spread), exp(spread)].
inline Matrix random_spd(int dim, std::mt19937_64& rng, double spread = 1.5) {
  std::uniform_real_distribution<double> uniform(-spread, spread);
  const Matrix q =
      Eigen::HouseholderQR<Matrix>(detail::gaussian_matrix(dim, dim, rng)).householderQ();
  Vector eigs(dim);
  for (int i = 0; i < dim; ++i) eigs[i] = std::exp(uniform(rng));
  return symmetrized(q * eigs.asDiagonal() * q.transpose());
}

inline PdTuple random_pd_tuple(const DimVector& dims, std::uint64_t seed, double spread = 1.5) {
  std::mt19937_64 rng(seed);
  PdTuple y;
  for (int n : dims.sink_dims) y.push_back(random_spd(n, rng, spread));
  return y;
}

// Random group element with per-part condition number at most about
// exp(2 * spread); singular values are log-uniform.
inline GroupElement random_group_element(const DimVector& dims, std::uint64_t seed,
                                         double spread = 1.0) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uniform(-spread, spread);
  auto draw = [&](int dim) {
    const Matrix q1 =
        Eigen::HouseholderQR<Matrix>(detail::gaussian_matrix(dim, dim, rng)).householderQ();
    const Matrix q2 =
        Eigen::HouseholderQR<Matrix>(detail::gaussian_matrix(dim, dim, rng)).householderQ();
    Vector sv(dim);
    for (int i = 0; i < dim; ++i) sv[i] = std::exp(uniform(rng));
    return Matrix(q1 * sv.asDiagonal() * q2.transpose());
  };
  GroupElement a;
  for (int d : dims.source_dims) a.source_parts.push_back(draw(d));
  for (int n : dims.sink_dims) a.sink_parts.push_back(draw(n));
  return a;
}

}  // namespace quiverbl
