// Shared fixtures for the test suites: small closed-form data, a table of
// desk-scale shapes, and brute-force oracles kept independent of the library
// implementation paths they check.
#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "quiverbl/quiverbl.hpp"

namespace testsupport {

using quiverbl::Arrow;
using quiverbl::BipartiteQuiver;
using quiverbl::DimVector;
using quiverbl::Matrix;
using quiverbl::QuiverDatum;
using quiverbl::Weights;

struct ArrowSpec {
  int tail;  // 0-based
  int head;
  std::string label;
};

inline QuiverDatum make_datum(const std::vector<int>& source_dims,
                              const std::vector<int>& sink_dims, const Weights& weights,
                              const std::vector<ArrowSpec>& arrows,
                              const std::vector<Matrix>& matrices) {
  QuiverDatum datum;
  datum.quiver.num_sources = static_cast<int>(source_dims.size());
  datum.quiver.num_sinks = static_cast<int>(sink_dims.size());
  for (const ArrowSpec& a : arrows) datum.quiver.arrows.push_back({a.tail, a.head, a.label});
  datum.dims.source_dims = source_dims;
  datum.dims.sink_dims = sink_dims;
  datum.weights = weights;
  datum.matrices = matrices;

  // Re-establish the canonical arrow order without trusting the caller.
  QuiverDatum sorted = datum;
  sorted.quiver.canonicalize();
  sorted.matrices.clear();
  for (const Arrow& a : sorted.quiver.arrows)
    for (std::size_t e = 0; e < datum.quiver.arrows.size(); ++e)
      if (datum.quiver.arrows[e].label == a.label) sorted.matrices.push_back(datum.matrices[e]);
  return sorted;
}

inline Matrix row(std::initializer_list<double> entries) {
  Matrix v(1, static_cast<Eigen::Index>(entries.size()));
  Eigen::Index c = 0;
  for (double x : entries) v(0, c++) = x;
  return v;
}

inline Matrix scalar(double x) { return Matrix::Constant(1, 1, x); }

// d=(2), two rank-one sinks, p=(1,1): the standard basis rows. Geometric.
inline QuiverDatum coordinate_lines() {
  return make_datum({2}, {1, 1}, {1.0, 1.0}, {{0, 0, "a1"}, {0, 1, "a2"}},
                    {row({1.0, 0.0}), row({0.0, 1.0})});
}

// Same shape with V2 = [0 2]; capacity 4, extremizer Y = (1, 1/4).
inline QuiverDatum stretched_lines() {
  return make_datum({2}, {1, 1}, {1.0, 1.0}, {{0, 0, "a1"}, {0, 1, "a2"}},
                    {row({1.0, 0.0}), row({0.0, 2.0})});
}

// Both rows supported on the first coordinate; infeasible (capacity 0).
inline QuiverDatum rank_deficient_lines() {
  return make_datum({2}, {1, 1}, {1.0, 1.0}, {{0, 0, "a1"}, {0, 1, "a2"}},
                    {row({1.0, 0.0}), row({2.0, 0.0})});
}

// k=m=1, d=n=1, V=[c], p=(1). Capacity c^2.
inline QuiverDatum scalar_datum(double c) {
  return make_datum({1}, {1}, {1.0}, {{0, 0, "a"}}, {scalar(c)});
}

// Three lines in the plane with weights 2/3: the objective genuinely varies
// with Y here. Y = (1,1,1) is a fixed point; Y = (2,1,1) is not.
inline QuiverDatum three_plane_lines() {
  const double w = 2.0 / 3.0;
  return make_datum({2}, {1, 1, 1}, {w, w, w}, {{0, 0, "a1"}, {0, 1, "a2"}, {0, 2, "a3"}},
                    {row({1.0, 0.0}), row({0.0, 1.0}), row({1.0, 1.0})});
}

struct Shape {
  BipartiteQuiver quiver;
  DimVector dims;
  Weights weights;
  std::string name;
};

inline Shape make_shape(const std::string& name, const std::vector<int>& source_dims,
                        const std::vector<int>& sink_dims, const Weights& weights,
                        std::vector<ArrowSpec> arrows = {}) {
  Shape s;
  s.name = name;
  s.dims.source_dims = source_dims;
  s.dims.sink_dims = sink_dims;
  s.weights = weights;
  s.quiver.num_sources = static_cast<int>(source_dims.size());
  s.quiver.num_sinks = static_cast<int>(sink_dims.size());
  if (arrows.empty()) {  // complete bipartite with one arrow per pair
    for (int i = 0; i < s.quiver.num_sources; ++i)
      for (int j = 0; j < s.quiver.num_sinks; ++j)
        s.quiver.arrows.push_back(
            {i, j, "a" + std::to_string(i + 1) + "_" + std::to_string(j + 1)});
  } else {
    for (const ArrowSpec& a : arrows) s.quiver.arrows.push_back({a.tail, a.head, a.label});
  }
  s.quiver.canonicalize();
  return s;
}

// Perpendicular desk-scale shapes, k,m <= 3, dims <= 4. Generic data on each
// of these scales to geometric position.
inline std::vector<Shape> shape_table() {
  const double rt2 = std::sqrt(2.0);
  std::vector<Shape> shapes;
  shapes.push_back(make_shape("single_2x2", {2}, {2}, {1.0}));
  shapes.push_back(make_shape("two_lines", {2}, {1, 1}, {1.0, 1.0}));
  // Irrational weights need dims without forced kernels: sum d = rt2*2 + (2-rt2)*2.
  shapes.push_back(make_shape("complete_irrational", {2, 2}, {2, 2}, {rt2, 2.0 - rt2}));
  shapes.push_back(make_shape("complete_2x2", {2, 2}, {2, 2}, {1.0, 1.0}));
  shapes.push_back(make_shape("three_lines", {3}, {1, 1, 1}, {1.0, 1.0, 1.0}));
  shapes.push_back(make_shape("fan_in", {1, 2}, {3}, {1.0}));
  shapes.push_back(make_shape("double_arrow", {2}, {2}, {1.0},
                              {{0, 0, "a"}, {0, 0, "b"}}));
  shapes.push_back(make_shape("wide", {2, 1, 1}, {2, 2}, {1.0, 1.0}));
  shapes.push_back(make_shape("scalar_irrational", {1, 1}, {1, 1}, {rt2, 2.0 - rt2}));
  shapes.push_back(make_shape("half_weights", {2}, {2, 2}, {0.5, 0.5}));
  return shapes;
}

// Rank-one shapes (all sink dims 1) for the AM-GM and grid suites.
inline std::vector<Shape> rank_one_shape_table() {
  const double third = 2.0 / 3.0;
  std::vector<Shape> shapes;
  shapes.push_back(make_shape("two_lines", {2}, {1, 1}, {1.0, 1.0}));
  shapes.push_back(make_shape("three_lines", {3}, {1, 1, 1}, {1.0, 1.0, 1.0}));
  shapes.push_back(make_shape("thirds_lines", {2}, {1, 1, 1}, {third, third, third}));
  shapes.push_back(make_shape("two_source_lines", {1, 2}, {1, 1, 1}, {1.0, 1.0, 1.0}));
  shapes.push_back(make_shape("irrational_scalars", {1, 1}, {1, 1},
                              {std::sqrt(2.0), 2.0 - std::sqrt(2.0)}));
  return shapes;
}

// Upper-triangular 2-block instances whose extensions split, so scaling
// converges at every lambda(t) sample. type[0] is the top-left block.
struct TwoBlockInstance {
  QuiverDatum datum;
  std::vector<DimVector> type;
  std::string name;
};

// k=2 sources feeding one 2-dim sink: factors are 1-dim scalars v and w, the
// coupling sits above the diagonal.
inline TwoBlockInstance fan_instance(double v, double w, double coupling) {
  TwoBlockInstance fan;
  Matrix v1(2, 1);
  v1 << v, 0.0;
  Matrix v2(2, 1);
  v2 << coupling, w;
  fan.datum = make_datum({1, 1}, {2}, {1.0}, {{0, 0, "a1"}, {1, 0, "a2"}}, {v1, v2});
  fan.type = {DimVector{{1, 0}, {1}}, DimVector{{0, 1}, {1}}};
  fan.name = "fan";
  return fan;
}

// Single invertible arrow d=n=2: every upper-triangular representation splits.
inline TwoBlockInstance single_arrow_triangular(double a, double coupling, double c) {
  TwoBlockInstance instance;
  Matrix w(2, 2);
  w << a, coupling, 0.0, c;
  instance.datum = make_datum({2}, {2}, {1.0}, {{0, 0, "a"}}, {w});
  instance.type = {DimVector{{1}, {1}}, DimVector{{1}, {1}}};
  instance.name = "single_arrow";
  return instance;
}

// Two arrows on d=n=2 with distinct generic diagonals: Hom between the scalar
// factors vanishes, so the extension splits as well.
inline TwoBlockInstance double_arrow_triangular(double a1, double c1, double a2, double c2,
                                                double coupling1, double coupling2) {
  TwoBlockInstance instance;
  Matrix wa(2, 2), wb(2, 2);
  wa << a1, coupling1, 0.0, c1;
  wb << a2, coupling2, 0.0, c2;
  instance.datum = make_datum({2}, {2}, {1.0}, {{0, 0, "a"}, {0, 0, "b"}}, {wa, wb});
  instance.type = {DimVector{{1}, {1}}, DimVector{{1}, {1}}};
  instance.name = "double_arrow";
  return instance;
}

// Cofactor-expansion determinant, the brute-force oracle for logdet.
inline double brute_force_det(const Matrix& a) {
  const Eigen::Index n = a.rows();
  if (n == 0) return 1.0;
  if (n == 1) return a(0, 0);
  double det = 0.0;
  for (Eigen::Index c = 0; c < n; ++c) {
    Matrix minor(n - 1, n - 1);
    for (Eigen::Index r = 1; r < n; ++r) {
      Eigen::Index mc = 0;
      for (Eigen::Index cc = 0; cc < n; ++cc) {
        if (cc == c) continue;
        minor(r - 1, mc++) = a(r, cc);
      }
    }
    det += (c % 2 == 0 ? 1.0 : -1.0) * a(0, c) * brute_force_det(minor);
  }
  return det;
}

// Central finite differences of the log objective with respect to one Y_j,
// over the symmetric perturbation basis. Independent of the analytic path.
inline Matrix fd_log_objective_gradient(const QuiverDatum& datum, const quiverbl::PdTuple& y,
                                        std::size_t j, double h = 1e-5) {
  const Eigen::Index n = y[j].rows();
  Matrix grad = Matrix::Zero(n, n);
  quiverbl::PdTuple probe = y;
  for (Eigen::Index r = 0; r < n; ++r) {
    for (Eigen::Index c = r; c < n; ++c) {
      Matrix basis = Matrix::Zero(n, n);
      basis(r, c) = 1.0;
      basis(c, r) = 1.0;
      probe[j] = y[j] + h * basis;
      const double up = quiverbl::objective_value(datum, probe).log;
      probe[j] = y[j] - h * basis;
      const double down = quiverbl::objective_value(datum, probe).log;
      probe[j] = y[j];
      const double slope = (up - down) / (2.0 * h);  // = tr(G * basis)
      grad(r, c) = r == c ? slope : 0.5 * slope;
      grad(c, r) = grad(r, c);
    }
  }
  return grad;
}

inline double max_gradient_norm(const std::vector<Matrix>& grad) {
  double norm = 0.0;
  for (const Matrix& g : grad) norm = std::max(norm, g.norm());
  return norm;
}

}  // namespace testsupport
