#pragma once

#include <algorithm>
#include <set>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "quiverbl/spd.hpp"

namespace quiverbl {

// Arrow of a bipartite quiver: tail is a source index, head a sink index
// (0-based internally; the JSON format is 1-based).
struct Arrow {
  int tail = 0;
  int head = 0;
  std::string label;

  friend bool operator==(const Arrow& a, const Arrow& b) {
    return a.tail == b.tail && a.head == b.head && a.label == b.label;
  }
};

// Canonical arrow order: lexicographic by (tail, head, label). All serialized
// output and all random fills follow this order.
inline bool canonical_less(const Arrow& a, const Arrow& b) {
  return std::tie(a.tail, a.head, a.label) < std::tie(b.tail, b.head, b.label);
}

struct BipartiteQuiver {
  int num_sources = 0;
  int num_sinks = 0;
  std::vector<Arrow> arrows;

  void canonicalize() { std::sort(arrows.begin(), arrows.end(), canonical_less); }
};

// Non-negative entries are allowed only for filtration factor types; data
// carried by a QuiverDatum must have every entry >= 1.
struct DimVector {
  std::vector<int> source_dims;
  std::vector<int> sink_dims;

  int total_source_dim() const {
    int s = 0;
    for (int d : source_dims) s += d;
    return s;
  }
  int total_sink_dim() const {
    int s = 0;
    for (int n : sink_dims) s += n;
    return s;
  }
  friend bool operator==(const DimVector& a, const DimVector& b) {
    return a.source_dims == b.source_dims && a.sink_dims == b.sink_dims;
  }
};

using Weights = std::vector<double>;

// A representation of the quiver together with sink weights: one real
// n_{head} x d_{tail} matrix per arrow, stored in canonical arrow order.
struct QuiverDatum {
  BipartiteQuiver quiver;
  DimVector dims;
  Weights weights;
  std::vector<Matrix> matrices;
};

// One invertible matrix per vertex, acting by W_a -> h_{head} W_a g_{tail}^-1.
struct GroupElement {
  std::vector<Matrix> source_parts;
  std::vector<Matrix> sink_parts;

  static GroupElement identity(const DimVector& dims) {
    GroupElement a;
    for (int d : dims.source_dims) a.source_parts.push_back(Matrix::Identity(d, d));
    for (int n : dims.sink_dims) a.sink_parts.push_back(Matrix::Identity(n, n));
    return a;
  }
};

struct ValidationReport {
  std::vector<std::string> violations;
  bool ok() const { return violations.empty(); }
};

inline ValidationReport validate_datum(const QuiverDatum& datum) {
  ValidationReport report;
  auto bad = [&](const std::string& msg) { report.violations.push_back(msg); };

  const auto& q = datum.quiver;
  if (q.num_sources < 1) bad("quiver must have at least one source vertex");
  if (q.num_sinks < 1) bad("quiver must have at least one sink vertex");
  if (q.arrows.empty()) bad("quiver must have at least one arrow");

  std::set<std::string> labels;
  for (const Arrow& a : q.arrows) {
    if (a.tail < 0 || a.tail >= q.num_sources)
      bad("arrow '" + a.label + "' has tail outside the source range");
    if (a.head < 0 || a.head >= q.num_sinks)
      bad("arrow '" + a.label + "' has head outside the sink range");
    if (!labels.insert(a.label).second) bad("duplicate arrow label '" + a.label + "'");
  }

  if (static_cast<int>(datum.dims.source_dims.size()) != q.num_sources)
    bad("source dimension count does not match the number of sources");
  if (static_cast<int>(datum.dims.sink_dims.size()) != q.num_sinks)
    bad("sink dimension count does not match the number of sinks");
  for (int d : datum.dims.source_dims)
    if (d < 1) bad("source dimensions must be positive");
  for (int n : datum.dims.sink_dims)
    if (n < 1) bad("sink dimensions must be positive");
  if (static_cast<int>(datum.weights.size()) != q.num_sinks)
    bad("weight count does not match the number of sinks");
  for (double p : datum.weights)
    if (!(p > 0.0) || !std::isfinite(p)) bad("weights must be positive finite reals");

  if (datum.matrices.size() != q.arrows.size()) {
    bad("expected one matrix per arrow");
    return report;  // shape checks below would index out of range
  }
  if (!report.ok()) return report;

  for (std::size_t e = 0; e < q.arrows.size(); ++e) {
    const Arrow& a = q.arrows[e];
    const Matrix& v = datum.matrices[e];
    const int rows = datum.dims.sink_dims[a.head];
    const int cols = datum.dims.source_dims[a.tail];
    if (v.rows() != rows || v.cols() != cols)
      bad("matrix on arrow '" + a.label + "' has shape " + std::to_string(v.rows()) + "x" +
          std::to_string(v.cols()) + ", expected " + std::to_string(rows) + "x" +
          std::to_string(cols));
    else if (!all_finite(v))
      bad("matrix on arrow '" + a.label + "' has non-finite entries");
  }

  // A sink with no incoming arrows makes the sink identity unreachable and
  // the sink scaling step undefined.
  std::vector<int> indegree(q.num_sinks, 0);
  for (const Arrow& a : q.arrows)
    if (a.head >= 0 && a.head < q.num_sinks) indegree[a.head]++;
  for (int j = 0; j < q.num_sinks; ++j)
    if (indegree[j] == 0) bad("sink " + std::to_string(j + 1) + " receives no arrows");

  return report;
}

struct PerpCheck {
  bool perpendicular = false;
  double residual = 0.0;  // sum d_i - sum p_j n_j
};

inline PerpCheck check_perp(const DimVector& dims, const Weights& weights,
                            double perp_tol = NumericConfig{}.perp_tol) {
  double lhs = 0.0;
  for (int d : dims.source_dims) lhs += d;
  double rhs = 0.0;
  for (std::size_t j = 0; j < weights.size() && j < dims.sink_dims.size(); ++j)
    rhs += weights[j] * dims.sink_dims[j];
  const double residual = lhs - rhs;
  return {std::abs(residual) <= perp_tol, residual};
}

namespace detail {

inline Matrix checked_inverse(const Matrix& part, double floor, const std::string& who) {
  if (part.rows() != part.cols())
    throw Error(ErrorCode::InvalidGroupElement, who + ": non-square part");
  Eigen::PartialPivLU<Matrix> lu(part);
  if (std::abs(lu.determinant()) <= floor)
    throw Error(ErrorCode::InvalidGroupElement, who + ": |det| below the singularity floor");
  return lu.inverse();
}

}  // namespace detail

// Simultaneous conjugation: (A.V)_a = h_{head} V_a g_{tail}^-1.
inline QuiverDatum act(const GroupElement& a, const QuiverDatum& datum,
                       const NumericConfig& cfg = {}) {
  if (a.source_parts.size() != datum.dims.source_dims.size() ||
      a.sink_parts.size() != datum.dims.sink_dims.size())
    throw Error(ErrorCode::InvalidGroupElement, "act: part count does not match the dims");
  for (std::size_t i = 0; i < a.source_parts.size(); ++i)
    if (a.source_parts[i].rows() != datum.dims.source_dims[i] ||
        a.source_parts[i].cols() != datum.dims.source_dims[i])
      throw Error(ErrorCode::InvalidGroupElement, "act: source part shape mismatch");
  for (std::size_t j = 0; j < a.sink_parts.size(); ++j)
    if (a.sink_parts[j].rows() != datum.dims.sink_dims[j] ||
        a.sink_parts[j].cols() != datum.dims.sink_dims[j])
      throw Error(ErrorCode::InvalidGroupElement, "act: sink part shape mismatch");

  std::vector<Matrix> source_inverses;
  source_inverses.reserve(a.source_parts.size());
  for (const Matrix& g : a.source_parts)
    source_inverses.push_back(detail::checked_inverse(g, cfg.singularity_floor, "act(source)"));
  for (const Matrix& h : a.sink_parts)
    detail::checked_inverse(h, cfg.singularity_floor, "act(sink)");  // invertibility check only

  QuiverDatum out = datum;
  for (std::size_t e = 0; e < datum.quiver.arrows.size(); ++e) {
    const Arrow& arrow = datum.quiver.arrows[e];
    out.matrices[e] = a.sink_parts[arrow.head] * datum.matrices[e] * source_inverses[arrow.tail];
  }
  return out;
}

// Sink-splitting construction: each sink j becomes n_j rank-one sinks carrying
// the eigenbasis of Y_j; arrow (l,a) gets u_{lj}^T V_a and weight p_j. The
// eigenvalues t_{lj} (flattened in new-sink order) are the expanded datum's
// natural PD tuple.
struct TildeExpansion {
  QuiverDatum datum;
  std::vector<double> eigenvalues;           // t_{lj}, one per new sink
  std::vector<std::pair<int, int>> origins;  // new sink -> (l, original j)

  PdTuple eigenvalue_tuple() const {
    PdTuple t;
    t.reserve(eigenvalues.size());
    for (double v : eigenvalues) t.push_back(Matrix::Constant(1, 1, v));
    return t;
  }
};

inline TildeExpansion tilde_expand(const QuiverDatum& datum, const PdTuple& y,
                                   const NumericConfig& cfg = {}) {
  const int m = datum.quiver.num_sinks;
  if (static_cast<int>(y.size()) != m)
    throw Error(ErrorCode::WrongShape, "tilde_expand: expected one Y per sink");
  for (int j = 0; j < m; ++j) {
    if (y[j].rows() != datum.dims.sink_dims[j])
      throw Error(ErrorCode::WrongShape, "tilde_expand: Y shape mismatch at sink " +
                                             std::to_string(j + 1));
    require_spd(y[j], cfg.pd_floor, "tilde_expand");
  }

  std::vector<int> offset(m, 0);
  for (int j = 1; j < m; ++j) offset[j] = offset[j - 1] + datum.dims.sink_dims[j - 1];

  TildeExpansion out;
  out.datum.quiver.num_sources = datum.quiver.num_sources;
  out.datum.quiver.num_sinks = datum.dims.total_sink_dim();
  out.datum.dims.source_dims = datum.dims.source_dims;
  out.datum.dims.sink_dims.assign(out.datum.quiver.num_sinks, 1);
  out.datum.weights.resize(out.datum.quiver.num_sinks);
  out.eigenvalues.resize(out.datum.quiver.num_sinks);
  out.origins.resize(out.datum.quiver.num_sinks);

  std::vector<SymEig> eigs;
  eigs.reserve(m);
  for (int j = 0; j < m; ++j) {
    eigs.push_back(sym_eig(y[j]));
    for (int l = 0; l < datum.dims.sink_dims[j]; ++l) {
      out.datum.weights[offset[j] + l] = datum.weights[j];
      out.eigenvalues[offset[j] + l] = eigs[j].eigenvalues[l];
      out.origins[offset[j] + l] = {l, j};
    }
  }

  for (std::size_t e = 0; e < datum.quiver.arrows.size(); ++e) {
    const Arrow& a = datum.quiver.arrows[e];
    for (int l = 0; l < datum.dims.sink_dims[a.head]; ++l) {
      Arrow split{a.tail, offset[a.head] + l, a.label + "." + std::to_string(l)};
      out.datum.quiver.arrows.push_back(split);
      out.datum.matrices.push_back(eigs[a.head].eigenvectors.col(l).transpose() *
                                   datum.matrices[e]);
    }
  }

  // Re-impose the canonical order on the split arrows.
  std::vector<std::size_t> order(out.datum.quiver.arrows.size());
  for (std::size_t e = 0; e < order.size(); ++e) order[e] = e;
  std::sort(order.begin(), order.end(), [&](std::size_t lhs, std::size_t rhs) {
    return canonical_less(out.datum.quiver.arrows[lhs], out.datum.quiver.arrows[rhs]);
  });
  std::vector<Arrow> arrows;
  std::vector<Matrix> matrices;
  for (std::size_t e : order) {
    arrows.push_back(out.datum.quiver.arrows[e]);
    matrices.push_back(out.datum.matrices[e]);
  }
  out.datum.quiver.arrows = std::move(arrows);
  out.datum.matrices = std::move(matrices);
  return out;
}

}  // namespace quiverbl
