#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "quiverbl/oracle.hpp"
#include "quiverbl/scaling.hpp"

namespace quiverbl {

// A tuple of coordinate subspaces closed under all arrow maps whose dimension
// count violates (or witnesses tightness of) the semi-stability inequality
// sum_i |S_i| <= sum_j p_j |T_j|.
struct SubrepCertificate {
  std::vector<std::vector<int>> source_subsets;  // 0-based coordinate indices
  std::vector<std::vector<int>> sink_subsets;
  double lhs = 0.0;    // sum |S_i|
  double rhs = 0.0;    // sum p_j |T_j|
  double slack = 0.0;  // rhs - lhs; negative means instability
};

struct SubrepScanConfig {
  int enumeration_budget = 20;   // max total coordinates sum d_i + sum n_j
  double slack_tol = 1e-12;      // slack below -slack_tol is a violation
};

namespace detail {

// Smallest sink coordinate sets closed under the arrows for given source sets.
inline std::vector<std::vector<int>> minimal_sink_closure(
    const QuiverDatum& datum, const std::vector<std::uint32_t>& source_masks, double closure_tol) {
  std::vector<std::uint32_t> sink_masks(datum.quiver.num_sinks, 0);
  for (std::size_t e = 0; e < datum.quiver.arrows.size(); ++e) {
    const Arrow& a = datum.quiver.arrows[e];
    const Matrix& v = datum.matrices[e];
    for (int c = 0; c < v.cols(); ++c) {
      if (!(source_masks[a.tail] >> c & 1u)) continue;
      for (int r = 0; r < v.rows(); ++r)
        if (std::abs(v(r, c)) > closure_tol) sink_masks[a.head] |= 1u << r;
    }
  }
  std::vector<std::vector<int>> subsets(datum.quiver.num_sinks);
  for (int j = 0; j < datum.quiver.num_sinks; ++j)
    for (int r = 0; r < datum.dims.sink_dims[j]; ++r)
      if (sink_masks[j] >> r & 1u) subsets[j].push_back(r);
  return subsets;
}

inline SubrepCertificate make_certificate(const QuiverDatum& datum,
                                          const std::vector<std::uint32_t>& source_masks,
                                          double closure_tol) {
  SubrepCertificate cert;
  cert.source_subsets.resize(datum.quiver.num_sources);
  for (int i = 0; i < datum.quiver.num_sources; ++i)
    for (int c = 0; c < datum.dims.source_dims[i]; ++c)
      if (source_masks[i] >> c & 1u) cert.source_subsets[i].push_back(c);
  cert.sink_subsets = minimal_sink_closure(datum, source_masks, closure_tol);
  for (const auto& s : cert.source_subsets) cert.lhs += static_cast<double>(s.size());
  for (std::size_t j = 0; j < cert.sink_subsets.size(); ++j)
    cert.rhs += datum.weights[j] * static_cast<double>(cert.sink_subsets[j].size());
  cert.slack = cert.rhs - cert.lhs;
  return cert;
}

}  // namespace detail

// Exhaustive scan of coordinate subrepresentations for semi-stability
// violations. Per source subset only the minimal sink closure is scored: any
// larger closed sink tuple has strictly larger rhs, so every violating tuple
// is witnessed. An empty result is a necessary-condition pass, not a
// semi-stability proof.
inline std::vector<SubrepCertificate> coordinate_subrep_scan(const QuiverDatum& datum,
                                                             const SubrepScanConfig& cfg = {},
                                                             const NumericConfig& num = {}) {
  const int total = datum.dims.total_source_dim() + datum.dims.total_sink_dim();
  if (total > cfg.enumeration_budget)
    throw Error(ErrorCode::BudgetExceeded,
                "coordinate_subrep_scan: " + std::to_string(total) +
                    " coordinates exceed the enumeration budget of " +
                    std::to_string(cfg.enumeration_budget));

  const int k = datum.quiver.num_sources;
  std::vector<SubrepCertificate> violations;
  std::vector<std::uint32_t> masks(k, 0);
  while (true) {
    SubrepCertificate cert = detail::make_certificate(datum, masks, num.closure_tol);
    if (cert.slack < -cfg.slack_tol) violations.push_back(std::move(cert));

    int vertex = 0;  // odometer over the product of per-source subset lattices
    while (vertex < k && ++masks[vertex] == (1u << datum.dims.source_dims[vertex]))
      masks[vertex++] = 0;
    if (vertex == k) break;
  }
  return violations;
}

// Closed coordinate tuples with slack exactly 0 (proper and nonzero). These
// are the candidate factor dimensions the coordinate-subspace search offers in
// place of a real Jordan-Holder filtration.
inline std::vector<SubrepCertificate> tight_coordinate_subreps(const QuiverDatum& datum,
                                                               const SubrepScanConfig& cfg = {},
                                                               const NumericConfig& num = {}) {
  const int total = datum.dims.total_source_dim() + datum.dims.total_sink_dim();
  if (total > cfg.enumeration_budget)
    throw Error(ErrorCode::BudgetExceeded, "tight_coordinate_subreps: budget exceeded");
  const int k = datum.quiver.num_sources;
  std::vector<SubrepCertificate> tight;
  std::vector<std::uint32_t> masks(k, 0);
  while (true) {
    SubrepCertificate cert = detail::make_certificate(datum, masks, num.closure_tol);
    const double size = cert.lhs + [&] {
      double s = 0.0;
      for (const auto& t : cert.sink_subsets) s += static_cast<double>(t.size());
      return s;
    }();
    const bool proper = size > 0.0 && size < static_cast<double>(total);
    if (proper && std::abs(cert.slack) <= cfg.slack_tol) tight.push_back(std::move(cert));

    int vertex = 0;
    while (vertex < k && ++masks[vertex] == (1u << datum.dims.source_dims[vertex]))
      masks[vertex++] = 0;
    if (vertex == k) break;
  }
  return tight;
}

enum class Feasibility { Feasible, Infeasible, Inconclusive };

inline const char* to_string(Feasibility f) {
  switch (f) {
    case Feasibility::Feasible: return "Feasible";
    case Feasibility::Infeasible: return "Infeasible";
    case Feasibility::Inconclusive: return "Inconclusive";
  }
  return "Unknown";
}

struct ClassifyConfig {
  double feasibility_floor = 1e-6;  // stalled estimate above this reads as feasible
  double collapse_ceiling = 1e-10;  // collapsed estimate below this reads as infeasible
  SubrepScanConfig scan;
  ScalingConfig scaling;
};

struct FeasibilityReport {
  Feasibility verdict = Feasibility::Inconclusive;
  std::string reason;
  std::optional<SubrepCertificate> certificate;
  std::optional<ScalingResult> scaling;
  double capacity_estimate = 0.0;
};

// Numeric feasibility classifier. The Feasible/Infeasible gap is intentional:
// stalled runs inside (collapse_ceiling, feasibility_floor) stay Inconclusive.
inline FeasibilityReport classify_feasibility(const QuiverDatum& datum,
                                              const ClassifyConfig& cfg = {},
                                              const NumericConfig& num = {}) {
  FeasibilityReport report;
  const PerpCheck perp = check_perp(datum.dims, datum.weights, num.perp_tol);
  if (!perp.perpendicular) {
    report.verdict = Feasibility::Infeasible;
    report.reason = "dimension vector is not perpendicular to the weights (residual " +
                    num_str(perp.residual) + ")";
    return report;
  }

  try {
    std::vector<SubrepCertificate> certs = coordinate_subrep_scan(datum, cfg.scan, num);
    if (!certs.empty()) {
      report.verdict = Feasibility::Infeasible;
      report.reason = "coordinate subrepresentation violates semi-stability";
      report.certificate = certs.front();
      return report;
    }
  } catch (const Error& e) {
    if (e.code() != ErrorCode::BudgetExceeded) throw;  // scan skipped, fall through to scaling
  }

  ScalingResult run = scale(datum, cfg.scaling, num);
  report.capacity_estimate = run.capacity_estimate();
  switch (run.status) {
    case ScalingStatus::Converged:
      report.verdict = Feasibility::Feasible;
      report.reason = "scaling converged";
      break;
    case ScalingStatus::Collapsed:
      if (report.capacity_estimate < cfg.collapse_ceiling) {
        report.verdict = Feasibility::Infeasible;
        report.reason = "scaling collapsed at " + run.collapse_vertex;
      } else {
        report.verdict = Feasibility::Inconclusive;
        report.reason = "scaling collapsed with a non-vanishing estimate";
      }
      break;
    case ScalingStatus::MaxIterations:
      if (run.stalled && report.capacity_estimate > cfg.feasibility_floor) {
        report.verdict = Feasibility::Feasible;
        report.reason = "scaling stalled with the estimate above the feasibility floor";
      } else {
        report.verdict = Feasibility::Inconclusive;
        report.reason = run.stalled ? "scaling stalled inside the undecided gap"
                                    : "iteration budget exhausted";
      }
      break;
  }
  report.scaling = std::move(run);
  return report;
}

// User-supplied filtration: per-vertex bases (columns are basis vectors, the
// innermost factor first) and the composition type in block order, top-left
// block first.
struct Filtration {
  GroupElement basis;
  std::vector<DimVector> type;
};

inline void validate_filtration(const Filtration& f, const DimVector& dims,
                                const Weights& weights, const NumericConfig& num = {}) {
  if (f.type.empty()) throw Error(ErrorCode::InvalidInput, "filtration: empty composition type");
  DimVector sum;
  sum.source_dims.assign(dims.source_dims.size(), 0);
  sum.sink_dims.assign(dims.sink_dims.size(), 0);
  for (const DimVector& part : f.type) {
    if (part.source_dims.size() != dims.source_dims.size() ||
        part.sink_dims.size() != dims.sink_dims.size())
      throw Error(ErrorCode::InvalidInput, "filtration: factor type has wrong vertex count");
    for (std::size_t i = 0; i < part.source_dims.size(); ++i) {
      if (part.source_dims[i] < 0)
        throw Error(ErrorCode::InvalidInput, "filtration: negative dimension in factor type");
      sum.source_dims[i] += part.source_dims[i];
    }
    for (std::size_t j = 0; j < part.sink_dims.size(); ++j) {
      if (part.sink_dims[j] < 0)
        throw Error(ErrorCode::InvalidInput, "filtration: negative dimension in factor type");
      sum.sink_dims[j] += part.sink_dims[j];
    }
    const PerpCheck perp = check_perp(part, weights, num.perp_tol);
    if (!perp.perpendicular)
      throw Error(ErrorCode::InvalidInput,
                  "filtration: factor type not perpendicular to the weights (residual " +
                      num_str(perp.residual) + ")");
  }
  if (!(sum == dims))
    throw Error(ErrorCode::InvalidInput, "filtration: composition type does not sum to the dims");

  if (f.basis.source_parts.size() != dims.source_dims.size() ||
      f.basis.sink_parts.size() != dims.sink_dims.size())
    throw Error(ErrorCode::InvalidInput, "filtration: basis count does not match the dims");
  for (std::size_t i = 0; i < f.basis.source_parts.size(); ++i)
    detail::checked_inverse(f.basis.source_parts[i], num.singularity_floor, "filtration basis");
  for (std::size_t j = 0; j < f.basis.sink_parts.size(); ++j)
    detail::checked_inverse(f.basis.sink_parts[j], num.singularity_floor, "filtration basis");
}

namespace detail {

inline std::vector<int> block_offsets(const std::vector<DimVector>& type, bool source, int vertex) {
  std::vector<int> offsets(1, 0);
  for (const DimVector& part : type)
    offsets.push_back(offsets.back() +
                      (source ? part.source_dims[vertex] : part.sink_dims[vertex]));
  return offsets;
}

struct TriangularityCheck {
  bool ok = true;
  double max_below_block = 0.0;
  int block_row = -1;
  int block_col = -1;
  std::string arrow_label;
};

inline TriangularityCheck check_upper_triangular(const QuiverDatum& datum,
                                                 const std::vector<DimVector>& type, double tol) {
  TriangularityCheck check;
  const int s = static_cast<int>(type.size());
  for (std::size_t e = 0; e < datum.quiver.arrows.size(); ++e) {
    const Arrow& a = datum.quiver.arrows[e];
    const std::vector<int> row_off = block_offsets(type, false, a.head);
    const std::vector<int> col_off = block_offsets(type, true, a.tail);
    for (int br = 0; br < s; ++br) {
      for (int bc = 0; bc < br; ++bc) {  // strictly below the block diagonal
        const int rows = row_off[br + 1] - row_off[br];
        const int cols = col_off[bc + 1] - col_off[bc];
        if (rows == 0 || cols == 0) continue;
        const double mag =
            max_abs(datum.matrices[e].block(row_off[br], col_off[bc], rows, cols));
        if (mag > check.max_below_block) {
          check.max_below_block = mag;
          check.block_row = br;
          check.block_col = bc;
          check.arrow_label = a.label;
        }
      }
    }
  }
  check.ok = check.max_below_block <= tol;
  return check;
}

inline void require_type_matches(const QuiverDatum& datum, const std::vector<DimVector>& type) {
  if (type.empty()) throw Error(ErrorCode::WrongShape, "empty composition type");
  DimVector sum;
  sum.source_dims.assign(datum.dims.source_dims.size(), 0);
  sum.sink_dims.assign(datum.dims.sink_dims.size(), 0);
  for (const DimVector& part : type) {
    if (part.source_dims.size() != sum.source_dims.size() ||
        part.sink_dims.size() != sum.sink_dims.size())
      throw Error(ErrorCode::WrongShape, "composition type has wrong vertex count");
    for (std::size_t i = 0; i < sum.source_dims.size(); ++i)
      sum.source_dims[i] += part.source_dims[i];
    for (std::size_t j = 0; j < sum.sink_dims.size(); ++j) sum.sink_dims[j] += part.sink_dims[j];
  }
  if (!(sum == datum.dims))
    throw Error(ErrorCode::WrongShape, "composition type does not sum to the dims");
}

}  // namespace detail

struct TriangularizeResult {
  GroupElement transform;  // A with A_x = basis_x^-1
  QuiverDatum transformed;
  detail::TriangularityCheck report;
};

// Basis change assembled from a user filtration. Throws
// NonInvariantFiltration when some below-block-diagonal entry of the
// transformed datum exceeds the triangularity tolerance.
inline TriangularizeResult triangularize_with_filtration(const QuiverDatum& datum,
                                                         const Filtration& filtration,
                                                         const NumericConfig& num = {}) {
  validate_filtration(filtration, datum.dims, datum.weights, num);

  GroupElement a;
  for (const Matrix& b : filtration.basis.source_parts)
    a.source_parts.push_back(detail::checked_inverse(b, num.singularity_floor, "filtration basis"));
  for (const Matrix& b : filtration.basis.sink_parts)
    a.sink_parts.push_back(detail::checked_inverse(b, num.singularity_floor, "filtration basis"));

  TriangularizeResult result;
  result.transformed = act(a, datum, num);
  result.transform = std::move(a);
  result.report =
      detail::check_upper_triangular(result.transformed, filtration.type, num.triangular_tol);
  if (!result.report.ok)
    throw NonInvariantFiltrationError(
        "triangularize_with_filtration: entry of magnitude " +
            num_str(result.report.max_below_block) + " below the block diagonal (arrow '" +
            result.report.arrow_label + "', block " + std::to_string(result.report.block_row) +
            "," + std::to_string(result.report.block_col) + ")",
        result.report.max_below_block, result.report.block_row, result.report.block_col);
  return result;
}

// Direct sum of the block-diagonal entries of an upper-triangular datum.
inline QuiverDatum diag_part(const QuiverDatum& datum, const std::vector<DimVector>& type,
                             const NumericConfig& num = {}) {
  detail::require_type_matches(datum, type);
  const detail::TriangularityCheck check =
      detail::check_upper_triangular(datum, type, num.triangular_tol);
  if (!check.ok)
    throw Error(ErrorCode::WrongShape,
                "diag_part: datum is not upper-triangular of the given type (offending magnitude " +
                    num_str(check.max_below_block) + ")");

  QuiverDatum out = datum;
  const int s = static_cast<int>(type.size());
  for (std::size_t e = 0; e < datum.quiver.arrows.size(); ++e) {
    const Arrow& a = datum.quiver.arrows[e];
    const std::vector<int> row_off = detail::block_offsets(type, false, a.head);
    const std::vector<int> col_off = detail::block_offsets(type, true, a.tail);
    Matrix d = Matrix::Zero(datum.matrices[e].rows(), datum.matrices[e].cols());
    for (int b = 0; b < s; ++b) {
      const int rows = row_off[b + 1] - row_off[b];
      const int cols = col_off[b + 1] - col_off[b];
      if (rows == 0 || cols == 0) continue;
      d.block(row_off[b], col_off[b], rows, cols) =
          datum.matrices[e].block(row_off[b], col_off[b], rows, cols);
    }
    out.matrices[e] = d;
  }
  return out;
}

// One-parameter subgroup action: the (r,c) block picks up the factor t^(c-r).
// As t -> 0 the result converges to diag_part.
inline QuiverDatum lambda_act(const QuiverDatum& datum, const std::vector<DimVector>& type,
                              double t, const NumericConfig& num = {}) {
  if (t == 0.0)
    throw Error(ErrorCode::InvalidInput, "lambda_act: t must be nonzero (use diag_part for t=0)");
  detail::require_type_matches(datum, type);
  const detail::TriangularityCheck check =
      detail::check_upper_triangular(datum, type, num.triangular_tol);
  if (!check.ok)
    throw Error(ErrorCode::WrongShape,
                "lambda_act: datum is not upper-triangular of the given type");

  QuiverDatum out = datum;
  const int s = static_cast<int>(type.size());
  for (std::size_t e = 0; e < datum.quiver.arrows.size(); ++e) {
    const Arrow& a = datum.quiver.arrows[e];
    const std::vector<int> row_off = detail::block_offsets(type, false, a.head);
    const std::vector<int> col_off = detail::block_offsets(type, true, a.tail);
    for (int br = 0; br < s; ++br) {
      for (int bc = 0; bc < s; ++bc) {
        const int rows = row_off[br + 1] - row_off[br];
        const int cols = col_off[bc + 1] - col_off[bc];
        if (rows == 0 || cols == 0 || br == bc) continue;
        out.matrices[e].block(row_off[br], col_off[bc], rows, cols) *=
            std::pow(t, static_cast<double>(bc - br));
      }
    }
  }
  return out;
}

struct DegenerationConfig {
  std::vector<double> t_samples{1.0, 0.5, 0.1};
  ScalingConfig scaling;
};

struct DegenerationReport {
  std::vector<double> t_samples;
  std::vector<LogValue> capacities;
  std::vector<ScalingStatus> statuses;
  LogValue diag_capacity;
  ScalingStatus diag_status = ScalingStatus::MaxIterations;
  double det_balance_residual = 0.0;
  double max_relative_deviation = 0.0;
  bool conclusive = false;
};

// Probes the capacity-reduction identity: capacities along lambda(t) and at
// the block-diagonal limit must all agree. The det-balance residual measures
// |2 sum logdet lambda(t)_x - 2 sum p_y logdet lambda(t)_y|, a linear identity
// in the factor perpendicularity conditions.
inline DegenerationReport degeneration_check(const QuiverDatum& datum,
                                             const Filtration& filtration,
                                             const DegenerationConfig& cfg = {},
                                             const NumericConfig& num = {}) {
  const TriangularizeResult tri = triangularize_with_filtration(datum, filtration, num);
  const std::vector<DimVector>& type = filtration.type;
  const int s = static_cast<int>(type.size());

  DegenerationReport report;
  report.t_samples = cfg.t_samples;

  for (double t : cfg.t_samples) {
    double balance = 0.0;
    for (int b = 0; b < s; ++b) {
      const double exponent = static_cast<double>(s - 1 - b) * std::log(std::abs(t));
      for (int d : type[b].source_dims) balance += 2.0 * exponent * d;
      for (std::size_t j = 0; j < type[b].sink_dims.size(); ++j)
        balance -= 2.0 * datum.weights[j] * exponent * type[b].sink_dims[j];
    }
    report.det_balance_residual = std::max(report.det_balance_residual, std::abs(balance));
  }

  bool all_converged = true;
  for (double t : cfg.t_samples) {
    const CapacityResult cap = capacity(lambda_act(tri.transformed, type, t, num), cfg.scaling, num);
    report.capacities.push_back(cap.cap);
    report.statuses.push_back(cap.status);
    all_converged = all_converged && cap.status == ScalingStatus::Converged;
  }
  const CapacityResult diag_cap = capacity(diag_part(tri.transformed, type, num), cfg.scaling, num);
  report.diag_capacity = diag_cap.cap;
  report.diag_status = diag_cap.status;
  all_converged = all_converged && diag_cap.status == ScalingStatus::Converged;
  report.conclusive = all_converged;

  if (all_converged) {
    double lo = report.diag_capacity.value;
    double hi = report.diag_capacity.value;
    for (const LogValue& c : report.capacities) {
      lo = std::min(lo, c.value);
      hi = std::max(hi, c.value);
    }
    report.max_relative_deviation = lo > 0.0 ? (hi - lo) / lo : std::numeric_limits<double>::infinity();
  }
  return report;
}

}  // namespace quiverbl
