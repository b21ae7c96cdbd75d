#include <gtest/gtest.h>

#include "quiverbl/objective.hpp"
#include "quiverbl/random.hpp"
#include "support.hpp"

using namespace quiverbl;
using namespace testsupport;

namespace {

TEST(ValidateDatum, IdentityCaseIsClean) {
  EXPECT_TRUE(validate_datum(scalar_datum(1.0)).ok());
}

TEST(ValidateDatum, ShapeViolation) {
  QuiverDatum datum = scalar_datum(1.0);
  datum.matrices[0] = Matrix::Identity(2, 2);  // arrow requires 1x1
  const ValidationReport report = validate_datum(datum);
  ASSERT_EQ(report.violations.size(), 1u);
  EXPECT_NE(report.violations[0].find("shape"), std::string::npos);
}

TEST(ValidateDatum, NonFiniteEntry) {
  QuiverDatum datum = coordinate_lines();
  datum.matrices[0](0, 0) = std::numeric_limits<double>::quiet_NaN();
  const ValidationReport report = validate_datum(datum);
  ASSERT_EQ(report.violations.size(), 1u);
  EXPECT_NE(report.violations[0].find("non-finite"), std::string::npos);
}

TEST(ValidateDatum, DuplicateLabelsAndOrphanSink) {
  QuiverDatum datum = coordinate_lines();
  datum.quiver.arrows[1].label = "a1";
  EXPECT_FALSE(validate_datum(datum).ok());

  // Sink 2 loses its only arrow.
  QuiverDatum orphan = make_datum({2}, {1, 1}, {1.0, 1.0}, {{0, 0, "a1"}}, {row({1.0, 0.0})});
  const ValidationReport report = validate_datum(orphan);
  EXPECT_FALSE(report.ok());
  bool found = false;
  for (const auto& v : report.violations) found = found || v.find("receives no arrows") != std::string::npos;
  EXPECT_TRUE(found);
}

TEST(CheckPerp, Examples) {
  DimVector d1{{2}, {1, 1}};
  EXPECT_TRUE(check_perp(d1, {1.0, 1.0}).perpendicular);
  EXPECT_EQ(check_perp(d1, {1.0, 1.0}).residual, 0.0);

  DimVector d2{{1}, {1}};
  EXPECT_TRUE(check_perp(d2, {1.0}).perpendicular);

  const PerpCheck bad = check_perp(d1, {0.5, 0.5});
  EXPECT_FALSE(bad.perpendicular);
  EXPECT_EQ(bad.residual, 1.0);
}

TEST(Act, IdentityLeavesDatumUnchanged) {
  const QuiverDatum datum = stretched_lines();
  const QuiverDatum moved = act(GroupElement::identity(datum.dims), datum);
  for (std::size_t e = 0; e < datum.matrices.size(); ++e)
    EXPECT_EQ((moved.matrices[e] - datum.matrices[e]).norm(), 0.0);
}

TEST(Act, ScalarArithmetic) {
  const QuiverDatum datum = scalar_datum(1.0);
  GroupElement a;
  a.source_parts = {scalar(2.0)};
  a.sink_parts = {scalar(1.0)};
  const QuiverDatum moved = act(a, datum);
  EXPECT_NEAR(moved.matrices[0](0, 0), 0.5, 1e-15);
}

TEST(Act, InverseRoundTrip) {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const Shape shape = shape_table()[seed % shape_table().size()];
    const QuiverDatum datum =
        random_datum(shape.quiver, shape.dims, shape.weights, seed, RandomMode::Generic);
    const GroupElement a = random_group_element(shape.dims, seed * 31 + 1);
    GroupElement a_inv;
    for (const Matrix& g : a.source_parts) a_inv.source_parts.push_back(g.inverse());
    for (const Matrix& h : a.sink_parts) a_inv.sink_parts.push_back(h.inverse());
    const QuiverDatum round = act(a, act(a_inv, datum));
    for (std::size_t e = 0; e < datum.matrices.size(); ++e)
      EXPECT_LT((round.matrices[e] - datum.matrices[e]).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(Act, GroupActionProperty) {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const Shape shape = shape_table()[seed % shape_table().size()];
    const QuiverDatum datum =
        random_datum(shape.quiver, shape.dims, shape.weights, seed, RandomMode::Generic);
    const GroupElement a = random_group_element(shape.dims, seed * 101 + 3);
    const GroupElement b = random_group_element(shape.dims, seed * 101 + 4);
    GroupElement ab;
    for (std::size_t i = 0; i < a.source_parts.size(); ++i)
      ab.source_parts.push_back(a.source_parts[i] * b.source_parts[i]);
    for (std::size_t j = 0; j < a.sink_parts.size(); ++j)
      ab.sink_parts.push_back(a.sink_parts[j] * b.sink_parts[j]);
    const QuiverDatum composed = act(ab, datum);
    const QuiverDatum nested = act(a, act(b, datum));
    for (std::size_t e = 0; e < datum.matrices.size(); ++e)
      EXPECT_LT((composed.matrices[e] - nested.matrices[e]).cwiseAbs().maxCoeff(), 1e-10);
  }
}

TEST(Act, SingularPartRejected) {
  const QuiverDatum datum = scalar_datum(1.0);
  GroupElement a;
  a.source_parts = {scalar(0.0)};
  a.sink_parts = {scalar(1.0)};
  try {
    act(a, datum);
    FAIL() << "expected InvalidGroupElement";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::InvalidGroupElement);
  }
}

TEST(Act, PreservesPerp) {
  const QuiverDatum datum = stretched_lines();
  const GroupElement a = random_group_element(datum.dims, 5);
  const QuiverDatum moved = act(a, datum);
  EXPECT_EQ(check_perp(moved.dims, moved.weights).perpendicular,
            check_perp(datum.dims, datum.weights).perpendicular);
}

TEST(TildeExpand, IdentityEigenbasis) {
  // n=(2), Y = I: rows of V become the split arrows, eigenvalues all 1.
  QuiverDatum datum = make_datum({2}, {2}, {1.0}, {{0, 0, "a"}}, {Matrix::Identity(2, 2)});
  const TildeExpansion expansion = tilde_expand(datum, {Matrix::Identity(2, 2)});
  ASSERT_EQ(expansion.datum.quiver.num_sinks, 2);
  ASSERT_EQ(expansion.eigenvalues.size(), 2u);
  EXPECT_DOUBLE_EQ(expansion.eigenvalues[0], 1.0);
  EXPECT_DOUBLE_EQ(expansion.eigenvalues[1], 1.0);
  for (std::size_t e = 0; e < expansion.datum.matrices.size(); ++e)
    EXPECT_EQ(expansion.datum.matrices[e].rows(), 1);
  EXPECT_EQ(expansion.datum.weights[0], 1.0);
  EXPECT_EQ(expansion.datum.weights[1], 1.0);
}

TEST(TildeExpand, RankOneSinkIsIdentityUpToSign) {
  const QuiverDatum datum = scalar_datum(3.0);
  const TildeExpansion expansion = tilde_expand(datum, {scalar(2.5)});
  EXPECT_DOUBLE_EQ(expansion.eigenvalues[0], 2.5);
  EXPECT_NEAR(std::abs(expansion.datum.matrices[0](0, 0)), 3.0, 1e-15);
}

TEST(TildeExpand, PreservesObjective) {
  for (std::uint64_t seed = 1; seed <= 30; ++seed) {
    const Shape shape = shape_table()[seed % shape_table().size()];
    const QuiverDatum datum =
        random_datum(shape.quiver, shape.dims, shape.weights, seed, RandomMode::Generic);
    const PdTuple y = random_pd_tuple(shape.dims, seed * 7 + 1);
    const TildeExpansion expansion = tilde_expand(datum, y);
    const LogValue direct = objective_value(datum, y);
    const LogValue expanded = objective_value(expansion.datum, expansion.eigenvalue_tuple());
    EXPECT_NEAR(direct.log, expanded.log, 1e-10 * (1.0 + std::abs(direct.log)));
  }
}

TEST(TildeExpand, PreservesGeometricity) {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const Shape shape = shape_table()[seed % shape_table().size()];
    ScalingConfig tight;
    tight.tolerance = 1e-11;
    const QuiverDatum datum = random_datum(shape.quiver, shape.dims, shape.weights, seed,
                                           RandomMode::GeometricAttempt, tight);
    ASSERT_LT(geometric_residual(datum).max, 1e-10);
    const PdTuple y = random_pd_tuple(shape.dims, seed * 13 + 5);
    const TildeExpansion expansion = tilde_expand(datum, y);
    EXPECT_LT(geometric_residual(expansion.datum).max, 1e-8);
  }
}

TEST(TildeExpand, RejectsNonPd) {
  QuiverDatum datum = make_datum({2}, {2}, {1.0}, {{0, 0, "a"}}, {Matrix::Identity(2, 2)});
  Matrix indefinite = Matrix::Identity(2, 2);
  indefinite(1, 1) = -1.0;
  try {
    tilde_expand(datum, {indefinite});
    FAIL() << "expected NotPositiveDefinite";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NotPositiveDefinite);
  }
}

TEST(RandomDatum, Deterministic) {
  const Shape shape = shape_table()[3];
  const QuiverDatum a =
      random_datum(shape.quiver, shape.dims, shape.weights, 42, RandomMode::Generic);
  const QuiverDatum b =
      random_datum(shape.quiver, shape.dims, shape.weights, 42, RandomMode::Generic);
  ASSERT_EQ(a.matrices.size(), b.matrices.size());
  for (std::size_t e = 0; e < a.matrices.size(); ++e)
    EXPECT_EQ((a.matrices[e] - b.matrices[e]).norm(), 0.0);
  EXPECT_TRUE(validate_datum(a).ok());
}

TEST(RandomDatum, GeometricAttemptReachesPosition) {
  ScalingConfig tight;
  tight.tolerance = 1e-11;
  const QuiverDatum datum = random_datum(coordinate_lines().quiver, {{2}, {1, 1}}, {1.0, 1.0},
                                         9, RandomMode::GeometricAttempt, tight);
  EXPECT_LT(geometric_residual(datum).max, 1e-10);
}

TEST(RandomDatum, GeometricAttemptRequiresPerp) {
  EXPECT_THROW(random_datum(coordinate_lines().quiver, {{2}, {1, 1}}, {0.5, 0.5}, 1,
                            RandomMode::GeometricAttempt),
               Error);
}

}  // namespace
