#include <gtest/gtest.h>

#include "l2ext/divisor.hpp"
#include "l2ext/families.hpp"
#include "l2ext/oracles.hpp"

using namespace l2ext;

namespace {

std::vector<std::vector<double>> sample_curve(std::size_t n, const std::function<std::vector<double>(double)>& c) {
  std::vector<std::vector<double>> out;
  for (std::size_t k = 0; k <= n; ++k) out.push_back(c(static_cast<double>(k) / static_cast<double>(n)));
  return out;
}

}  // namespace

TEST(Divisor, InvertibleMapHasEmptyDivisor) {
  const SpacePtr s = build_grid({{Factor::circle(families::two_pi)}}, std::size_t{500});
  const FiberField e = FiberField::constant(s, 2);
  const BundleMap t = BundleMap::generate(e, e, [&](std::size_t j) -> Matrix {
    Matrix m(2, 2);
    const double x = s->coordinate(j, 0);
    m << 2 + std::cos(x), 0.5, 0.0, 1.5 + std::sin(x);
    return m;
  });
  const DivisorReport r = divisor_of_map(t);
  EXPECT_TRUE(r.flagged_cells.empty());
  EXPECT_TRUE(r.clusters.empty());
  EXPECT_TRUE(is_zero({t}));
}

TEST(Divisor, TransversalZerosFormTwoClusters) {
  const ExtObject x = families::transversal_power(10000, 1);
  const DivisorReport r = divisor_of_map(x.alpha);
  ASSERT_EQ(r.clusters.size(), 2u);
  const SampleSpace& s = *x.base();
  const double h = s.cell_diameter();
  const double d = hausdorff_distance(s, r.flagged_cells, {{0.0}, {families::two_pi / 2}});
  EXPECT_LE(d, 2 * h);
  EXPECT_EQ(r.criterion, "min-singular-lipschitz");
}

TEST(Divisor, CrossOnTorusWithinTwoCells) {
  const ExtObject x = families::torus_cross(200);
  const DivisorReport r = divisor_of_map(x.alpha);
  auto ref = sample_curve(400, [](double u) { return std::vector<double>{u - 0.5, 0.0}; });
  const auto other = sample_curve(400, [](double u) { return std::vector<double>{0.0, u - 0.5}; });
  ref.insert(ref.end(), other.begin(), other.end());
  EXPECT_LE(hausdorff_distance(*x.base(), r.flagged_cells, ref), 2 * x.base()->cell_diameter());
  EXPECT_EQ(r.clusters.size(), 1u);
}

TEST(Divisor, DetectionModesAgreeOnSimpleZero) {
  const SpacePtr s = build_grid({{Factor::interval(-1, 1)}}, std::size_t{101});
  std::vector<Complex> v(101);
  for (std::size_t j = 0; j < 101; ++j) v[j] = s->coordinate(j, 0);
  const BundleMap t = BundleMap::scalar(s, v);
  for (DetectionMode m : {DetectionMode::lipschitz, DetectionMode::threshold, DetectionMode::determinant,
                          DetectionMode::exact}) {
    DetectionPolicy p;
    p.mode = m;
    p.delta_div = 5e-3;
    const DivisorReport r = divisor_of_map(t, p);
    ASSERT_EQ(r.flagged_cells.size(), 1u) << to_string(m);
    EXPECT_EQ(r.flagged_cells[0], 50u) << to_string(m);
  }
}

TEST(Divisor, BudgetRejectsFatZeroSets) {
  const SpacePtr s = build_grid({{Factor::interval(-1, 1)}}, std::size_t{100});
  std::vector<Complex> v(100);
  for (std::size_t j = 0; j < 100; ++j) v[j] = std::max(0.0, s->coordinate(j, 0));
  EXPECT_THROW(divisor_of_map(BundleMap::scalar(s, v)), PreconditionError);
  const FiberField e = FiberField::constant(s, 1), f = FiberField::constant(s, 2);
  EXPECT_THROW(divisor_of_map(BundleMap::zero(e, f)), ValidationError);
}

TEST(Divisor, ClusterMultiplicityEstimates) {
  for (int m : {1, 2}) {
    const ExtObject x = families::transversal_power(200000, m);
    DetectionPolicy p;
    p.multiplicity_dilation = 2000;
    p.capacity.lo = m == 1 ? 1e-3 : 1e-6;
    p.capacity.hi = m == 1 ? 3e-2 : 1e-4;
    const DivisorReport r = divisor_of_map(x.alpha, p);
    ASSERT_EQ(r.clusters.size(), 2u);
    for (const auto& c : r.clusters) {
      ASSERT_TRUE(c.local_capacity.has_value());
      EXPECT_NEAR(c.local_capacity->capacity, m, 0.1 * m);
    }
  }
}

// fiber Betti numbers recomputed with FullPivLU at every cell
TEST(Divisor, BettiJumpLocusMatchesOracle) {
  Rng rng(51);
  const SpacePtr s = build_grid({{Factor::interval(-1, 1), Factor::torus()}}, {41, 10});
  const Matrix a = oracle::gaussian(rng, 2, 2);
  const FiberField e2 = FiberField::constant(s, 2), e1 = FiberField::constant(s, 1);
  // d1 z = 0 on the range of d0 (first coordinate axis); d0 drops rank at x1 = 0
  const Matrix q = oracle::unitary(rng, 2);
  BundleComplex c;
  c.fields = {e2, e2, e1};
  c.maps = {BundleMap::generate(e2, e2, [&](std::size_t j) -> Matrix {
              Matrix d = Matrix::Zero(2, 2);
              d.row(0) = s->coordinate(j, 0) * a.row(0);
              return q * d;
            }),
            BundleMap::generate(e2, e1, [&](std::size_t j) -> Matrix {
              Matrix d = Matrix::Zero(1, 2);
              d(0, 1) = 1.0 + s->coordinate(j, 1) * s->coordinate(j, 1);
              return d * q.adjoint();
            })};
  const ComplexDivisor cd = divisor_of_complex(c);
  std::vector<std::size_t> want;
  const auto generic = oracle::betti(c, 0);
  for (std::size_t j = 0; j < s->size(); ++j)
    if (oracle::betti(c, j) != generic) want.push_back(j);
  EXPECT_EQ(cd.betti_jump_cells, want);
  EXPECT_EQ(want.size(), 10u);
  EXPECT_EQ(cd.generic_betti, (std::vector<std::size_t>{1, 0, 0}));
  EXPECT_FALSE(cd.all_torsion);
  EXPECT_FALSE(cd.vanishing);
  for (std::size_t j : cd.report.flagged_cells) EXPECT_NEAR(s->coordinate(j, 0), 0.0, 2 * s->cell_width(0));
}

TEST(Divisor, AcyclicInvertibleComplexVanishes) {
  const SpacePtr s = build_grid({{Factor::circle(1.0)}}, std::size_t{64});
  const FiberField e = FiberField::constant(s, 1);
  BundleComplex c;
  c.fields = {e, e};
  c.maps = {scale(BundleMap::identity(e), 3.0)};
  const ComplexDivisor cd = divisor_of_complex(c);
  EXPECT_TRUE(cd.all_torsion);
  EXPECT_TRUE(cd.vanishing);
}

TEST(Divisor, HausdorffConventions) {
  const SpacePtr s = build_grid({{Factor::interval(0, 1)}}, std::size_t{10});
  EXPECT_EQ(hausdorff_distance(*s, {}, {}), 0.0);
  EXPECT_TRUE(std::isinf(hausdorff_distance(*s, {}, {{0.5}})));
  EXPECT_TRUE(std::isinf(hausdorff_distance(*s, {3}, {})));
  EXPECT_NEAR(hausdorff_distance(*s, {0, 9}, {{0.05}}), 0.9, 1e-12);
}

TEST(Divisor, DilateAndClustersOnPeriodicAxis) {
  const SpacePtr s = build_grid({{Factor::torus()}}, std::size_t{10});
  EXPECT_EQ(clusters(*s, {0, 9}).size(), 1u);
  EXPECT_EQ(clusters(*s, {0, 5}).size(), 2u);
  EXPECT_EQ(dilate(*s, {0}, 2), (std::vector<std::size_t>{0, 1, 2, 8, 9}));
}
