#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "l2ext/measure.hpp"

using namespace l2ext;

namespace {
constexpr double pi = std::numbers::pi;
}

TEST(Measure, SinSquaredOverCircle) {
  const SpacePtr s = build_grid({{Factor::circle(2 * pi)}}, std::size_t{10000});
  std::vector<double> f(s->size());
  for (std::size_t j = 0; j < f.size(); ++j) f[j] = std::pow(std::sin(s->coordinate(j, 0)), 2);
  EXPECT_NEAR(integrate(DensityMeasure::full(s), f), pi, 1e-6);
}

TEST(Measure, TotalMeasureOfProducts) {
  const SpacePtr s = build_grid({{Factor::interval(-1, 1), Factor::torus(), Factor::circle(3.0)}}, {10, 7, 5});
  EXPECT_EQ(s->size(), 350u);
  EXPECT_NEAR(s->total_measure(), 6.0, 1e-12);
  EXPECT_NEAR(s->cell_diameter(), std::sqrt(0.04 + 1.0 / 49 + 0.36), 1e-12);
}

TEST(Measure, CellCentersAndMultiIndex) {
  const SpacePtr s = build_grid({{Factor::interval(0, 1), Factor::interval(0, 2)}}, {4, 2});
  // last axis fastest
  EXPECT_DOUBLE_EQ(s->coordinate(1, 0), 0.125);
  EXPECT_DOUBLE_EQ(s->coordinate(1, 1), 1.5);
  for (std::size_t j = 0; j < s->size(); ++j) {
    const auto idx = s->multi_index(j);
    EXPECT_EQ(s->linear_index(idx), j);
  }
}

TEST(Measure, NeighborsWrapOnlyOnPeriodicAxes) {
  const SpacePtr s = build_grid({{Factor::interval(0, 1), Factor::torus()}}, {3, 4});
  EXPECT_EQ(s->neighbor(0, 0, -1), s->size());
  EXPECT_EQ(s->neighbor(0, 1, -1), 3u);
  EXPECT_EQ(s->neighbor(3, 1, +1), 0u);
  EXPECT_EQ(s->neighbor(8, 0, +1), s->size());
  EXPECT_EQ(s->neighbor(4, 0, +1), 8u);
}

TEST(Measure, PeriodicDistance) {
  const SpacePtr s = build_grid({{Factor::circle(2 * pi)}}, std::size_t{8});
  const double p[] = {0.1}, q[] = {2 * pi - 0.1};
  EXPECT_NEAR(s->distance(p, q), 0.2, 1e-12);
  const SpacePtr t = build_grid({{Factor::interval(0, 10)}}, std::size_t{8});
  const double a[] = {0.1}, b[] = {9.9};
  EXPECT_NEAR(t->distance(a, b), 9.8, 1e-12);
}

TEST(Measure, DensityScalesWeights) {
  const SpacePtr s = build_grid({{Factor::interval(0, 1)}}, {1000}, [](std::span<const double> p) { return 2 * p[0] + 1; });
  EXPECT_NEAR(s->total_measure(), 2.0, 1e-12);
}

TEST(Measure, RejectsBadInput) {
  EXPECT_THROW(Factor::interval(1, 1), ValidationError);
  EXPECT_THROW(Factor::circle(-1), ValidationError);
  EXPECT_THROW(build_grid({{Factor::interval(0, 1)}}, std::size_t{0}), ValidationError);
  EXPECT_THROW(build_grid({{Factor::interval(0, 1)}}, {10}, [](std::span<const double> p) { return p[0] - 0.5; }),
               ValidationError);
  EXPECT_THROW(build_grid(DomainSpec{}, std::size_t{3}), ValidationError);
  const SpacePtr s = build_grid({{Factor::interval(0, 1)}}, std::size_t{4});
  EXPECT_THROW(DensityMeasure(s, {1, 1, 1}), ValidationError);
  EXPECT_THROW(DensityMeasure(s, {1, -1, 1, 1}), ValidationError);
  const std::vector<double> bad = {1, NAN, 0, 0};
  EXPECT_THROW(integrate(DensityMeasure::full(s), bad), ValidationError);
}

TEST(Measure, BoxRestrictionRoundsOutward) {
  const SpacePtr s = build_grid({{Factor::interval(0, 1)}}, std::size_t{10});
  const double lo[] = {0.25}, hi[] = {0.5};
  const auto cells = cells_in_box(*s, lo, hi);
  ASSERT_EQ(cells.size(), 3u);  // [0.2,0.3], [0.3,0.4], [0.4,0.5]
  EXPECT_EQ(cells.front(), 2u);
  EXPECT_NEAR(restrict_to_box(s, lo, hi).total(), 0.3, 1e-12);
}

TEST(Measure, BoxWrapsOnPeriodicAxis) {
  const SpacePtr s = build_grid({{Factor::torus()}}, std::size_t{10});
  const double lo[] = {0.45}, hi[] = {0.55};
  const auto cells = cells_in_box(*s, lo, hi);
  ASSERT_EQ(cells.size(), 2u);
  EXPECT_EQ(cells[0], 0u);
  EXPECT_EQ(cells[1], 9u);
}

TEST(Measure, ContainsRespectsHalfOpenPeriodicRange) {
  const SpacePtr s = build_grid({{Factor::torus(), Factor::interval(0, 1)}}, std::size_t{4});
  const double in[] = {-0.5, 1.0}, out[] = {0.5, 0.5};
  EXPECT_TRUE(s->contains(in));
  EXPECT_FALSE(s->contains(out));
}
