#include <gtest/gtest.h>

#include "l2ext/families.hpp"
#include "l2ext/oracles.hpp"
#include "l2ext/torus.hpp"

using namespace l2ext;
using families::circle_torus;
using families::jordan;

namespace {

Matrix diag(std::initializer_list<Complex> v) {
  Matrix m = Matrix::Zero(static_cast<Eigen::Index>(v.size()), static_cast<Eigen::Index>(v.size()));
  Eigen::Index k = 0;
  for (Complex c : v) m(k, k) = c, ++k;
  return m;
}

// every singular value of tau(xi) - phi by a dense JacobiSVD at every cell
StepFunction brute_force_sdf(const MappingTorusSpec& t, const Matrix& phi) {
  std::vector<std::pair<double, double>> jumps;
  const auto n = phi.rows();
  for (std::size_t j = 0; j < t.tau.size(); ++j) {
    const Matrix m = t.tau[j] * Matrix::Identity(n, n) - phi;
    const RealVector s = oracle::singular_values(m);
    for (Eigen::Index k = 0; k < s.size(); ++k)
      if (s(k) > 0.0) jumps.emplace_back(s(k), t.base->weight(j));
  }
  return StepFunction::from_jumps(jumps);
}

}  // namespace

TEST(Torus, OperatorIsTauMinusPhi) {
  const Matrix phi = jordan(2, Complex(0.5, 0.5));
  const MappingTorusSpec t = circle_torus(16, phi);
  const BundleMap op = build_torus_operator(t, 1);
  for (std::size_t j = 0; j < 16; ++j) {
    const Matrix want = t.tau[j] * Matrix::Identity(2, 2) - phi;
    EXPECT_LE((op.matrix(j) - want).norm(), 1e-15);
  }
  EXPECT_THROW(build_torus_operator(t, 2), ValidationError);  // no phi in degree 1
  EXPECT_THROW(t.phi(0), ValidationError);
}

TEST(Torus, SpectrumClusters) {
  const auto c = spectrum_clusters(jordan(3, std::polar(1.0, 1.0)));
  ASSERT_EQ(c.size(), 1u);
  EXPECT_EQ(c[0].multiplicity, 3u);
  EXPECT_NEAR(std::abs(c[0].value - std::polar(1.0, 1.0)), 0.0, 1e-5);
  EXPECT_EQ(spectrum_clusters(diag({1.0, 2.0, 1.0})).size(), 2u);
}

TEST(Torus, OffCircleEigenvalueGivesZero) {
  const MappingTorusSpec t = circle_torus(2000, diag({2.0}));
  const TorusDegreeReport r = torus_sequence_report(t, 1);
  EXPECT_TRUE(r.ext_is_zero);
  EXPECT_TRUE(r.divisor_cells.empty());
  EXPECT_TRUE(r.preimage_cells.empty());
  EXPECT_FALSE(r.meets[0]);
  EXPECT_FALSE(r.ext_capacity.has_value());
}

TEST(Torus, IdentityGivesCapacityOne) {
  const MappingTorusSpec t = circle_torus(200000, diag({1.0}));
  const TorusDegreeReport r = torus_sequence_report(t, 1);
  EXPECT_FALSE(r.ext_is_zero);
  EXPECT_TRUE(r.ext_is_torsion);
  EXPECT_TRUE(r.meets[0]);
  EXPECT_NEAR(r.hom_dim, 0.0, 1e-12);
  EXPECT_NEAR(r.ext_proj_dim, 0.0, 1e-12);
  ASSERT_TRUE(r.ext_capacity.has_value());
  EXPECT_NEAR(r.ext_capacity->capacity, 1.0, 0.1);
  // preimage of 1 under e^{i xi} is xi = 0: the first and last cells
  for (std::size_t j : r.preimage_cells) EXPECT_TRUE(j <= 1 || j + 2 >= t.base->size()) << j;
}

TEST(Torus, JordanBlockAgainstBruteForceSvd) {
  const Matrix phi = jordan(2, std::polar(1.0, 1.0));
  const MappingTorusSpec t = circle_torus(200000, phi);
  const StepFunction want = brute_force_sdf(t, phi);
  const CapacityEstimate oracle_cap = capacity(want);
  EXPECT_NEAR(oracle_cap.capacity, 2.0, 0.2);
  const TorusDegreeReport r = torus_sequence_report(t, 1);
  ASSERT_TRUE(r.ext_capacity.has_value());
  EXPECT_NEAR(r.ext_capacity->capacity, oracle_cap.capacity, 0.1 * oracle_cap.capacity);
  const StepFunction got = sdf_from_map(torus_cohomology(t, 1), {1e-14, 1e-4, true});
  for (double l : lambda_grid(1e-4, 1.0, 20)) EXPECT_NEAR(got(l), want(l), 1e-9 * (1 + want(l))) << l;
  const SampleSpace& s = *t.base;
  std::vector<std::vector<double>> ref{{1.0}};
  EXPECT_LE(hausdorff_distance(s, r.divisor_cells, ref), 2 * s.cell_diameter());
  EXPECT_LE(hausdorff_distance(s, r.preimage_cells, ref), 2 * s.cell_diameter());
}

TEST(Torus, FatLevelSetIsRejected) {
  MappingTorusSpec t = circle_torus(100, diag({1.0}));
  std::fill(t.tau.begin(), t.tau.end(), Complex(1.0));
  EXPECT_THROW(torus_cohomology(t, 1), PreconditionError);
}

TEST(Torus, Validation) {
  MappingTorusSpec t = circle_torus(10, diag({0.0}));
  EXPECT_THROW(t.validate(), ValidationError);
  t = circle_torus(10, diag({1.0}));
  t.tau[3] = 1e-9;
  EXPECT_THROW(t.validate(), ValidationError);
  t = circle_torus(10, diag({1.0}));
  t.tau.pop_back();
  EXPECT_THROW(t.validate(), ValidationError);
  t = circle_torus(10, Matrix::Ones(1, 2));
  EXPECT_THROW(t.validate(), ValidationError);
}

TEST(Torus, SecondDegree) {
  const MappingTorusSpec t = circle_torus(1000, diag({Complex(0, 1), 3.0}), 1);
  const TorusDegreeReport r = torus_sequence_report(t, 2);
  EXPECT_EQ(r.degree, 2u);
  EXPECT_FALSE(r.ext_is_zero);
  const std::vector<std::vector<double>> ref{{families::two_pi / 4}};
  EXPECT_LE(hausdorff_distance(*t.base, r.divisor_cells, ref), 2 * t.base->cell_diameter());
}
