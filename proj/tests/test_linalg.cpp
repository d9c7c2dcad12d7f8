#include <gtest/gtest.h>

#include "l2ext/oracles.hpp"

using namespace l2ext;

TEST(Linalg, HermitianEigsMatchEigen) {
  Rng rng(11);
  for (int k = 0; k < 30; ++k) {
    const Eigen::Index n = 1 + static_cast<Eigen::Index>(rng.index(7));
    const Matrix g = oracle::gaussian(rng, n, n);
    const Matrix h = g * g.adjoint();
    const EigenDecomposition e = hermitian_eigs(h);
    const Eigen::SelfAdjointEigenSolver<Matrix> ref(h);
    EXPECT_LE((e.eigenvalues - ref.eigenvalues()).cwiseAbs().maxCoeff(), 1e-11 * (1 + ref.eigenvalues().maxCoeff()));
    const Matrix back = e.basis * e.eigenvalues.cast<Complex>().asDiagonal() * e.basis.adjoint();
    EXPECT_LE((back - h).norm(), 1e-11 * (1 + h.norm()));
    EXPECT_LE((e.basis.adjoint() * e.basis - Matrix::Identity(n, n)).norm(), 1e-12);
  }
}

TEST(Linalg, SvdReconstructsAndSorts) {
  Rng rng(12);
  for (int k = 0; k < 30; ++k) {
    const Eigen::Index m = 1 + static_cast<Eigen::Index>(rng.index(6));
    const Eigen::Index n = 1 + static_cast<Eigen::Index>(rng.index(6));
    const Matrix a = oracle::gaussian(rng, m, n);
    const SVD d = svd(a);
    const RealVector ref = oracle::singular_values(a);
    const Eigen::Index r = std::min(m, n);
    ASSERT_EQ(d.sigma.size(), r);
    EXPECT_LE((d.sigma - ref).cwiseAbs().maxCoeff(), 1e-12 * (1 + ref(0)));
    for (Eigen::Index i = 1; i < r; ++i) EXPECT_GE(d.sigma(i - 1), d.sigma(i));
    EXPECT_EQ(d.v.rows(), n);
    EXPECT_EQ(d.v.cols(), n);
    EXPECT_LE((d.v.adjoint() * d.v - Matrix::Identity(n, n)).norm(), 1e-12);
    const Matrix back = d.u * d.sigma.cast<Complex>().asDiagonal() * d.v.leftCols(r).adjoint();
    EXPECT_LE((back - a).norm(), 1e-12 * (1 + a.norm()));
  }
}

TEST(Linalg, SvdKeepsRelativeAccuracyOfTinySingularValues) {
  Matrix a = Matrix::Zero(2, 2);
  a(0, 0) = 1.0;
  a(1, 1) = 1e-40;
  const RealVector s = singular_values(a);
  EXPECT_NEAR(s(1) / 1e-40, 1.0, 1e-12);
}

TEST(Linalg, RankAndFramesAgreeWithOracle) {
  Rng rng(13);
  for (int k = 0; k < 40; ++k) {
    const Eigen::Index m = 1 + static_cast<Eigen::Index>(rng.index(6));
    const Eigen::Index n = 1 + static_cast<Eigen::Index>(rng.index(6));
    const Eigen::Index r = static_cast<Eigen::Index>(rng.index(static_cast<std::size_t>(std::min(m, n)) + 1));
    const Matrix a = oracle::with_rank(rng, m, n, r);
    EXPECT_EQ(numeric_rank(a), oracle::rank(a));
    const Matrix ker = kernel_frame(a);
    EXPECT_EQ(ker.cols(), n - r);
    if (ker.cols()) EXPECT_LE((a * ker).norm(), 1e-10);
    const Matrix ran = range_frame(a);
    EXPECT_EQ(ran.cols(), r);
    const Matrix co = corange_frame(a);
    EXPECT_EQ(co.cols(), m - r);
    if (co.cols()) EXPECT_LE((co.adjoint() * a).norm(), 1e-10);
    if (ran.cols() && co.cols()) EXPECT_LE((ran.adjoint() * co).norm(), 1e-10);
  }
}

TEST(Linalg, NumericRankRejectsNonPositiveEps) {
  EXPECT_THROW(numeric_rank(Matrix(Matrix::Identity(2, 2)), 0.0), ValidationError);
}

TEST(Linalg, EmptyShapes) {
  EXPECT_EQ(kernel_frame(Matrix(0, 3)).cols(), 3);
  EXPECT_EQ(corange_frame(Matrix(2, 0)).cols(), 2);
  EXPECT_EQ(singular_values(Matrix(0, 2)).size(), 0);
  EXPECT_EQ(determinant(Matrix(0, 0)), Complex(1.0));
}

TEST(Linalg, GeneralEigenvaluesOfJordanBlock) {
  Matrix j = Matrix::Zero(2, 2);
  j(0, 0) = j(1, 1) = Complex(0, 2);
  j(0, 1) = 1.0;
  const auto ev = general_eigenvalues(j);
  ASSERT_EQ(ev.size(), 2u);
  for (Complex c : ev) EXPECT_NEAR(std::abs(c - Complex(0, 2)), 0.0, 1e-7);
  EXPECT_NEAR(std::abs(determinant(j) - Complex(-4, 0)), 0.0, 1e-12);
}

TEST(Linalg, SvdRejectsNonFinite) {
  Matrix a = Matrix::Identity(2, 2);
  a(0, 1) = Complex(NAN, 0);
  EXPECT_THROW(svd(a), ValidationError);
}
