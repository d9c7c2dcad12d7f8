#pragma once

/**
 * Independent dense references and random instance generators. The
 * oracles use Eigen's FullPivLU and JacobiSVD and never touch the engine's
 * own decompositions.
 */

#include <Eigen/Dense>
#include <Eigen/SVD>
#include <vector>

#include "l2ext/bundle.hpp"
#include "l2ext/excat.hpp"
#include "l2ext/scenario.hpp"

namespace l2ext::oracle {

inline Matrix gaussian(Rng& rng, Eigen::Index rows, Eigen::Index cols) {
  Matrix m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = Complex(rng.normal(), rng.normal()) / std::sqrt(2.0);
  return m;
}

inline Matrix unitary(Rng& rng, Eigen::Index n) {
  if (n == 0) return Matrix(0, 0);
  Eigen::HouseholderQR<Matrix> qr(gaussian(rng, n, n));
  return qr.householderQ();
}

/// rows x cols of exact rank r, singular values drawn from [lo, hi].
inline Matrix with_rank(Rng& rng, Eigen::Index rows, Eigen::Index cols, Eigen::Index r, double lo = 0.5, double hi = 2.0) {
  r = std::min({r, rows, cols});
  Matrix m = Matrix::Zero(rows, cols);
  if (r == 0) return m;
  const Matrix u = unitary(rng, rows), v = unitary(rng, cols);
  for (Eigen::Index k = 0; k < r; ++k) m += rng.uniform(lo, hi) * u.col(k) * v.col(k).adjoint();
  return m;
}

inline std::size_t rank(const Matrix& m, double tol = 1e-9) {
  // the LU threshold is relative to the largest pivot, so pure roundoff would count as rank one
  if (m.size() == 0 || m.cwiseAbs().maxCoeff() <= tol) return 0;
  Eigen::FullPivLU<Matrix> lu(m);
  lu.setThreshold(tol);
  return static_cast<std::size_t>(lu.rank());
}

inline RealVector singular_values(const Matrix& m) {
  if (m.size() == 0) return RealVector();
  return Eigen::JacobiSVD<Matrix>(m).singularValues();
}

inline Matrix pinv(const Matrix& m) {
  if (m.size() == 0) return Matrix::Zero(m.cols(), m.rows());
  // thresholded SVD; the pivoted-QR rank decision misses singular values near 1e-17
  const Eigen::JacobiSVD<Matrix> d(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const RealVector s = d.singularValues();
  Matrix inv = Matrix::Zero(m.cols(), m.rows());
  for (Eigen::Index k = 0; k < s.size(); ++k)
    if (s(k) > 1e-10 * s(0)) inv += d.matrixV().col(k) * (1.0 / s(k)) * d.matrixU().col(k).adjoint();
  return inv;
}

inline Matrix hcat(const Matrix& a, const Matrix& b) {
  Matrix m(a.rows(), a.cols() + b.cols());
  m << a, b;
  return m;
}

/// A morphism (f, g): (alpha: A' -> A) -> (beta: B' -> B) over one point.
struct PointInstance {
  Matrix alpha, beta, f, g;
};

inline PointInstance random_point_instance(Rng& rng, Eigen::Index max_dim = 5) {
  auto dim = [&] { return static_cast<Eigen::Index>(rng.index(static_cast<std::size_t>(max_dim) + 1)); };
  const Eigen::Index a1 = dim(), a = dim(), b1 = dim(), b = dim();
  auto rk = [&](Eigen::Index m, Eigen::Index n) {
    return static_cast<Eigen::Index>(rng.index(static_cast<std::size_t>(std::min(m, n)) + 1));
  };
  PointInstance p;
  p.alpha = with_rank(rng, a, a1, rk(a, a1));
  p.beta = with_rank(rng, b, b1, rk(b, b1));
  // g must vanish on ker alpha for f alpha = beta g to be solvable.
  const Matrix ap = pinv(p.alpha);
  p.g = with_rank(rng, b1, a1, rk(b1, a1)) * (ap * p.alpha);
  const Matrix h = with_rank(rng, b, a, rk(b, a));
  p.f = p.beta * p.g * ap + h * (Matrix::Identity(a, a) - p.alpha * ap);
  return p;
}

/// Dimensions predicted by rank-nullity for the kernel and cokernel of a
/// point instance, using the projective reading of extended objects over a
/// point: X = A / im alpha.
struct PointDims {
  std::size_t kernel_p = 0, kernel_p1 = 0;   // P and P' of the pullback
  std::size_t kernel_proj = 0, cokernel_proj = 0, source_proj = 0;
};

inline PointDims point_dims(const PointInstance& p) {
  PointDims d;
  const auto a = static_cast<std::size_t>(p.f.cols()), b1 = static_cast<std::size_t>(p.beta.cols());
  const auto a1 = static_cast<std::size_t>(p.alpha.cols()), b = static_cast<std::size_t>(p.f.rows());
  d.kernel_p = a + b1 - rank(hcat(p.f, -p.beta));
  d.kernel_p1 = a1 + b1 - rank(hcat(p.f * p.alpha, -p.beta));
  const std::size_t rfb = rank(hcat(p.f, p.beta)), rb = rank(p.beta), ra = rank(p.alpha);
  d.source_proj = a - ra;
  d.kernel_proj = (a - ra) - (rfb - rb);
  d.cokernel_proj = b - rfb;
  return d;
}

/// Split complex over `space`: E^i = B_i + H_i + C_i with d^i mapping C_i
/// isomorphically onto B_{i+1}, conjugated per cell by random unitaries.
/// Ranks are constant over the space; singular values lie in [lo, hi].
inline BundleComplex random_complex(Rng& rng, const SpacePtr& space, std::size_t length, std::size_t max_block = 2,
                                    double lo = 1e-2, double hi = 2.0) {
  std::vector<std::size_t> h(length), c(length, 0);
  for (std::size_t i = 0; i < length; ++i) {
    h[i] = rng.index(max_block + 1);
    if (i + 1 < length) c[i] = rng.index(max_block + 1);
  }
  std::vector<std::size_t> e(length);
  for (std::size_t i = 0; i < length; ++i) e[i] = (i ? c[i - 1] : 0) + h[i] + c[i];
  BundleComplex cx;
  for (std::size_t d : e) cx.fields.push_back(FiberField::constant(space, d));
  const std::size_t n = space->size();
  std::vector<std::vector<Matrix>> q(length, std::vector<Matrix>(n));
  for (std::size_t i = 0; i < length; ++i)
    for (std::size_t j = 0; j < n; ++j) q[i][j] = unitary(rng, static_cast<Eigen::Index>(e[i]));
  std::vector<std::vector<Matrix>> core(length, std::vector<Matrix>(n));
  for (std::size_t i = 0; i + 1 < length; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      const auto k = static_cast<Eigen::Index>(c[i]);
      core[i][j] = with_rank(rng, k, k, k, lo, hi);
    }
  for (std::size_t i = 0; i + 1 < length; ++i) {
    const auto ci = static_cast<Eigen::Index>(c[i]);
    const auto off_c = static_cast<Eigen::Index>((i ? c[i - 1] : 0) + h[i]);  // C_i after B_i, H_i
    cx.maps.push_back(BundleMap::generate(cx.fields[i], cx.fields[i + 1], [&](std::size_t j) -> Matrix {
      Matrix m = q[i + 1][j].leftCols(ci) * core[i][j] * q[i][j].middleCols(off_c, ci).adjoint();
      return m;
    }));
  }
  return cx;
}

/// Fiber Betti numbers from FullPivLU ranks.
inline std::vector<std::size_t> betti(const BundleComplex& c, std::size_t j, double tol = 1e-9) {
  std::vector<std::size_t> r(c.maps.size());
  for (std::size_t i = 0; i < c.maps.size(); ++i) r[i] = rank(c.maps[i].matrix(j), tol);
  std::vector<std::size_t> b(c.fields.size());
  for (std::size_t i = 0; i < b.size(); ++i)
    b[i] = c.fields[i].dim(j) - (i < r.size() ? r[i] : 0) - (i ? r[i - 1] : 0);
  return b;
}

}  // namespace l2ext::oracle
