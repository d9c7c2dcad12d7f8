#pragma once

/**
 * Small dense complex linear algebra for fiber blocks.
 *
 * Eigen supplies the matrix container and the nonsymmetric eigensolver; the
 * Hermitian eigensolver and the SVD are cyclic Jacobi sweeps so that results
 * depend only on the input bits and the fixed sweep order.
 */

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

#include "l2ext/error.hpp"

namespace l2ext {

using Complex = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;
using RealVector = Eigen::VectorXd;

inline constexpr double default_eps_rank = 1e-8;

inline bool all_finite(const Matrix& a) {
  for (Eigen::Index k = 0; k < a.size(); ++k) {
    const Complex z = a.data()[k];
    if (!std::isfinite(z.real()) || !std::isfinite(z.imag())) return false;
  }
  return true;
}

/// Largest singular value is expensive; the Frobenius norm bounds it and is
/// used wherever only a scale is needed.
inline double frobenius(const Matrix& a) { return a.norm(); }

struct EigenDecomposition {
  RealVector eigenvalues;  // ascending
  Matrix basis;            // unitary, columns are eigenvectors
};

namespace detail {

inline double offdiag_norm2(const Matrix& a) {
  double s = 0.0;
  for (Eigen::Index j = 0; j < a.cols(); ++j)
    for (Eigen::Index i = 0; i < a.rows(); ++i)
      if (i != j) s += std::norm(a(i, j));
  return s;
}

}  // namespace detail

/// Cyclic complex Jacobi. Each rotation first turns a_pq real by a phase on
/// column q, then applies the classical real rotation.
inline EigenDecomposition hermitian_eigs(const Matrix& input, bool want_vectors = true) {
  if (input.rows() != input.cols()) throw ValidationError("hermitian_eigs: matrix is not square");
  if (!all_finite(input)) throw ValidationError("hermitian_eigs: non-finite entries");
  const Eigen::Index n = input.rows();
  const double scale = frobenius(input);
  if ((input - input.adjoint()).norm() > 1e-10 * std::max(scale, 1e-300) && scale > 0.0)
    throw ValidationError("hermitian_eigs: matrix is not Hermitian within tolerance");

  Matrix a = 0.5 * (input + input.adjoint());
  Matrix v = want_vectors ? Matrix::Identity(n, n) : Matrix();
  const double stop = std::pow(1e-17 * std::max(scale, 1e-300), 2);
  for (int sweep = 0; sweep < 100 && detail::offdiag_norm2(a) > stop; ++sweep) {
    for (Eigen::Index p = 0; p < n - 1; ++p) {
      for (Eigen::Index q = p + 1; q < n; ++q) {
        const double r = std::abs(a(p, q));
        if (r == 0.0) continue;
        Complex ph = std::conj(a(p, q)) / r;  // e^{-i arg a_pq}
        ph /= std::abs(ph);
        const double app = a(p, p).real(), aqq = a(q, q).real();
        const double tau = (aqq - app) / (2.0 * r);
        const double t = (tau >= 0 ? 1.0 : -1.0) / (std::abs(tau) + std::sqrt(1.0 + tau * tau));
        const double c = 1.0 / std::sqrt(1.0 + t * t), s = t * c;
        for (Eigen::Index k = 0; k < n; ++k) {
          const Complex xp = a(k, p), xq = ph * a(k, q);
          a(k, p) = c * xp - s * xq;
          a(k, q) = s * xp + c * xq;
        }
        for (Eigen::Index k = 0; k < n; ++k) {
          const Complex xp = a(p, k), xq = std::conj(ph) * a(q, k);
          a(p, k) = c * xp - s * xq;
          a(q, k) = s * xp + c * xq;
        }
        a(p, q) = a(q, p) = 0.0;
        a(p, p) = a(p, p).real();
        a(q, q) = a(q, q).real();
        if (want_vectors) {
          for (Eigen::Index k = 0; k < n; ++k) {
            const Complex xp = v(k, p), xq = ph * v(k, q);
            v(k, p) = c * xp - s * xq;
            v(k, q) = s * xp + c * xq;
          }
        }
      }
    }
  }
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](Eigen::Index x, Eigen::Index y) { return a(x, x).real() < a(y, y).real(); });
  EigenDecomposition out;
  out.eigenvalues.resize(n);
  if (want_vectors) out.basis.resize(n, n);
  for (Eigen::Index k = 0; k < n; ++k) {
    out.eigenvalues(k) = a(order[k], order[k]).real();
    if (want_vectors) out.basis.col(k) = v.col(order[k]);
  }
  return out;
}

struct SVD {
  RealVector sigma;  // descending, length min(rows, cols)
  Matrix u;          // rows x min(rows, cols)
  Matrix v;          // cols x cols; trailing columns span the kernel complement of sigma
};

/// One-sided (Hestenes) Jacobi SVD. Wide matrices are padded with zero rows
/// so that a full right basis is always produced.
inline SVD svd(const Matrix& input) {
  if (!all_finite(input)) throw ValidationError("svd: non-finite entries");
  const Eigen::Index m = input.rows(), n = input.cols();
  const Eigen::Index mm = std::max(m, n);
  Matrix a = Matrix::Zero(mm, n);
  a.topRows(m) = input;
  Matrix v = Matrix::Identity(n, n);
  const double eps = 1e-15;
  const double underflow = 1e-280 * std::max(a.squaredNorm(), std::numeric_limits<double>::min());
  for (int sweep = 0; sweep < 100; ++sweep) {
    bool rotated = false;
    for (Eigen::Index p = 0; p + 1 < n; ++p) {
      for (Eigen::Index q = p + 1; q < n; ++q) {
        const double alpha = a.col(p).squaredNorm(), beta = a.col(q).squaredNorm();
        const Complex gamma = a.col(p).dot(a.col(q));  // a_p^* a_q
        const double g = std::abs(gamma);
        // near-underflow couplings between vanishing columns: the phase is no longer unit modulus
        if (g <= eps * std::sqrt(alpha * beta) || g < underflow) continue;
        rotated = true;
        Complex ph = std::conj(gamma) / g;
        ph /= std::abs(ph);
        const double zeta = (beta - alpha) / (2.0 * g);
        const double t = (zeta >= 0 ? 1.0 : -1.0) / (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
        const double c = 1.0 / std::sqrt(1.0 + t * t), s = t * c;
        for (Eigen::Index k = 0; k < mm; ++k) {
          const Complex xp = a(k, p), xq = ph * a(k, q);
          a(k, p) = c * xp - s * xq;
          a(k, q) = s * xp + c * xq;
        }
        for (Eigen::Index k = 0; k < n; ++k) {
          const Complex xp = v(k, p), xq = ph * v(k, q);
          v(k, p) = c * xp - s * xq;
          v(k, q) = s * xp + c * xq;
        }
      }
    }
    if (!rotated) break;
  }
  RealVector norms(n);
  for (Eigen::Index k = 0; k < n; ++k) norms(k) = a.col(k).norm();
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](Eigen::Index x, Eigen::Index y) { return norms(x) > norms(y); });

  const Eigen::Index r = std::min(m, n);
  SVD out;
  out.sigma.resize(r);
  out.u = Matrix::Zero(m, r);
  out.v.resize(n, n);
  for (Eigen::Index k = 0; k < n; ++k) out.v.col(k) = v.col(order[k]);
  for (Eigen::Index k = 0; k < r; ++k) {
    const double s = norms(order[k]);
    out.sigma(k) = s;
    if (s > 0.0) out.u.col(k) = a.col(order[k]).topRows(m) / s;
  }
  // Complete U where sigma vanished, so it stays an isometry.
  for (Eigen::Index k = 0; k < r; ++k) {
    if (out.sigma(k) > 0.0) continue;
    for (Eigen::Index e = 0; e < m; ++e) {
      Vector cand = Vector::Zero(m);
      cand(e) = 1.0;
      for (Eigen::Index j = 0; j < r; ++j)
        if (j != k && out.u.col(j).squaredNorm() > 0.0) cand -= out.u.col(j) * out.u.col(j).dot(cand);
      if (cand.norm() > 0.5) {
        out.u.col(k) = cand.normalized();
        break;
      }
    }
  }
  return out;
}

inline RealVector singular_values(const Matrix& a) {
  if (a.rows() == 1 && a.cols() == 1) return RealVector::Constant(1, std::abs(a(0, 0)));
  if (a.rows() == 0 || a.cols() == 0) return RealVector(0);
  return svd(a.rows() >= a.cols() ? a : Matrix(a.adjoint())).sigma;
}

inline double rank_threshold(double sigma_max, double eps_rank) { return eps_rank * (sigma_max + 1.0); }

inline std::size_t numeric_rank(const RealVector& sigma, double eps_rank = default_eps_rank) {
  if (sigma.size() == 0) return 0;
  const double thr = rank_threshold(sigma.maxCoeff(), eps_rank);
  std::size_t r = 0;
  for (Eigen::Index k = 0; k < sigma.size(); ++k) r += sigma(k) > thr;
  return r;
}

inline std::size_t numeric_rank(const Matrix& a, double eps_rank = default_eps_rank) {
  if (!(eps_rank > 0.0)) throw ValidationError("numeric_rank: eps_rank must be positive");
  return numeric_rank(singular_values(a), eps_rank);
}

/// Orthonormal basis of the numerical kernel (cols x k).
inline Matrix kernel_frame(const Matrix& a, double eps_rank = default_eps_rank) {
  const Eigen::Index n = a.cols();
  if (a.rows() == 0) return Matrix::Identity(n, n);
  if (n == 0) return Matrix(0, 0);
  const SVD d = svd(a);
  const std::size_t r = numeric_rank(d.sigma, eps_rank);
  return d.v.rightCols(n - static_cast<Eigen::Index>(r));
}

/// Orthonormal basis of the numerical range (rows x rank).
inline Matrix range_frame(const Matrix& a, double eps_rank = default_eps_rank) {
  if (a.rows() == 0 || a.cols() == 0) return Matrix(a.rows(), 0);
  const SVD d = svd(Matrix(a.adjoint()));
  const std::size_t r = numeric_rank(d.sigma, eps_rank);
  return d.v.leftCols(static_cast<Eigen::Index>(r));
}

/// Orthonormal basis of the orthogonal complement of the numerical range.
inline Matrix corange_frame(const Matrix& a, double eps_rank = default_eps_rank) {
  const Eigen::Index m = a.rows();
  if (a.cols() == 0) return Matrix::Identity(m, m);
  if (m == 0) return Matrix(0, 0);
  const SVD d = svd(Matrix(a.adjoint()));
  const std::size_t r = numeric_rank(d.sigma, eps_rank);
  return d.v.rightCols(m - static_cast<Eigen::Index>(r));
}

/// Orthonormal complement of the span of an orthonormal frame inside C^n.
inline Matrix complement_frame(const Matrix& frame, Eigen::Index n) {
  if (frame.cols() == 0) return Matrix::Identity(n, n);
  return corange_frame(frame, 1e-10);
}

/// Eigenvalues of a general square matrix.
inline std::vector<Complex> general_eigenvalues(const Matrix& a) {
  if (a.rows() != a.cols()) throw ValidationError("general_eigenvalues: matrix is not square");
  if (a.rows() == 0) return {};
  Eigen::ComplexEigenSolver<Matrix> es(a, false);
  if (es.info() != Eigen::Success) throw PreconditionError("nonsymmetric eigensolver did not converge");
  std::vector<Complex> out(es.eigenvalues().data(), es.eigenvalues().data() + a.rows());
  std::sort(out.begin(), out.end(), [](Complex x, Complex y) {
    return x.real() != y.real() ? x.real() < y.real() : x.imag() < y.imag();
  });
  return out;
}

inline Complex determinant(const Matrix& a) {
  if (a.rows() != a.cols()) throw ValidationError("determinant: matrix is not square");
  if (a.rows() == 0) return 1.0;
  if (a.rows() == 1) return a(0, 0);
  return a.partialPivLu().determinant();
}

}  // namespace l2ext
