#pragma once

/**
 * Reference families of torsion objects with known capacity and divisor.
 * Used by the demo command, the tests and the acceptance suite.
 */

#include <cmath>
#include <numbers>
#include <vector>

#include "l2ext/bundle.hpp"
#include "l2ext/excat.hpp"
#include "l2ext/measure.hpp"
#include "l2ext/torus.hpp"

namespace l2ext::families {

inline constexpr double two_pi = 2.0 * std::numbers::pi;

template <class Fn>
ExtObject scalar_object(const SpacePtr& space, Fn&& f) {
  std::vector<Complex> v(space->size());
  parallel::parallel_for(space->size(), [&](std::size_t j) { v[j] = f(space->point(j)); });
  return {BundleMap::scalar(space, v)};
}

inline SpacePtr unit_circle(std::size_t n) { return build_grid({{Factor::circle(two_pi)}}, n); }

/// |z - e^{i theta}|^nu on the unit circle, parametrized by arc length.
inline ExtObject circle_power(const SpacePtr& s, double nu, double theta = 0.7) {
  const Complex w = std::polar(1.0, theta);
  return scalar_object(s, [&](std::span<const double> p) -> Complex {
    return std::pow(std::abs(std::polar(1.0, p[0]) - w), nu);
  });
}
inline ExtObject circle_power(std::size_t n, double nu, double theta = 0.7) {
  return circle_power(unit_circle(n), nu, theta);
}

/// sin(x - shift)^m on the circle of length 2 pi: two transversal zeros.
inline ExtObject transversal_power(const SpacePtr& s, int m, double shift = 0.0) {
  return scalar_object(s, [&](std::span<const double> p) -> Complex { return std::pow(std::sin(p[0] - shift), m); });
}
inline ExtObject transversal_power(std::size_t n, int m) { return transversal_power(unit_circle(n), m); }

/// x y on the flat 2-torus, coordinates in [-1/2, 1/2).
inline ExtObject torus_cross(std::size_t n) {
  const SpacePtr s = build_grid({{Factor::torus(), Factor::torus()}}, n);
  return scalar_object(s, [](std::span<const double> p) -> Complex { return p[0] * p[1]; });
}

/// y (y - x^k) on [-1, 1]^2.
inline ExtObject tangency(std::size_t n, int k) {
  const SpacePtr s = build_grid({{Factor::interval(-1, 1), Factor::interval(-1, 1)}}, n);
  return scalar_object(s, [&](std::span<const double> p) -> Complex { return p[1] * (p[1] - std::pow(p[0], k)); });
}

/// (sum x_i^2)^m on the flat n-torus.
inline ExtObject torus_radial(std::size_t dim, std::size_t n, int m) {
  DomainSpec d;
  d.factors.assign(dim, Factor::torus());
  const SpacePtr s = build_grid(d, n);
  return scalar_object(s, [&](std::span<const double> p) -> Complex {
    double r = 0.0;
    for (double x : p) r += x * x;
    return std::pow(r, m);
  });
}

/// Two-term complex 0 -> C^d -> C^d -> 0 over [-1, 1] with
/// d^0(t) = U diag(t^{k_1}, ..., t^{k_d}) V, U, V fixed unitaries.
inline BundleComplex planted_orders(std::size_t n, const std::vector<int>& orders, double shift = 0.0) {
  const SpacePtr s = build_grid({{Factor::interval(-1, 1)}}, n);
  const auto d = static_cast<Eigen::Index>(orders.size());
  // Fixed unitary factors from a deterministic QR.
  Matrix a(d, d), b(d, d);
  for (Eigen::Index r = 0; r < d; ++r)
    for (Eigen::Index c = 0; c < d; ++c) {
      a(r, c) = Complex(std::cos(1.0 + r + 2.0 * c), std::sin(0.3 * r - c));
      b(r, c) = Complex(std::sin(2.0 + 3.0 * r + c), std::cos(0.7 * r * c));
    }
  const Matrix u = Eigen::HouseholderQR<Matrix>(a).householderQ();
  const Matrix v = Eigen::HouseholderQR<Matrix>(b).householderQ();
  const FiberField e = FiberField::constant(s, orders.size());
  BundleComplex c;
  c.fields = {e, e};
  c.maps = {BundleMap::generate(e, e, [&](std::size_t j) -> Matrix {
    const double t = s->coordinate(j, 0) - shift;
    Matrix dg = Matrix::Zero(d, d);
    for (Eigen::Index k = 0; k < d; ++k) dg(k, k) = std::pow(t, orders[static_cast<std::size_t>(k)]) * (1.0 + 0.25 * k);
    return u * dg * v;
  })};
  return c;
}

/// Mapping torus data with tau(xi) = e^{i xi} on the circle of length 2 pi.
inline MappingTorusSpec circle_torus(std::size_t n, const Matrix& phi, std::size_t degree = 0) {
  MappingTorusSpec t;
  t.base = build_grid({{Factor::circle(two_pi)}}, n);
  t.tau.resize(t.base->size());
  for (std::size_t j = 0; j < t.tau.size(); ++j) t.tau[j] = std::polar(1.0, t.base->coordinate(j, 0));
  t.tau_bound = 2.0;
  t.phi_star[degree] = phi;
  return t;
}

/// Jordan block of size m with eigenvalue c.
inline Matrix jordan(std::size_t m, Complex c) {
  Matrix j = Matrix::Zero(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(m));
  for (std::size_t k = 0; k < m; ++k) {
    j(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(k)) = c;
    if (k + 1 < m) j(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(k + 1)) = 1.0;
  }
  return j;
}

}  // namespace l2ext::families
