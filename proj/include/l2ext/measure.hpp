#pragma once

/**
 * Discretized compact measure spaces.
 *
 * A SampleSpace is a product of one-dimensional factors (circles, intervals,
 * flat tori R/Z), partitioned into uniform cells. Each cell is represented by
 * its center and carries its measure as a weight, so every integral over Z is
 * the midpoint rule  sum_j field(xi_j) * w_j.
 *
 * Other measures are never stored on their own: a DensityMeasure holds the
 * values g_j of d(nu)/d(mu) at the cell centers, and nu(cell j) = g_j * w_j.
 */

#include <cmath>
#include <complex>
#include <cstddef>
#include <functional>
#include <memory>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "l2ext/error.hpp"

namespace l2ext {

using Complex = std::complex<double>;

enum class FactorKind { circle, interval, torus };

/// One axis of the parameter domain.
///   circle(L): R/LZ with coordinates in [0, L)
///   interval(a, b): [a, b]
///   torus: R/Z with the centered representative [-1/2, 1/2)
struct Factor {
  FactorKind kind = FactorKind::interval;
  double lo = 0.0;
  double hi = 1.0;

  static Factor circle(double circumference) {
    if (!(circumference > 0.0) || !std::isfinite(circumference))
      throw ValidationError("circle circumference must be positive and finite");
    return {FactorKind::circle, 0.0, circumference};
  }
  static Factor interval(double a, double b) {
    if (!std::isfinite(a) || !std::isfinite(b) || !(a < b))
      throw ValidationError("degenerate interval [" + std::to_string(a) + ", " + std::to_string(b) + "]");
    return {FactorKind::interval, a, b};
  }
  static Factor torus() { return {FactorKind::torus, -0.5, 0.5}; }

  double length() const { return hi - lo; }
  bool periodic() const { return kind != FactorKind::interval; }
  bool operator==(const Factor&) const = default;
};

struct DomainSpec {
  std::vector<Factor> factors;
  bool operator==(const DomainSpec&) const = default;
};

class SampleSpace {
 public:
  SampleSpace(DomainSpec domain, std::vector<std::size_t> resolution, std::vector<double> points,
              std::vector<double> weights)
      : domain_(std::move(domain)),
        resolution_(std::move(resolution)),
        points_(std::move(points)),
        weights_(std::move(weights)) {
    strides_.assign(resolution_.size(), 1);
    for (std::size_t a = resolution_.size(); a-- > 1;) strides_[a - 1] = strides_[a] * resolution_[a];
  }

  const DomainSpec& domain() const { return domain_; }
  std::size_t dim() const { return resolution_.size(); }
  std::size_t size() const { return weights_.size(); }
  const std::vector<std::size_t>& resolution() const { return resolution_; }

  std::span<const double> point(std::size_t j) const { return {points_.data() + j * dim(), dim()}; }
  double coordinate(std::size_t j, std::size_t axis) const { return points_[j * dim() + axis]; }
  double weight(std::size_t j) const { return weights_[j]; }
  std::span<const double> weights() const { return weights_; }

  double total_measure() const {
    double s = 0.0;
    for (double w : weights_) s += w;
    return s;
  }
  double cell_width(std::size_t axis) const {
    return domain_.factors[axis].length() / static_cast<double>(resolution_[axis]);
  }
  /// Euclidean diameter of one cell.
  double cell_diameter() const {
    double s = 0.0;
    for (std::size_t a = 0; a < dim(); ++a) s += cell_width(a) * cell_width(a);
    return std::sqrt(s);
  }

  /// Row-major multi-index; the last axis varies fastest.
  std::vector<std::size_t> multi_index(std::size_t j) const {
    std::vector<std::size_t> idx(dim());
    for (std::size_t a = 0; a < dim(); ++a) {
      idx[a] = j / strides_[a];
      j %= strides_[a];
    }
    return idx;
  }
  std::size_t linear_index(std::span<const std::size_t> idx) const {
    std::size_t j = 0;
    for (std::size_t a = 0; a < dim(); ++a) j += idx[a] * strides_[a];
    return j;
  }

  /// Neighbor of cell j one step along `axis` (step = +1 or -1), wrapping on
  /// periodic factors. Returns size() when the step leaves an interval.
  std::size_t neighbor(std::size_t j, std::size_t axis, int step) const {
    const std::size_t n = resolution_[axis];
    const std::size_t i = (j / strides_[axis]) % n;
    std::size_t k;
    if (step > 0) {
      if (i + 1 < n) k = i + 1;
      else if (domain_.factors[axis].periodic() && n > 1) k = 0;
      else return size();
    } else {
      if (i > 0) k = i - 1;
      else if (domain_.factors[axis].periodic() && n > 1) k = n - 1;
      else return size();
    }
    return j + k * strides_[axis] - i * strides_[axis];
  }

  /// Distance between two points of the domain, respecting periodic axes.
  double distance(std::span<const double> p, std::span<const double> q) const {
    double s = 0.0;
    for (std::size_t a = 0; a < dim(); ++a) {
      double d = std::abs(p[a] - q[a]);
      if (domain_.factors[a].periodic()) d = std::min(d, domain_.factors[a].length() - d);
      s += d * d;
    }
    return std::sqrt(s);
  }

  bool contains(std::span<const double> p) const {
    if (p.size() != dim()) return false;
    for (std::size_t a = 0; a < dim(); ++a) {
      const Factor& f = domain_.factors[a];
      if (f.periodic() ? !(p[a] >= f.lo && p[a] < f.hi) : !(p[a] >= f.lo && p[a] <= f.hi)) return false;
    }
    return true;
  }

 private:
  DomainSpec domain_;
  std::vector<std::size_t> resolution_;
  std::vector<std::size_t> strides_;
  std::vector<double> points_;
  std::vector<double> weights_;
};

using SpacePtr = std::shared_ptr<const SampleSpace>;

/// Uniform cell-center grid. `density`, when given, multiplies each cell
/// volume by its value at the cell center and must be strictly positive.
inline SpacePtr build_grid(const DomainSpec& domain, std::vector<std::size_t> resolution,
                           const std::function<double(std::span<const double>)>& density = {}) {
  if (domain.factors.empty()) throw ValidationError("domain has no factors");
  if (resolution.size() == 1 && domain.factors.size() > 1) resolution.assign(domain.factors.size(), resolution[0]);
  if (resolution.size() != domain.factors.size())
    throw ValidationError("resolution has " + std::to_string(resolution.size()) + " axes, domain has " +
                          std::to_string(domain.factors.size()));
  std::size_t total = 1;
  double cell_volume = 1.0;
  for (std::size_t a = 0; a < resolution.size(); ++a) {
    if (resolution[a] == 0) throw ValidationError("zero resolution on axis " + std::to_string(a));
    const Factor& f = domain.factors[a];
    if (!(f.lo < f.hi)) throw ValidationError("degenerate factor on axis " + std::to_string(a));
    total *= resolution[a];
    cell_volume *= f.length() / static_cast<double>(resolution[a]);
  }
  const std::size_t d = resolution.size();
  std::vector<double> points(total * d);
  std::vector<double> weights(total, cell_volume);
  std::vector<std::size_t> idx(d, 0);
  for (std::size_t j = 0; j < total; ++j) {
    for (std::size_t a = 0; a < d; ++a) {
      const Factor& f = domain.factors[a];
      const double h = f.length() / static_cast<double>(resolution[a]);
      points[j * d + a] = f.lo + (static_cast<double>(idx[a]) + 0.5) * h;
    }
    if (density) {
      const double g = density({points.data() + j * d, d});
      if (!(g > 0.0) || !std::isfinite(g))
        throw ValidationError("grid density must be positive and finite at every cell center");
      weights[j] *= g;
    }
    for (std::size_t a = d; a-- > 0;) {
      if (++idx[a] < resolution[a]) break;
      idx[a] = 0;
    }
  }
  return std::make_shared<const SampleSpace>(domain, std::move(resolution), std::move(points), std::move(weights));
}

inline SpacePtr build_grid(const DomainSpec& domain, std::size_t resolution) {
  return build_grid(domain, std::vector<std::size_t>(domain.factors.size(), resolution));
}

/// A measure nu << mu given by its density at the cell centers.
class DensityMeasure {
 public:
  DensityMeasure(SpacePtr base, std::vector<double> density) : base_(std::move(base)), density_(std::move(density)) {
    if (!base_) throw ValidationError("density measure without base space");
    if (density_.size() != base_->size())
      throw ValidationError("density has " + std::to_string(density_.size()) + " entries for " +
                            std::to_string(base_->size()) + " cells");
    for (double g : density_)
      if (!(g >= 0.0) || !std::isfinite(g)) throw ValidationError("density must be finite and nonnegative");
  }

  /// nu = mu.
  static DensityMeasure full(SpacePtr base) {
    const std::size_t n = base->size();
    return DensityMeasure(std::move(base), std::vector<double>(n, 1.0));
  }

  const SpacePtr& base() const { return base_; }
  std::span<const double> density() const { return density_; }
  /// nu(cell j).
  double weight(std::size_t j) const { return density_[j] * base_->weight(j); }
  double total() const {
    double s = 0.0;
    for (std::size_t j = 0; j < density_.size(); ++j) s += weight(j);
    return s;
  }
  bool on(const SampleSpace& space) const { return base_.get() == &space; }

 private:
  SpacePtr base_;
  std::vector<double> density_;
};

inline DensityMeasure restrict_measure(SpacePtr space, std::vector<double> density) {
  return DensityMeasure(std::move(space), std::move(density));
}

/// mu restricted to a set of cells (sharp indicator density).
inline DensityMeasure restrict_to_cells(SpacePtr space, std::span<const std::size_t> cells) {
  std::vector<double> g(space->size(), 0.0);
  for (std::size_t j : cells) {
    if (j >= g.size()) throw ValidationError("cell index " + std::to_string(j) + " out of range");
    g[j] = 1.0;
  }
  return DensityMeasure(std::move(space), std::move(g));
}

/// Cells whose closed box meets the axis-aligned region prod [lo_a, hi_a] in
/// a set of positive length on every axis (outward rounding). On periodic
/// axes the interval is taken modulo the period.
inline std::vector<std::size_t> cells_in_box(const SampleSpace& space, std::span<const double> lo,
                                             std::span<const double> hi) {
  if (lo.size() != space.dim() || hi.size() != space.dim())
    throw ValidationError("box dimension does not match the domain");
  auto overlaps = [&](std::size_t a, double c) {
    const Factor& f = space.domain().factors[a];
    const double h = space.cell_width(a);
    const double clo = c - 0.5 * h, chi = c + 0.5 * h;
    if (!f.periodic()) return std::min(chi, hi[a]) - std::max(clo, lo[a]) > 1e-12 * h;
    const double L = f.length();
    for (int shift = -1; shift <= 1; ++shift) {
      const double s = shift * L;
      if (std::min(chi + s, hi[a]) - std::max(clo + s, lo[a]) > 1e-12 * h) return true;
    }
    return false;
  };
  std::vector<std::size_t> out;
  for (std::size_t j = 0; j < space.size(); ++j) {
    bool inside = true;
    for (std::size_t a = 0; a < space.dim() && inside; ++a) inside = overlaps(a, space.coordinate(j, a));
    if (inside) out.push_back(j);
  }
  return out;
}

inline DensityMeasure restrict_to_box(SpacePtr space, std::span<const double> lo, std::span<const double> hi) {
  const auto cells = cells_in_box(*space, lo, hi);
  return restrict_to_cells(std::move(space), cells);
}

/// sum_j field_j * g_j * w_j, summed in cell order.
inline Complex integrate(const DensityMeasure& nu, std::span<const Complex> field) {
  if (field.size() != nu.base()->size()) throw ValidationError("field size does not match the sample space");
  Complex s = 0.0;
  for (std::size_t j = 0; j < field.size(); ++j) {
    if (!std::isfinite(field[j].real()) || !std::isfinite(field[j].imag()))
      throw ValidationError("non-finite field value at cell " + std::to_string(j));
    s += field[j] * nu.weight(j);
  }
  return s;
}

inline double integrate(const DensityMeasure& nu, std::span<const double> field) {
  if (field.size() != nu.base()->size()) throw ValidationError("field size does not match the sample space");
  double s = 0.0;
  for (std::size_t j = 0; j < field.size(); ++j) {
    if (!std::isfinite(field[j])) throw ValidationError("non-finite field value at cell " + std::to_string(j));
    s += field[j] * nu.weight(j);
  }
  return s;
}

}  // namespace l2ext
