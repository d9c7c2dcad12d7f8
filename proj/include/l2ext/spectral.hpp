#pragma once

/**
 * Spectral density functions, their dilatational comparison, and power-law
 * (Novikov-Shubin) exponent estimation near zero.
 */

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "l2ext/bundle.hpp"
#include "l2ext/excat.hpp"

namespace l2ext {

/// Nondecreasing right-continuous step function, zero below the first
/// breakpoint.
class StepFunction {
 public:
  StepFunction() = default;
  StepFunction(std::vector<double> breakpoints, std::vector<double> values)
      : lambda_(std::move(breakpoints)), value_(std::move(values)) {
    if (lambda_.size() != value_.size()) throw ValidationError("step function: size mismatch");
    for (std::size_t k = 0; k < lambda_.size(); ++k) {
      if (!(lambda_[k] > 0.0)) throw ValidationError("step function: breakpoints must be positive");
      if (k > 0 && !(lambda_[k] > lambda_[k - 1])) throw ValidationError("step function: breakpoints not ascending");
      if (value_[k] < 0.0 || (k > 0 && value_[k] < value_[k - 1]))
        throw ValidationError("step function: values must be nonnegative and nondecreasing");
    }
  }

  /// Jump of size w at every x (x > 0); equal abscissae merge.
  static StepFunction from_jumps(std::vector<std::pair<double, double>> jumps) {
    std::sort(jumps.begin(), jumps.end());
    std::vector<double> l, v;
    l.reserve(jumps.size());
    v.reserve(jumps.size());
    double acc = 0.0;
    for (const auto& [x, w] : jumps) {
      if (w == 0.0) continue;
      acc += w;
      if (!l.empty() && l.back() == x) {
        v.back() = acc;
      } else {
        l.push_back(x);
        v.push_back(acc);
      }
    }
    StepFunction f;
    f.lambda_ = std::move(l);
    f.value_ = std::move(v);
    return f;
  }

  double operator()(double lambda) const {
    auto it = std::upper_bound(lambda_.begin(), lambda_.end(), lambda);
    if (it == lambda_.begin()) return 0.0;
    return value_[static_cast<std::size_t>(it - lambda_.begin()) - 1];
  }
  double total() const { return value_.empty() ? 0.0 : value_.back(); }
  const std::vector<double>& breakpoints() const { return lambda_; }
  const std::vector<double>& values() const { return value_; }
  bool empty() const { return lambda_.empty(); }

  friend StepFunction operator+(const StepFunction& a, const StepFunction& b) {
    std::vector<double> l;
    std::merge(a.lambda_.begin(), a.lambda_.end(), b.lambda_.begin(), b.lambda_.end(), std::back_inserter(l));
    l.erase(std::unique(l.begin(), l.end()), l.end());
    std::vector<double> v(l.size());
    for (std::size_t k = 0; k < l.size(); ++k) v[k] = a(l[k]) + b(l[k]);
    StepFunction f;
    f.lambda_ = std::move(l);
    f.value_ = std::move(v);
    return f;
  }

  std::vector<double> sample(const std::vector<double>& grid) const {
    std::vector<double> out(grid.size());
    for (std::size_t k = 0; k < grid.size(); ++k) out[k] = (*this)(grid[k]);
    return out;
  }

 private:
  std::vector<double> lambda_;
  std::vector<double> value_;
};

/// Log-spaced grid, `per_decade` points per decade, both ends included.
inline std::vector<double> lambda_grid(double lo = 1e-6, double hi = 1.0, int per_decade = 200) {
  if (!(lo > 0.0) || !(hi > lo) || per_decade < 1) throw ValidationError("lambda grid: need 0 < lo < hi");
  const double decades = std::log10(hi / lo);
  const auto n = static_cast<std::size_t>(std::ceil(decades * per_decade - 1e-9));
  std::vector<double> g(n + 1);
  for (std::size_t k = 0; k <= n; ++k) g[k] = lo * std::pow(10.0, decades * static_cast<double>(k) / static_cast<double>(n));
  g.back() = hi;
  return g;
}

struct SdfOptions {
  double eps_rank = default_eps_rank;
  /// Allowed nu-mass, relative to nu(Z), of singular values at or below the
  /// rank threshold before the representative is rejected as non-injective.
  /// Analytic fields dip below the threshold on small sets near their zeros.
  double kernel_budget = 1e-2;
  /// Discard only the generic kernel (from the rank stratification) and keep
  /// every other singular value however small. The per-cell threshold cut
  /// hides the spectral mass of high-order zeros.
  bool generic_cut = false;
};

struct SdfResult {
  StepFunction sdf;
  double kernel_mass = 0.0;
};

/// F(lambda) = sum_j nu_j #{ i : kernel < sigma_i(alpha(xi_j)) <= lambda },
/// together with the nu-mass of the excluded kernel directions. The kernel
/// cut is the numeric_rank threshold of each fiber.
inline SdfResult sdf_with_kernel(const BundleMap& alpha, const DensityMeasure& nu, const SdfOptions& opt = {}) {
  if (!nu.on(*alpha.base())) throw ValidationError("sdf: measure lives on a different space");
  const std::size_t n = alpha.cells();
  std::vector<RealVector> sv(n);
  parallel::parallel_for(n, [&](std::size_t j) {
    if (nu.weight(j) > 0.0) sv[j] = alpha.singular_values_at(j);
  });
  std::vector<std::size_t> generic;
  if (opt.generic_cut) generic = rank_strata(alpha, opt.eps_rank).generic;
  std::vector<std::pair<double, double>> jumps;
  jumps.reserve(n);
  double kernel = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    const double w = nu.weight(j);
    if (w == 0.0) continue;
    const std::size_t src = alpha.source().dim(j);
    std::size_t kept = 0;
    if (opt.generic_cut) {
      const auto r = std::min<Eigen::Index>(static_cast<Eigen::Index>(generic[j]), sv[j].size());
      for (Eigen::Index k = 0; k < r; ++k)
        if (sv[j](k) > 0.0) jumps.emplace_back(sv[j](k), w), ++kept;
    } else {
      const double thr = sv[j].size() ? rank_threshold(sv[j].maxCoeff(), opt.eps_rank) : 0.0;
      for (Eigen::Index k = 0; k < sv[j].size(); ++k)
        if (sv[j](k) > thr) jumps.emplace_back(sv[j](k), w), ++kept;
    }
    kernel += static_cast<double>(src - kept) * w;
  }
  return {StepFunction::from_jumps(std::move(jumps)), kernel};
}

inline StepFunction sdf_from_map(const ExtObject& x, const DensityMeasure& nu, const SdfOptions& opt = {}) {
  SdfResult r = sdf_with_kernel(x.alpha, nu, opt);
  const double allowed = opt.kernel_budget * nu.total();
  if (r.kernel_mass > allowed)
    throw PreconditionError("sdf: representative is not injective (kernel mass " + std::to_string(r.kernel_mass) +
                            " exceeds budget " + std::to_string(allowed) + "); excise its kernel first");
  return std::move(r.sdf);
}

inline StepFunction sdf_from_map(const ExtObject& x, const SdfOptions& opt = {}) {
  return sdf_from_map(x, DensityMeasure::full(x.base()), opt);
}

/// From explicit (singular value, weight) pairs.
inline StepFunction sdf_from_singular_values(std::vector<std::pair<double, double>> sigma_weight) {
  for (const auto& [s, w] : sigma_weight)
    if (!(s > 0.0) || !(w >= 0.0)) throw ValidationError("sdf: singular values must be positive, weights nonnegative");
  return StepFunction::from_jumps(std::move(sigma_weight));
}

struct LinearFit {
  double slope = 0.0, intercept = 0.0, slope_stderr = 0.0, r_squared = 0.0;
  std::size_t points = 0;
};

inline LinearFit least_squares(const std::vector<double>& x, const std::vector<double>& y) {
  const std::size_t n = x.size();
  LinearFit f;
  f.points = n;
  if (n < 2) return f;
  double mx = 0.0, my = 0.0;
  for (std::size_t k = 0; k < n; ++k) mx += x[k], my += y[k];
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    sxx += (x[k] - mx) * (x[k] - mx);
    sxy += (x[k] - mx) * (y[k] - my);
    syy += (y[k] - my) * (y[k] - my);
  }
  if (sxx == 0.0) return f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  double sse = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const double e = y[k] - f.intercept - f.slope * x[k];
    sse += e * e;
  }
  f.r_squared = syy > 0.0 ? 1.0 - sse / syy : 1.0;
  if (n > 2) f.slope_stderr = std::sqrt(sse / static_cast<double>(n - 2) / sxx);
  return f;
}

struct CapacityPolicy {
  double lo = 1e-4, hi = 1e-2;
  int per_decade = 200;
  /// Fits log F - p log(1 - log lambda) against log lambda. p = 1 suits SDFs
  /// of the shape lambda^s (1 - log lambda), e.g. normal crossings in two
  /// variables. The p = 0 slope is always reported as well.
  double log_power = 0.0;
  /// Scale s in the correction log(1 - log(lambda / s)); use sup |alpha| so
  /// the fit does not depend on rescaling the map.
  double log_scale = 1.0;
  double subwindow_decades = 0.5;
};

struct CapacityEstimate {
  double capacity = 0.0;  // may be +inf
  double ns_number = std::numeric_limits<double>::infinity();
  double fit_lo = 0.0, fit_hi = 0.0;
  double slope_stderr = 0.0;     // statistical and sub-window spread combined
  double capacity_stderr = 0.0;
  double r_squared = 0.0;
  double plain_slope = 0.0;      // p = 0 fit
  double liminf_slope = 0.0;     // smallest sub-window slope
  double log_power = 0.0;
  std::size_t points = 0;
  bool vanishes = false;         // F = 0 on (0, hi]
};

template <class F>
CapacityEstimate capacity(const F& sdf, const CapacityPolicy& pol = {}) {
  const std::vector<double> grid = lambda_grid(pol.lo, pol.hi, pol.per_decade);
  CapacityEstimate est;
  est.fit_lo = pol.lo;
  est.fit_hi = pol.hi;
  est.log_power = pol.log_power;
  if (!(sdf(pol.hi) > 0.0)) {
    est.vanishes = true;
    est.capacity = 0.0;
    return est;
  }
  std::vector<double> x, y, y0;
  for (double l : grid) {
    const double v = sdf(l);
    if (!(v > 0.0)) continue;
    x.push_back(std::log(l));
    y0.push_back(std::log(v));
    y.push_back(std::log(v) - pol.log_power * std::log(1.0 - std::log(l / pol.log_scale)));
  }
  if (x.size() < 8)
    throw PreconditionError("capacity: only " + std::to_string(x.size()) +
                            " usable grid points in the fit window (need 8)");
  const LinearFit fit = least_squares(x, y);
  est.points = x.size();
  est.r_squared = fit.r_squared;
  est.plain_slope = least_squares(x, y0).slope;

  // Sliding sub-windows, stepping by half their width.
  const double width = pol.subwindow_decades * std::log(10.0);
  double smin = std::numeric_limits<double>::infinity(), smax = -smin;
  for (double start = x.front(); start + width <= x.back() + 1e-12; start += 0.5 * width) {
    std::vector<double> xs, ys;
    for (std::size_t k = 0; k < x.size(); ++k)
      if (x[k] >= start - 1e-12 && x[k] <= start + width + 1e-12) xs.push_back(x[k]), ys.push_back(y[k]);
    if (xs.size() < 4) continue;
    const double s = least_squares(xs, ys).slope;
    smin = std::min(smin, s);
    smax = std::max(smax, s);
  }
  if (!std::isfinite(smin)) smin = smax = fit.slope;
  est.liminf_slope = smin;
  const double spread = 0.5 * (smax - smin);
  est.slope_stderr = std::sqrt(fit.slope_stderr * fit.slope_stderr + spread * spread);
  est.ns_number = fit.slope;
  if (fit.slope > 1e-12) {
    est.capacity = 1.0 / fit.slope;
    est.capacity_stderr = est.slope_stderr / (fit.slope * fit.slope);
  } else {
    est.capacity = std::numeric_limits<double>::infinity();
    est.capacity_stderr = std::numeric_limits<double>::infinity();
  }
  return est;
}

/// Lowest lambda in [lo, hi] down to which two estimates of the same SDF
/// (e.g. at resolution N and N/2) agree within rel_tol on the whole range.
template <class F, class G>
double resolved_lower_bound(const F& fine, const G& coarse, double lo, double hi, double rel_tol = 0.02,
                            int per_decade = 200) {
  const std::vector<double> grid = lambda_grid(lo, hi, per_decade);
  double bound = hi;
  for (std::size_t k = grid.size(); k-- > 0;) {
    const double a = fine(grid[k]), b = coarse(grid[k]);
    if (!(a > 0.0) || std::abs(a - b) > rel_tol * a) break;
    bound = grid[k];
  }
  return bound;
}

/// Window [lo, lo 10^decades] whose lower end is the smallest grid lambda
/// with F(lambda) >= min_mass, searched upward from floor.
template <class F>
std::pair<double, double> resolved_window(const F& sdf, double min_mass, double floor = 1e-14, double ceiling = 1.0,
                                          double decades = 2.0, int per_decade = 20) {
  for (double l : lambda_grid(floor, ceiling, per_decade))
    if (sdf(l) >= min_mass) return {l, l * std::pow(10.0, decades)};
  throw PreconditionError("resolved_window: F stays below " + std::to_string(min_mass) + " up to lambda = " +
                          std::to_string(ceiling));
}

enum class Dilatation { equivalent, inequivalent, inconclusive };

inline const char* to_string(Dilatation d) {
  switch (d) {
    case Dilatation::equivalent: return "equivalent";
    case Dilatation::inequivalent: return "inequivalent";
    default: return "inconclusive";
  }
}

struct DilatationReport {
  Dilatation verdict = Dilatation::inconclusive;
  double constant = 0.0;              // power of two, when equivalent
  std::vector<double> lambdas;        // sampled lambda, ascending
  std::vector<double> required;       // smallest working C per lambda (inf if > c_max)
  std::vector<double> witness;        // lambdas where the required C keeps growing
};

/// Tests G(lambda/C) <= F(lambda) <= G(C lambda) on the window. The verdict
/// is "inequivalent" when the constant needed grows steadily toward 0.
template <class F, class G>
DilatationReport dilatation_compare(const F& f, const G& g, double lo, double hi, int per_decade = 50,
                                    double c_max = 1048576.0) {
  DilatationReport rep;
  rep.lambdas = lambda_grid(lo, hi, per_decade);
  const double lmax = std::log2(c_max);
  for (double l : rep.lambdas) {
    const double v = f(l);
    auto ok = [&](double e) {
      const double c = std::exp2(e);
      return g(l / c) <= v && v <= g(c * l);
    };
    double need;
    if (ok(0.0)) {
      need = 1.0;
    } else if (!ok(lmax)) {
      need = std::numeric_limits<double>::infinity();
    } else {
      double a = 0.0, b = lmax;
      for (int it = 0; it < 60 && b - a > 1e-6; ++it) {
        const double m = 0.5 * (a + b);
        (ok(m) ? b : a) = m;
      }
      need = std::exp2(b);
    }
    rep.required.push_back(need);
  }
  const std::size_t n = rep.required.size();
  const std::size_t q = std::max<std::size_t>(1, n / 5);
  auto median = [](std::vector<double> v) {
    std::sort(v.begin(), v.end());
    return v[v.size() / 2];
  };
  bool any_inf = false;
  for (std::size_t k = 0; k < n; ++k)
    if (!std::isfinite(rep.required[k])) any_inf = true, rep.witness.push_back(rep.lambdas[k]);
  if (any_inf) {
    rep.verdict = Dilatation::inequivalent;
    return rep;
  }
  const double low = median({rep.required.begin(), rep.required.begin() + static_cast<std::ptrdiff_t>(q)});
  const double high = median({rep.required.end() - static_cast<std::ptrdiff_t>(q), rep.required.end()});
  // Monotone trend: rank correlation between log lambda and required C.
  std::vector<double> rx(n), ry(n);
  {
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return rep.required[a] < rep.required[b]; });
    for (std::size_t k = 0; k < n; ++k) ry[idx[k]] = static_cast<double>(k), rx[k] = static_cast<double>(k);
  }
  const double rho = least_squares(rx, ry).slope;  // both ranks share variance
  const double cmax = *std::max_element(rep.required.begin(), rep.required.end());
  if (low > 1.25 * high && rho < -0.8) {
    rep.verdict = Dilatation::inequivalent;
    for (std::size_t k = 0; k < q; ++k) rep.witness.push_back(rep.lambdas[k]);
    return rep;
  }
  if (low <= 1.25 * high) {
    rep.verdict = Dilatation::equivalent;
    rep.constant = std::exp2(std::ceil(std::log2(cmax) - 1e-5));  // slack covers the bisection bracket
    if (rep.constant < 1.0) rep.constant = 1.0;
    return rep;
  }
  rep.verdict = Dilatation::inconclusive;
  return rep;
}

/// Torsion SDF of H^i: F^i(lambda) = G(lambda^2) - G(0), G counting the
/// eigenvalues of d^{i-1*} d^{i-1}; equivalently the nonzero singular values
/// of d^{i-1} up to lambda.
struct CohomologySdf {
  double proj_dim = 0.0;
  StepFunction sdf;
};

inline StepFunction differential_sdf(const BundleComplex& c, std::size_t i, const DensityMeasure& nu,
                                     double eps_rank = default_eps_rank) {
  if (i == 0 || i > c.maps.size()) return {};
  return sdf_with_kernel(c.maps[i - 1], nu, {eps_rank, 1.0}).sdf;
}

inline CohomologySdf cohomology_sdf(const BundleComplex& c, std::size_t i, const DensityMeasure& nu,
                                    double eps_rank = default_eps_rank) {
  require_complex(c);
  if (i > c.top_degree()) throw ValidationError("cohomology_sdf: degree out of range");
  if (!nu.on(*c.base())) throw ValidationError("cohomology_sdf: measure lives on a different space");
  const ExtCohomology h = extended_cohomology(c, eps_rank);
  CohomologySdf out;
  for (std::size_t j = 0; j < c.base()->size(); ++j)
    out.proj_dim += static_cast<double>(h.generic_betti[i][j]) * nu.weight(j);
  out.sdf = differential_sdf(c, i, nu, eps_rank);
  return out;
}

struct LaplacianCount {
  double lhs = 0.0;       // tr_nu chi_[0, lambda](Δ^i)
  double harmonic = 0.0;  // nu-mass of fiberwise harmonic dimension
  double f_i = 0.0, f_next = 0.0;
  double residual = 0.0;
};

/// tr chi_[0,lambda](Δ^i) - [h^i + F^i(sqrt lambda) + F^{i+1}(sqrt lambda)].
inline LaplacianCount laplacian_count_check(const BundleComplex& c, std::size_t i, double lambda,
                                            const DensityMeasure& nu, double eps_rank = default_eps_rank) {
  require_complex(c);
  if (i > c.top_degree()) throw ValidationError("laplacian_count_check: degree out of range");
  const std::size_t n = c.base()->size();
  std::vector<double> count(n, 0.0), harm(n, 0.0);
  parallel::parallel_for(n, [&](std::size_t j) {
    if (nu.weight(j) == 0.0) return;
    const Matrix lap = laplacian_block(c, i, j);
    if (lap.rows() > 0) {
      const RealVector ev = hermitian_eigs(lap, false).eigenvalues;
      for (Eigen::Index e = 0; e < ev.size(); ++e) count[j] += ev(e) <= lambda;
    }
    harm[j] = static_cast<double>(fiber_betti(c, j, eps_rank)[i]);
  });
  LaplacianCount out;
  for (std::size_t j = 0; j < n; ++j) {
    out.lhs += count[j] * nu.weight(j);
    out.harmonic += harm[j] * nu.weight(j);
  }
  const double r = std::sqrt(lambda);
  out.f_i = differential_sdf(c, i, nu, eps_rank)(r);
  out.f_next = differential_sdf(c, i + 1, nu, eps_rank)(r);
  out.residual = out.lhs - (out.harmonic + out.f_i + out.f_next);
  return out;
}

}  // namespace l2ext
