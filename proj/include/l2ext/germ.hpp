#pragma once

/**
 * One-parameter families: eigenvalue branches along t, their vanishing
 * orders at a divisor point, and the germ height.
 */

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <tuple>
#include <vector>

#include "l2ext/divisor.hpp"

namespace l2ext {

struct Branches {
  std::vector<std::size_t> cells;              // sample cells in increasing t
  std::vector<double> t;
  std::vector<std::vector<double>> values;     // values[b][k] = branch b at t[k]
  std::vector<bool> zero_branch;
  std::vector<std::string> log;                // ambiguous matches
};

/// Matches per-sample spectra into branches. Each step predicts every
/// branch by linear extrapolation and assigns the sorted new values to the
/// sorted predictions, which minimizes the total displacement.
inline void match_branches(Branches& br, const std::vector<RealVector>& ev, double gap_tol) {
  const std::size_t d = br.values.size();
  for (std::size_t b = 0; b < d; ++b) br.values[b][0] = ev[0](static_cast<Eigen::Index>(b));
  std::vector<std::size_t> order(d);
  for (std::size_t k = 1; k < ev.size(); ++k) {
    std::vector<double> pred(d);
    for (std::size_t b = 0; b < d; ++b) {
      const double v1 = br.values[b][k - 1];
      pred[b] = k >= 2 ? 2.0 * v1 - br.values[b][k - 2] : v1;
    }
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) { return pred[x] < pred[y]; });
    for (std::size_t r = 0; r + 1 < d; ++r)
      if (std::abs(pred[order[r + 1]] - pred[order[r]]) <= gap_tol)
        br.log.push_back("ambiguous crossing near t=" + std::to_string(br.t[k]) + ", resolved by ordering");
    for (std::size_t r = 0; r < d; ++r) br.values[order[r]][k] = ev[k](static_cast<Eigen::Index>(r));
  }
}

/// Ascending spectra along cells in the given order.
inline Branches branches_from_spectra(const SampleSpace& space, const std::vector<std::size_t>& cells,
                                      const std::vector<RealVector>& ev, double zero) {
  Branches br;
  br.cells = cells;
  const std::size_t d = static_cast<std::size_t>(ev.front().size());
  for (const auto& e : ev)
    if (static_cast<std::size_t>(e.size()) != d) throw ValidationError("track_branches: fiber dimension varies along t");
  br.values.assign(d, std::vector<double>(cells.size()));
  for (std::size_t j : cells) br.t.push_back(space.coordinate(j, 0));
  double top = 0.0;
  for (const auto& e : ev)
    if (e.size()) top = std::max(top, e.maxCoeff());
  match_branches(br, ev, 1e-9 * (1.0 + top));
  for (std::size_t b = 0; b < d; ++b)
    br.zero_branch.push_back(std::all_of(br.values[b].begin(), br.values[b].end(), [&](double v) { return v <= zero; }));
  return br;
}

/// Eigenvalue branches of a Hermitian field over a 1-D space, optionally
/// restricted to a set of cells (taken in coordinate order).
inline Branches track_branches(const BundleMap& field, std::vector<std::size_t> cells = {},
                               double eps_rank = default_eps_rank) {
  const SampleSpace& space = *field.base();
  if (space.dim() != 1) throw ValidationError("track_branches: base space is not one-dimensional");
  if (!field.is_square()) throw ValidationError("track_branches: field is not an endomorphism");
  if (cells.empty()) {
    cells.resize(space.size());
    std::iota(cells.begin(), cells.end(), 0);
  }
  std::sort(cells.begin(), cells.end(), [&](std::size_t a, std::size_t b) {
    return space.coordinate(a, 0) < space.coordinate(b, 0);
  });
  std::vector<RealVector> ev(cells.size());
  parallel::parallel_for(cells.size(), [&](std::size_t k) {
    ev[k] = hermitian_eigs(field.matrix(cells[k]), false).eigenvalues;
  });
  double top = 0.0;
  for (const auto& e : ev)
    if (e.size()) top = std::max(top, e.maxCoeff());
  const double zero = std::pow(rank_threshold(std::sqrt(std::max(top, 0.0)), eps_rank), 2);
  return branches_from_spectra(space, cells, ev, zero);
}

struct VanishingOrder {
  int k = 0;
  double slope = 0.0;
  double gamma = 0.0;   // lambda ~ gamma |t - t0|^{2k}
  double r_squared = 0.0;
  std::size_t points = 0;
};

struct FitPolicy {
  double r_min = 0.0;   // smallest |t - t0| used
  double r_max = 0.5;   // largest |t - t0| used
  double tolerance = 0.2;
  double floor = 0.0;   // values at or below this are roundoff and skipped
};

inline VanishingOrder vanishing_order(const std::vector<double>& t, const std::vector<double>& branch, double t0,
                                      const FitPolicy& pol) {
  if (t.size() != branch.size()) throw ValidationError("vanishing_order: size mismatch");
  std::vector<double> x, y;
  for (std::size_t k = 0; k < t.size(); ++k) {
    const double r = std::abs(t[k] - t0);
    if (r < pol.r_min || r > pol.r_max || r == 0.0) continue;
    if (pol.floor > 0.0 && branch[k] <= pol.floor) continue;
    if (!(branch[k] > 0.0))
      throw PreconditionError("vanishing_order: branch is not positive near t0 (t=" + std::to_string(t[k]) + ")");
    x.push_back(std::log(r));
    y.push_back(std::log(branch[k]));
  }
  if (x.size() < 4) throw PreconditionError("vanishing_order: fewer than 4 samples in the fit window");
  const LinearFit f = least_squares(x, y);
  VanishingOrder v;
  v.slope = f.slope;
  v.points = f.points;
  v.r_squared = f.r_squared;
  v.k = static_cast<int>(std::lround(f.slope / 2.0));
  if (v.k < 0 || std::abs(f.slope - 2.0 * v.k) > pol.tolerance)
    throw PreconditionError("vanishing_order: log-log slope " + std::to_string(f.slope) +
                            " is not within " + std::to_string(pol.tolerance) +
                            " of an even integer; input is not analytic or resolution is too coarse");
  v.gamma = std::exp(f.intercept);
  return v;
}

struct GermReport {
  double t0 = 0.0;
  std::vector<int> branch_orders;          // nonzero branches only
  std::vector<VanishingOrder> residuals;
  int height = 0;
  CapacityEstimate local_capacity;
  bool consistent = false;                 // |capacity - height| <= max(0.1, 2 stderr)
  std::vector<std::string> log;
};

struct GermPolicy {
  double eps_rank = default_eps_rank;
  CapacityPolicy capacity;
  double order_tolerance = 0.2;
  double c_grid = default_c_grid;
  /// Place the capacity window at the smallest lambda where F covers this
  /// many cells; 0 keeps capacity.lo / capacity.hi.
  std::size_t window_cells = 64;
};

/// Height of the torsion of H^i at t0 from the eigenbranches of d^{i-1*} d^{i-1}
/// on [t0 - eps, t0 + eps], checked against the local capacity there.
inline GermReport germ_height(const BundleComplex& c, std::size_t i, double t0, double eps, const GermPolicy& pol = {}) {
  require_complex(c);
  const SampleSpace& space = *c.base();
  if (space.dim() != 1) throw ValidationError("germ_height: base space is not one-dimensional");
  if (i == 0 || i > c.maps.size()) throw ValidationError("germ_height: degree must satisfy 1 <= i <= N");
  if (!(eps > 0.0)) throw ValidationError("germ_height: eps must be positive");
  const BundleMap& d = c.maps[i - 1];

  std::vector<std::size_t> region;
  const std::vector<double> p0{t0};
  for (std::size_t j = 0; j < space.size(); ++j)
    if (space.distance(space.point(j), p0) <= eps) region.push_back(j);
  if (region.size() < 8) throw ValidationError("germ_height: interval holds fewer than 8 cells");

  // Divisor points of the differential inside the interval.
  RankStrata rs = rank_strata(d, pol.eps_rank);
  std::vector<double> s(space.size(), std::numeric_limits<double>::infinity());
  for (std::size_t j : region) {
    const RealVector sv = d.singular_values_at(j);
    if (rs.generic[j] > 0) s[j] = sv(static_cast<Eigen::Index>(rs.generic[j]) - 1);
  }
  std::vector<std::size_t> flagged;
  for (std::size_t j : lipschitz_zero_cells(space, s, rank_threshold(d.sup_norm(), pol.eps_rank), pol.c_grid)) {
    // Cells at the interval boundary see an artificial infinite neighbor.
    if (std::find(region.begin(), region.end(), j) != region.end()) flagged.push_back(j);
  }
  const auto cl = clusters(space, flagged);
  if (cl.size() > 1)
    throw PreconditionError("germ_height: [t0-eps, t0+eps] contains " + std::to_string(cl.size()) +
                            " divisor points; shrink eps");
  const double h = space.cell_width(0);
  if (cl.empty() || std::none_of(cl[0].begin(), cl[0].end(), [&](std::size_t j) {
        return space.distance(space.point(j), p0) <= 2.0 * h;
      }))
    throw PreconditionError("germ_height: t0 is not a divisor point of this degree");

  // Branches of d*d as squared singular values of d: these keep relative
  // accuracy down to roughly machine epsilon times |d|.
  std::vector<RealVector> lam(space.size());
  parallel::parallel_for(region.size(), [&](std::size_t k) {
    const RealVector sv = d.singular_values_at(region[k]);
    RealVector e(static_cast<Eigen::Index>(d.source().dim(region[k])));
    e.setZero();
    for (Eigen::Index r = 0; r < sv.size(); ++r) e(e.size() - 1 - r) = sv(r) * sv(r);
    lam[region[k]] = e;
  });
  const double sup = d.sup_norm();
  const double zero = std::pow(rank_threshold(sup, pol.eps_rank), 2);
  const double floor = std::pow(64.0 * std::numeric_limits<double>::epsilon() * (1.0 + sup), 2);

  GermReport rep;
  rep.t0 = t0;
  const FitPolicy fp{5.0 * h, eps, pol.order_tolerance, floor};
  // Track each side outward from t0: every branch touches zero at t0, so
  // matching across it would swap labels.
  std::vector<std::vector<int>> side_orders;
  for (int side : {-1, 1}) {
    std::vector<std::size_t> cells;
    for (std::size_t j : region)
      if ((space.coordinate(j, 0) - t0) * side >= 0.0) cells.push_back(j);
    std::sort(cells.begin(), cells.end(), [&](std::size_t a, std::size_t b) {
      return std::abs(space.coordinate(a, 0) - t0) < std::abs(space.coordinate(b, 0) - t0);
    });
    if (cells.size() < 8) continue;
    std::vector<RealVector> ev;
    for (std::size_t j : cells) ev.push_back(lam[j]);
    const Branches br = branches_from_spectra(space, cells, ev, zero);
    rep.log.insert(rep.log.end(), br.log.begin(), br.log.end());
    std::vector<int> orders;
    rep.residuals.clear();
    for (std::size_t b = 0; b < br.values.size(); ++b) {
      if (br.zero_branch[b]) continue;
      rep.residuals.push_back(vanishing_order(br.t, br.values[b], t0, fp));
      orders.push_back(rep.residuals.back().k);
    }
    std::sort(orders.begin(), orders.end());
    side_orders.push_back(orders);
  }
  if (side_orders.empty()) throw ValidationError("germ_height: no side of t0 holds 8 cells");
  if (side_orders.size() == 2 && side_orders[0] != side_orders[1])
    rep.log.push_back("branch orders differ between the two sides of t0");
  rep.branch_orders = side_orders.back();
  for (const auto& o : side_orders)
    for (int k : o) rep.height = std::max(rep.height, k);
  const DensityMeasure nu = restrict_to_cells(c.base(), region);
  const StepFunction f = sdf_with_kernel(d, nu, {pol.eps_rank, 1.0, true}).sdf;
  CapacityPolicy cp = pol.capacity;
  if (pol.window_cells > 0) {
    double w = std::numeric_limits<double>::infinity();
    for (std::size_t j : region) w = std::min(w, space.weight(j));
    std::tie(cp.lo, cp.hi) = resolved_window(f, static_cast<double>(pol.window_cells) * w,
                                             std::sqrt(floor), sup);
  }
  rep.local_capacity = capacity(f, cp);
  rep.consistent = std::abs(rep.local_capacity.capacity - rep.height) <=
                   std::max(0.1, 2.0 * rep.local_capacity.capacity_stderr);
  return rep;
}

}  // namespace l2ext
