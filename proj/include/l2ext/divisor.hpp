#pragma once

/**
 * Divisors: the closed set of parameter points near which every localized
 * spectral density function stays positive.
 *
 * At finite resolution a zero of the criterion field usually falls between
 * cell centers, so an absolute threshold misses it. The default detector
 * flags a cell when its smallest singular value is a local minimum (along
 * some axis) that is small compared with the jump to its neighbors, which is
 * how a Lipschitz field looks next to a zero it does not sample.
 */

#include <algorithm>
#include <cmath>
#include <deque>
#include <optional>
#include <string>
#include <vector>

#include "l2ext/bundle.hpp"
#include "l2ext/excat.hpp"
#include "l2ext/spectral.hpp"

namespace l2ext {

inline StepFunction local_sdf(const ExtObject& x, const std::vector<std::size_t>& region, const SdfOptions& opt = {}) {
  if (region.empty()) throw ValidationError("local_sdf: empty region");
  return sdf_from_map(x, restrict_to_cells(x.base(), region), opt);
}

enum class DetectionMode {
  lipschitz,    // local minimum test, resolution aware
  threshold,    // sigma_min <= delta_div (1 + sup)
  determinant,  // |det| <= (delta_div (1 + sup))^n
  exact         // numeric rank deficiency only
};

inline const char* to_string(DetectionMode m) {
  switch (m) {
    case DetectionMode::lipschitz: return "min-singular-lipschitz";
    case DetectionMode::threshold: return "min-singular-threshold";
    case DetectionMode::determinant: return "determinant";
    default: return "rank-deficiency";
  }
}

struct DetectionPolicy {
  DetectionMode mode = DetectionMode::lipschitz;
  double eps_rank = default_eps_rank;
  double c_grid = default_c_grid;
  double delta_div = 1e-3;
  /// Largest flagged measure, relative to mu(Z), before the map is rejected
  /// as not torsion.
  double budget = 0.1;
  /// When > 0, each cluster gets a local capacity estimate on its
  /// neighborhood dilated by this many cells.
  std::size_t multiplicity_dilation = 0;
  CapacityPolicy capacity;
};

struct DivisorCluster {
  std::vector<std::size_t> cells;
  std::optional<CapacityEstimate> local_capacity;
};

struct DivisorReport {
  std::vector<std::size_t> flagged_cells;
  std::vector<double> per_cell_min_singular;
  std::string criterion;
  double flagged_measure = 0.0;
  std::vector<DivisorCluster> clusters;
};

/// Connected components of a cell set under axis adjacency, in order of
/// their smallest cell index.
inline std::vector<std::vector<std::size_t>> clusters(const SampleSpace& space, const std::vector<std::size_t>& cells) {
  std::vector<char> in(space.size(), 0), seen(space.size(), 0);
  for (std::size_t j : cells) in[j] = 1;
  std::vector<std::vector<std::size_t>> out;
  for (std::size_t j : cells) {
    if (seen[j]) continue;
    std::vector<std::size_t> comp;
    std::deque<std::size_t> queue{j};
    seen[j] = 1;
    while (!queue.empty()) {
      const std::size_t c = queue.front();
      queue.pop_front();
      comp.push_back(c);
      for (std::size_t a = 0; a < space.dim(); ++a)
        for (int step : {-1, 1}) {
          const std::size_t k = space.neighbor(c, a, step);
          if (k < space.size() && in[k] && !seen[k]) seen[k] = 1, queue.push_back(k);
        }
    }
    std::sort(comp.begin(), comp.end());
    out.push_back(std::move(comp));
  }
  return out;
}

/// Cells within `radius` axis steps of the given set.
inline std::vector<std::size_t> dilate(const SampleSpace& space, const std::vector<std::size_t>& cells, std::size_t radius) {
  std::vector<char> in(space.size(), 0);
  std::vector<std::size_t> frontier = cells;
  for (std::size_t j : cells) in[j] = 1;
  for (std::size_t r = 0; r < radius; ++r) {
    std::vector<std::size_t> next;
    for (std::size_t c : frontier)
      for (std::size_t a = 0; a < space.dim(); ++a)
        for (int step : {-1, 1}) {
          const std::size_t k = space.neighbor(c, a, step);
          if (k < space.size() && !in[k]) in[k] = 1, next.push_back(k);
        }
    frontier = std::move(next);
  }
  std::vector<std::size_t> out;
  for (std::size_t j = 0; j < in.size(); ++j)
    if (in[j]) out.push_back(j);
  return out;
}

namespace detail {

inline void annotate_clusters(const ExtObject& x, DivisorReport& rep, const DetectionPolicy& pol) {
  const SampleSpace& space = *x.base();
  for (auto& c : clusters(space, rep.flagged_cells)) {
    DivisorCluster dc{c, std::nullopt};
    if (pol.multiplicity_dilation > 0) {
      const auto region = dilate(space, c, pol.multiplicity_dilation);
      try {
        dc.local_capacity = capacity(local_sdf(x, region, {pol.eps_rank, 1.0}), pol.capacity);
      } catch (const PreconditionError&) {
        dc.local_capacity.reset();
      }
    }
    rep.clusters.push_back(std::move(dc));
  }
}

}  // namespace detail

inline DivisorReport divisor_of_map(const BundleMap& t, const DetectionPolicy& pol = {}) {
  if (!t.is_square()) throw ValidationError("divisor_of_map: map is not an endomorphism");
  const SampleSpace& space = *t.base();
  DivisorReport rep;
  rep.per_cell_min_singular = min_singular_field(t);
  rep.criterion = to_string(pol.mode);
  const double floor = rank_threshold(t.sup_norm(), pol.eps_rank);
  const std::vector<double>& s = rep.per_cell_min_singular;
  switch (pol.mode) {
    case DetectionMode::lipschitz:
      rep.flagged_cells = lipschitz_zero_cells(space, s, floor, pol.c_grid);
      break;
    case DetectionMode::threshold: {
      const double d = pol.delta_div * (1.0 + t.sup_norm());
      for (std::size_t j = 0; j < s.size(); ++j)
        if (s[j] <= d) rep.flagged_cells.push_back(j);
      break;
    }
    case DetectionMode::determinant: {
      const double d = pol.delta_div * (1.0 + t.sup_norm());
      for (std::size_t j = 0; j < s.size(); ++j) {
        const auto n = static_cast<double>(t.source().dim(j));
        if (std::abs(determinant(t.matrix(j))) <= std::pow(d, n)) rep.flagged_cells.push_back(j);
      }
      break;
    }
    case DetectionMode::exact:
      for (std::size_t j = 0; j < s.size(); ++j)
        if (numeric_rank(t.singular_values_at(j), pol.eps_rank) < t.source().dim(j)) rep.flagged_cells.push_back(j);
      break;
  }
  for (std::size_t j : rep.flagged_cells) rep.flagged_measure += space.weight(j);
  if (rep.flagged_measure > pol.budget * space.total_measure())
    throw PreconditionError("divisor_of_map: flagged measure " + std::to_string(rep.flagged_measure) +
                            " exceeds the budget; the determinant does not vanish on a null set, so the object is "
                            "not torsion");
  detail::annotate_clusters(ExtObject{t}, rep, pol);
  return rep;
}

struct ComplexDivisor {
  DivisorReport report;
  std::vector<std::size_t> generic_betti;       // per degree
  std::vector<std::size_t> betti_jump_cells;    // cells whose fiber Betti numbers differ from generic
  bool all_torsion = false;                     // generic Betti numbers all zero
  bool vanishing = false;                       // all_torsion and empty divisor
};

/// Union over degrees of the rank-drop loci of the differentials plus the
/// sampled Betti-jump locus.
inline ComplexDivisor divisor_of_complex(const BundleComplex& c, const DetectionPolicy& pol = {}) {
  require_complex(c);
  const SampleSpace& space = *c.base();
  const std::size_t n = space.size();
  const std::size_t deg = c.fields.size();
  ComplexDivisor out;

  std::vector<std::vector<std::size_t>> betti(deg, std::vector<std::size_t>(n));
  std::vector<std::vector<RealVector>> sv(c.maps.size(), std::vector<RealVector>(n));
  parallel::parallel_for(n, [&](std::size_t j) {
    const auto b = fiber_betti(c, j, pol.eps_rank);
    for (std::size_t i = 0; i < deg; ++i) betti[i][j] = b[i];
    for (std::size_t i = 0; i < c.maps.size(); ++i) sv[i][j] = c.maps[i].singular_values_at(j);
  });
  const auto generic = generic_betti_numbers(c, betti);
  std::vector<char> flag(n, 0);
  for (std::size_t j = 0; j < n; ++j)
    for (std::size_t i = 0; i < deg; ++i)
      if (betti[i][j] != generic[i][j]) {
        flag[j] = 1;
        out.betti_jump_cells.push_back(j);
        break;
      }

  std::vector<double> crit(n, std::numeric_limits<double>::infinity());
  if (pol.mode != DetectionMode::exact) {
    for (std::size_t i = 0; i < c.maps.size(); ++i) {
      std::vector<std::size_t> rk(n);
      for (std::size_t j = 0; j < n; ++j) rk[j] = numeric_rank(sv[i][j], pol.eps_rank);
      std::vector<std::vector<std::size_t>> keys(n);
      for (std::size_t j = 0; j < n; ++j)
        for (const auto& f : c.fields) keys[j].push_back(f.dim(j));
      const auto grk = detail::weighted_mode(keys, rk, space.weights());
      // Smallest singular value that is nonzero generically.
      std::vector<double> s(n, std::numeric_limits<double>::infinity());
      for (std::size_t j = 0; j < n; ++j)
        if (grk[j] > 0) s[j] = sv[i][j](static_cast<Eigen::Index>(grk[j]) - 1);
      const double floor = rank_threshold(c.maps[i].sup_norm(), pol.eps_rank);
      for (std::size_t j : lipschitz_zero_cells(space, s, floor, pol.c_grid)) flag[j] = 1;
      for (std::size_t j = 0; j < n; ++j) crit[j] = std::min(crit[j], s[j]);
    }
  }
  out.report.criterion = pol.mode == DetectionMode::exact ? "betti-jump" : "betti-jump+rank-drop-lipschitz";
  out.report.per_cell_min_singular = std::move(crit);
  for (std::size_t j = 0; j < n; ++j)
    if (flag[j]) out.report.flagged_cells.push_back(j), out.report.flagged_measure += space.weight(j);
  for (const auto& cl : clusters(space, out.report.flagged_cells)) out.report.clusters.push_back({cl, std::nullopt});

  // Generic values, read off the heaviest dimension group.
  out.generic_betti.assign(deg, 0);
  for (std::size_t i = 0; i < deg; ++i) {
    std::vector<int> key(n, 0);
    out.generic_betti[i] = detail::weighted_mode(key, generic[i], space.weights()).front();
  }
  out.all_torsion = std::all_of(out.generic_betti.begin(), out.generic_betti.end(), [](std::size_t b) { return b == 0; });
  out.vanishing = out.all_torsion && out.report.flagged_cells.empty();
  return out;
}

/// Hausdorff distance between flagged cell centers and a sampled reference
/// set (points given as rows of coordinates). Infinite if exactly one side is
/// empty, 0 if both are.
inline double hausdorff_distance(const SampleSpace& space, const std::vector<std::size_t>& cells,
                                 const std::vector<std::vector<double>>& reference) {
  if (cells.empty() && reference.empty()) return 0.0;
  if (cells.empty() || reference.empty()) return std::numeric_limits<double>::infinity();
  std::vector<double> to_ref(cells.size()), to_cells(reference.size(), std::numeric_limits<double>::infinity());
  parallel::parallel_for(cells.size(), [&](std::size_t k) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& r : reference) best = std::min(best, space.distance(space.point(cells[k]), r));
    to_ref[k] = best;
  });
  parallel::parallel_for(reference.size(), [&](std::size_t r) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t j : cells) best = std::min(best, space.distance(space.point(j), reference[r]));
    to_cells[r] = best;
  });
  return std::max(*std::max_element(to_ref.begin(), to_ref.end()), *std::max_element(to_cells.begin(), to_cells.end()));
}

}  // namespace l2ext
