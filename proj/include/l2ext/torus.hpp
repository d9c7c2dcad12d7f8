#pragma once

/**
 * Mapping tori with abelian coefficients: the operator tau(xi) I - phi_*
 * on H_{i-1}(Y) over the parameter space, its divisor and capacity, and the
 * Hom/Ext split of the cohomology in each degree.
 */

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "l2ext/divisor.hpp"

namespace l2ext {

struct MappingTorusSpec {
  SpacePtr base;
  std::map<std::size_t, Matrix> phi_star;  // keyed by homological degree i-1
  std::vector<Complex> tau;                // per cell
  double tau_bound = 1e6;

  void validate() const {
    if (!base) throw ValidationError("mapping torus: no parameter space");
    if (tau.size() != base->size()) throw ValidationError("mapping torus: tau has the wrong number of cells");
    for (std::size_t j = 0; j < tau.size(); ++j) {
      const double a = std::abs(tau[j]);
      if (!std::isfinite(a) || a > tau_bound || a == 0.0 || 1.0 / a > tau_bound)
        throw ValidationError("mapping torus: |tau| or |1/tau| exceeds the bound " + std::to_string(tau_bound) +
                              " at cell " + std::to_string(j));
    }
    for (const auto& [deg, m] : phi_star) {
      if (m.rows() != m.cols()) throw ValidationError("mapping torus: phi_* in degree " + std::to_string(deg) + " is not square");
      if (m.rows() > 0 && numeric_rank(m, 1e-12) < static_cast<std::size_t>(m.rows()))
        throw ValidationError("mapping torus: phi_* in degree " + std::to_string(deg) + " is not invertible");
    }
  }

  const Matrix& phi(std::size_t i) const {
    if (i == 0) throw ValidationError("mapping torus: degree i must be at least 1");
    auto it = phi_star.find(i - 1);
    if (it == phi_star.end()) throw ValidationError("mapping torus: no phi_* given in degree " + std::to_string(i - 1));
    return it->second;
  }
};

/// T(xi) = tau(xi) I - phi_{i-1}.
inline BundleMap build_torus_operator(const MappingTorusSpec& spec, std::size_t i) {
  spec.validate();
  const Matrix& phi = spec.phi(i);
  const FiberField h = FiberField::constant(spec.base, static_cast<std::size_t>(phi.rows()));
  return BundleMap::generate(h, h, [&](std::size_t j) -> Matrix {
    return spec.tau[j] * Matrix::Identity(phi.rows(), phi.cols()) - phi;
  });
}

struct EigenCluster {
  Complex value;
  std::size_t multiplicity = 0;
};

/// Eigenvalues of phi, merged when closer than tol (1 + |c|).
inline std::vector<EigenCluster> spectrum_clusters(const Matrix& phi, double tol = 1e-8) {
  std::vector<EigenCluster> out;
  for (Complex c : general_eigenvalues(phi)) {
    bool merged = false;
    for (auto& e : out) {
      if (std::abs(e.value - c) <= tol * (1.0 + std::abs(c))) {
        e.value = (e.value * static_cast<double>(e.multiplicity) + c) / static_cast<double>(e.multiplicity + 1);
        ++e.multiplicity;
        merged = true;
        break;
      }
    }
    if (!merged) out.push_back({c, 1});
  }
  return out;
}

/// Largest jump of tau between neighboring cells: a Lipschitz bound times
/// the cell size.
inline double tau_cell_jump(const MappingTorusSpec& spec) {
  const SampleSpace& s = *spec.base;
  double m = 0.0;
  for (std::size_t j = 0; j < s.size(); ++j)
    for (std::size_t a = 0; a < s.dim(); ++a) {
      const std::size_t k = s.neighbor(j, a, 1);
      if (k < s.size()) m = std::max(m, std::abs(spec.tau[j] - spec.tau[k]));
    }
  return m;
}

/// Whether c lies in tau(Z), with the sampled value set dilated by one cell jump.
inline bool meets_tau(const MappingTorusSpec& spec, Complex c, double jump) {
  double best = std::numeric_limits<double>::infinity();
  for (Complex t : spec.tau) best = std::min(best, std::abs(t - c));
  return best <= jump;
}

/// Cells whose tau value sits at a sampled zero of |tau - c| for some eigenvalue c.
inline std::vector<std::size_t> tau_preimage_cells(const MappingTorusSpec& spec, const std::vector<EigenCluster>& spec_phi,
                                                   double c_grid = default_c_grid) {
  std::vector<char> flag(spec.base->size(), 0);
  for (const auto& e : spec_phi) {
    std::vector<double> d(spec.tau.size());
    for (std::size_t j = 0; j < d.size(); ++j) d[j] = std::abs(spec.tau[j] - e.value);
    for (std::size_t j : lipschitz_zero_cells(*spec.base, d, 1e-12 * (1.0 + std::abs(e.value)), c_grid)) flag[j] = 1;
  }
  std::vector<std::size_t> out;
  for (std::size_t j = 0; j < flag.size(); ++j)
    if (flag[j]) out.push_back(j);
  return out;
}

/// H^i(K, M) as the extended object (T: H_{i-1}(Y) ⊗ M -> itself). Rejects
/// configurations where a level set {tau = c} of an eigenvalue c has
/// positive measure beyond the budget (then phi has discrete spectrum on M).
inline ExtObject torus_cohomology(const MappingTorusSpec& spec, std::size_t i, double budget = 0.0) {
  spec.validate();
  const Matrix& phi = spec.phi(i);
  const double total = spec.base->total_measure();
  for (const auto& e : spectrum_clusters(phi)) {
    double fat = 0.0;
    for (std::size_t j = 0; j < spec.tau.size(); ++j)
      if (std::abs(spec.tau[j] - e.value) <= 1e-10 * (1.0 + std::abs(e.value))) fat += spec.base->weight(j);
    if (fat > budget * total)
      throw PreconditionError("mapping torus: the level set {tau = " + std::to_string(e.value.real()) + "+" +
                              std::to_string(e.value.imag()) + "i} has measure " + std::to_string(fat) +
                              "; the cohomology is torsion only when these level sets are null");
  }
  return {build_torus_operator(spec, i)};
}

struct TorusDegreeReport {
  std::size_t degree = 0;
  std::vector<EigenCluster> spectrum;
  std::vector<bool> meets;           // per cluster: c in tau(Z)
  double hom_dim = 0.0;              // vn dimension of the (projective) kernel part
  double ext_proj_dim = 0.0;         // vn dimension of the projective part of the Ext object
  bool ext_is_zero = false;
  bool ext_is_torsion = false;
  std::optional<CapacityEstimate> ext_capacity;
  std::vector<std::size_t> divisor_cells;
  std::vector<std::size_t> preimage_cells;
};

struct TorusPolicy {
  /// tau I - phi is well scaled and its singular values keep relative
  /// accuracy, so the rank cut can sit near roundoff. At 1e-8 a Jordan block
  /// of size 3 reads as singular on a band of |tau - c| < 2e-3.
  double eps_rank = 1e-14;
  double c_grid = default_c_grid;
  double level_budget = 0.0;
  double torsion_budget = 1e-4;  // relative measure of non-surjective cells
  CapacityPolicy capacity;
};

inline TorusDegreeReport torus_sequence_report(const MappingTorusSpec& spec, std::size_t i, const TorusPolicy& pol = {}) {
  const ExtObject ext = torus_cohomology(spec, i, pol.level_budget);
  TorusDegreeReport r;
  r.degree = i;
  r.spectrum = spectrum_clusters(spec.phi(i));
  const double jump = tau_cell_jump(spec);
  for (const auto& e : r.spectrum) r.meets.push_back(meets_tau(spec, e.value, jump));

  const DensityMeasure mu = DensityMeasure::full(spec.base);
  const RankStrata rs = rank_strata(ext.alpha, pol.eps_rank);
  for (std::size_t j = 0; j < rs.generic.size(); ++j)
    r.hom_dim += static_cast<double>(ext.target().dim(j) - rs.generic[j]) * spec.base->weight(j);
  r.ext_proj_dim = vn_dimension(projective_part(ext, pol.eps_rank), mu);
  r.ext_is_torsion = is_torsion(ext, pol.eps_rank, pol.torsion_budget);
  r.ext_is_zero = is_zero(ext, pol.eps_rank, pol.c_grid);

  DetectionPolicy dp;
  dp.eps_rank = pol.eps_rank;
  dp.c_grid = pol.c_grid;
  dp.budget = 1.0;
  r.divisor_cells = divisor_of_map(ext.alpha, dp).flagged_cells;
  r.preimage_cells = tau_preimage_cells(spec, r.spectrum, pol.c_grid);
  if (r.ext_is_torsion && !r.ext_is_zero) {
    try {
      r.ext_capacity = capacity(sdf_from_map(ext, {pol.eps_rank, pol.torsion_budget, true}), pol.capacity);
    } catch (const PreconditionError&) {
      r.ext_capacity.reset();
    }
  }
  return r;
}

}  // namespace l2ext
