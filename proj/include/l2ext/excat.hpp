#pragma once

/**
 * The extended abelian category over the sampled category of fiber fields.
 *
 * An object is a bundle map alpha: A' -> A, read as "A modulo the image of
 * alpha". Everything here is assembled cell by cell from small dense blocks;
 * global statements (torsion, projective part) are decided on the generic
 * rank stratum, the rank value carrying the most mu-measure.
 */

#include <algorithm>
#include <limits>
#include <map>
#include <string>
#include <tuple>
#include <vector>

#include "l2ext/bundle.hpp"

namespace l2ext {

struct ExtObject {
  BundleMap alpha;

  const FiberField& source() const { return alpha.source(); }  // A'
  const FiberField& target() const { return alpha.target(); }  // A
  const SpacePtr& base() const { return alpha.base(); }

  static ExtObject projective(const FiberField& a) { return {BundleMap::zero(FiberField::constant(a.base(), 0), a)}; }
  static ExtObject zero(const SpacePtr& base) {
    const FiberField z = FiberField::constant(base, 0);
    return {BundleMap::zero(z, z)};
  }
};

inline double default_tol_morphism(double f_norm, double alpha_norm) { return 1e-9 * (1.0 + f_norm * alpha_norm); }

/// [f]: X -> Y with witness g, f∘alpha = beta∘g.
struct ExtMorphism {
  ExtObject from, to;
  BundleMap f;  // A -> B
  BundleMap g;  // A' -> B'

  double residual() const { return max_residual(compose(f, from.alpha), compose(to.alpha, g)); }

  void validate(double tol = -1.0) const {
    if (!(f.source() == from.target()) || !(f.target() == to.target()))
      throw ValidationError("morphism: f does not map A to B");
    if (!(g.source() == from.source()) || !(g.target() == to.source()))
      throw ValidationError("morphism: witness does not map A' to B'");
    if (tol < 0.0) tol = default_tol_morphism(f.sup_norm(), from.alpha.sup_norm());
    const double r = residual();
    if (r > tol)
      throw ValidationError("morphism: |f alpha - beta g| = " + std::to_string(r) + " exceeds " + std::to_string(tol));
  }

  static ExtMorphism identity(const ExtObject& x) {
    return {x, x, BundleMap::identity(x.target()), BundleMap::identity(x.source())};
  }
  static ExtMorphism zero(const ExtObject& x, const ExtObject& y) {
    return {x, y, BundleMap::zero(x.target(), y.target()), BundleMap::zero(x.source(), y.source())};
  }
};

/// Per-cell rank of a map plus the generic value per dimension group.
struct RankStrata {
  std::vector<std::size_t> rank;          // per cell
  std::vector<std::size_t> generic;       // per cell: generic rank of the cell's group
  std::vector<std::size_t> exceptional;   // cells whose rank differs from the generic one
  double exceptional_measure = 0.0;
};

namespace detail {

/// For each group key, the value carrying the most weight (ties: smaller value).
template <class Key>
std::vector<std::size_t> weighted_mode(const std::vector<Key>& keys, const std::vector<std::size_t>& values,
                                       std::span<const double> weights) {
  std::map<Key, std::map<std::size_t, double>> mass;
  for (std::size_t j = 0; j < keys.size(); ++j) mass[keys[j]][values[j]] += weights[j];
  std::map<Key, std::size_t> best;
  for (const auto& [k, m] : mass) {
    double top = -1.0;
    std::size_t v = 0;
    for (const auto& [val, w] : m)
      if (w > top) top = w, v = val;
    best[k] = v;
  }
  std::vector<std::size_t> out(keys.size());
  for (std::size_t j = 0; j < keys.size(); ++j) out[j] = best[keys[j]];
  return out;
}

}  // namespace detail

inline RankStrata rank_strata(const BundleMap& a, double eps_rank = default_eps_rank) {
  const std::size_t n = a.cells();
  RankStrata s;
  s.rank.resize(n);
  parallel::parallel_for(n, [&](std::size_t j) { s.rank[j] = numeric_rank(a.singular_values_at(j), eps_rank); });
  std::vector<std::pair<std::size_t, std::size_t>> keys(n);
  for (std::size_t j = 0; j < n; ++j) keys[j] = {a.source().dim(j), a.target().dim(j)};
  s.generic = detail::weighted_mode(keys, s.rank, a.base()->weights());
  for (std::size_t j = 0; j < n; ++j) {
    if (s.rank[j] != s.generic[j]) {
      s.exceptional.push_back(j);
      s.exceptional_measure += a.base()->weight(j);
    }
  }
  return s;
}

/// sigma_{dim A}(alpha(xi)): the smallest singular value that must be
/// positive for alpha(xi) to be onto. Zero when dim A' < dim A.
inline std::vector<double> cosingular_field(const BundleMap& a) {
  std::vector<double> s(a.cells(), 0.0);
  parallel::parallel_for(a.cells(), [&](std::size_t j) {
    const std::size_t m = a.target().dim(j), n = a.source().dim(j);
    if (m == 0) {
      s[j] = std::numeric_limits<double>::infinity();
      return;
    }
    if (n < m) return;
    const RealVector sv = a.singular_values_at(j);
    s[j] = sv(static_cast<Eigen::Index>(m) - 1);
  });
  return s;
}

/// Smallest singular value of a square field, per cell.
inline std::vector<double> min_singular_field(const BundleMap& a) {
  std::vector<double> s(a.cells(), 0.0);
  parallel::parallel_for(a.cells(), [&](std::size_t j) {
    const RealVector sv = a.singular_values_at(j);
    s[j] = sv.size() ? sv(sv.size() - 1) : std::numeric_limits<double>::infinity();
  });
  return s;
}

/// Cells where a sampled nonnegative field s behaves like the trace of a zero
/// between samples: s_j is below the floor, or along some axis s_j is a local
/// minimum no larger than c_grid times the jump to its neighbors.
inline std::vector<std::size_t> lipschitz_zero_cells(const SampleSpace& space, const std::vector<double>& s,
                                                     double floor, double c_grid) {
  std::vector<char> flag(s.size(), 0);
  parallel::parallel_for(s.size(), [&](std::size_t j) {
    if (!(s[j] > floor)) {
      flag[j] = 1;
      return;
    }
    if (!std::isfinite(s[j])) return;
    for (std::size_t a = 0; a < space.dim(); ++a) {
      const std::size_t lo = space.neighbor(j, a, -1), hi = space.neighbor(j, a, +1);
      double jump = 0.0;
      bool minimum = true;
      bool any = false;
      for (std::size_t k : {lo, hi}) {
        if (k >= s.size() || !std::isfinite(s[k])) continue;
        any = true;
        if (s[k] < s[j]) minimum = false;
        jump = std::max(jump, s[k] - s[j]);
      }
      if (any && minimum && s[j] <= c_grid * jump) {
        flag[j] = 1;
        return;
      }
    }
  });
  std::vector<std::size_t> out;
  for (std::size_t j = 0; j < flag.size(); ++j)
    if (flag[j]) out.push_back(j);
  return out;
}

inline constexpr double default_c_grid = 4.0;

/// Zero object: alpha onto at every cell with a uniform lower bound on the
/// co-singular values, and no cell where that bound is only an artifact of
/// sampling next to a zero.
inline bool is_zero(const ExtObject& x, double eps_rank = default_eps_rank, double c_grid = default_c_grid) {
  const std::vector<double> s = cosingular_field(x.alpha);
  const double floor = rank_threshold(x.alpha.sup_norm(), eps_rank);
  for (double v : s)
    if (!(v > floor)) return false;
  return lipschitz_zero_cells(*x.base(), s, floor, c_grid).empty();
}

/// Measure of cells where alpha is not onto.
inline double non_surjective_measure(const ExtObject& x, double eps_rank = default_eps_rank) {
  const RankStrata s = rank_strata(x.alpha, eps_rank);
  double m = 0.0;
  for (std::size_t j = 0; j < s.rank.size(); ++j)
    if (s.rank[j] < x.target().dim(j)) m += x.base()->weight(j);
  return m;
}

/// Dense image up to an exceptional set of relative measure <= budget.
inline bool is_torsion(const ExtObject& x, double eps_rank = default_eps_rank, double budget = 0.0) {
  return non_surjective_measure(x, eps_rank) <= budget * x.base()->total_measure();
}

struct KernelResult {
  ExtObject object;        // (gamma: P' -> P)
  ExtMorphism inclusion;   // [k]: kernel -> X
  /// (dim P', dim P) -> mu-measure; more than one entry means the kernel
  /// dimension is not constant over Z.
  std::map<std::pair<std::size_t, std::size_t>, double> strata;
};

/// Kernel by the pullback formulas:
///   P  = ker([f, -beta]: A ⊕ B' -> B)
///   P' = ker([f alpha, -beta]: A' ⊕ B' -> B)
///   gamma = N_P^* diag(alpha, 1) N_P'
inline KernelResult kernel(const ExtMorphism& m, double eps_rank = default_eps_rank) {
  m.validate();
  const BundleMap& alpha = m.from.alpha;
  const BundleMap& beta = m.to.alpha;
  const std::size_t n = alpha.cells();
  std::vector<Matrix> np(n), npp(n);
  parallel::parallel_for(n, [&](std::size_t j) {
    const Matrix f = m.f.matrix(j), b = beta.matrix(j), a = alpha.matrix(j);
    Matrix s1(f.rows(), f.cols() + b.cols());
    s1 << f, -b;
    Matrix s2(f.rows(), a.cols() + b.cols());
    s2 << f * a, -b;
    np[j] = kernel_frame(s1, eps_rank);
    npp[j] = kernel_frame(s2, eps_rank);
  });
  std::vector<std::size_t> dp(n), dpp(n);
  for (std::size_t j = 0; j < n; ++j) dp[j] = np[j].cols(), dpp[j] = npp[j].cols();
  const FiberField P(alpha.base(), dp), Pp(alpha.base(), dpp);
  BundleMap gamma = BundleMap::generate(Pp, P, [&](std::size_t j) -> Matrix {
    const Eigen::Index ap = alpha.source().dim(j), a = alpha.target().dim(j), bp = beta.source().dim(j);
    Matrix lift = Matrix::Zero(a + bp, ap + bp);
    lift.topLeftCorner(a, ap) = alpha.block(j);
    lift.bottomRightCorner(bp, bp).setIdentity();
    return np[j].adjoint() * lift * npp[j];
  });
  BundleMap k = BundleMap::generate(P, alpha.target(), [&](std::size_t j) -> Matrix {
    return np[j].topRows(alpha.target().dim(j));
  });
  BundleMap kp = BundleMap::generate(Pp, alpha.source(), [&](std::size_t j) -> Matrix {
    return npp[j].topRows(alpha.source().dim(j));
  });
  KernelResult out{ExtObject{gamma}, ExtMorphism{ExtObject{gamma}, m.from, k, kp}, {}};
  for (std::size_t j = 0; j < n; ++j) out.strata[{dpp[j], dp[j]}] += alpha.base()->weight(j);
  return out;
}

/// ((beta, -f): B' ⊕ A -> B).
inline ExtObject cokernel(const ExtMorphism& m) {
  m.validate();
  return {hstack(m.to.alpha, scale(m.f, -1.0))};
}

/// Per-cell orthonormal column frames of a subspace field.
using SubspaceField = std::vector<Matrix>;

/// (beta: P^⊥ -> Q^⊥), Q = alpha(P), beta the compression of alpha.
inline ExtObject excise(const ExtObject& x, const SubspaceField& p, double eps_rank = default_eps_rank) {
  const BundleMap& alpha = x.alpha;
  const std::size_t n = alpha.cells();
  if (p.size() != n) throw ValidationError("excise: subspace field has wrong number of cells");
  std::vector<Matrix> pperp(n), qperp(n);
  for (std::size_t j = 0; j < n; ++j) {
    const auto d = static_cast<Eigen::Index>(alpha.source().dim(j));
    if (p[j].rows() != d)
      throw ValidationError("excise: subspace at cell " + std::to_string(j) + " is not contained in A'");
    if (p[j].cols() > 0 &&
        (p[j].adjoint() * p[j] - Matrix::Identity(p[j].cols(), p[j].cols())).norm() > 1e-8)
      throw ValidationError("excise: subspace frame at cell " + std::to_string(j) + " is not orthonormal");
  }
  parallel::parallel_for(n, [&](std::size_t j) {
    const auto d = static_cast<Eigen::Index>(alpha.source().dim(j));
    const auto t = static_cast<Eigen::Index>(alpha.target().dim(j));
    pperp[j] = complement_frame(p[j], d);
    const Matrix img = alpha.matrix(j) * p[j];
    qperp[j] = img.cols() ? corange_frame(img, eps_rank) : Matrix(Matrix::Identity(t, t));
  });
  std::vector<std::size_t> ds(n), dt(n);
  for (std::size_t j = 0; j < n; ++j) ds[j] = pperp[j].cols(), dt[j] = qperp[j].cols();
  return {BundleMap::generate(FiberField(alpha.base(), ds), FiberField(alpha.base(), dt), [&](std::size_t j) -> Matrix {
    return qperp[j].adjoint() * alpha.block(j) * pperp[j];
  })};
}

/// Injective representative: excision of the fiberwise kernel of alpha.
inline ExtObject excise_kernel(const ExtObject& x, double eps_rank = default_eps_rank) {
  if (x.alpha.is_scalar()) {
    // Scalar fields: kernel cells are those where the value is numerically 0.
    bool injective = true;
    for (std::size_t j = 0; j < x.alpha.cells() && injective; ++j)
      injective = numeric_rank(x.alpha.singular_values_at(j), eps_rank) == 1;
    if (injective) return x;
  }
  SubspaceField p(x.alpha.cells());
  parallel::parallel_for(p.size(), [&](std::size_t j) { p[j] = kernel_frame(x.alpha.matrix(j), eps_rank); });
  return excise(x, p, eps_rank);
}

/// dim A(xi) - generic rank, so that measure-zero rank drops are ignored.
inline FiberField projective_part(const ExtObject& x, double eps_rank = default_eps_rank) {
  const RankStrata s = rank_strata(x.alpha, eps_rank);
  std::vector<std::size_t> d(s.rank.size());
  for (std::size_t j = 0; j < d.size(); ++j) d[j] = x.target().dim(j) - std::min(s.generic[j], x.target().dim(j));
  return FiberField(x.base(), std::move(d));
}

/// alpha corestricted to the span of its leading generic-rank left singular vectors.
inline ExtObject torsion_part(const ExtObject& x, double eps_rank = default_eps_rank) {
  const RankStrata s = rank_strata(x.alpha, eps_rank);
  const std::size_t n = x.alpha.cells();
  std::vector<Matrix> u(n);
  parallel::parallel_for(n, [&](std::size_t j) {
    const Matrix a = x.alpha.matrix(j);
    const auto r = static_cast<Eigen::Index>(s.generic[j]);
    if (r == 0 || a.size() == 0) {
      u[j] = Matrix(a.rows(), 0);
      return;
    }
    const SVD d = svd(Matrix(a.adjoint()));  // a = d.v * S * d.u^*
    u[j] = d.v.leftCols(r);
  });
  std::vector<std::size_t> dt(n);
  for (std::size_t j = 0; j < n; ++j) dt[j] = u[j].cols();
  return {BundleMap::generate(x.source(), FiberField(x.base(), dt),
                              [&](std::size_t j) -> Matrix { return u[j].adjoint() * x.alpha.block(j); })};
}

inline ExtObject direct_sum(const ExtObject& x, const ExtObject& y) {
  if (x.base().get() != y.base().get()) throw ValidationError("direct_sum: objects over different bases");
  return {direct_sum(x.alpha, y.alpha)};
}

/// e(X) = (alpha^*: A -> A'); needs an injective torsion representative.
inline ExtObject dual(const ExtObject& x, double eps_rank = default_eps_rank, double budget = 0.0) {
  if (!is_torsion(x, eps_rank, budget)) throw PreconditionError("dual: object is not torsion");
  const RankStrata s = rank_strata(x.alpha, eps_rank);
  for (std::size_t j = 0; j < s.generic.size(); ++j)
    if (s.generic[j] != x.source().dim(j))
      throw PreconditionError("dual: representative is not injective; excise its kernel first");
  return {adjoint_map(x.alpha)};
}

struct ExtCohomology {
  std::vector<ExtObject> h;                   // H^i = (d^{i-1}: E^{i-1} -> Z^i)
  std::vector<double> proj_dim;               // ∫ generic β^i dmu
  std::vector<std::vector<std::size_t>> betti;  // per degree, per cell, fiberwise
  std::vector<std::vector<std::size_t>> generic_betti;  // per degree, per cell
};

/// Generic Betti numbers per degree: the weighted mode over cells grouped by
/// the fiber dimensions of the whole complex.
inline std::vector<std::vector<std::size_t>> generic_betti_numbers(const BundleComplex& c,
                                                                   const std::vector<std::vector<std::size_t>>& betti) {
  const std::size_t n = c.base()->size();
  std::vector<std::vector<std::size_t>> keys(n);
  for (std::size_t j = 0; j < n; ++j)
    for (const auto& f : c.fields) keys[j].push_back(f.dim(j));
  std::vector<std::vector<std::size_t>> out;
  for (const auto& b : betti) out.push_back(detail::weighted_mode(keys, b, c.base()->weights()));
  return out;
}

inline ExtCohomology extended_cohomology(const BundleComplex& c, double eps_rank = default_eps_rank,
                                         double tol_complex = default_tol_complex) {
  require_complex(c, tol_complex);
  const std::size_t n = c.base()->size();
  const std::size_t deg = c.fields.size();
  ExtCohomology out;
  out.betti.assign(deg, std::vector<std::size_t>(n));
  std::vector<std::vector<std::size_t>> ranks(n);
  parallel::parallel_for(n, [&](std::size_t j) { ranks[j] = fiber_ranks(c, j, eps_rank); });
  for (std::size_t j = 0; j < n; ++j) {
    for (std::size_t i = 0; i < deg; ++i) {
      const std::size_t out_r = i < c.maps.size() ? ranks[j][i] : 0;
      const std::size_t in_r = i > 0 ? ranks[j][i - 1] : 0;
      const std::size_t dim = c.fields[i].dim(j);
      if (out_r + in_r > dim) throw ValidationError("extended_cohomology: ranks exceed fiber dimension");
      out.betti[i][j] = dim - out_r - in_r;
    }
  }
  out.generic_betti = generic_betti_numbers(c, out.betti);

  for (std::size_t i = 0; i < deg; ++i) {
    // Generic kernel dimension of d^i per dimension group.
    std::vector<std::size_t> rk(n, 0);
    if (i < c.maps.size())
      for (std::size_t j = 0; j < n; ++j) rk[j] = ranks[j][i];
    std::vector<std::vector<std::size_t>> keys(n);
    for (std::size_t j = 0; j < n; ++j)
      for (const auto& f : c.fields) keys[j].push_back(f.dim(j));
    const auto generic_rk = detail::weighted_mode(keys, rk, c.base()->weights());

    std::vector<Matrix> z(n);
    parallel::parallel_for(n, [&](std::size_t j) {
      const auto d = static_cast<Eigen::Index>(c.fields[i].dim(j));
      const Eigen::Index kd = d - static_cast<Eigen::Index>(std::min<std::size_t>(generic_rk[j], d));
      if (i >= c.maps.size() || generic_rk[j] == 0) {
        z[j] = Matrix::Identity(d, d);
        return;
      }
      const Matrix a = c.maps[i].matrix(j);
      z[j] = svd(a).v.rightCols(kd);
    });
    std::vector<std::size_t> dz(n);
    for (std::size_t j = 0; j < n; ++j) dz[j] = z[j].cols();
    const FiberField Z(c.base(), dz);
    const FiberField src = i > 0 ? c.fields[i - 1] : FiberField::constant(c.base(), 0);
    BundleMap a = BundleMap::generate(src, Z, [&](std::size_t j) -> Matrix {
      if (i == 0) return Matrix(z[j].cols(), 0);
      return z[j].adjoint() * c.maps[i - 1].block(j);
    });
    out.h.push_back({a});
    double pd = 0.0;
    for (std::size_t j = 0; j < n; ++j) pd += static_cast<double>(out.generic_betti[i][j]) * c.base()->weight(j);
    out.proj_dim.push_back(pd);
  }
  return out;
}

}  // namespace l2ext
