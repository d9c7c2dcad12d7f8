#pragma once

/**
 * Oracle-equivalence property suites, shared by the selftest command and
 * the acceptance runner.
 */

#include <string>
#include <vector>

#include "l2ext/excat.hpp"
#include "l2ext/expression.hpp"
#include "l2ext/oracles.hpp"
#include "l2ext/spectral.hpp"

namespace l2ext {

struct SuiteResult {
  std::string name;
  std::size_t instances = 0;
  std::size_t failures = 0;
  double max_error = 0.0;
  double tolerance = 0.0;
  std::string first_failure;
  bool pass() const { return failures == 0; }
};

namespace detail {

inline void note(SuiteResult& r, bool ok, double err, const std::string& what) {
  ++r.instances;
  r.max_error = std::max(r.max_error, err);
  if (!ok) {
    if (r.failures == 0) r.first_failure = what;
    ++r.failures;
  }
}

inline SpacePtr point_space() { return build_grid({{Factor::interval(0, 1)}}, std::size_t{1}); }

inline BundleMap constant_map(const SpacePtr& s, const Matrix& m) {
  const FiberField src = FiberField::constant(s, static_cast<std::size_t>(m.cols()));
  const FiberField tgt = FiberField::constant(s, static_cast<std::size_t>(m.rows()));
  return BundleMap::generate(src, tgt, [&](std::size_t) { return m; });
}

}  // namespace detail

/// Kernel, cokernel and projective-part dimensions on random single-point
/// instances against FullPivLU rank-nullity.
inline SuiteResult suite_point_kernels(std::uint64_t seed, std::size_t count = 200) {
  SuiteResult r{"point-kernel-cokernel"};
  Rng rng(seed);
  const SpacePtr s = detail::point_space();
  for (std::size_t k = 0; k < count; ++k) {
    const oracle::PointInstance p = oracle::random_point_instance(rng);
    const oracle::PointDims want = oracle::point_dims(p);
    const ExtObject x{detail::constant_map(s, p.alpha)}, y{detail::constant_map(s, p.beta)};
    const ExtMorphism m{x, y, detail::constant_map(s, p.f), detail::constant_map(s, p.g)};
    m.validate();
    const KernelResult kr = kernel(m);
    const ExtObject ck = cokernel(m);
    const DensityMeasure mu = DensityMeasure::full(s);
    const auto got_p = kr.object.target().dim(0), got_p1 = kr.object.source().dim(0);
    const auto got_kproj = static_cast<std::size_t>(std::lround(vn_dimension(projective_part(kr.object), mu)));
    const auto got_cproj = static_cast<std::size_t>(std::lround(vn_dimension(projective_part(ck), mu)));
    const auto got_xproj = static_cast<std::size_t>(std::lround(vn_dimension(projective_part(x), mu)));
    const bool ok = got_p == want.kernel_p && got_p1 == want.kernel_p1 && got_kproj == want.kernel_proj &&
                    got_cproj == want.cokernel_proj && got_xproj == want.source_proj;
    const double err = std::abs(double(got_p) - double(want.kernel_p)) + std::abs(double(got_p1) - double(want.kernel_p1)) +
                       std::abs(double(got_kproj) - double(want.kernel_proj)) +
                       std::abs(double(got_cproj) - double(want.cokernel_proj)) +
                       std::abs(double(got_xproj) - double(want.source_proj));
    detail::note(r, ok, err, "instance " + std::to_string(k));
  }
  return r;
}

/// Projective dimensions of the extended cohomology against per-cell Betti
/// numbers from FullPivLU, integrated over the cells.
inline SuiteResult suite_cohomology_dims(std::uint64_t seed, std::size_t count = 100, double tol = 1e-10) {
  SuiteResult r{"cohomology-projective-dim"};
  r.tolerance = tol;
  Rng rng(seed);
  for (std::size_t k = 0; k < count; ++k) {
    const SpacePtr s = build_grid({{Factor::interval(0, 1 + rng.uniform())}}, std::size_t{6 + rng.index(10)});
    const BundleComplex c = oracle::random_complex(rng, s, 2 + rng.index(3));
    const ExtCohomology h = extended_cohomology(c);
    const DensityMeasure mu = DensityMeasure::full(s);
    double err = 0.0;
    for (std::size_t i = 0; i < c.fields.size(); ++i) {
      double want = 0.0;
      for (std::size_t j = 0; j < s->size(); ++j) want += static_cast<double>(oracle::betti(c, j)[i]) * s->weight(j);
      err = std::max({err, std::abs(vn_dimension(projective_part(h.h[i]), mu) - want), std::abs(h.proj_dim[i] - want)});
    }
    detail::note(r, err <= tol, err, "complex " + std::to_string(k));
  }
  return r;
}

/// tr chi_[0,lambda](Delta^i) = h^i + F^i(sqrt lambda) + F^{i+1}(sqrt lambda).
inline SuiteResult suite_laplacian_identity(std::uint64_t seed, std::size_t complexes = 20, std::size_t lambdas = 50,
                                            double tol = 1e-9) {
  SuiteResult r{"laplacian-counting-identity"};
  r.tolerance = tol;
  Rng rng(seed);
  for (std::size_t k = 0; k < complexes; ++k) {
    const SpacePtr s = build_grid({{Factor::circle(1.0)}}, std::size_t{20 + rng.index(20)});
    const BundleComplex c = oracle::random_complex(rng, s, 3 + rng.index(2), 2, 1e-3, 2.0);
    const DensityMeasure mu = DensityMeasure::full(s);
    for (std::size_t l = 0; l < lambdas; ++l) {
      const double lambda = std::pow(10.0, rng.uniform(-6.0, 0.7));
      for (std::size_t i = 0; i < c.fields.size(); ++i) {
        const LaplacianCount lc = laplacian_count_check(c, i, lambda, mu);
        detail::note(r, std::abs(lc.residual) <= tol, std::abs(lc.residual),
                     "complex " + std::to_string(k) + " degree " + std::to_string(i) + " lambda " + std::to_string(lambda));
      }
    }
  }
  return r;
}

namespace detail {

// t (base + t dir): the zero sits at t = 0, never on a cell center for even cell counts
inline ExtObject random_torsion(Rng& rng, const SpacePtr& s, Eigen::Index d) {
  const FiberField e = FiberField::constant(s, static_cast<std::size_t>(d));
  const Matrix base = oracle::with_rank(rng, d, d, d, 0.05, 1.0);
  const Matrix dir = oracle::gaussian(rng, d, d);
  return {BundleMap::generate(e, e, [&](std::size_t j) -> Matrix {
    const double t = s->coordinate(j, 0);
    return base * t + dir * (t * t);
  })};
}

}  // namespace detail

/// F_{X+Y} = F_X + F_Y on a lambda grid, for random torsion objects.
inline SuiteResult suite_sdf_additivity(std::uint64_t seed, std::size_t count = 20, double rel_tol = 1e-12) {
  SuiteResult r{"sdf-additivity"};
  r.tolerance = rel_tol;
  Rng rng(seed);
  for (std::size_t k = 0; k < count; ++k) {
    const SpacePtr s = build_grid({{Factor::interval(-1, 1)}}, std::size_t{200 + 2 * rng.index(100)});
    const ExtObject x = detail::random_torsion(rng, s, 1 + static_cast<Eigen::Index>(rng.index(3)));
    const ExtObject y = detail::random_torsion(rng, s, 1 + static_cast<Eigen::Index>(rng.index(3)));
    const StepFunction fx = sdf_from_map(x), fy = sdf_from_map(y), fs = sdf_from_map(direct_sum(x, y));
    double err = 0.0;
    for (double l : lambda_grid(1e-6, 10.0, 40)) {
      const double want = fx(l) + fy(l);
      err = std::max(err, std::abs(fs(l) - want) / std::max(want, 1e-300));
    }
    detail::note(r, err <= rel_tol, err, "pair " + std::to_string(k));
  }
  return r;
}

/// F_{X*} = F_X for injective torsion objects.
inline SuiteResult suite_dual_sdf(std::uint64_t seed, std::size_t count = 20, double rel_tol = 1e-12) {
  SuiteResult r{"dual-sdf"};
  r.tolerance = rel_tol;
  Rng rng(seed);
  for (std::size_t k = 0; k < count; ++k) {
    const SpacePtr s = build_grid({{Factor::interval(-1, 1)}}, std::size_t{200 + 2 * rng.index(100)});
    const ExtObject x = detail::random_torsion(rng, s, 1 + static_cast<Eigen::Index>(rng.index(4)));
    const StepFunction f = sdf_from_map(x), g = sdf_from_map(dual(x, default_eps_rank, 1e-2));
    double err = 0.0;
    for (double l : lambda_grid(1e-6, 10.0, 40)) {
      const double want = f(l);
      err = std::max(err, std::abs(g(l) - want) / std::max(want, 1e-300));
    }
    detail::note(r, err <= rel_tol, err, "object " + std::to_string(k));
  }
  return r;
}

namespace detail {

inline std::string random_expression(Rng& rng, int depth) {
  static const char* funcs[] = {"abs", "exp", "log", "sqrt", "sin", "cos", "conj", "cis"};
  const std::size_t pick = depth <= 0 ? rng.index(3) : rng.index(9);
  switch (pick) {
    case 0: {
      char buf[32];
      std::snprintf(buf, sizeof buf, "%.6g", rng.uniform(0.0, 10.0));
      return buf;
    }
    case 1: return "x" + std::to_string(1 + rng.index(3));
    case 2: return rng.index(2) ? "pi" : "i";
    case 3: return random_expression(rng, depth - 1) + " + " + random_expression(rng, depth - 1);
    case 4: return random_expression(rng, depth - 1) + " - " + random_expression(rng, depth - 1);
    case 5: return random_expression(rng, depth - 1) + " * " + random_expression(rng, depth - 1);
    case 6: return "(" + random_expression(rng, depth - 1) + ") / " + random_expression(rng, depth - 1);
    case 7: return "-" + random_expression(rng, depth - 1) + "^" + random_expression(rng, 0);
    default:
      if (rng.index(4) == 0)
        return std::string(rng.index(2) ? "min" : "max") + "(" + random_expression(rng, depth - 1) + ", " +
               random_expression(rng, depth - 1) + ")";
      return std::string(funcs[rng.index(8)]) + "(" + random_expression(rng, depth - 1) + ")";
  }
}

}  // namespace detail

/// parse(print(parse(e))) == parse(e) for random expressions.
inline SuiteResult suite_expression_roundtrip(std::uint64_t seed, std::size_t count = 100) {
  SuiteResult r{"expression-roundtrip"};
  Rng rng(seed);
  for (std::size_t k = 0; k < count; ++k) {
    const std::string text = detail::random_expression(rng, 1 + static_cast<int>(rng.index(4)));
    const Expr a = parse_expression(text);
    const Expr b = parse_expression(print_expression(a));
    detail::note(r, *a == *b, *a == *b ? 0.0 : 1.0, text);
  }
  return r;
}

}  // namespace l2ext
