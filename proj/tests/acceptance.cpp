// Acceptance runner: one PASS/FAIL line per criterion, nonzero exit on any failure.

#include <array>
#include <chrono>
#include <cstdarg>
#include <cstdio>
#include <functional>
#include <limits>
#include <numbers>
#include <string>
#include <tuple>
#include <vector>

#include "l2ext/l2ext.hpp"
#include "l2ext/oracles.hpp"
#include "l2ext/selftest.hpp"

using namespace l2ext;
using namespace l2ext::families;

namespace {

constexpr double pi = std::numbers::pi;

struct Outcome {
  bool pass = true;
  std::string detail;

  void check(bool ok, const char* fmt, ...) __attribute__((format(printf, 3, 4))) {
    char buf[512];
    va_list ap;
    va_start(ap, fmt);
    std::vsnprintf(buf, sizeof buf, fmt, ap);
    va_end(ap);
    if (!detail.empty()) detail += "; ";
    detail += buf;
    if (!ok) {
      detail += " [x]";
      pass = false;
    }
  }
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

CapacityPolicy window(double lo, double hi, double log_power = 0.0) {
  CapacityPolicy p;
  p.lo = lo;
  p.hi = hi;
  p.log_power = log_power;
  return p;
}

bool within(double got, double want, double rel) { return std::isfinite(got) && std::abs(got - want) <= rel * want; }

// ---------------------------------------------------------------------------

Outcome circle_family() {
  Outcome o;
  for (double nu : {0.5, 1.0, 2.0}) {
    const auto t0 = std::chrono::steady_clock::now();
    const ExtObject x = circle_power(200000, nu);
    const CapacityPolicy p = nu < 1.0 ? window(3e-2, 3e-1) : CapacityPolicy{};
    const CapacityEstimate c = capacity(sdf_from_map(x), p);
    const double s = seconds_since(t0);
    o.check(within(c.capacity, nu, 0.1) && s <= 10.0, "nu=%g cap %.4f (%.2fs)", nu, c.capacity, s);
  }
  return o;
}

Outcome cross_family() {
  Outcome o;
  const ExtObject x = torus_cross(2000);
  const StepFunction f = sdf_from_map(x);
  CapacityPolicy p = window(1e-4, 1e-2, 1.0);
  p.log_scale = x.alpha.sup_norm();
  const CapacityEstimate c = capacity(f, p);
  o.check(c.capacity >= 0.9 && c.capacity <= 1.1, "cap %.4f", c.capacity);
  const DilatationReport d = dilatation_compare(f, [](double l) { return l; }, 1e-4, 1e-2);
  o.check(d.verdict == Dilatation::inequivalent, "F vs lambda %s", to_string(d.verdict));
  std::vector<double> xs, ys;
  for (double l : lambda_grid(1e-4, 1e-2, 200)) xs.push_back(1.0 - std::log(l)), ys.push_back(f(l) / l);
  const LinearFit fit = least_squares(xs, ys);
  o.check(fit.r_squared >= 0.99, "F/lambda ~ (1 - log lambda) R2 %.5f", fit.r_squared);
  return o;
}

Outcome tangency_family() {
  Outcome o;
  for (int k : {1, 2, 3}) {
    const auto t0 = std::chrono::steady_clock::now();
    const ExtObject x = tangency(2000, k);
    CapacityPolicy p = k == 1 ? window(1e-3, 3e-2, 1.0) : CapacityPolicy{};
    if (p.log_power != 0.0) p.log_scale = x.alpha.sup_norm();
    const CapacityEstimate c = capacity(sdf_from_map(x), p);
    const double s = seconds_since(t0);
    const double want = 2.0 * k / (k + 1.0);
    o.check(within(c.capacity, want, 0.1) && s <= 60.0, "k=%d cap %.4f want %.4f (%.2fs)", k, c.capacity, want, s);
  }
  return o;
}

Outcome radial_family() {
  Outcome o;
  for (auto [n, m, res] : {std::tuple{2, 1, 2000}, std::tuple{3, 1, 160}, std::tuple{2, 2, 2000}}) {
    const ExtObject x = torus_radial(static_cast<std::size_t>(n), static_cast<std::size_t>(res), m);
    const StepFunction f = sdf_from_map(x);
    const CapacityPolicy p;
    const CapacityEstimate c = capacity(f, p);
    const double want = 2.0 * m / n, power = n / (2.0 * m);
    const DilatationReport d = dilatation_compare(f, [&](double l) { return std::pow(l, power); }, p.lo, p.hi);
    o.check(within(c.capacity, want, 0.1) && d.verdict == Dilatation::equivalent, "n=%d m=%d cap %.4f want %.4f, %s C=%g",
            n, m, c.capacity, want, to_string(d.verdict), d.constant);
  }
  return o;
}

Outcome transversal_family() {
  Outcome o;
  for (int m : {1, 2, 3}) {
    const ExtObject x = transversal_power(200000, m);
    const StepFunction f = sdf_from_map(x);
    const CapacityPolicy p;
    const CapacityEstimate c = capacity(f, p);
    const DilatationReport d = dilatation_compare(f, [&](double l) { return std::pow(l, 1.0 / m); }, p.lo, p.hi);
    o.check(within(c.capacity, m, 0.1) && d.verdict == Dilatation::equivalent, "m=%d cap %.4f, %s C=%g", m, c.capacity,
            to_string(d.verdict), d.constant);
  }
  return o;
}

// ---------------------------------------------------------------------------

using Points = std::vector<std::vector<double>>;

Points curve(double a, double b, double step, const std::function<std::vector<double>(double)>& c) {
  Points out;
  const auto n = static_cast<std::size_t>(std::ceil((b - a) / step));
  for (std::size_t k = 0; k <= n; ++k) out.push_back(c(a + (b - a) * static_cast<double>(k) / static_cast<double>(n)));
  return out;
}

Points join(Points a, const Points& b) {
  a.insert(a.end(), b.begin(), b.end());
  return a;
}

Outcome divisors() {
  Outcome o;
  struct Case {
    std::string name;
    ExtObject x;
    Points zeros;
  };
  std::vector<Case> cases;
  cases.push_back({"sin on circle", transversal_power(20000, 1), {{0.0}, {pi}}});
  cases.push_back({"xy on torus", torus_cross(400),
                   join(curve(-0.5, 0.5, 1e-4, [](double u) { return std::vector<double>{u, 0.0}; }),
                        curve(-0.5, 0.5, 1e-4, [](double u) { return std::vector<double>{0.0, u}; }))});
  cases.push_back({"y(y-x^2) on square", tangency(400, 2),
                   join(curve(-1, 1, 1e-4, [](double u) { return std::vector<double>{u, 0.0}; }),
                        curve(-1, 1, 1e-4, [](double u) { return std::vector<double>{u, u * u}; }))});
  cases.push_back({"x^2+y^2 on torus", torus_radial(2, 400, 1), {{0.0, 0.0}}});
  {
    Rng rng(606);
    const Matrix u = oracle::unitary(rng, 2), v = oracle::unitary(rng, 2);
    const SpacePtr s = build_grid({{Factor::interval(-1, 1), Factor::interval(-1, 1)}}, std::size_t{400});
    const FiberField e = FiberField::constant(s, 2);
    const BundleMap t = BundleMap::generate(e, e, [&](std::size_t j) -> Matrix {
      Matrix d = Matrix::Zero(2, 2);
      d(0, 0) = s->coordinate(j, 0) - 0.3;
      d(1, 1) = s->coordinate(j, 1) + 0.2;
      return u * d * v;
    });
    cases.push_back({"2x2 rotated diag", {t},
                     join(curve(-1, 1, 1e-4, [](double w) { return std::vector<double>{0.3, w}; }),
                          curve(-1, 1, 1e-4, [](double w) { return std::vector<double>{w, -0.2}; }))});
  }
  bool equivalence = true;
  for (const Case& c : cases) {
    const DivisorReport r = divisor_of_map(c.x.alpha);
    const SampleSpace& s = *c.x.base();
    const double h = hausdorff_distance(s, r.flagged_cells, c.zeros) / s.cell_diameter();
    o.check(h <= 2.0, "%s: %zu cells, Hausdorff %.2f cells", c.name.c_str(), r.flagged_cells.size(), h);
    equivalence = equivalence && r.flagged_cells.empty() == is_zero(c.x);
  }
  // invertible maps: empty divisor and zero object
  std::vector<ExtObject> inv;
  {
    const SpacePtr s = unit_circle(5000);
    inv.push_back(scalar_object(s, [](std::span<const double> p) -> Complex { return 2.0 + std::cos(p[0]); }));
    inv.push_back(scalar_object(s, [](std::span<const double> p) -> Complex { return std::polar(1.0, p[0]); }));
    const SpacePtr q = build_grid({{Factor::interval(-1, 1), Factor::interval(-1, 1)}}, std::size_t{200});
    const FiberField e = FiberField::constant(q, 2);
    inv.push_back({BundleMap::generate(e, e, [&](std::size_t j) -> Matrix {
      Matrix m(2, 2);
      m << 2.0, q->coordinate(j, 0), 0.0, 1.0 + 0.5 * q->coordinate(j, 1);
      return m;
    })});
    inv.push_back({scale(BundleMap::identity(e), Complex(0, 3))});
  }
  std::size_t ok = 0;
  for (const ExtObject& x : inv) {
    const bool empty = divisor_of_map(x.alpha).flagged_cells.empty();
    ok += empty && is_zero(x);
    equivalence = equivalence && empty == is_zero(x);
  }
  o.check(ok == inv.size() && equivalence, "invertible maps empty and zero: %zu/%zu; empty <=> is_zero across all %zu",
          ok, inv.size(), inv.size() + cases.size());
  return o;
}

// ---------------------------------------------------------------------------

Outcome category_oracles() {
  Outcome o;
  const SuiteResult a = suite_point_kernels(20240601, 200);
  o.check(a.pass() && a.instances == 200, "%zu point instances, %zu mismatches", a.instances, a.failures);
  const SuiteResult b = suite_cohomology_dims(20240602, 100, 1e-10);
  o.check(b.pass() && b.instances == 100, "%zu complexes, max |proj dim - Betti integral| %.2e", b.instances, b.max_error);
  return o;
}

Outcome spectral_identities() {
  Outcome o;
  const SuiteResult a = suite_laplacian_identity(20240603, 20, 50, 1e-9);
  o.check(a.pass(), "Laplacian counting: %zu checks, max residual %.2e", a.instances, a.max_error);
  const SuiteResult b = suite_sdf_additivity(20240604, 20, 1e-12);
  o.check(b.pass(), "additivity: %zu pairs, max rel error %.2e", b.instances, b.max_error);
  const SuiteResult c = suite_dual_sdf(20240605, 20, 1e-12);
  o.check(c.pass(), "dual: %zu objects, max rel error %.2e", c.instances, c.max_error);
  return o;
}

// Fit window at the smallest lambda where F covers 64 cells, two decades wide.
CapacityEstimate auto_capacity(const ExtObject& x) {
  const StepFunction f = sdf_from_map(x);
  double w = std::numeric_limits<double>::infinity();
  for (double v : x.base()->weights()) w = std::min(w, v);
  CapacityPolicy p;
  std::tie(p.lo, p.hi) = resolved_window(f, 64.0 * w);
  return capacity(f, p);
}

Outcome capacity_of_sums() {
  Outcome o;
  const SpacePtr s = unit_circle(200000);
  Rng rng(909);
  auto draw = [&](std::string& label) -> ExtObject {
    const std::size_t k = rng.index(7);
    char buf[64];
    if (k < 4) {
      const double nu = std::array{1.0, 1.5, 2.0, 3.0}[k], theta = rng.uniform(0.0, 2 * pi);
      std::snprintf(buf, sizeof buf, "|z-w|^%g", nu);
      label = buf;
      return circle_power(s, nu, theta);
    }
    const int m = static_cast<int>(k) - 3;
    std::snprintf(buf, sizeof buf, "sin^%d", m);
    label = buf;
    return transversal_power(s, m, rng.uniform(0.0, pi));
  };
  std::size_t good = 0;
  double worst = 0.0;
  std::string first_bad;
  for (int k = 0; k < 20; ++k) {
    std::string lx, ly;
    const ExtObject x = draw(lx), y = draw(ly);
    const CapacityEstimate cx = auto_capacity(x), cy = auto_capacity(y), cs = auto_capacity(direct_sum(x, y));
    const CapacityEstimate& top = cx.capacity >= cy.capacity ? cx : cy;
    const double se = std::hypot(cs.capacity_stderr, top.capacity_stderr);
    const double err = std::abs(cs.capacity - top.capacity);
    worst = std::max(worst, err / se);
    if (err <= se) ++good;
    else if (first_bad.empty()) {
      char buf[160];
      std::snprintf(buf, sizeof buf, "%s + %s: %.4f vs max %.4f, stderr %.2e", lx.c_str(), ly.c_str(), cs.capacity,
                    top.capacity, se);
      first_bad = buf;
    }
  }
  o.check(good == 20, "c(X+Y) = max: %d/20 pairs within combined stderr (worst %.2f stderr)%s%s", int(good), worst,
          first_bad.empty() ? "" : ", first miss ", first_bad.c_str());
  std::size_t same = 0;
  for (double nu : {1.0, 2.0, 3.0}) {
    const ExtObject x = circle_power(s, nu, 0.7);
    const CapacityEstimate a = auto_capacity(x), b = auto_capacity(direct_sum(x, x));
    same += std::abs(a.capacity - b.capacity) <= std::hypot(a.capacity_stderr, b.capacity_stderr);
  }
  o.check(same == 3, "c(X+X) = c(X): %zu/3", same);
  return o;
}

// ---------------------------------------------------------------------------

Outcome germ_heights() {
  Outcome o;
  const std::vector<std::vector<int>> planted = {{1}, {2}, {3}, {4}, {1, 2}, {2, 4, 1}, {3, 1}, {4, 4}, {0, 2}};
  for (const auto& orders : planted) {
    const GermReport g = germ_height(planted_orders(20000, orders, 0.1), 1, 0.1, 0.4);
    const int want = *std::max_element(orders.begin(), orders.end());
    std::string label;
    for (int k : orders) label += (label.empty() ? "" : ",") + std::to_string(k);
    o.check(g.height == want && std::abs(g.local_capacity.capacity - g.height) <= 0.1, "{%s}: height %d cap %.4f",
            label.c_str(), g.height, g.local_capacity.capacity);
  }
  return o;
}

// ---------------------------------------------------------------------------

// sorted singular values of tau I - phi at every cell, by dense JacobiSVD
StepFunction torus_sdf_oracle(const MappingTorusSpec& t, const Matrix& phi) {
  std::vector<std::pair<double, double>> jumps;
  const auto n = phi.rows();
  for (std::size_t j = 0; j < t.tau.size(); ++j) {
    const RealVector sv = oracle::singular_values(t.tau[j] * Matrix::Identity(n, n) - phi);
    for (Eigen::Index k = 0; k < sv.size(); ++k)
      if (sv(k) > 0.0) jumps.emplace_back(sv(k), t.base->weight(j));
  }
  return StepFunction::from_jumps(jumps);
}

Matrix diag(std::initializer_list<Complex> v) {
  Matrix m = Matrix::Zero(static_cast<Eigen::Index>(v.size()), static_cast<Eigen::Index>(v.size()));
  Eigen::Index k = 0;
  for (Complex c : v) m(k, k) = c, ++k;
  return m;
}

Outcome mapping_torus() {
  Outcome o;
  struct Tau {
    const char* name;
    std::function<Complex(double)> f;
  };
  const std::vector<Tau> taus = {
      {"e^{ix}", [](double x) { return std::polar(1.0, x); }},
      {"2e^{ix}", [](double x) { return std::polar(2.0, x); }},
      {"(1.5+0.5cos x)e^{ix}", [](double x) { return std::polar(1.5 + 0.5 * std::cos(x), x); }},
  };
  struct Phi {
    const char* name;
    Matrix m;
  };
  const std::vector<Phi> phis = {{"1", diag({1.0})},
                                 {"2", diag({2.0})},
                                 {"J2(e^i)", jordan(2, std::polar(1.0, 1.0))},
                                 {"diag(-1,3)", diag({-1.0, 3.0})}};
  // tau-preimage of spec(phi), worked out by hand: [phi][tau]
  const std::vector<std::vector<Points>> preimage = {
      {{{0.0}}, {}, {}},
      {{}, {{0.0}}, {{0.0}}},
      {{{1.0}}, {}, {}},
      {{{pi}}, {}, {{pi}}},
  };
  std::size_t agree = 0, located = 0, nonvanishing = 0;
  std::string first_bad;
  for (std::size_t a = 0; a < phis.size(); ++a)
    for (std::size_t b = 0; b < taus.size(); ++b) {
      MappingTorusSpec t = circle_torus(20000, phis[a].m);
      for (std::size_t j = 0; j < t.tau.size(); ++j) t.tau[j] = taus[b].f(t.base->coordinate(j, 0));
      const TorusDegreeReport r = torus_sequence_report(t, 1);
      const Points& want = preimage[a][b];
      const bool vanish = want.empty();
      const bool ok = r.ext_is_zero == vanish;
      agree += ok;
      if (!ok && first_bad.empty()) first_bad = std::string(phis[a].name) + " with " + taus[b].name;
      if (!vanish) {
        ++nonvanishing;
        const double cd = t.base->cell_diameter();
        const double hd = hausdorff_distance(*t.base, r.divisor_cells, want) / cd;
        const double hp = hausdorff_distance(*t.base, r.preimage_cells, want) / cd;
        located += hd <= 2.0 && hp <= 2.0;
      }
    }
  o.check(agree == 12, "vanishing <=> spec cap tau(Z) empty: %zu/12%s%s", agree, first_bad.empty() ? "" : ", first miss ",
          first_bad.c_str());
  o.check(located == nonvanishing, "divisor and preimage within 2 cells: %zu/%zu", located, nonvanishing);
  for (std::size_t m : {1u, 2u, 3u}) {
    const Matrix phi = jordan(m, std::polar(1.0, 1.0));
    const MappingTorusSpec t = circle_torus(200000, phi);
    const CapacityEstimate oc = capacity(torus_sdf_oracle(t, phi));
    const TorusDegreeReport r = torus_sequence_report(t, 1);
    const double got = r.ext_capacity ? r.ext_capacity->capacity : NAN;
    o.check(within(oc.capacity, double(m), 0.1) && within(got, double(m), 0.1), "Jordan %zu: oracle %.4f engine %.4f", m,
            oc.capacity, got);
  }
  return o;
}

// ---------------------------------------------------------------------------

// E^i = B_i + H_i + C_i; d^i = U_{i+1}(x) [f_i(x) M_i from C_i onto B_{i+1}] U_i(x)^*, with
// U_i(x) = exp(i s(x) K_i) for fixed Hermitian K_i and f_i(x) = x1 - a_i.
BundleComplex split_analytic_complex(Rng& rng, const SpacePtr& s, std::vector<std::size_t>& h) {
  const std::size_t len = 3 + rng.index(2);
  h.assign(len, 0);
  std::vector<std::size_t> c(len, 0), e(len);
  for (std::size_t i = 0; i < len; ++i) {
    h[i] = rng.index(3);
    if (i + 1 < len) c[i] = 1 + rng.index(2);
  }
  for (std::size_t i = 0; i < len; ++i) e[i] = (i ? c[i - 1] : 0) + h[i] + c[i];
  std::vector<Eigen::SelfAdjointEigenSolver<Matrix>> k;
  for (std::size_t i = 0; i < len; ++i) {
    const Matrix g = oracle::gaussian(rng, static_cast<Eigen::Index>(e[i]), static_cast<Eigen::Index>(e[i]));
    k.emplace_back(Matrix(g + g.adjoint()));
  }
  auto u = [&](std::size_t i, double x) -> Matrix {
    if (e[i] == 0) return Matrix(0, 0);
    const Vector ph = (Complex(0, x) * k[i].eigenvalues().cast<Complex>()).array().exp();
    return k[i].eigenvectors() * ph.asDiagonal() * k[i].eigenvectors().adjoint();
  };
  BundleComplex cx;
  for (std::size_t d : e) cx.fields.push_back(FiberField::constant(s, d));
  for (std::size_t i = 0; i + 1 < len; ++i) {
    const auto ci = static_cast<Eigen::Index>(c[i]);
    const Matrix core = oracle::with_rank(rng, ci, ci, ci, 0.5, 2.0);
    const double a = rng.uniform(-0.5, 0.5);
    const auto off = static_cast<Eigen::Index>((i ? c[i - 1] : 0) + h[i]);
    cx.maps.push_back(BundleMap::generate(cx.fields[i], cx.fields[i + 1], [&](std::size_t j) -> Matrix {
      const auto p = s->point(j);
      double sum = 0.0;
      for (double v : p) sum += std::sin(v);
      Matrix inner = Matrix::Zero(static_cast<Eigen::Index>(e[i + 1]), static_cast<Eigen::Index>(e[i]));
      inner.block(0, off, ci, ci) = (p[0] - a) * core;
      return u(i + 1, sum) * inner * u(i, sum).adjoint();
    }));
  }
  return cx;
}

Outcome dimension_formula() {
  Outcome o;
  Rng rng(1212);
  std::vector<SpacePtr> spaces = {
      build_grid({{Factor::interval(-1, 1)}}, std::size_t{500}),
      build_grid({{Factor::circle(2 * pi)}}, std::size_t{400}),
      build_grid({{Factor::interval(-1, 1), Factor::torus()}}, {60, 40}),
      build_grid({{Factor::interval(-1, 1)}}, {300}, [](std::span<const double> p) { return 1.0 + p[0] * p[0]; }),
  };
  double worst = 0.0;
  std::size_t count = 0;
  for (int rep = 0; rep < 3; ++rep)
    for (const SpacePtr& s : spaces) {
      std::vector<std::size_t> h;
      const BundleComplex c = split_analytic_complex(rng, s, h);
      const ExtCohomology co = extended_cohomology(c);
      const DensityMeasure mu = DensityMeasure::full(s);
      for (std::size_t i = 0; i < h.size(); ++i) {
        const double want = s->total_measure() * static_cast<double>(h[i]);
        worst = std::max({worst, std::abs(co.proj_dim[i] - want),
                          std::abs(vn_dimension(projective_part(co.h[i]), mu) - want)});
      }
      ++count;
    }
  o.check(worst <= 1e-9, "%zu complexes, max |proj_dim - mu(Z) beta| %.2e", count, worst);
  return o;
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    const char* name;
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> criteria = {
      {1, "circle power family capacity", circle_family},
      {2, "normal crossing xy on the torus", cross_family},
      {3, "tangency family", tangency_family},
      {4, "radial family on T^n", radial_family},
      {5, "transversal powers", transversal_family},
      {6, "divisors", divisors},
      {7, "category engine oracles", category_oracles},
      {8, "spectral identities", spectral_identities},
      {9, "capacity of direct sums", capacity_of_sums},
      {10, "germ heights", germ_heights},
      {11, "mapping torus", mapping_torus},
      {12, "projective dimension formula", dimension_formula},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail = std::string("exception: ") + e.what();
    }
    failed += !o.pass;
    std::printf("%s %2d %-32s %7.2fs  %s\n", o.pass ? "PASS" : "FAIL", c.id, c.name, seconds_since(t0), o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
