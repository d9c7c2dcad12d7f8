#pragma once

/**
 * The reference-family suite behind the `demo` command: capacities of the
 * scalar families and germ heights of planted complexes against their
 * closed-form values.
 */

#include <cstdio>
#include <functional>
#include <string>
#include <tuple>
#include <vector>

#include "l2ext/families.hpp"
#include "l2ext/germ.hpp"
#include "l2ext/spectral.hpp"

namespace l2ext {

struct DemoRow {
  std::string family;
  std::string parameter;
  double expected = 0.0;
  double measured = 0.0;
  double stderr_ = 0.0;
  double tolerance = 0.0;   // absolute
  bool pass = false;
  std::string detail;
};

struct DemoCase {
  std::string family, parameter;
  double expected, tolerance;
  std::function<DemoRow()> run;
};

namespace detail {

inline DemoRow capacity_row(const ExtObject& x, CapacityPolicy pol) {
  if (pol.log_power != 0.0) pol.log_scale = x.alpha.sup_norm();
  const CapacityEstimate c = capacity(sdf_from_map(x), pol);
  DemoRow r;
  r.measured = c.capacity;
  r.stderr_ = c.capacity_stderr;
  char buf[160];
  std::snprintf(buf, sizeof buf, "window [%g, %g], log_power %g, r2 %.6f", c.fit_lo, c.fit_hi, c.log_power, c.r_squared);
  r.detail = buf;
  return r;
}

inline CapacityPolicy window(double lo, double hi, double log_power = 0.0) {
  CapacityPolicy p;
  p.lo = lo;
  p.hi = hi;
  p.log_power = log_power;
  return p;
}

}  // namespace detail

/// Sizes and windows match the acceptance runs.
inline std::vector<DemoCase> demo_cases() {
  using namespace families;
  std::vector<DemoCase> c;
  const auto rel = [](double v) { return 0.1 * v; };
  for (double nu : {0.5, 1.0, 2.0}) {
    const CapacityPolicy p = nu < 1.0 ? detail::window(3e-2, 3e-1) : CapacityPolicy{};
    c.push_back({"circle-power", "nu=" + std::to_string(nu).substr(0, 3), nu, rel(nu),
                 [=] { return detail::capacity_row(circle_power(200000, nu), p); }});
  }
  for (int m : {1, 2, 3})
    c.push_back({"transversal-power", "m=" + std::to_string(m), double(m), rel(m),
                 [=] { return detail::capacity_row(transversal_power(200000, m), {}); }});
  c.push_back({"torus-cross", "xy", 1.0, 0.1,
               [] { return detail::capacity_row(torus_cross(2000), detail::window(1e-4, 1e-2, 1.0)); }});
  for (int k : {1, 2, 3}) {
    const double want = 2.0 * k / (k + 1.0);
    const CapacityPolicy p = k == 1 ? detail::window(1e-3, 3e-2, 1.0) : CapacityPolicy{};
    c.push_back({"tangency", "k=" + std::to_string(k), want, rel(want),
                 [=] { return detail::capacity_row(tangency(2000, k), p); }});
  }
  for (auto [n, m, res] : {std::tuple{2, 1, 2000}, std::tuple{3, 1, 160}, std::tuple{2, 2, 2000}}) {
    const double want = 2.0 * m / n;
    c.push_back({"torus-radial", "n=" + std::to_string(n) + " m=" + std::to_string(m), want, rel(want),
                 [=] { return detail::capacity_row(torus_radial(n, res, m), {}); }});
  }
  for (int k : {1, 2, 3, 4})
    c.push_back({"germ-height", "k=" + std::to_string(k), double(k), 0.1, [=] {
                   const BundleComplex cx = planted_orders(20000, {k}, 0.1);
                   const GermReport g = germ_height(cx, 1, 0.1, 0.4);
                   DemoRow r;
                   r.measured = g.local_capacity.capacity;
                   r.stderr_ = g.local_capacity.capacity_stderr;
                   r.detail = "height " + std::to_string(g.height);
                   if (g.height != k) r.detail += " (expected " + std::to_string(k) + ")";
                   return r;
                 }});
  return c;
}

inline std::vector<DemoRow> run_demo() {
  std::vector<DemoRow> rows;
  for (const DemoCase& dc : demo_cases()) {
    DemoRow r = dc.run();
    r.family = dc.family;
    r.parameter = dc.parameter;
    r.expected = dc.expected;
    r.tolerance = dc.tolerance;
    r.pass = std::isfinite(r.measured) && std::abs(r.measured - r.expected) <= r.tolerance &&
             r.detail.find("expected") == std::string::npos;
    rows.push_back(std::move(r));
  }
  return rows;
}

}  // namespace l2ext
