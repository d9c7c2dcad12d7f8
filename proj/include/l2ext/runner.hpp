#pragma once

/**
 * Command dispatch for scenarios: sdf, capacity, divisor, betti, germ,
 * torus, demo and selftest. Every command writes its artifacts plus
 * summary.json into the output directory.
 *
 * Analysis keys (all optional unless a command needs them):
 *   target        field or complex name
 *   degree        cohomological degree for complexes (default 1)
 *   window        lo:hi capacity fit window (default 1e-4:1e-2)
 *   per_decade    lambda grid density for the fit (default 200)
 *   log_power     p in the log(1 - log lambda) correction (default 0)
 *   eps_rank      rank threshold (default 1e-8)
 *   kernel_budget relative mass allowed below the rank cut (default 1e-2)
 *   generic_cut   true: drop only the generic kernel from the SDF
 *   excise        true: excise the numeric kernel before the SDF
 *   region        lo1, lo2 : hi1, hi2 box restricting the measure
 *   compare       expression in x1 (= lambda) for dilatation_compare
 *   grid          lo:hi range written to sdf.csv (default: window)
 *   grid_points   points per decade in sdf.csv (default 20)
 *   resolve       true: raise the window floor to where N and N/2 agree
 *   mode          lipschitz | threshold | determinant | exact
 *   c_grid, delta_div, budget, dilation   divisor detection
 *   t0, eps       germ location and half width
 *   level_budget, torsion_budget          mapping torus
 */

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "l2ext/demo.hpp"
#include "l2ext/divisor.hpp"
#include "l2ext/excat.hpp"
#include "l2ext/germ.hpp"
#include "l2ext/scenario.hpp"
#include "l2ext/selftest.hpp"
#include "l2ext/spectral.hpp"
#include "l2ext/torus.hpp"

namespace l2ext {

using json = nlohmann::ordered_json;

struct RunOptions {
  std::filesystem::path out = ".";
  std::optional<std::size_t> resolution;
  std::optional<double> eps_rank;
  std::optional<std::pair<double, double>> window;
  std::uint64_t seed = 0;
};

inline const std::vector<std::string>& commands() {
  static const std::vector<std::string> c{"sdf", "capacity", "divisor", "betti", "germ", "torus", "demo", "selftest"};
  return c;
}

namespace io {

inline std::string fmt(double v) {
  char b[40];
  std::snprintf(b, sizeof b, "%.17g", v);
  return b;
}

inline json num(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return v;
}

class Csv {
 public:
  Csv(const std::filesystem::path& p, const std::vector<std::string>& header) : out_(p, std::ios::binary) {
    if (!out_) throw ValidationError("cannot write '" + p.string() + "'");
    for (std::size_t k = 0; k < header.size(); ++k) out_ << (k ? "," : "") << header[k];
    out_ << '\n';
  }
  void row(const std::vector<double>& v) {
    for (std::size_t k = 0; k < v.size(); ++k) out_ << (k ? "," : "") << fmt(v[k]);
    out_ << '\n';
  }

 private:
  std::ofstream out_;
};

inline void write_json(const std::filesystem::path& p, const json& j) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw ValidationError("cannot write '" + p.string() + "'");
  out << j.dump(2) << '\n';
}

inline std::vector<std::string> coordinate_header(const SampleSpace& s) {
  std::vector<std::string> h;
  for (std::size_t a = 0; a < s.dim(); ++a) h.push_back("x" + std::to_string(a + 1));
  return h;
}

}  // namespace io

struct Analysis {
  std::string target;
  std::size_t degree = 1;
  CapacityPolicy capacity;
  SdfOptions sdf;
  bool excise = false;
  std::optional<std::pair<std::vector<double>, std::vector<double>>> region;
  Expr compare;
  double grid_lo = 0.0, grid_hi = 0.0;
  int grid_points = 20;
  bool resolve = false;
  DetectionPolicy detect;
  std::optional<double> t0;
  double eps = 0.1;
  TorusPolicy torus;
};

namespace detail {

inline double number(const std::string& key, const std::string& v) {
  try {
    return constant_value(parse_expression(v), "analysis." + key);
  } catch (const ExpressionError& e) {
    throw ValidationError("analysis." + key + ": " + e.what());
  }
}

inline bool boolean(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ValidationError("analysis." + key + ": expected true or false, got '" + v + "'");
}

inline std::pair<double, double> range(const std::string& key, const std::string& v) {
  const auto c = v.find(':');
  if (c == std::string::npos) throw ValidationError("analysis." + key + ": expected lo:hi, got '" + v + "'");
  const double lo = number(key, v.substr(0, c)), hi = number(key, v.substr(c + 1));
  if (!(lo > 0.0) || !(hi > lo)) throw ValidationError("analysis." + key + ": need 0 < lo < hi");
  return {lo, hi};
}

inline std::vector<double> point(const std::string& key, const std::string& v) {
  std::vector<double> p;
  for (const auto& t : split_top(v, ',')) p.push_back(number(key, t));
  return p;
}

}  // namespace detail

inline Analysis parse_analysis(const Scenario& s, const RunOptions& opt) {
  Analysis a;
  a.torus.capacity = a.capacity;
  bool have_grid = false;
  for (const auto& [k, v] : s.analysis) {
    if (k == "target") a.target = v;
    else if (k == "degree") a.degree = detail::parse_count(v, "analysis.degree");
    else if (k == "window") std::tie(a.capacity.lo, a.capacity.hi) = detail::range(k, v);
    else if (k == "per_decade") a.capacity.per_decade = static_cast<int>(detail::parse_count(v, "analysis.per_decade"));
    else if (k == "log_power") a.capacity.log_power = detail::number(k, v);
    else if (k == "eps_rank") a.sdf.eps_rank = detail::number(k, v);
    else if (k == "kernel_budget") a.sdf.kernel_budget = detail::number(k, v);
    else if (k == "generic_cut") a.sdf.generic_cut = detail::boolean(k, v);
    else if (k == "excise") a.excise = detail::boolean(k, v);
    else if (k == "region") {
      const auto c = v.find(':');
      if (c == std::string::npos) throw ValidationError("analysis.region: expected lo1, .. : hi1, ..");
      a.region.emplace(detail::point(k, v.substr(0, c)), detail::point(k, v.substr(c + 1)));
    } else if (k == "compare") a.compare = parse_expression(v);
    else if (k == "grid") std::tie(a.grid_lo, a.grid_hi) = detail::range(k, v), have_grid = true;
    else if (k == "grid_points") a.grid_points = static_cast<int>(detail::parse_count(v, "analysis.grid_points"));
    else if (k == "resolve") a.resolve = detail::boolean(k, v);
    else if (k == "mode") {
      if (v == "lipschitz") a.detect.mode = DetectionMode::lipschitz;
      else if (v == "threshold") a.detect.mode = DetectionMode::threshold;
      else if (v == "determinant") a.detect.mode = DetectionMode::determinant;
      else if (v == "exact") a.detect.mode = DetectionMode::exact;
      else throw ValidationError("analysis.mode: unknown detection mode '" + v + "'");
    } else if (k == "c_grid") a.detect.c_grid = detail::number(k, v);
    else if (k == "delta_div") a.detect.delta_div = detail::number(k, v);
    else if (k == "budget") a.detect.budget = detail::number(k, v);
    else if (k == "dilation") a.detect.multiplicity_dilation = detail::parse_count(v, "analysis.dilation");
    else if (k == "t0") a.t0 = detail::number(k, v);
    else if (k == "eps") a.eps = detail::number(k, v);
    else if (k == "level_budget") a.torus.level_budget = detail::number(k, v);
    else if (k == "torsion_budget") a.torus.torsion_budget = detail::number(k, v);
    else if (k == "torus_eps_rank") a.torus.eps_rank = detail::number(k, v);
    else throw ValidationError("unknown analysis key '" + k + "'");
  }
  if (opt.eps_rank) a.sdf.eps_rank = *opt.eps_rank, a.torus.eps_rank = *opt.eps_rank;
  if (opt.window) std::tie(a.capacity.lo, a.capacity.hi) = *opt.window;
  if (!have_grid) a.grid_lo = a.capacity.lo, a.grid_hi = a.capacity.hi;
  a.detect.eps_rank = a.sdf.eps_rank;
  a.detect.capacity = a.capacity;
  a.torus.capacity = a.capacity;
  a.torus.c_grid = a.detect.c_grid;
  return a;
}

namespace detail {

inline json capacity_json(const CapacityEstimate& c) {
  return json{{"capacity", io::num(c.capacity)},
              {"ns_number", io::num(c.ns_number)},
              {"capacity_stderr", io::num(c.capacity_stderr)},
              {"slope_stderr", io::num(c.slope_stderr)},
              {"r_squared", io::num(c.r_squared)},
              {"plain_slope", io::num(c.plain_slope)},
              {"liminf_slope", io::num(c.liminf_slope)},
              {"log_power", c.log_power},
              {"window", {io::num(c.fit_lo), io::num(c.fit_hi)}},
              {"points", c.points},
              {"vanishes", c.vanishes}};
}

inline Scenario with_resolution(Scenario s, std::optional<std::size_t> n) {
  if (n) s.resolution = {*n};
  return s;
}

/// The SDF of the analysis target on a given space.
struct TargetSdf {
  StepFunction sdf;
  double kernel_mass = 0.0;
  double total = 0.0;
  std::optional<double> proj_dim;
  double sup = 1.0;
  bool is_complex = false;
  std::optional<bool> torsion, zero;
};

inline TargetSdf target_sdf(const Scenario& s, const Analysis& a, const SpacePtr& space) {
  if (a.target.empty()) throw ValidationError("analysis.target is required for this command");
  const DensityMeasure nu = a.region ? restrict_to_box(space, a.region->first, a.region->second) : DensityMeasure::full(space);
  if (a.region && (a.region->first.size() != space->dim() || a.region->second.size() != space->dim()))
    throw ValidationError("analysis.region must give " + std::to_string(space->dim()) + " coordinates per corner");
  TargetSdf t;
  t.total = nu.total();
  if (s.complexes.count(a.target)) {
    const BundleComplex c = build_complex(s, a.target, space);
    if (a.degree > c.top_degree()) throw ValidationError("analysis.degree exceeds the length of the complex");
    const CohomologySdf h = cohomology_sdf(c, a.degree, nu, a.sdf.eps_rank);
    t.sdf = h.sdf;
    t.proj_dim = h.proj_dim;
    t.is_complex = true;
    if (a.degree >= 1) t.sup = c.maps[a.degree - 1].sup_norm();
    return t;
  }
  ExtObject x{build_field(s, a.target, space)};
  if (a.excise) x = excise_kernel(x, a.sdf.eps_rank);
  t.sup = x.alpha.sup_norm();
  t.torsion = is_torsion(x, a.sdf.eps_rank, a.sdf.kernel_budget);
  t.zero = is_zero(x, a.sdf.eps_rank, a.detect.c_grid);
  SdfResult r = sdf_with_kernel(x.alpha, nu, a.sdf);
  if (r.kernel_mass > a.sdf.kernel_budget * nu.total())
    throw PreconditionError("sdf: representative is not injective (kernel mass " + std::to_string(r.kernel_mass) +
                            " exceeds budget " + std::to_string(a.sdf.kernel_budget * nu.total()) +
                            "); set analysis.excise = true");
  t.sdf = std::move(r.sdf);
  t.kernel_mass = r.kernel_mass;
  return t;
}

inline json sdf_summary(const TargetSdf& t) {
  json j{{"total_measure", io::num(t.total)}, {"kernel_mass", io::num(t.kernel_mass)}, {"spectral_mass", io::num(t.sdf.total())}};
  if (t.proj_dim) j["proj_dim"] = io::num(*t.proj_dim);
  if (t.torsion) j["is_torsion"] = *t.torsion;
  if (t.zero) j["is_zero"] = *t.zero;
  return j;
}

inline void write_sdf_csv(const std::filesystem::path& p, const StepFunction& f, double lo, double hi, int per_decade) {
  io::Csv csv(p, {"lambda", "F"});
  for (double l : lambda_grid(lo, hi, per_decade)) csv.row({l, f(l)});
}

inline std::vector<double> coords(const SampleSpace& s, std::size_t j) {
  const auto p = s.point(j);
  return std::vector<double>(p.begin(), p.end());
}

inline json run_sdf(const Scenario& s, const Analysis& a, const SpacePtr& space, const RunOptions& opt) {
  const TargetSdf t = target_sdf(s, a, space);
  write_sdf_csv(opt.out / "sdf.csv", t.sdf, a.grid_lo, a.grid_hi, a.grid_points);
  json j = sdf_summary(t);
  j["grid"] = {io::num(a.grid_lo), io::num(a.grid_hi)};
  j["F_at_grid_hi"] = io::num(t.sdf(a.grid_hi));
  return j;
}

inline json run_capacity(const Scenario& s, const Analysis& a, const SpacePtr& space, const RunOptions& opt) {
  const TargetSdf t = target_sdf(s, a, space);
  write_sdf_csv(opt.out / "sdf.csv", t.sdf, a.grid_lo, a.grid_hi, a.grid_points);
  CapacityPolicy pol = a.capacity;
  if (pol.log_power != 0.0) pol.log_scale = t.sup;
  json j = sdf_summary(t);
  if (a.resolve) {
    Scenario coarse = s;
    for (auto& n : coarse.resolution) n = std::max<std::size_t>(1, n / 2);
    const TargetSdf tc = target_sdf(coarse, a, build_space(coarse));
    const double lo = resolved_lower_bound(t.sdf, tc.sdf, pol.lo, pol.hi);
    j["resolved_lower_bound"] = io::num(lo);
    if (lo > pol.lo) pol.lo = lo;
  }
  const CapacityEstimate c = capacity(t.sdf, pol);
  j["capacity"] = capacity_json(c);
  if (a.compare) {
    const Expr g = a.compare;
    const auto G = [&](double l) {
      const double x[1] = {l};
      return evaluate(g, x).real();
    };
    const DilatationReport d = dilatation_compare(t.sdf, G, pol.lo, pol.hi);
    j["dilatation"] = json{{"compare", print_expression(g)}, {"verdict", to_string(d.verdict)}, {"constant", io::num(d.constant)}};
  }
  io::write_json(opt.out / "capacity.json", j);
  return j;
}

inline json cluster_json(const SampleSpace& s, const std::vector<std::size_t>& cells, const std::vector<double>& crit,
                         const std::optional<CapacityEstimate>& cap) {
  std::size_t best = cells.front();
  for (std::size_t j : cells)
    if (crit[j] < crit[best]) best = j;
  double measure = 0.0;
  for (std::size_t j : cells) measure += s.weight(j);
  json c{{"cells", cells.size()}, {"measure", io::num(measure)}, {"argmin", coords(s, best)}};
  if (cap) c["local_capacity"] = capacity_json(*cap);
  return c;
}

inline json run_divisor(const Scenario& s, const Analysis& a, const SpacePtr& space, const RunOptions& opt) {
  if (a.target.empty()) throw ValidationError("analysis.target is required for divisor");
  DivisorReport rep;
  json j;
  if (s.complexes.count(a.target)) {
    const ComplexDivisor d = divisor_of_complex(build_complex(s, a.target, space), a.detect);
    rep = d.report;
    j["generic_betti"] = d.generic_betti;
    j["betti_jump_cells"] = d.betti_jump_cells.size();
    j["all_torsion"] = d.all_torsion;
    j["vanishing"] = d.vanishing;
  } else {
    const ExtObject x{build_field(s, a.target, space)};
    rep = divisor_of_map(x.alpha, a.detect);
    j["is_zero"] = is_zero(x, a.detect.eps_rank, a.detect.c_grid);
  }
  std::vector<char> flag(space->size(), 0);
  for (std::size_t c : rep.flagged_cells) flag[c] = 1;
  auto head = io::coordinate_header(*space);
  head.insert(head.begin(), "cell");
  head.push_back("min_singular");
  {
    io::Csv csv(opt.out / "divisor.csv", head);
    for (std::size_t c : rep.flagged_cells) {
      std::vector<double> row{double(c)};
      for (double x : coords(*space, c)) row.push_back(x);
      row.push_back(rep.per_cell_min_singular[c]);
      csv.row(row);
    }
  }
  head.push_back("flagged");
  {
    io::Csv csv(opt.out / "mask.csv", head);
    for (std::size_t c = 0; c < space->size(); ++c) {
      std::vector<double> row{double(c)};
      for (double x : coords(*space, c)) row.push_back(x);
      row.push_back(rep.per_cell_min_singular[c]);
      row.push_back(flag[c]);
      csv.row(row);
    }
  }
  j["criterion"] = rep.criterion;
  j["flagged_cells"] = rep.flagged_cells.size();
  j["flagged_measure"] = io::num(rep.flagged_measure);
  j["empty"] = rep.flagged_cells.empty();
  json cl = json::array();
  for (const auto& c : rep.clusters) cl.push_back(cluster_json(*space, c.cells, rep.per_cell_min_singular, c.local_capacity));
  j["clusters"] = cl;
  io::write_json(opt.out / "divisor.json", j);
  return j;
}

inline json run_betti(const Scenario& s, const Analysis& a, const SpacePtr& space, const RunOptions& opt) {
  if (!s.complexes.count(a.target)) throw ValidationError("betti needs analysis.target to name a complex");
  const BundleComplex c = build_complex(s, a.target, space);
  const ExtCohomology h = extended_cohomology(c, a.sdf.eps_rank);
  const DensityMeasure mu = DensityMeasure::full(space);
  json deg = json::array();
  for (std::size_t i = 0; i < c.fields.size(); ++i) {
    double jump = 0.0;
    for (std::size_t j = 0; j < space->size(); ++j)
      if (h.betti[i][j] != h.generic_betti[i][j]) jump += space->weight(j);
    std::vector<int> key(space->size(), 0);
    const std::size_t g = l2ext::detail::weighted_mode(key, h.generic_betti[i], space->weights()).front();
    deg.push_back(json{{"degree", i},
                       {"generic_betti", g},
                       {"proj_dim", io::num(h.proj_dim[i])},
                       {"proj_part_dim", io::num(vn_dimension(projective_part(h.h[i], a.sdf.eps_rank), mu))},
                       {"jump_measure", io::num(jump)},
                       {"is_torsion", h.h[i].target().max_dim() == 0 || is_torsion(h.h[i], a.sdf.eps_rank, a.sdf.kernel_budget)}});
  }
  auto head = io::coordinate_header(*space);
  head.insert(head.begin(), "cell");
  for (std::size_t i = 0; i < c.fields.size(); ++i) head.push_back("betti" + std::to_string(i));
  io::Csv csv(opt.out / "betti.csv", head);
  for (std::size_t j = 0; j < space->size(); ++j) {
    std::vector<double> row{double(j)};
    for (double x : coords(*space, j)) row.push_back(x);
    for (std::size_t i = 0; i < c.fields.size(); ++i) row.push_back(double(h.betti[i][j]));
    csv.row(row);
  }
  json j{{"total_measure", io::num(space->total_measure())}, {"degrees", deg}};
  io::write_json(opt.out / "betti.json", j);
  return j;
}

inline json run_germ(const Scenario& s, const Analysis& a, const SpacePtr& space, const RunOptions& opt) {
  if (!s.complexes.count(a.target)) throw ValidationError("germ needs analysis.target to name a complex");
  if (!a.t0) throw ValidationError("germ needs analysis.t0");
  const BundleComplex c = build_complex(s, a.target, space);
  GermPolicy gp;
  gp.eps_rank = a.sdf.eps_rank;
  gp.c_grid = a.detect.c_grid;
  gp.capacity = a.capacity;
  const GermReport g = germ_height(c, a.degree, *a.t0, a.eps, gp);

  std::vector<std::size_t> region;
  const std::vector<double> p0{*a.t0};
  for (std::size_t j = 0; j < space->size(); ++j)
    if (space->distance(space->point(j), p0) <= a.eps) region.push_back(j);
  const BundleMap& d = c.maps[a.degree - 1];
  const Branches br = track_branches(compose(adjoint_map(d), d), region, a.sdf.eps_rank);
  std::vector<std::string> head{"t"};
  for (std::size_t b = 0; b < br.values.size(); ++b) head.push_back("branch" + std::to_string(b));
  io::Csv csv(opt.out / "branches.csv", head);
  for (std::size_t k = 0; k < br.t.size(); ++k) {
    std::vector<double> row{br.t[k]};
    for (const auto& v : br.values) row.push_back(v[k]);
    csv.row(row);
  }
  json orders = json::array();
  for (const auto& v : g.residuals)
    orders.push_back(json{{"k", v.k}, {"slope", io::num(v.slope)}, {"gamma", io::num(v.gamma)}, {"r_squared", io::num(v.r_squared)}});
  json j{{"t0", io::num(g.t0)},
         {"eps", io::num(a.eps)},
         {"height", g.height},
         {"branch_orders", g.branch_orders},
         {"branches", orders},
         {"local_capacity", capacity_json(g.local_capacity)},
         {"consistent", g.consistent},
         {"log", g.log}};
  io::write_json(opt.out / "germ.json", j);
  return j;
}

inline json run_torus(const Scenario& s, const Analysis& a, const SpacePtr& space, const RunOptions& opt) {
  const MappingTorusSpec spec = build_torus(s, space);
  json deg = json::array();
  for (const auto& [hd, phi] : spec.phi_star) {
    const TorusDegreeReport r = torus_sequence_report(spec, hd + 1, a.torus);
    json sp = json::array();
    for (std::size_t k = 0; k < r.spectrum.size(); ++k)
      sp.push_back(json{{"re", io::num(r.spectrum[k].value.real())},
                        {"im", io::num(r.spectrum[k].value.imag())},
                        {"multiplicity", r.spectrum[k].multiplicity},
                        {"meets_tau", bool(r.meets[k])}});
    std::vector<std::vector<double>> pre;
    for (std::size_t j : r.preimage_cells) pre.push_back(coords(*space, j));
    json e{{"degree", r.degree},
           {"spectrum", sp},
           {"hom_dim", io::num(r.hom_dim)},
           {"ext_proj_dim", io::num(r.ext_proj_dim)},
           {"ext_is_zero", r.ext_is_zero},
           {"ext_is_torsion", r.ext_is_torsion},
           {"divisor_cells", r.divisor_cells.size()},
           {"preimage_cells", r.preimage_cells.size()},
           {"divisor_to_preimage_hausdorff", io::num(hausdorff_distance(*space, r.divisor_cells, pre))}};
    if (r.ext_capacity) e["ext_capacity"] = capacity_json(*r.ext_capacity);
    deg.push_back(e);
  }
  json j{{"degrees", deg}};
  io::write_json(opt.out / "torus.json", j);
  return j;
}

}  // namespace detail

inline json run_demo_command(const RunOptions& opt) {
  const std::vector<DemoRow> rows = run_demo();
  {
    std::ofstream out(opt.out / "demo.csv", std::ios::binary);
    out << "family,parameter,expected,measured,stderr,tolerance,pass\n";
    for (const auto& r : rows)
      out << r.family << "," << r.parameter << "," << io::fmt(r.expected) << "," << io::fmt(r.measured) << ","
          << io::fmt(r.stderr_) << "," << io::fmt(r.tolerance) << "," << (r.pass ? "pass" : "fail") << '\n';
  }
  json arr = json::array();
  bool all = true;
  for (const auto& r : rows) {
    all = all && r.pass;
    arr.push_back(json{{"family", r.family},
                       {"parameter", r.parameter},
                       {"expected", io::num(r.expected)},
                       {"measured", io::num(r.measured)},
                       {"stderr", io::num(r.stderr_)},
                       {"tolerance", io::num(r.tolerance)},
                       {"pass", r.pass},
                       {"detail", r.detail}});
  }
  json j{{"rows", arr}, {"all_pass", all}};
  io::write_json(opt.out / "demo.json", j);
  return j;
}

inline json run_selftest_command(const RunOptions& opt) {
  const std::uint64_t s = opt.seed;
  const std::vector<SuiteResult> suites{suite_point_kernels(s), suite_cohomology_dims(s + 1),
                                        suite_laplacian_identity(s + 2, 5, 20), suite_sdf_additivity(s + 3),
                                        suite_dual_sdf(s + 4), suite_expression_roundtrip(s + 5)};
  json arr = json::array();
  bool all = true;
  for (const auto& r : suites) {
    all = all && r.pass();
    json e{{"suite", r.name},
           {"instances", r.instances},
           {"failures", r.failures},
           {"max_error", io::num(r.max_error)},
           {"tolerance", io::num(r.tolerance)},
           {"pass", r.pass()}};
    if (!r.pass()) e["first_failure"] = r.first_failure;
    arr.push_back(e);
  }
  json j{{"seed", s}, {"suites", arr}, {"all_pass", all}};
  io::write_json(opt.out / "selftest.json", j);
  return j;
}

/// Runs one command. `scenario` may be null for demo and selftest. Returns
/// the summary, which is also written to summary.json.
inline json run(const Scenario* scenario, const std::string& command, const RunOptions& opt) {
  if (std::find(commands().begin(), commands().end(), command) == commands().end())
    throw ValidationError("unknown command '" + command + "'");
  std::filesystem::create_directories(opt.out);
  json summary{{"command", command}};
  if (command == "demo") {
    summary["result"] = run_demo_command(opt);
  } else if (command == "selftest") {
    summary["result"] = run_selftest_command(opt);
  } else {
    if (!scenario) throw ValidationError("command '" + command + "' needs --scenario");
    const Scenario s = detail::with_resolution(*scenario, opt.resolution);
    const Analysis a = parse_analysis(s, opt);
    const SpacePtr space = build_space(s);
    summary["scenario"] = s.file.filename().string();
    summary["cells"] = space->size();
    summary["seed"] = opt.seed;
    if (!a.target.empty()) summary["target"] = a.target;
    if (command == "sdf") summary["result"] = detail::run_sdf(s, a, space, opt);
    else if (command == "capacity") summary["result"] = detail::run_capacity(s, a, space, opt);
    else if (command == "divisor") summary["result"] = detail::run_divisor(s, a, space, opt);
    else if (command == "betti") summary["result"] = detail::run_betti(s, a, space, opt);
    else if (command == "germ") summary["result"] = detail::run_germ(s, a, space, opt);
    else summary["result"] = detail::run_torus(s, a, space, opt);
  }
  io::write_json(opt.out / "summary.json", summary);
  return summary;
}

}  // namespace l2ext
