#pragma once

/**
 * Scenario files: a small sectioned key = value format.
 *
 *   # comment
 *   [domain]
 *   factors = circle(2*pi); interval(-1, 1); torus
 *   resolution = 2000, 2000
 *   density = 1 + x1^2              (optional, multiplies cell volumes)
 *
 *   [field f]
 *   expr = x1*x2                    (scalar field) or
 *   rows = 2
 *   cols = 2
 *   entries = x1, -x2; x2, x1       (rows separated by ';') or
 *   table = data.csv                (one line per cell: re, im pairs row-major)
 *
 *   [complex c]
 *   dims = 1, 1
 *   maps = f                        ('0' for a zero differential)
 *
 *   [torus]
 *   tau = cis(x1)
 *   tau_bound = 2
 *   phi0 = 1, 1; 0, 1               (phi_* on H_0 of the fiber)
 *
 *   [analysis]
 *   target = f
 *   window = 1e-4:1e-2
 *   ...
 */

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "l2ext/bundle.hpp"
#include "l2ext/expression.hpp"
#include "l2ext/measure.hpp"
#include "l2ext/torus.hpp"

namespace l2ext {

/// splitmix64; portable so that seeded runs agree across standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : s_(seed) {}
  std::uint64_t next() {
    std::uint64_t z = (s_ += 0x9E3779B97F4A7C15ull);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  double normal() {
    const double u = 1.0 - uniform(), v = uniform();
    return std::sqrt(-2.0 * std::log(u)) * std::cos(2.0 * std::numbers::pi * v);
  }
  std::size_t index(std::size_t n) { return static_cast<std::size_t>(uniform() * static_cast<double>(n)) % n; }

 private:
  std::uint64_t s_;
};

struct FieldDef {
  std::size_t rows = 1, cols = 1;
  std::vector<Expr> entries;  // row-major; empty when tabulated
  std::string table;
};

struct ComplexDef {
  std::vector<std::size_t> dims;
  std::vector<std::string> maps;
};

struct TorusDef {
  Expr tau;
  double tau_bound = 1e6;
  std::map<std::size_t, std::vector<std::vector<Expr>>> phi;
};

struct Scenario {
  std::filesystem::path file;
  DomainSpec domain;
  std::vector<std::size_t> resolution;
  Expr density;
  std::map<std::string, FieldDef> fields;
  std::map<std::string, ComplexDef> complexes;
  std::optional<TorusDef> torus;
  std::map<std::string, std::string> analysis;

  bool has(const std::string& key) const { return analysis.count(key) > 0; }
  std::string get(const std::string& key, const std::string& fallback = "") const {
    auto it = analysis.find(key);
    return it == analysis.end() ? fallback : it->second;
  }
};

namespace detail {

inline std::string trim(std::string s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

/// Splits on `sep` outside parentheses.
inline std::vector<std::string> split_top(const std::string& s, char sep) {
  std::vector<std::string> out;
  int depth = 0;
  std::string cur;
  for (char c : s) {
    if (c == '(') ++depth;
    if (c == ')') --depth;
    if (c == sep && depth == 0) {
      out.push_back(trim(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(trim(cur));
  return out;
}

inline std::string located(const Scenario& s, std::size_t line, const std::string& what) {
  return s.file.string() + ":" + std::to_string(line) + ": " + what;
}

inline Expr parse_at(const Scenario& s, std::size_t line, const std::string& text) {
  try {
    return parse_expression(text);
  } catch (const ExpressionError& e) {
    throw ValidationError(located(s, line, std::string("in '") + text + "': " + e.what()));
  }
}

inline double constant_value(const Expr& e, const std::string& what) {
  const std::complex<double> v = evaluate(e, std::span<const double>{});
  if (v.imag() != 0.0 || !std::isfinite(v.real())) throw ValidationError(what + " must be a finite real constant");
  return v.real();
}

inline std::size_t parse_count(const std::string& v, const std::string& what) {
  std::size_t pos = 0;
  long long n = 0;
  try {
    n = std::stoll(v, &pos);
  } catch (const std::exception&) {
    throw ValidationError(what + ": '" + v + "' is not an integer");
  }
  if (pos != v.size() || n < 0) throw ValidationError(what + ": '" + v + "' is not a nonnegative integer");
  return static_cast<std::size_t>(n);
}

inline std::vector<std::vector<Expr>> parse_matrix(const Scenario& s, std::size_t line, const std::string& v) {
  std::vector<std::vector<Expr>> rows;
  for (const auto& r : split_top(v, ';')) {
    std::vector<Expr> row;
    for (const auto& e : split_top(r, ',')) row.push_back(parse_at(s, line, e));
    if (!rows.empty() && row.size() != rows.front().size())
      throw ValidationError(located(s, line, "matrix rows have different lengths"));
    rows.push_back(std::move(row));
  }
  return rows;
}

inline Factor parse_factor(const Scenario& s, std::size_t line, const std::string& text) {
  const auto open = text.find('(');
  const std::string kind = trim(text.substr(0, open));
  std::vector<double> args;
  if (open != std::string::npos) {
    if (text.back() != ')') throw ValidationError(located(s, line, "malformed factor '" + text + "'"));
    for (const auto& a : split_top(text.substr(open + 1, text.size() - open - 2), ','))
      if (!a.empty()) args.push_back(constant_value(parse_at(s, line, a), "factor argument"));
  }
  try {
    if (kind == "circle" && args.size() == 1) return Factor::circle(args[0]);
    if (kind == "interval" && args.size() == 2) return Factor::interval(args[0], args[1]);
    if (kind == "torus" && args.empty()) return Factor::torus();
  } catch (const ValidationError& e) {
    throw ValidationError(located(s, line, e.what()));
  }
  throw ValidationError(located(s, line, "unknown factor '" + text + "' (circle(L), interval(a, b) or torus)"));
}

}  // namespace detail

/// Parses without touching the sample space; see validate_scenario.
inline Scenario parse_scenario(std::istream& in, const std::filesystem::path& file = "<scenario>") {
  Scenario s;
  s.file = file;
  std::string section, name, raw;
  std::size_t line = 0;
  bool have_domain = false;
  while (std::getline(in, raw)) {
    ++line;
    const auto hash = raw.find('#');
    std::string text = detail::trim(hash == std::string::npos ? raw : raw.substr(0, hash));
    if (text.empty()) continue;
    if (text.front() == '[') {
      if (text.back() != ']') throw ValidationError(detail::located(s, line, "malformed section header"));
      std::istringstream hs(text.substr(1, text.size() - 2));
      section.clear();
      name.clear();
      hs >> section >> name;
      if (section == "field" || section == "complex") {
        if (name.empty()) throw ValidationError(detail::located(s, line, "[" + section + "] needs a name"));
        if (s.fields.count(name) || s.complexes.count(name))
          throw ValidationError(detail::located(s, line, "duplicate name '" + name + "'"));
        if (section == "field") s.fields[name];
        else s.complexes[name];
      } else if (section == "torus") {
        s.torus.emplace();
      } else if (section == "domain") {
        have_domain = true;
      } else if (section != "analysis") {
        throw ValidationError(detail::located(s, line, "unknown section [" + section + "]"));
      }
      continue;
    }
    const auto eq = text.find('=');
    if (eq == std::string::npos) throw ValidationError(detail::located(s, line, "expected key = value"));
    const std::string key = detail::trim(text.substr(0, eq));
    const std::string value = detail::trim(text.substr(eq + 1));
    if (section.empty()) throw ValidationError(detail::located(s, line, "key outside of any section"));
    if (section == "domain") {
      if (key == "factors") {
        for (const auto& f : detail::split_top(value, ';')) s.domain.factors.push_back(detail::parse_factor(s, line, f));
      } else if (key == "resolution") {
        for (const auto& r : detail::split_top(value, ','))
          s.resolution.push_back(detail::parse_count(r, detail::located(s, line, "resolution")));
      } else if (key == "density") {
        s.density = detail::parse_at(s, line, value);
      } else {
        throw ValidationError(detail::located(s, line, "unknown domain key '" + key + "'"));
      }
    } else if (section == "field") {
      FieldDef& f = s.fields[name];
      if (key == "expr") {
        f.entries = {detail::parse_at(s, line, value)};
      } else if (key == "rows") {
        f.rows = detail::parse_count(value, detail::located(s, line, "rows"));
      } else if (key == "cols") {
        f.cols = detail::parse_count(value, detail::located(s, line, "cols"));
      } else if (key == "entries") {
        f.entries.clear();
        for (auto& row : detail::parse_matrix(s, line, value))
          for (auto& e : row) f.entries.push_back(e);
      } else if (key == "table") {
        f.table = value;
      } else {
        throw ValidationError(detail::located(s, line, "unknown field key '" + key + "'"));
      }
    } else if (section == "complex") {
      ComplexDef& c = s.complexes[name];
      if (key == "dims") {
        for (const auto& d : detail::split_top(value, ','))
          c.dims.push_back(detail::parse_count(d, detail::located(s, line, "dims")));
      } else if (key == "maps") {
        c.maps = detail::split_top(value, ',');
      } else {
        throw ValidationError(detail::located(s, line, "unknown complex key '" + key + "'"));
      }
    } else if (section == "torus") {
      if (key == "tau") {
        s.torus->tau = detail::parse_at(s, line, value);
      } else if (key == "tau_bound") {
        s.torus->tau_bound = detail::constant_value(detail::parse_at(s, line, value), "tau_bound");
      } else if (key.rfind("phi", 0) == 0 && key.size() > 3) {
        s.torus->phi[detail::parse_count(key.substr(3), detail::located(s, line, "phi degree"))] =
            detail::parse_matrix(s, line, value);
      } else {
        throw ValidationError(detail::located(s, line, "unknown torus key '" + key + "'"));
      }
    } else {
      s.analysis[key] = value;
    }
  }
  if (!have_domain || s.domain.factors.empty()) throw ValidationError(file.string() + ": missing [domain] factors");
  if (s.resolution.empty()) throw ValidationError(file.string() + ": missing [domain] resolution");
  return s;
}

/// Names resolve, shapes agree, and every expression is finite at 8 seeded
/// random points of the domain.
inline void validate_scenario(const Scenario& s, std::uint64_t seed = 0) {
  const std::size_t d = s.domain.factors.size();
  if (s.resolution.size() != 1 && s.resolution.size() != d)
    throw ValidationError("resolution lists " + std::to_string(s.resolution.size()) + " axes for a " +
                          std::to_string(d) + "-dimensional domain");
  for (std::size_t r : s.resolution)
    if (r == 0) throw ValidationError("resolution must be at least 1 per axis");

  Rng rng(seed);
  std::vector<std::vector<double>> probes(8, std::vector<double>(d));
  for (auto& p : probes)
    for (std::size_t a = 0; a < d; ++a) p[a] = rng.uniform(s.domain.factors[a].lo, s.domain.factors[a].hi);
  auto probe = [&](const Expr& e, const std::string& where) {
    for (const auto& p : probes) {
      std::complex<double> v;
      try {
        v = evaluate(e, p);
      } catch (const ValidationError& err) {
        throw ValidationError(where + ": " + err.what());
      }
      if (!std::isfinite(v.real()) || !std::isfinite(v.imag()))
        throw ValidationError(where + ": expression '" + print_expression(e) + "' is not finite at a probe point");
    }
  };
  if (s.density) probe(s.density, "domain density");
  for (const auto& [name, f] : s.fields) {
    if (f.table.empty()) {
      if (f.entries.size() != f.rows * f.cols)
        throw ValidationError("field '" + name + "' has " + std::to_string(f.entries.size()) + " entries for a " +
                              std::to_string(f.rows) + "x" + std::to_string(f.cols) + " matrix");
      for (const auto& e : f.entries) probe(e, "field '" + name + "'");
    } else if (!f.entries.empty()) {
      throw ValidationError("field '" + name + "' has both a table and expressions");
    }
  }
  for (const auto& [name, c] : s.complexes) {
    if (c.dims.empty()) throw ValidationError("complex '" + name + "' has no dims");
    if (c.maps.size() + 1 != c.dims.size())
      throw ValidationError("complex '" + name + "' needs " + std::to_string(c.dims.size() - 1) + " maps");
    for (std::size_t i = 0; i < c.maps.size(); ++i) {
      if (c.maps[i] == "0") continue;
      auto it = s.fields.find(c.maps[i]);
      if (it == s.fields.end()) throw ValidationError("complex '" + name + "' refers to unknown field '" + c.maps[i] + "'");
      if (it->second.cols != c.dims[i] || it->second.rows != c.dims[i + 1])
        throw ValidationError("complex '" + name + "': field '" + c.maps[i] + "' is " +
                              std::to_string(it->second.rows) + "x" + std::to_string(it->second.cols) +
                              ", differential " + std::to_string(i) + " must be " + std::to_string(c.dims[i + 1]) +
                              "x" + std::to_string(c.dims[i]));
    }
  }
  if (s.torus) {
    if (!s.torus->tau) throw ValidationError("[torus] needs tau");
    probe(s.torus->tau, "torus tau");
    if (s.torus->phi.empty()) throw ValidationError("[torus] needs at least one phi<degree> matrix");
    for (const auto& [deg, m] : s.torus->phi) {
      if (m.size() != m.front().size()) throw ValidationError("phi" + std::to_string(deg) + " is not square");
      for (const auto& row : m)
        for (const auto& e : row) {
          if (m.size() != row.size()) throw ValidationError("phi" + std::to_string(deg) + " is not square");
          if (coordinate_arity(*e) > 0) throw ValidationError("phi" + std::to_string(deg) + " entries must be constants");
          const auto v = evaluate(e, std::span<const double>{});
          if (!std::isfinite(v.real()) || !std::isfinite(v.imag()))
            throw ValidationError("phi" + std::to_string(deg) + " has a non-finite entry");
        }
    }
  }
  if (s.has("target")) {
    const std::string t = s.get("target");
    if (!s.fields.count(t) && !s.complexes.count(t)) throw ValidationError("analysis target '" + t + "' is not defined");
  }
  if (s.has("compare")) probe(parse_expression(s.get("compare")), "analysis compare");
}

inline Scenario load_scenario(const std::filesystem::path& path, std::uint64_t seed = 0) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open scenario '" + path.string() + "'");
  Scenario s = parse_scenario(in, path);
  validate_scenario(s, seed);
  return s;
}

inline SpacePtr build_space(const Scenario& s) {
  if (!s.density) return build_grid(s.domain, s.resolution);
  const Expr g = s.density;
  return build_grid(s.domain, s.resolution, [g](std::span<const double> p) {
    const auto v = evaluate(g, p);
    if (v.imag() != 0.0) throw ValidationError("domain density must be real");
    return v.real();
  });
}

inline std::vector<Complex> evaluate_on(const Expr& e, const SampleSpace& space) {
  std::vector<Complex> v(space.size());
  parallel::parallel_for(space.size(), [&](std::size_t j) { v[j] = evaluate(e, space.point(j)); });
  for (std::size_t j = 0; j < v.size(); ++j)
    if (!std::isfinite(v[j].real()) || !std::isfinite(v[j].imag()))
      throw ValidationError("expression '" + print_expression(e) + "' is not finite at cell " + std::to_string(j));
  return v;
}

inline BundleMap build_field(const Scenario& s, const std::string& name, const SpacePtr& space) {
  auto it = s.fields.find(name);
  if (it == s.fields.end()) throw ValidationError("unknown field '" + name + "'");
  const FieldDef& f = it->second;
  const FiberField src = FiberField::constant(space, f.cols), tgt = FiberField::constant(space, f.rows);
  if (!f.table.empty()) {
    std::filesystem::path p = f.table;
    if (p.is_relative()) p = s.file.parent_path() / p;
    std::ifstream in(p);
    if (!in) throw ValidationError("cannot open table '" + p.string() + "' for field '" + name + "'");
    std::vector<Complex> data;
    std::string line;
    std::size_t ln = 0;
    while (std::getline(in, line)) {
      ++ln;
      if (detail::trim(line).empty()) continue;
      const auto cells = detail::split_top(line, ',');
      if (cells.size() != 2 * f.rows * f.cols)
        throw ValidationError(p.string() + ":" + std::to_string(ln) + ": expected " +
                              std::to_string(2 * f.rows * f.cols) + " numbers");
      for (std::size_t k = 0; k < cells.size(); k += 2)
        data.emplace_back(std::stod(cells[k]), std::stod(cells[k + 1]));
    }
    if (data.size() != space->size() * f.rows * f.cols)
      throw ValidationError("table for field '" + name + "' has " + std::to_string(data.size() / (f.rows * f.cols)) +
                            " rows for " + std::to_string(space->size()) + " cells");
    return BundleMap::generate(src, tgt, [&](std::size_t j) -> Matrix {
      Matrix m(f.rows, f.cols);
      for (std::size_t r = 0; r < f.rows; ++r)
        for (std::size_t c = 0; c < f.cols; ++c) m(r, c) = data[(j * f.rows + r) * f.cols + c];
      return m;
    });
  }
  if (f.rows == 1 && f.cols == 1) return BundleMap::scalar(space, evaluate_on(f.entries[0], *space));
  return BundleMap::generate(src, tgt, [&](std::size_t j) -> Matrix {
    Matrix m(f.rows, f.cols);
    for (std::size_t r = 0; r < f.rows; ++r)
      for (std::size_t c = 0; c < f.cols; ++c) m(r, c) = evaluate(f.entries[r * f.cols + c], space->point(j));
    return m;
  });
}

inline BundleComplex build_complex(const Scenario& s, const std::string& name, const SpacePtr& space) {
  auto it = s.complexes.find(name);
  if (it == s.complexes.end()) throw ValidationError("unknown complex '" + name + "'");
  BundleComplex c;
  for (std::size_t d : it->second.dims) c.fields.push_back(FiberField::constant(space, d));
  for (std::size_t i = 0; i < it->second.maps.size(); ++i) {
    const std::string& m = it->second.maps[i];
    c.maps.push_back(m == "0" ? BundleMap::zero(c.fields[i], c.fields[i + 1]) : build_field(s, m, space));
  }
  c.validate_shapes();
  return c;
}

inline MappingTorusSpec build_torus(const Scenario& s, const SpacePtr& space) {
  if (!s.torus) throw ValidationError("scenario has no [torus] section");
  MappingTorusSpec t;
  t.base = space;
  t.tau = evaluate_on(s.torus->tau, *space);
  t.tau_bound = s.torus->tau_bound;
  for (const auto& [deg, rows] : s.torus->phi) {
    Matrix m(rows.size(), rows.size());
    for (std::size_t r = 0; r < rows.size(); ++r)
      for (std::size_t c = 0; c < rows.size(); ++c) m(r, c) = evaluate(rows[r][c], std::span<const double>{});
    t.phi_star[deg] = m;
  }
  t.validate();
  return t;
}

}  // namespace l2ext
