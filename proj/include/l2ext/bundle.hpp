#pragma once

/**
 * Measurable fields of finite-dimensional Hilbert spaces over a SampleSpace,
 * decomposable maps between them, and cochain complexes of such maps.
 *
 * A BundleMap stores one dense block per cell in a single flat, immutable,
 * column-major buffer shared between copies.
 */

#include <algorithm>
#include <cmath>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "l2ext/error.hpp"
#include "l2ext/linalg.hpp"
#include "l2ext/measure.hpp"
#include "l2ext/parallel.hpp"

namespace l2ext {

class FiberField {
 public:
  FiberField() = default;
  FiberField(SpacePtr base, std::vector<std::size_t> dims) : base_(std::move(base)) {
    if (!base_) throw ValidationError("fiber field without base space");
    if (dims.size() != base_->size())
      throw ValidationError("fiber field has " + std::to_string(dims.size()) + " dims for " +
                            std::to_string(base_->size()) + " cells");
    const bool all_same = std::all_of(dims.begin(), dims.end(), [&](std::size_t d) { return d == dims.front(); });
    if (all_same && !dims.empty()) {
      constant_ = dims.front();
    } else {
      dims_ = std::make_shared<const std::vector<std::size_t>>(std::move(dims));
    }
  }
  static FiberField constant(SpacePtr base, std::size_t d) {
    FiberField f;
    f.base_ = std::move(base);
    f.constant_ = d;
    return f;
  }

  const SpacePtr& base() const { return base_; }
  std::size_t size() const { return base_ ? base_->size() : 0; }
  std::size_t dim(std::size_t j) const { return constant_ ? *constant_ : (*dims_)[j]; }
  bool is_constant() const { return constant_.has_value(); }
  std::size_t max_dim() const {
    if (constant_) return *constant_;
    return dims_->empty() ? 0 : *std::max_element(dims_->begin(), dims_->end());
  }
  std::vector<std::size_t> dims() const {
    if (constant_) return std::vector<std::size_t>(size(), *constant_);
    return *dims_;
  }
  bool same_base(const FiberField& o) const { return base_.get() == o.base_.get(); }
  bool operator==(const FiberField& o) const {
    if (!same_base(o)) return false;
    if (constant_ && o.constant_) return *constant_ == *o.constant_;
    for (std::size_t j = 0; j < size(); ++j)
      if (dim(j) != o.dim(j)) return false;
    return true;
  }

  /// Fiberwise direct sum.
  friend FiberField operator+(const FiberField& a, const FiberField& b) {
    if (!a.same_base(b)) throw ValidationError("direct sum of fiber fields over different bases");
    if (a.is_constant() && b.is_constant()) return constant(a.base_, a.dim(0) + b.dim(0));
    std::vector<std::size_t> d(a.size());
    for (std::size_t j = 0; j < d.size(); ++j) d[j] = a.dim(j) + b.dim(j);
    return FiberField(a.base_, std::move(d));
  }

 private:
  SpacePtr base_;
  std::optional<std::size_t> constant_;
  std::shared_ptr<const std::vector<std::size_t>> dims_;
};

class BundleMap {
 public:
  using Block = Eigen::Map<const Matrix>;

  BundleMap() = default;

  /// Evaluates fn(j) at every cell; each result must be target.dim(j) x source.dim(j).
  template <class Fn>
  static BundleMap generate(FiberField source, FiberField target, Fn&& fn) {
    if (!source.same_base(target)) throw ValidationError("bundle map between fields over different bases");
    BundleMap m(std::move(source), std::move(target));
    auto& data = m.mutable_data();
    parallel::parallel_for(m.cells(), [&](std::size_t j) {
      const Matrix b = fn(j);
      const std::size_t r = m.target_.dim(j), c = m.source_.dim(j);
      if (static_cast<std::size_t>(b.rows()) != r || static_cast<std::size_t>(b.cols()) != c)
        throw ValidationError("block at cell " + std::to_string(j) + " has shape " + std::to_string(b.rows()) + "x" +
                              std::to_string(b.cols()) + ", expected " + std::to_string(r) + "x" + std::to_string(c));
      if (!all_finite(b)) throw ValidationError("non-finite block entry at cell " + std::to_string(j));
      std::copy(b.data(), b.data() + b.size(), data.data() + m.offset(j));
    });
    m.finish();
    return m;
  }

  /// Scalar field acting on one-dimensional fibers.
  static BundleMap scalar(const SpacePtr& base, std::span<const Complex> values) {
    if (values.size() != base->size()) throw ValidationError("scalar field size does not match the sample space");
    FiberField one = FiberField::constant(base, 1);
    BundleMap m(one, one);
    auto& data = m.mutable_data();
    for (std::size_t j = 0; j < values.size(); ++j) {
      if (!std::isfinite(values[j].real()) || !std::isfinite(values[j].imag()))
        throw ValidationError("non-finite scalar field value at cell " + std::to_string(j));
      data[j] = values[j];
    }
    m.finish();
    return m;
  }

  static BundleMap zero(FiberField source, FiberField target) {
    BundleMap m(std::move(source), std::move(target));
    m.finish();
    return m;
  }

  static BundleMap identity(const FiberField& field) {
    return generate(field, field, [&](std::size_t j) -> Matrix {
      const auto d = static_cast<Eigen::Index>(field.dim(j));
      return Matrix::Identity(d, d);
    });
  }

  const FiberField& source() const { return source_; }
  const FiberField& target() const { return target_; }
  const SpacePtr& base() const { return source_.base(); }
  std::size_t cells() const { return source_.size(); }
  double sup_norm() const { return sup_norm_; }
  bool is_scalar() const { return scalar_; }
  bool is_square() const { return source_ == target_; }

  Block block(std::size_t j) const {
    return Block(data_->data() + offset(j), static_cast<Eigen::Index>(target_.dim(j)),
                 static_cast<Eigen::Index>(source_.dim(j)));
  }
  Matrix matrix(std::size_t j) const { return Matrix(block(j)); }
  Complex scalar_at(std::size_t j) const { return (*data_)[j]; }

  /// Singular values at one cell, descending.
  RealVector singular_values_at(std::size_t j) const {
    if (scalar_) return RealVector::Constant(1, std::abs((*data_)[j]));
    return singular_values(matrix(j));
  }

 private:
  BundleMap(FiberField source, FiberField target) : source_(std::move(source)), target_(std::move(target)) {
    const std::size_t n = source_.size();
    std::size_t total = 0;
    if (source_.is_constant() && target_.is_constant()) {
      total = n * source_.dim(0) * target_.dim(0);
    } else {
      auto off = std::make_shared<std::vector<std::size_t>>(n + 1, 0);
      for (std::size_t j = 0; j < n; ++j) (*off)[j + 1] = (*off)[j] + source_.dim(j) * target_.dim(j);
      total = off->back();
      offsets_ = off;
    }
    owned_ = std::make_shared<std::vector<Complex>>(total, Complex(0.0));
    data_ = owned_;
  }
  std::vector<Complex>& mutable_data() { return *owned_; }
  std::size_t offset(std::size_t j) const {
    return offsets_ ? (*offsets_)[j] : j * source_.dim(0) * target_.dim(0);
  }
  void finish() {
    scalar_ = source_.is_constant() && target_.is_constant() && source_.dim(0) == 1 && target_.dim(0) == 1;
    const std::size_t n = cells();
    std::vector<double> norms(n, 0.0);
    parallel::parallel_for(n, [&](std::size_t j) {
      if (scalar_) {
        norms[j] = std::abs((*data_)[j]);
      } else if (source_.dim(j) > 0 && target_.dim(j) > 0) {
        norms[j] = singular_values(matrix(j))(0);
      }
    });
    sup_norm_ = 0.0;
    for (double x : norms) sup_norm_ = std::max(sup_norm_, x);
    owned_.reset();
  }

  FiberField source_, target_;
  std::shared_ptr<std::vector<Complex>> owned_;
  std::shared_ptr<const std::vector<Complex>> data_;
  std::shared_ptr<const std::vector<std::size_t>> offsets_;
  double sup_norm_ = 0.0;
  bool scalar_ = false;
};

inline void require_same_base(const BundleMap& a, const BundleMap& b, const char* what) {
  if (a.base().get() != b.base().get()) throw ValidationError(std::string(what) + ": maps over different bases");
}

/// Fiberwise conjugate transpose.
inline BundleMap adjoint_map(const BundleMap& t) {
  return BundleMap::generate(t.target(), t.source(), [&](std::size_t j) -> Matrix { return t.block(j).adjoint(); });
}

/// g∘f.
inline BundleMap compose(const BundleMap& g, const BundleMap& f) {
  require_same_base(g, f, "compose");
  if (!(f.target() == g.source())) throw ValidationError("compose: target of first map is not source of second");
  return BundleMap::generate(f.source(), g.target(), [&](std::size_t j) -> Matrix { return g.block(j) * f.block(j); });
}

inline BundleMap add(const BundleMap& a, const BundleMap& b, Complex scale_b = 1.0) {
  require_same_base(a, b, "add");
  if (!(a.source() == b.source()) || !(a.target() == b.target())) throw ValidationError("add: shape mismatch");
  return BundleMap::generate(a.source(), a.target(),
                             [&](std::size_t j) -> Matrix { return a.block(j) + scale_b * b.block(j); });
}

inline BundleMap scale(const BundleMap& a, Complex s) {
  return BundleMap::generate(a.source(), a.target(), [&](std::size_t j) -> Matrix { return s * a.block(j); });
}

/// Block-diagonal a ⊕ b.
inline BundleMap direct_sum(const BundleMap& a, const BundleMap& b) {
  require_same_base(a, b, "direct_sum");
  return BundleMap::generate(a.source() + b.source(), a.target() + b.target(), [&](std::size_t j) -> Matrix {
    const auto ra = a.block(j).rows(), ca = a.block(j).cols();
    const auto rb = b.block(j).rows(), cb = b.block(j).cols();
    Matrix m = Matrix::Zero(ra + rb, ca + cb);
    m.topLeftCorner(ra, ca) = a.block(j);
    m.bottomRightCorner(rb, cb) = b.block(j);
    return m;
  });
}

/// [a, b]: S_a ⊕ S_b → T.
inline BundleMap hstack(const BundleMap& a, const BundleMap& b) {
  require_same_base(a, b, "hstack");
  if (!(a.target() == b.target())) throw ValidationError("hstack: targets differ");
  return BundleMap::generate(a.source() + b.source(), a.target(), [&](std::size_t j) -> Matrix {
    Matrix m(a.block(j).rows(), a.block(j).cols() + b.block(j).cols());
    m << a.block(j), b.block(j);
    return m;
  });
}

/// [a; b]: S → T_a ⊕ T_b.
inline BundleMap vstack(const BundleMap& a, const BundleMap& b) {
  require_same_base(a, b, "vstack");
  if (!(a.source() == b.source())) throw ValidationError("vstack: sources differ");
  return BundleMap::generate(a.source(), a.target() + b.target(), [&](std::size_t j) -> Matrix {
    Matrix m(a.block(j).rows() + b.block(j).rows(), a.block(j).cols());
    m << a.block(j), b.block(j);
    return m;
  });
}

/// max_j of the operator norm of a(j) - b(j).
inline double max_residual(const BundleMap& a, const BundleMap& b) {
  require_same_base(a, b, "max_residual");
  if (!(a.source() == b.source()) || !(a.target() == b.target())) throw ValidationError("max_residual: shape mismatch");
  std::vector<double> r(a.cells(), 0.0);
  parallel::parallel_for(a.cells(), [&](std::size_t j) {
    const Matrix d = a.block(j) - b.block(j);
    if (d.size() > 0) r[j] = singular_values(d)(0);
  });
  double m = 0.0;
  for (double x : r) m = std::max(m, x);
  return m;
}

struct BundleComplex {
  std::vector<FiberField> fields;  // E^0 .. E^N
  std::vector<BundleMap> maps;     // d^i : E^i -> E^{i+1}

  std::size_t top_degree() const { return fields.empty() ? 0 : fields.size() - 1; }
  const SpacePtr& base() const { return fields.front().base(); }

  /// Shape checks only.
  void validate_shapes() const {
    if (fields.empty()) throw ValidationError("complex has no fields");
    if (maps.size() + 1 != fields.size())
      throw ValidationError("complex with " + std::to_string(fields.size()) + " fields needs " +
                            std::to_string(fields.size() - 1) + " maps, got " + std::to_string(maps.size()));
    for (std::size_t i = 0; i < maps.size(); ++i) {
      if (!(maps[i].source() == fields[i]) || !(maps[i].target() == fields[i + 1]))
        throw ValidationError("differential d^" + std::to_string(i) + " does not map E^" + std::to_string(i) +
                              " to E^" + std::to_string(i + 1));
    }
  }
};

struct ComplexCheck {
  double max_residual = 0.0;
  std::size_t worst_degree = 0;
  std::size_t worst_cell = 0;
  bool passed = true;
};

inline constexpr double default_tol_complex = 1e-10;

inline ComplexCheck check_complex(const BundleComplex& c, double tol_complex = default_tol_complex) {
  c.validate_shapes();
  ComplexCheck out;
  for (std::size_t i = 0; i + 1 < c.maps.size(); ++i) {
    const BundleMap& a = c.maps[i];
    const BundleMap& b = c.maps[i + 1];
    std::vector<double> r(a.cells(), 0.0);
    parallel::parallel_for(a.cells(), [&](std::size_t j) {
      const Matrix p = b.block(j) * a.block(j);
      if (p.size() > 0) r[j] = singular_values(p)(0);
    });
    for (std::size_t j = 0; j < r.size(); ++j) {
      if (r[j] > out.max_residual) {
        out.max_residual = r[j];
        out.worst_degree = i;
        out.worst_cell = j;
      }
    }
  }
  out.passed = out.max_residual <= tol_complex;
  return out;
}

inline void require_complex(const BundleComplex& c, double tol_complex = default_tol_complex) {
  const ComplexCheck chk = check_complex(c, tol_complex);
  if (!chk.passed)
    throw ValidationError("not a cochain complex: |d^" + std::to_string(chk.worst_degree + 1) + " d^" +
                          std::to_string(chk.worst_degree) + "| = " + std::to_string(chk.max_residual) +
                          " at cell " + std::to_string(chk.worst_cell));
}

/// Δ^i = d^{i*} d^i + d^{i-1} d^{i-1*}, one fiber.
inline Matrix laplacian_block(const BundleComplex& c, std::size_t i, std::size_t j) {
  const auto d = static_cast<Eigen::Index>(c.fields[i].dim(j));
  Matrix lap = Matrix::Zero(d, d);
  if (i < c.maps.size()) lap += c.maps[i].block(j).adjoint() * c.maps[i].block(j);
  if (i > 0) lap += c.maps[i - 1].block(j) * c.maps[i - 1].block(j).adjoint();
  return lap;
}

inline BundleMap laplacian(const BundleComplex& c, std::size_t i) {
  c.validate_shapes();
  if (i > c.top_degree()) throw ValidationError("laplacian: degree " + std::to_string(i) + " out of range");
  return BundleMap::generate(c.fields[i], c.fields[i], [&](std::size_t j) { return laplacian_block(c, i, j); });
}

/// Rank of every differential at one cell.
inline std::vector<std::size_t> fiber_ranks(const BundleComplex& c, std::size_t j, double eps_rank = default_eps_rank) {
  std::vector<std::size_t> r(c.maps.size());
  for (std::size_t i = 0; i < c.maps.size(); ++i) r[i] = numeric_rank(c.maps[i].singular_values_at(j), eps_rank);
  return r;
}

/// β^i(ξ_j) = dim ker d^i - rank d^{i-1}.
inline std::vector<std::size_t> fiber_betti(const BundleComplex& c, std::size_t j, double eps_rank = default_eps_rank) {
  const auto r = fiber_ranks(c, j, eps_rank);
  std::vector<std::size_t> b(c.fields.size());
  for (std::size_t i = 0; i < b.size(); ++i) {
    const std::size_t dim = c.fields[i].dim(j);
    const std::size_t out = i < r.size() ? r[i] : 0;
    const std::size_t in = i > 0 ? r[i - 1] : 0;
    if (out + in > dim) throw ValidationError("fiber_betti: ranks exceed fiber dimension; not a complex");
    b[i] = dim - out - in;
  }
  return b;
}

/// Same numbers from the multiplicity of the near-zero eigenvalues of Δ^i.
inline std::vector<std::size_t> fiber_betti_laplacian(const BundleComplex& c, std::size_t j,
                                                      double eps_rank = default_eps_rank) {
  std::vector<std::size_t> b(c.fields.size());
  for (std::size_t i = 0; i < b.size(); ++i) {
    const Matrix lap = laplacian_block(c, i, j);
    if (lap.rows() == 0) {
      b[i] = 0;
      continue;
    }
    const RealVector ev = hermitian_eigs(lap, false).eigenvalues;
    // Eigenvalues of Δ are squared singular values of the differentials.
    const double thr = rank_threshold(std::sqrt(std::max(ev.maxCoeff(), 0.0)), eps_rank);
    std::size_t k = 0;
    for (Eigen::Index e = 0; e < ev.size(); ++e) k += ev(e) <= thr * thr;
    b[i] = k;
  }
  return b;
}

/// ∫ Tr T(ξ) dν, summed in cell order.
inline Complex trace_endo(const BundleMap& t, const DensityMeasure& nu) {
  if (!t.is_square()) throw ValidationError("trace_endo: blocks are not square");
  if (!nu.on(*t.base())) throw ValidationError("trace_endo: measure lives on a different space");
  Complex s = 0.0;
  for (std::size_t j = 0; j < t.cells(); ++j) {
    const double w = nu.weight(j);
    if (w == 0.0) continue;
    s += t.block(j).trace() * w;
  }
  return s;
}

inline double vn_dimension(const FiberField& h, const DensityMeasure& nu) {
  if (!nu.on(*h.base())) throw ValidationError("vn_dimension: measure lives on a different space");
  double s = 0.0;
  for (std::size_t j = 0; j < h.size(); ++j) s += static_cast<double>(h.dim(j)) * nu.weight(j);
  return s;
}

}  // namespace l2ext
