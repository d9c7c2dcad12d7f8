#pragma once

/**
 * Complex-valued scalar expressions over sample coordinates.
 *
 *   expr   := term (('+' | '-') term)*
 *   term   := factor (('*' | '/') factor)*
 *   factor := '-' factor | base ('^' factor)?
 *   base   := number | ident | ident '(' args ')' | '(' expr ')'
 *
 * so '^' binds tighter than unary minus (-x^2 is -(x^2)) and is right
 * associative. Numbers may carry an 'i' suffix for imaginary literals.
 * Identifiers: coordinates x1, x2, ..., constants pi and i, and the
 * functions abs exp log sqrt sin cos min max conj cis.
 */

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdlib>
#include <complex>
#include <cstdio>
#include <memory>
#include <numbers>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "l2ext/error.hpp"

namespace l2ext {

struct ExprNode;
using Expr = std::shared_ptr<const ExprNode>;

struct ExprNode {
  enum class Kind { number, coordinate, constant, negate, binary, call };
  Kind kind = Kind::number;
  std::complex<double> value;  // number
  std::size_t index = 0;       // coordinate (0-based)
  std::string name;            // constant or function name
  char op = 0;                 // binary operator
  std::vector<Expr> args;

  friend bool operator==(const ExprNode& a, const ExprNode& b) {
    if (a.kind != b.kind || a.args.size() != b.args.size()) return false;
    switch (a.kind) {
      case Kind::number:
        if (a.value != b.value) return false;
        break;
      case Kind::coordinate:
        if (a.index != b.index) return false;
        break;
      case Kind::constant:
      case Kind::call:
        if (a.name != b.name) return false;
        break;
      case Kind::binary:
        if (a.op != b.op) return false;
        break;
      case Kind::negate:
        break;
    }
    for (std::size_t k = 0; k < a.args.size(); ++k)
      if (!(*a.args[k] == *b.args[k])) return false;
    return true;
  }
};

class ExpressionError : public ValidationError {
 public:
  ExpressionError(const std::string& what, std::size_t offset)
      : ValidationError(what + " at byte " + std::to_string(offset)), offset_(offset) {}
  std::size_t offset() const { return offset_; }

 private:
  std::size_t offset_;
};

namespace detail {

struct FunctionInfo {
  const char* name;
  std::size_t arity;
};

inline constexpr FunctionInfo expression_functions[] = {
    {"abs", 1}, {"exp", 1}, {"log", 1}, {"sqrt", 1}, {"sin", 1},  {"cos", 1},
    {"min", 2}, {"max", 2}, {"conj", 1}, {"cis", 1},
};

inline const FunctionInfo* find_function(std::string_view name) {
  for (const auto& f : expression_functions)
    if (name == f.name) return &f;
  return nullptr;
}

class Parser {
 public:
  explicit Parser(std::string_view text) : s_(text) {}

  Expr parse() {
    skip();
    if (pos_ >= s_.size()) throw ExpressionError("empty expression", pos_);
    Expr e = expr();
    skip();
    if (pos_ < s_.size()) throw ExpressionError(std::string("unexpected '") + s_[pos_] + "'", pos_);
    return e;
  }

 private:
  static Expr make(ExprNode n) { return std::make_shared<const ExprNode>(std::move(n)); }
  static Expr binary(char op, Expr l, Expr r) {
    ExprNode n;
    n.kind = ExprNode::Kind::binary;
    n.op = op;
    n.args = {std::move(l), std::move(r)};
    return make(std::move(n));
  }

  void skip() {
    while (pos_ < s_.size() && (s_[pos_] == ' ' || s_[pos_] == '\t' || s_[pos_] == '\n' || s_[pos_] == '\r')) ++pos_;
  }
  bool accept(char c) {
    skip();
    if (pos_ < s_.size() && s_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  Expr expr() {
    Expr e = term();
    for (;;) {
      if (accept('+')) e = binary('+', e, term());
      else if (accept('-')) e = binary('-', e, term());
      else return e;
    }
  }
  Expr term() {
    Expr e = factor();
    for (;;) {
      if (accept('*')) e = binary('*', e, factor());
      else if (accept('/')) e = binary('/', e, factor());
      else return e;
    }
  }
  Expr factor() {
    if (accept('-')) {
      ExprNode n;
      n.kind = ExprNode::Kind::negate;
      n.args = {factor()};
      return make(std::move(n));
    }
    Expr b = base();
    if (accept('^')) return binary('^', b, factor());
    return b;
  }
  Expr base() {
    skip();
    if (pos_ >= s_.size()) throw ExpressionError("unexpected end of expression", pos_);
    const char c = s_[pos_];
    if (c == '(') {
      ++pos_;
      Expr e = expr();
      if (!accept(')')) throw ExpressionError("expected ')'", pos_);
      return e;
    }
    if ((c >= '0' && c <= '9') || c == '.') return number();
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') return identifier();
    throw ExpressionError(std::string("unexpected '") + c + "'", pos_);
  }
  Expr number() {
    const std::size_t start = pos_;
    while (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) ++pos_;
    if (pos_ < s_.size() && s_[pos_] == '.') {
      ++pos_;
      while (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) ++pos_;
    }
    if (pos_ < s_.size() && (s_[pos_] == 'e' || s_[pos_] == 'E')) {
      std::size_t p = pos_ + 1;
      if (p < s_.size() && (s_[p] == '+' || s_[p] == '-')) ++p;
      if (p < s_.size() && std::isdigit(static_cast<unsigned char>(s_[p]))) {
        pos_ = p;
        while (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) ++pos_;
      }
    }
    const std::string lit(s_.substr(start, pos_ - start));
    if (lit == ".") throw ExpressionError("malformed number", start);
    const double v = std::strtod(lit.c_str(), nullptr);
    if (!std::isfinite(v)) throw ExpressionError("number out of range", start);
    ExprNode n;
    n.kind = ExprNode::Kind::number;
    const bool imag = pos_ < s_.size() && s_[pos_] == 'i' &&
                      (pos_ + 1 >= s_.size() || !std::isalnum(static_cast<unsigned char>(s_[pos_ + 1])));
    if (imag) ++pos_;
    n.value = imag ? std::complex<double>(0.0, v) : std::complex<double>(v, 0.0);
    return make(std::move(n));
  }
  Expr identifier() {
    const std::size_t start = pos_;
    while (pos_ < s_.size() && (std::isalnum(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '_')) ++pos_;
    const std::string id(s_.substr(start, pos_ - start));
    skip();
    if (pos_ < s_.size() && s_[pos_] == '(') {
      const FunctionInfo* f = find_function(id);
      if (!f) throw ExpressionError("unknown function '" + id + "'", start);
      ++pos_;
      ExprNode n;
      n.kind = ExprNode::Kind::call;
      n.name = id;
      if (!accept(')')) {
        n.args.push_back(expr());
        while (accept(',')) n.args.push_back(expr());
        if (!accept(')')) throw ExpressionError("expected ')' or ','", pos_);
      }
      if (n.args.size() != f->arity)
        throw ExpressionError("function '" + id + "' takes " + std::to_string(f->arity) + " argument(s), got " +
                                  std::to_string(n.args.size()),
                              start);
      return make(std::move(n));
    }
    ExprNode n;
    if (id == "pi" || id == "i") {
      n.kind = ExprNode::Kind::constant;
      n.name = id;
      return make(std::move(n));
    }
    if (id.size() >= 2 && id[0] == 'x' && id.find_first_not_of("0123456789", 1) == std::string::npos && id[1] != '0') {
      n.kind = ExprNode::Kind::coordinate;
      n.index = std::stoul(id.substr(1)) - 1;
      return make(std::move(n));
    }
    if (find_function(id)) throw ExpressionError("function '" + id + "' needs arguments", start);
    throw ExpressionError("unknown identifier '" + id + "'", start);
  }

  std::string_view s_;
  std::size_t pos_ = 0;
};

inline int precedence(const ExprNode& n) {
  switch (n.kind) {
    case ExprNode::Kind::binary:
      return n.op == '+' || n.op == '-' ? 1 : n.op == '^' ? 4 : 2;
    case ExprNode::Kind::negate: return 3;
    default: return 5;
  }
}

inline std::string format_real(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline void print(const ExprNode& n, std::string& out) {
  auto child = [&](const Expr& c, bool paren) {
    if (paren) out += '(';
    print(*c, out);
    if (paren) out += ')';
  };
  switch (n.kind) {
    case ExprNode::Kind::number:
      if (n.value.imag() != 0.0 && n.value.real() == 0.0 && n.value.imag() > 0.0) {
        out += format_real(n.value.imag()) + "i";
      } else if (n.value.imag() == 0.0 && n.value.real() >= 0.0) {
        out += format_real(n.value.real());
      } else {
        // Not produced by the parser; printed as an equivalent expression.
        out += "(" + format_real(n.value.real()) + (n.value.imag() < 0 ? "-" : "+") +
               format_real(std::abs(n.value.imag())) + "i)";
      }
      return;
    case ExprNode::Kind::coordinate:
      out += "x" + std::to_string(n.index + 1);
      return;
    case ExprNode::Kind::constant:
      out += n.name;
      return;
    case ExprNode::Kind::negate:
      out += '-';
      child(n.args[0], precedence(*n.args[0]) < 3);
      return;
    case ExprNode::Kind::call:
      out += n.name + "(";
      for (std::size_t k = 0; k < n.args.size(); ++k) {
        if (k) out += ", ";
        print(*n.args[k], out);
      }
      out += ')';
      return;
    case ExprNode::Kind::binary: {
      const int p = precedence(n);
      if (n.op == '^') {
        child(n.args[0], precedence(*n.args[0]) < 5);
        out += '^';
        child(n.args[1], precedence(*n.args[1]) < 3);
      } else {
        child(n.args[0], precedence(*n.args[0]) < p);
        out += ' ';
        out += n.op;
        out += ' ';
        child(n.args[1], precedence(*n.args[1]) <= p);
      }
      return;
    }
  }
}

inline std::complex<double> ipow(std::complex<double> b, long n) {
  if (n < 0) return 1.0 / ipow(b, -n);
  std::complex<double> r = 1.0;
  while (n) {
    if (n & 1) r *= b;
    b *= b;
    n >>= 1;
  }
  return r;
}

inline double real_arg(std::complex<double> z, const char* fn) {
  if (z.imag() != 0.0) throw ValidationError(std::string(fn) + ": argument must be real");
  return z.real();
}

}  // namespace detail

inline Expr parse_expression(std::string_view text) { return detail::Parser(text).parse(); }

inline std::string print_expression(const Expr& e) {
  std::string out;
  detail::print(*e, out);
  return out;
}

/// Highest coordinate index used plus one.
inline std::size_t coordinate_arity(const ExprNode& n) {
  std::size_t m = n.kind == ExprNode::Kind::coordinate ? n.index + 1 : 0;
  for (const auto& a : n.args) m = std::max(m, coordinate_arity(*a));
  return m;
}

inline std::complex<double> evaluate(const ExprNode& n, std::span<const double> x) {
  using C = std::complex<double>;
  switch (n.kind) {
    case ExprNode::Kind::number: return n.value;
    case ExprNode::Kind::coordinate:
      if (n.index >= x.size())
        throw ValidationError("expression uses x" + std::to_string(n.index + 1) + " on a " + std::to_string(x.size()) +
                              "-dimensional domain");
      return x[n.index];
    case ExprNode::Kind::constant: return n.name == "pi" ? C(std::numbers::pi, 0.0) : C(0.0, 1.0);
    case ExprNode::Kind::negate: return C(0.0) - evaluate(*n.args[0], x);  // no -0 imaginary part: sqrt(-4) = 2i
    case ExprNode::Kind::binary: {
      const C a = evaluate(*n.args[0], x), b = evaluate(*n.args[1], x);
      switch (n.op) {
        case '+': return a + b;
        case '-': return a - b;
        case '*': return a * b;
        case '/': return a / b;
        default: {
          if (b.imag() == 0.0) {
            const double e = b.real();
            if (e == std::round(e) && std::abs(e) <= 64.0) return detail::ipow(a, static_cast<long>(e));
            if (a.imag() == 0.0 && a.real() >= 0.0) return std::pow(a.real(), e);
          }
          return std::pow(a, b);
        }
      }
    }
    case ExprNode::Kind::call: {
      const C a = evaluate(*n.args[0], x);
      const std::string& f = n.name;
      if (f == "abs") return std::abs(a);
      if (f == "exp") return a.imag() == 0.0 ? C(std::exp(a.real())) : std::exp(a);
      if (f == "log") return a.imag() == 0.0 && a.real() > 0.0 ? C(std::log(a.real())) : std::log(a);
      if (f == "sqrt") return a.imag() == 0.0 && a.real() >= 0.0 ? C(std::sqrt(a.real())) : std::sqrt(a);
      if (f == "sin") return a.imag() == 0.0 ? C(std::sin(a.real())) : std::sin(a);
      if (f == "cos") return a.imag() == 0.0 ? C(std::cos(a.real())) : std::cos(a);
      if (f == "conj") return std::conj(a);
      if (f == "cis") {
        const double t = detail::real_arg(a, "cis");
        return {std::cos(t), std::sin(t)};
      }
      const C b = evaluate(*n.args[1], x);
      const double ra = detail::real_arg(a, f.c_str()), rb = detail::real_arg(b, f.c_str());
      return f == "min" ? std::min(ra, rb) : std::max(ra, rb);
    }
  }
  return 0.0;
}

inline std::complex<double> evaluate(const Expr& e, std::span<const double> x) { return evaluate(*e, x); }

}  // namespace l2ext
