#include <gtest/gtest.h>

#include <numbers>

#include "l2ext/expression.hpp"
#include "l2ext/selftest.hpp"

using namespace l2ext;

namespace {

Complex eval(const std::string& s, std::vector<double> x = {}) { return evaluate(parse_expression(s), x); }

}  // namespace

TEST(Expression, PrecedenceAndAssociativity) {
  EXPECT_EQ(eval("-2^2"), Complex(-4));
  EXPECT_EQ(eval("2^3^2"), Complex(512));
  EXPECT_EQ(eval("1 - 2 - 3"), Complex(-4));
  EXPECT_EQ(eval("8 / 2 / 2"), Complex(2));
  EXPECT_EQ(eval("2 + 3 * 4"), Complex(14));
  EXPECT_EQ(eval("(2 + 3) * 4"), Complex(20));
  EXPECT_EQ(eval("2^-1"), Complex(0.5));
}

TEST(Expression, CoordinatesConstantsAndFunctions) {
  EXPECT_EQ(eval("x1 * x2", {2, 3}), Complex(6));
  EXPECT_NEAR(std::abs(eval("cis(pi)") + 1.0), 0.0, 1e-15);
  EXPECT_EQ(eval("3i"), Complex(0, 3));
  EXPECT_EQ(eval("i * i"), Complex(-1));
  EXPECT_EQ(eval("conj(1 + 2i)"), Complex(1, -2));
  EXPECT_EQ(eval("abs(3 + 4i)"), Complex(5));
  EXPECT_EQ(eval("min(1, 2) + max(1, 2)"), Complex(3));
  EXPECT_DOUBLE_EQ(eval("exp(log(2))").real(), 2.0);
  EXPECT_NEAR(eval("sqrt(2)^2").real(), 2.0, 1e-15);
  EXPECT_NEAR(eval("sin(x1)^2 + cos(x1)^2", {0.3}).real(), 1.0, 1e-15);
  EXPECT_NEAR(std::abs(eval("sqrt(-4)") - Complex(0, 2)), 0.0, 1e-15);
}

TEST(Expression, Arity) {
  EXPECT_EQ(coordinate_arity(*parse_expression("x3 + x1")), 3u);
  EXPECT_EQ(coordinate_arity(*parse_expression("pi")), 0u);
  EXPECT_THROW(eval("x2", {1.0}), ValidationError);
}

TEST(Expression, Errors) {
  for (const char* bad : {"", "1 +", "(1", "1)", "foo(1)", "sin(1, 2)", "min(1)", "x0", "1 $ 2", "sin", "2 3"})
    EXPECT_THROW(parse_expression(bad), ValidationError) << bad;
  try {
    parse_expression("1 + )");
    FAIL();
  } catch (const ExpressionError& e) {
    EXPECT_EQ(e.offset(), 4u);
  }
  EXPECT_THROW(eval("cis(i)"), ValidationError);
  EXPECT_THROW(eval("min(i, 1)"), ValidationError);
}

TEST(Expression, PrintParsesBackToSameTree) {
  for (const char* s : {"-x1^2", "(x1 - 2) * (x2 + 1)", "2^3^2", "(2^3)^2", "-(1 - x1)", "1 - (2 - 3)",
                        "abs(cis(x1) - cis(0.7))^2", "x1 / (x2 * 3)", "1e-3 * x1", "2.5i"}) {
    const Expr a = parse_expression(s);
    const Expr b = parse_expression(print_expression(a));
    EXPECT_TRUE(*a == *b) << s << " -> " << print_expression(a);
  }
}

TEST(Expression, RandomRoundTrip) {
  const SuiteResult r = suite_expression_roundtrip(42, 100);
  EXPECT_EQ(r.instances, 100u);
  EXPECT_TRUE(r.pass()) << r.first_failure;
}
