#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "filippov/expr.hpp"
#include "random_expr.hpp"

using namespace filippov;
using namespace filippov::expr;

namespace {

const SymbolSet kXY{"x", "y"};

Expression parse(const std::string& s) { return parse_expression(s, kXY); }

}  // namespace

TEST(ExprParse, ProductOfCallAndVariable) {
  const Expression e = parse("sin(x)*y");
  const Node& root = e.root();
  ASSERT_EQ(root.op, Op::Mul);
  EXPECT_EQ(root.lhs->op, Op::Sin);
  EXPECT_EQ(root.lhs->lhs->op, Op::Var);
  EXPECT_EQ(root.lhs->lhs->name, "x");
  EXPECT_EQ(root.rhs->op, Op::Var);
  EXPECT_EQ(root.rhs->name, "y");
}

TEST(ExprParse, CircleIsLeftAssociative) {
  const Expression e = parse("x^2 + y^2 - 1");
  const Node& root = e.root();
  ASSERT_EQ(root.op, Op::Sub);
  ASSERT_EQ(root.lhs->op, Op::Add);
  EXPECT_EQ(root.lhs->lhs->op, Op::Pow);
  EXPECT_EQ(root.lhs->lhs->exponent, 2);
  EXPECT_EQ(root.lhs->lhs->lhs->name, "x");
  EXPECT_EQ(root.lhs->rhs->op, Op::Pow);
  EXPECT_EQ(root.lhs->rhs->lhs->name, "y");
  ASSERT_EQ(root.rhs->op, Op::Const);
  EXPECT_EQ(root.rhs->value, 1.0);
}

TEST(ExprParse, Precedence) {
  // pow binds tighter than unary minus, which binds tighter than '*'.
  EXPECT_EQ(parse("-x^2").root().op, Op::Neg);
  EXPECT_EQ(parse("-x^2").root().lhs->op, Op::Pow);
  EXPECT_EQ(parse("-x*y").root().op, Op::Mul);
  EXPECT_EQ(parse("x - y - 1"), parse("(x - y) - 1"));
  EXPECT_FALSE(parse("x - y - 1") == parse("x - (y - 1)"));
  EXPECT_EQ(parse("x / y * 2"), parse("(x / y) * 2"));
  EXPECT_EQ(parse("x^2^1"), parse("x^2"));
}

TEST(ExprParse, UnknownIdentifier) {
  try {
    parse("x + z");
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.position(), 4u);
    EXPECT_NE(std::string(e.what()).find("unknown identifier 'z'"), std::string::npos);
  }
}

TEST(ExprParse, RejectsBadExponents) {
  EXPECT_THROW(parse("x^1.5"), ParseError);
  EXPECT_THROW(parse("x^-1"), ParseError);
  EXPECT_THROW(parse("x^y"), ParseError);
}

TEST(ExprParse, RejectsNonSmoothPrimitives) {
  try {
    parse("abs(x)");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_NE(std::string(e.what()).find("non-smooth"), std::string::npos);
  }
  EXPECT_THROW(parse("sign(y)"), ParseError);
  EXPECT_THROW(parse("tan(y)"), ParseError);
}

TEST(ExprParse, SyntaxErrorsReportPosition) {
  try {
    parse("(x + y");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.position(), 6u);
  }
  try {
    parse("x + * y");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.position(), 4u);
  }
  EXPECT_THROW(parse(""), ParseError);
  EXPECT_THROW(parse("x y"), ParseError);
  EXPECT_THROW(parse("1.2.3"), ParseError);
}

TEST(ExprParse, ParametersAndPi) {
  const Expression e = parse_expression("a*x + pi", SymbolSet{"x", "y", "a"});
  EXPECT_DOUBLE_EQ(evaluate(e, {{"x", 2.0}, {"y", 0.0}, {"a", 3.0}}), 6.0 + std::numbers::pi);
}

TEST(ExprEvaluate, Examples) {
  EXPECT_EQ(evaluate(parse("sin(x)*y"), {{"x", 0.0}, {"y", 3.0}}), 0.0);
  EXPECT_EQ(evaluate(parse("x^2 + y^2 - 1"), {{"x", 1.0}, {"y", 0.0}}), 0.0);
  EXPECT_THROW(evaluate(parse("1/(x-1)"), {{"x", 1.0}, {"y", 0.0}}), EvaluationError);
  EXPECT_THROW(evaluate(parse("x + y"), {{"x", 1.0}}), EvaluationError);
  EXPECT_THROW(evaluate(parse("sqrt(x)"), {{"x", -1.0}, {"y", 0.0}}), EvaluationError);
}

TEST(ExprDifferentiate, Examples) {
  EXPECT_EQ(differentiate(parse("sin(x)*y"), "x"), parse("cos(x)*y"));
  EXPECT_EQ(differentiate(parse("x^2 + y^2 - 1"), "y"), parse("2*y"));
  // d/dx exp(x^2) at x = 1 is 2e; oracle is the central difference.
  const Expression e = parse("exp(x^2)");
  const double symbolic = evaluate(differentiate(e, "x"), {{"x", 1.0}, {"y", 0.0}});
  const double fd = test_support::central_difference(e, "x", 1.0, 0.0);
  EXPECT_NEAR(symbolic, 2.0 * std::numbers::e, 1e-12);
  EXPECT_NEAR(symbolic, fd, 1e-6 * (1.0 + std::abs(symbolic)));
  EXPECT_THROW(differentiate(e, "z"), ConfigError);
}

TEST(ExprProperties, RoundTripIsStable) {
  test_support::ExprGenerator gen(17);
  for (int i = 0; i < 300; ++i) {
    const std::string src = gen.next();
    const Expression a = parse(src);
    const Expression b = parse(a.to_string());
    EXPECT_EQ(a, b) << src << " -> " << a.to_string() << " -> " << b.to_string();
    // Derivatives carry negative constants and nested negations.
    const Expression d = differentiate(a, "x");
    EXPECT_EQ(d, parse(d.to_string())) << d.to_string();
  }
}

TEST(ExprProperties, DerivativeMatchesFiniteDifference) {
  test_support::ExprGenerator gen(2024);
  std::mt19937 rng(99);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  for (int i = 0; i < 100; ++i) {
    const Expression e = parse(gen.next());
    for (const char* var : {"x", "y"}) {
      const Expression d = differentiate(e, var);
      for (int k = 0; k < 10; ++k) {
        const double x = u(rng), y = u(rng);
        const double sym = evaluate(d, {{"x", x}, {"y", y}});
        const double fd = test_support::central_difference(e, var, x, y);
        EXPECT_LE(std::abs(sym - fd), 1e-6 * (1.0 + std::abs(sym))) << e.to_string() << " d/d" << var;
      }
    }
  }
}

TEST(ScalarFieldTest, CompiledMatchesTreeEvaluation) {
  test_support::ExprGenerator gen(5);
  std::mt19937 rng(6);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  for (int i = 0; i < 100; ++i) {
    const Expression e = parse(gen.next(5));
    const ScalarField f(e, {});
    const double x = u(rng), y = u(rng);
    EXPECT_DOUBLE_EQ(f(x, y), evaluate(e, {{"x", x}, {"y", y}}));
  }
}

TEST(ScalarFieldTest, BindsParametersAndReportsNonFinite) {
  const ScalarField f = make_scalar("a/(x - b)", {{"a", 2.0}, {"b", 1.0}});
  EXPECT_DOUBLE_EQ(f(2.0, 0.0), 2.0);
  EXPECT_THROW(f(1.0, 0.0), EvaluationError);
  EXPECT_THROW(ScalarField(parse_expression("a*x", SymbolSet{"x", "a"}), {}), ConfigError);
}
