#include <gtest/gtest.h>

#include "odecert/canon.hpp"
#include "odecert/parser.hpp"
#include "support.hpp"

using namespace odecert;
using canon::Verdict;

namespace {

Expr p(std::string_view s) {
  ParseContext ctx;
  ctx.state_vars = {"x", "y"};
  return parse_expr(s, ctx);
}

Verdict eq(std::string_view a, std::string_view b, const canon::NormalizeContext& ctx = {}) {
  return canon::equal(p(a), p(b), ctx);
}

std::string norm(std::string_view s) { return canon::to_string(canon::normalize(p(s))); }

}  // namespace

TEST(Canon, RingAndFieldLaws) {
  EXPECT_EQ(eq("(t + 1)^2", "t^2 + 2*t + 1"), Verdict::Equal);
  EXPECT_EQ(eq("(t^2 - 1)/(t - 1)", "t + 1"), Verdict::Equal);
  EXPECT_EQ(eq("1/a + 1/b", "(a + b)/(a*b)"), Verdict::Equal);
  EXPECT_EQ(eq("(a*t - b*t)/(a^2 - b^2)", "t/(a + b)"), Verdict::Equal);
  EXPECT_EQ(eq("t^2", "t^3"), Verdict::NotEqualInNormalForm);
  EXPECT_EQ(eq("t", "t + 0*a"), Verdict::Equal);
}

TEST(Canon, ExampleOneResidual) {
  EXPECT_EQ(eq("-t^3*(1/6*0*(1/6)) + 3*1*t^(3 - 1)/6 + (x0*1 + 0*t) + 0", "t^2/2 + x0"),
            Verdict::Equal);
}

TEST(Canon, RewriteSet) {
  EXPECT_EQ(eq("sin(t)^2 + cos(t)^2", "1"), Verdict::Equal);
  EXPECT_EQ(eq("exp(a)*exp(b)", "exp(a + b)"), Verdict::Equal);
  EXPECT_EQ(eq("exp(2*t)", "exp(t)^2"), Verdict::Equal);
  EXPECT_EQ(eq("ln(exp(t))", "t"), Verdict::Equal);
  EXPECT_EQ(eq("tan(t)", "sin(t)/cos(t)"), Verdict::Equal);
  EXPECT_EQ(eq("sin(-t)", "-sin(t)"), Verdict::Equal);
  EXPECT_EQ(eq("cos(-t)", "cos(t)"), Verdict::Equal);
  EXPECT_EQ(eq("sqrt(t)", "t^(1/2)"), Verdict::Equal);
  EXPECT_EQ(eq("1/cos(t)^2", "1/(1 - sin(t)^2)"), Verdict::Equal);
  EXPECT_EQ(eq("sin(t)*cos(t)/cos(t)", "sin(t)"), Verdict::Equal);
  EXPECT_EQ(eq("(1 - sin(t)^2)/cos(t)", "cos(t)"), Verdict::Equal);
  EXPECT_EQ(eq("sin(t + 0)", "sin(t)"), Verdict::Equal);
  EXPECT_EQ(eq("sin((t^2 - 1)/(t - 1))", "sin(t + 1)"), Verdict::Equal);
}

TEST(Canon, ConstantRoots) {
  EXPECT_EQ(eq("sqrt(4)", "2"), Verdict::Equal);
  EXPECT_EQ(eq("sqrt(8)", "2*sqrt(2)"), Verdict::Equal);
  EXPECT_EQ(eq("sqrt(2)*sqrt(2)", "2"), Verdict::Equal);
  EXPECT_EQ(eq("1/sqrt(2)", "sqrt(2)/2"), Verdict::Equal);
  EXPECT_EQ(eq("1/(1 + sqrt(2))", "sqrt(2) - 1"), Verdict::Equal);
  EXPECT_EQ(eq("2^(3/2)", "2*sqrt(2)"), Verdict::Equal);
  EXPECT_EQ(eq("(1/4)^(1/2)", "1/2"), Verdict::Equal);
}

TEST(Canon, SymbolicRootsNeedContext) {
  EXPECT_EQ(eq("sqrt(t)^2", "t"), Verdict::NotEqualInNormalForm);
  EXPECT_EQ(eq("sqrt(t)*sqrt(t)", "t"), Verdict::NotEqualInNormalForm);
  canon::NormalizeContext ctx;
  ctx.assume_nonnegative(p("t"));
  EXPECT_EQ(eq("sqrt(t)^2", "t", ctx), Verdict::Equal);
  EXPECT_EQ(eq("t^(3/2)", "t*sqrt(t)", ctx), Verdict::Equal);
  EXPECT_EQ(eq("1/sqrt(t)", "sqrt(t)/t", ctx), Verdict::Equal);
  EXPECT_EQ(eq("t^(3/2)", "t^(1/2)*t"), Verdict::NotEqualInNormalForm);
}

TEST(Canon, NonRationalPowers) {
  EXPECT_EQ(eq("t^a*t^b", "t^(a + b)"), Verdict::Equal);
  EXPECT_EQ(eq("t^(1 + a)", "t*t^a"), Verdict::Equal);
  EXPECT_EQ(eq("t^sqrt(2)", "exp(sqrt(2)*ln(t))"), Verdict::Equal);
}

TEST(Canon, DivisionByZeroIsOpaque) {
  auto f = canon::normalize(p("1/(t - t)"));
  EXPECT_FALSE(f.is_zero());
  EXPECT_EQ(eq("1/(t - t)", "1/(t - t)"), Verdict::Equal);
  EXPECT_EQ(eq("1/(t - t)", "1/0"), Verdict::Equal);
}

TEST(Canon, CanonicalShape) {
  auto f = canon::normalize(p("(2*t + 2)/(4*t^2 - 4)"));
  EXPECT_EQ(f.den().leading_coefficient(), Rational(1));
  EXPECT_TRUE(canon::gcd(f.num(), f.den()).is_constant());
  EXPECT_EQ(norm("(2*t + 2)/(4*t^2 - 4)"), "1/2/(t - 1)");
}

TEST(Canon, OpCount) {
  EXPECT_EQ(canon::op_count_of_goal(p("t"), p("t")), 0u);
  Expr res = p("-t^3*(1/6*0*(1/6)) + 3*1*t^(3 - 1)/6 + (x0*1 + 0*t) + 0");
  Expr goal = p("t^2/2 + x0");
  EXPECT_EQ(canon::op_count_of_goal(res, goal), count_operators(res) + count_operators(goal));
  EXPECT_LT(canon::op_count_of_goal(res, goal), 25u);
}

TEST(Poly, GcdMultivariate) {
  auto x = canon::normalize(p("a"));
  auto num = canon::normalize(p("(a + b)*(a - t)*(t + 1)"));
  auto den = canon::normalize(p("(a + b)*(t + 1)^2"));
  auto g = canon::gcd(num.num(), den.num());
  EXPECT_EQ(canon::to_string(canon::RatFunc(g)), canon::to_string(canon::normalize(p("(a + b)*(t + 1)"))));
  EXPECT_FALSE(x.is_zero());
}

namespace {

std::optional<double> at(const Expr& e, const Valuation& v) { return testkit::eval_double(e, v); }

bool denominators_safe(const Expr& e, const Valuation& v) {
  for (const auto& c : structural_conditions(e))
    if (!testkit::condition_holds(c, v, 1e-3)) return false;
  return true;
}

}  // namespace

TEST(Property, EqualityIsReflexiveAndSymmetric) {
  testkit::ExprGen gen(3);
  for (int i = 0; i < 200; ++i) {
    Expr a = gen.gen(4), b = gen.gen(3);
    EXPECT_EQ(canon::equal(a, a), Verdict::Equal) << to_string(a);
    EXPECT_EQ(canon::equal(a, b), canon::equal(b, a));
  }
}

TEST(Property, EqualImpliesNumericAgreement) {
  testkit::ExprGen gen(31);
  std::uniform_real_distribution<double> u(-3, 3);
  int pairs = 0;
  for (int i = 0; i < 300; ++i) {
    Expr a = gen.gen(4);
    // A rearranged twin: normalized rendering, equal by construction of the canon.
    Expr b = canon::to_expr(canon::normalize(a));
    ASSERT_EQ(canon::equal(a, b), Verdict::Equal) << to_string(a);
    int agree = 0;
    for (int k = 0; k < 400 && agree < 100; ++k) {
      Valuation v{{Symbol::time(), testkit::rational_of(u(gen.rng))},
                  {Symbol::param("a"), testkit::rational_of(u(gen.rng))},
                  {Symbol::param("b"), testkit::rational_of(u(gen.rng))},
                  {Symbol::init("x0"), testkit::rational_of(u(gen.rng))}};
      if (!denominators_safe(a, v) || !denominators_safe(b, v)) continue;
      auto x = at(a, v), y = at(b, v);
      if (!x || !y) continue;
      ++agree;
      EXPECT_NEAR(*x, *y, 1e-8 * std::max(1.0, std::abs(*x))) << to_string(a) << " vs " << to_string(b);
    }
    if (agree > 0) ++pairs;
  }
  EXPECT_GT(pairs, 100);
}

TEST(Property, NormalizeIsIdempotent) {
  testkit::ExprGen gen(41);
  ParseContext ctx;
  ctx.state_vars = {"x"};
  for (int i = 0; i < 300; ++i) {
    Expr e = gen.gen(4);
    auto f = canon::normalize(e);
    std::string printed = canon::to_string(f);
    auto g = canon::normalize(parse_expr(printed, ctx));
    EXPECT_TRUE(f == g) << to_string(e) << " -> " << printed << " -> " << canon::to_string(g);
  }
}
