#include <gtest/gtest.h>

#include "odecert/errors.hpp"
#include "odecert/parser.hpp"

using namespace odecert;

TEST(Parser, Precedence) {
  Expr e = parse_expr("t^2/2");
  ASSERT_EQ(e.kind(), Kind::Div);
  EXPECT_EQ(e.child(0).kind(), Kind::Pow);
  Expr n = parse_expr("-t^2");
  ASSERT_EQ(n.kind(), Kind::Neg);
  EXPECT_EQ(n.child(0).kind(), Kind::Pow);
  Expr p = parse_expr("2^-1");
  ASSERT_EQ(p.kind(), Kind::Pow);
  EXPECT_EQ(p.child(1).kind(), Kind::Neg);
  Expr r = parse_expr("2^3^2");
  ASSERT_EQ(r.kind(), Kind::Pow);
  EXPECT_EQ(r.child(1).kind(), Kind::Pow);
  Expr s = parse_expr("a - b - c");
  ASSERT_EQ(s.kind(), Kind::Add);
  EXPECT_EQ(s.child(0).kind(), Kind::Add);
}

TEST(Parser, NumbersAndFractions) {
  EXPECT_EQ(parse_expr("0.5").value(), Rational(1, 2));
  Expr q = parse_expr("1/2");
  ASSERT_EQ(q.kind(), Kind::Div);
  EXPECT_EQ(q.child(0).value(), Rational(1));
}

TEST(Parser, IdentifierResolution) {
  ParseContext ctx;
  ctx.state_vars = {"x", "y"};
  EXPECT_EQ(parse_expr("t", ctx).kind(), Kind::Time);
  EXPECT_EQ(parse_expr("x", ctx).kind(), Kind::State);
  EXPECT_EQ(parse_expr("x0", ctx).kind(), Kind::Init);
  EXPECT_EQ(parse_expr("z0", ctx).kind(), Kind::Param);
  EXPECT_EQ(parse_expr("omega_1", ctx).kind(), Kind::Param);
  ctx.state_vars.insert("t");
  EXPECT_EQ(parse_expr("t", ctx).kind(), Kind::State);
}

TEST(Parser, Errors) {
  EXPECT_THROW(parse_expr("t +"), SyntaxError);
  EXPECT_THROW(parse_expr("(t"), SyntaxError);
  EXPECT_THROW(parse_expr("t $ 2"), SyntaxError);
  EXPECT_THROW(parse_expr("cosh(t)"), UnknownFunction);
  ParseContext ctx;
  ctx.extra_functions = {"cosh"};
  EXPECT_NO_THROW(parse_expr("cosh(t)", ctx));
  try {
    parse_expr("t + * 2");
    FAIL();
  } catch (const SyntaxError& e) {
    EXPECT_EQ(e.position(), 4u);
  }
}

TEST(System, ParsesExampleOne) {
  auto sys = parse_system("x' = t, y' = x, z' = 1");
  ASSERT_EQ(sys.size(), 3u);
  EXPECT_EQ(sys.state_vars(), (std::vector<std::string>{"x", "y", "z"}));
  EXPECT_EQ(sys.rhs("y").kind(), Kind::State);
  EXPECT_EQ(sys.to_string(), "x' = t, y' = x, z' = 1");
}

TEST(System, ForwardReferencesAndParams) {
  auto sys = parse_system("x' = y + a, y' = -x*b");
  EXPECT_EQ(sys.rhs("x").child(0).kind(), Kind::State);
  EXPECT_EQ(sys.params(), (std::set<std::string>{"a", "b"}));
}

TEST(System, Errors) {
  EXPECT_THROW(parse_system("x' = 1, x' = 2"), DuplicateStateVar);
  EXPECT_THROW(parse_system("x = 1"), SyntaxError);
  EXPECT_THROW(parse_system("x' = (1"), SyntaxError);
  EXPECT_THROW(parse_system("x' = foo(t)"), UnknownFunction);
}
