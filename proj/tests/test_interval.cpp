#include <gtest/gtest.h>

#include "odecert/errors.hpp"
#include "odecert/interval.hpp"
#include "odecert/parser.hpp"
#include "support.hpp"

using namespace odecert;

namespace {

Box t_in(const std::string& spec) { return {{Symbol::time(), IntervalSpec::parse(spec).enclose()}}; }

}  // namespace

TEST(Interval, SignsOverDomains) {
  EXPECT_TRUE(enclose(parse_expr("t"), t_in("(0,inf)")).positive());
  EXPECT_FALSE(enclose(parse_expr("t"), t_in("[0,inf)")).positive());
  EXPECT_TRUE(enclose(parse_expr("t"), t_in("[0,inf)")).nonnegative());
  EXPECT_TRUE(enclose(parse_expr("t^2 + 1"), {}).positive());
  EXPECT_TRUE(enclose(parse_expr("exp(t)"), {}).positive());
  EXPECT_TRUE(enclose(parse_expr("1 - t^2"), t_in("(-1,1)")).positive());
  EXPECT_FALSE(enclose(parse_expr("1 - t^2"), t_in("[-1,1]")).positive());
  EXPECT_TRUE(enclose(parse_expr("cos(t)"), t_in("(-1,1)")).positive());
  EXPECT_FALSE(enclose(parse_expr("cos(t)"), t_in("(-2,2)")).nonzero());
  EXPECT_TRUE(enclose(parse_expr("sqrt(2)"), {}).positive());
}

TEST(Interval, ImagesAndUndefinedness) {
  Interval r = enclose(parse_expr("1/t"), t_in("(0,1)"));
  EXPECT_EQ(r.lo, 1);
  EXPECT_TRUE(r.lo_open);
  EXPECT_TRUE(std::isinf(r.hi));
  EXPECT_TRUE(enclose(parse_expr("1/t"), t_in("(-1,1)")).maybe_undefined);
  EXPECT_TRUE(enclose(parse_expr("sqrt(t)"), t_in("(-1,1)")).maybe_undefined);
  EXPECT_FALSE(enclose(parse_expr("sqrt(t)"), t_in("[0,1]")).maybe_undefined);
  EXPECT_TRUE(enclose(parse_expr("tan(t)"), t_in("(0,2)")).maybe_undefined);
  EXPECT_TRUE(enclose(parse_expr("t"), t_in("[0,1]")).within(IntervalSpec::parse("[0,2]").enclose()));
  EXPECT_FALSE(enclose(parse_expr("t"), t_in("[0,1]")).within(IntervalSpec::parse("(0,2]").enclose()));
}

TEST(Interval, ExactConstantsStayPoints) {
  Interval i = Interval::of(Rational(1, 2));
  EXPECT_EQ(i.lo, 0.5);
  EXPECT_EQ(i.hi, 0.5);
  Interval third = Interval::of(Rational(1, 3));
  EXPECT_LT(third.lo, third.hi);
  EXPECT_LE(third.lo, 1.0 / 3);
  EXPECT_GE(third.hi, 1.0 / 3);
}

TEST(IntervalSpec, ParseAndRender) {
  EXPECT_TRUE(IntervalSpec::parse("R").is_whole());
  auto s = IntervalSpec::parse("(0, inf)");
  EXPECT_EQ(s.to_string(), "(0,inf)");
  EXPECT_FALSE(s.lo_closed);
  auto b = IntervalSpec::parse("[a, b + 1)");
  EXPECT_TRUE(b.lo_closed);
  EXPECT_EQ(b.to_string(), "[a,b + 1)");
  EXPECT_EQ(IntervalSpec::parse(b.to_string()), b);
  EXPECT_EQ(IntervalSpec::parse("(-inf,0]").to_string(), "(-inf,0]");
  EXPECT_THROW(IntervalSpec::parse("0,1"), SyntaxError);
  EXPECT_THROW(IntervalSpec::parse("(0 1)"), SyntaxError);
  EXPECT_THROW(IntervalSpec::parse("(inf,1)"), SyntaxError);
}

TEST(Property, EnclosureContainsSampledValues) {
  testkit::ExprGen gen(77);
  std::uniform_real_distribution<double> u(0, 1);
  int checked = 0;
  for (int i = 0; i < 400; ++i) {
    Expr e = gen.gen(4);
    double lo = -3 + 4 * u(gen.rng), width = 2 * u(gen.rng);
    Box box{{Symbol::time(), {lo, lo + width, false, false, false}},
            {Symbol::param("a"), {0.5, 2, false, false, false}},
            {Symbol::param("b"), {-1, 1, false, false, false}},
            {Symbol::init("x0"), {1, 1, false, false, false}}};
    Interval enc = enclose(e, box);
    for (int k = 0; k < 20; ++k) {
      Valuation v{{Symbol::time(), testkit::rational_of(lo + width * u(gen.rng))},
                  {Symbol::param("a"), testkit::rational_of(0.5 + 1.5 * u(gen.rng))},
                  {Symbol::param("b"), testkit::rational_of(-1 + 2 * u(gen.rng))},
                  {Symbol::init("x0"), Rational(1)}};
      auto val = eval(e, v);
      if (!val) continue;
      ++checked;
      double d = val->to_double();
      EXPECT_TRUE(d >= enc.lo && d <= enc.hi) << to_string(e) << " = " << d << " not in " << enc.to_string();
      if (enc.lo_open) EXPECT_GT(val->real(), Real(enc.lo)) << to_string(e);
      if (enc.hi_open) EXPECT_LT(val->real(), Real(enc.hi)) << to_string(e);
    }
  }
  EXPECT_GT(checked, 2000);
}
