#include <gtest/gtest.h>

#include "odecert/certifier.hpp"
#include "odecert/errors.hpp"
#include "support.hpp"

using namespace odecert;

namespace {

Certificate run(const std::string& sys_text, const std::string& sol_text, const std::string& domain = "R",
                const std::vector<std::string>& assume = {}) {
  auto sys = parse_system(sys_text);
  auto sol = parse_solution(sol_text, sys);
  sol.domain = IntervalSpec::parse(domain);
  return certify(sys, sol, parse_assumptions(assume, sys.context()));
}

const ConditionRecord* find_condition(const Certificate& c, const std::string& text) {
  for (const auto& r : c.conditions)
    if (r.condition.to_string() == text) return &r;
  return nullptr;
}

SideCondition cond(ConditionShape s, const std::string& e) { return {s, parse_expr(e), "test", 0}; }

}  // namespace

TEST(Certify, ExampleOne) {
  auto c = run("x' = t, y' = x, z' = 1", "x = t^2/2 + x0, y = t^3/6 + x0*t + y0, z = z0 + t");
  EXPECT_EQ(c.status, Status::Certified) << c.summary();
  ASSERT_EQ(c.components.size(), 3u);
  for (const auto& comp : c.components) EXPECT_EQ(comp.verdict, canon::Verdict::Equal);
  auto six = find_condition(c, "6 != 0");
  auto two = find_condition(c, "2 != 0");
  ASSERT_TRUE(six && two);
  EXPECT_EQ(six->discharge.disposition, Disposition::DischargedArithmetic);
  EXPECT_EQ(two->discharge.disposition, Disposition::DischargedArithmetic);
  EXPECT_EQ(c.range, RangeVerdict::Holds);
}

TEST(Certify, Gravity) {
  auto c = run("h' = v, v' = -g", "h = h0 + v0*t - g*t^2/2, v = v0 - g*t");
  EXPECT_EQ(c.status, Status::Certified) << c.summary();
}

TEST(Certify, MutatedComponentFails) {
  auto c = run("x' = t, y' = x, z' = 1", "x = t^2/2 + x0, y = t^3/6 + x0*t + y0, z = z0 + 2*t");
  EXPECT_EQ(c.status, Status::Failed);
  EXPECT_EQ(c.reason, "algebraic-goal-too-large");
  const auto& z = c.components[2];
  EXPECT_EQ(z.verdict, canon::Verdict::NotEqualInNormalForm);
  EXPECT_EQ(canon::to_string(canon::normalize(*z.computed)), "2");
  EXPECT_EQ(to_string(z.expected), "1");
  EXPECT_EQ(c.components[0].verdict, canon::Verdict::Equal);
}

TEST(Certify, RiccatiIsConditional) {
  auto c = run("x' = x^2", "x = x0/(1 - x0*t)");
  EXPECT_EQ(c.status, Status::ConditionallyCertified) << c.summary();
  auto r = find_condition(c, "1 - x0*t != 0");
  ASSERT_TRUE(r);
  EXPECT_EQ(r->discharge.disposition, Disposition::Unresolved);
}

TEST(Certify, DomainDischargesLogarithm) {
  auto c = run("x' = 1/t", "x = ln(t) + x0", "(0,inf)");
  EXPECT_EQ(c.status, Status::Certified) << c.summary();
  auto on_line = run("x' = 1/t", "x = ln(t) + x0");
  EXPECT_EQ(on_line.status, Status::ConditionallyCertified);
}

TEST(Certify, SquareRootUsesPositivityContext) {
  auto c = run("x' = sqrt(t)", "x = 2/3*t^(3/2) + x0", "(0,inf)");
  EXPECT_EQ(c.status, Status::Certified) << c.summary();
}

TEST(Certify, AssumptionDischarges) {
  auto c = run("x' = -b*x", "x = x0*exp(-b*t)", "R", {});
  EXPECT_EQ(c.status, Status::Certified) << c.summary();
  auto d = run("x' = a/b", "x = a*t/b + x0", "R", {"b>0"});
  EXPECT_EQ(d.status, Status::Certified) << d.summary();
  EXPECT_EQ(d.assumptions_used, (std::vector<std::string>{"b>0"}));
  auto e = run("x' = a/b", "x = a*t/b + x0");
  EXPECT_EQ(e.status, Status::ConditionallyCertified);
}

TEST(Certify, NoRuleFails) {
  auto sys = parse_system("x' = 1");
  Solution sol;
  sol.bindings.emplace_back("x", Expr::func("cosh", Expr::time()));
  auto c = certify(sys, sol);
  EXPECT_EQ(c.status, Status::Failed);
  EXPECT_EQ(c.reason, "no-derivative-rule");
}

TEST(Certify, ShapeErrors) {
  auto sys = parse_system("x' = 1, y' = 2");
  EXPECT_THROW(certify(sys, parse_solution("x = t", sys)), ShapeMismatch);
  EXPECT_THROW(parse_solution("x = t, z = 1", sys), ShapeMismatch);
  EXPECT_THROW(parse_solution("x = y", sys), Error);
  Solution bad;
  bad.bindings = {{"x", Expr::state("y")}, {"y", Expr::time()}};
  EXPECT_THROW(certify(sys, bad), ShapeMismatch);
}

TEST(Discharge, Examples) {
  auto whole = IntervalSpec::whole();
  EXPECT_EQ(discharge(cond(ConditionShape::NonZero, "6"), whole, {}).disposition,
            Disposition::DischargedArithmetic);
  auto b = discharge(cond(ConditionShape::Positive, "b"), whole, parse_assumptions({"b>0"}));
  EXPECT_EQ(b.disposition, Disposition::DischargedByAssumption);
  EXPECT_EQ(b.assumption, "b>0");
  EXPECT_EQ(discharge(cond(ConditionShape::Positive, "t"), IntervalSpec::parse("(0,inf)"), {}).disposition,
            Disposition::DischargedByDomain);
  EXPECT_EQ(discharge(cond(ConditionShape::Positive, "t"), whole, {}).disposition, Disposition::Unresolved);
  EXPECT_EQ(discharge(cond(ConditionShape::NonZero, "-2*b"), whole, parse_assumptions({"b>0"})).disposition,
            Disposition::DischargedByAssumption);
  EXPECT_EQ(discharge(cond(ConditionShape::Positive, "a*t"), IntervalSpec::parse("(0,1)"),
                      parse_assumptions({"a>1"}))
                .disposition,
            Disposition::DischargedByDomain);
  EXPECT_EQ(discharge(cond(ConditionShape::NonZero, "0"), whole, {}).disposition, Disposition::Unresolved);
  EXPECT_EQ(discharge(cond(ConditionShape::Positive, "1 - e"), whole, parse_assumptions({"e<1"})).disposition,
            Disposition::DischargedByAssumption);
}

TEST(Assumptions, Parse) {
  auto a = Assumption::parse("b>0");
  EXPECT_EQ(a.shape, ConditionShape::Positive);
  EXPECT_EQ(to_string(a.expr), "b");
  EXPECT_EQ(to_string(Assumption::parse("e<0").expr), "-e");
  EXPECT_EQ(Assumption::parse("b>=0").shape, ConditionShape::NonNegative);
  EXPECT_EQ(Assumption::parse("b != 0").shape, ConditionShape::NonZero);
  EXPECT_EQ(to_string(Assumption::parse("a>b").expr), "a - b");
  EXPECT_THROW(Assumption::parse("t>0"), ShapeMismatch);
  EXPECT_THROW(Assumption::parse("b"), SyntaxError);
}

TEST(Range, Examples) {
  auto sys = parse_system("x' = 1");
  auto sol = parse_solution("x = t", sys);
  EXPECT_EQ(check_range(sol), RangeVerdict::Holds);
  sol.domain = IntervalSpec::parse("[0,1]");
  sol.codomain["x"] = IntervalSpec::parse("[0,2]");
  EXPECT_EQ(check_range(sol), RangeVerdict::Holds);
  auto inv = parse_solution("x = 1/t", sys);
  inv.domain = IntervalSpec::parse("(0,1)");
  inv.codomain["x"] = IntervalSpec::parse("[0,1]");
  EXPECT_EQ(check_range(inv), RangeVerdict::Unresolved);
}

// ---------------------------------------------------------------------------

namespace {

// x' = (derivative of b, canonicalized) with solution x = b.
std::pair<OdeSystem, Solution> self_consistent(const Expr& b) {
  Expr rhs = canon::to_expr(canon::normalize(differentiate(b).derivative));
  OdeSystem sys({Equation{"x", rhs}});
  Solution sol;
  sol.bindings.emplace_back("x", b);
  return {sys, sol};
}

// Numeric oracle: central difference of each binding against the substituted rhs.
bool numerically_solves(const OdeSystem& sys, const Solution& sol, std::mt19937_64& rng, int samples,
                        double t_lo, double t_hi, std::string* why) {
  std::uniform_real_distribution<double> ut(t_lo, t_hi), up(0.2, 3);
  std::map<Symbol, Expr> subst;
  for (const auto& [v, e] : sol.bindings) subst.emplace(Symbol::state(v), e);
  int done = 0;
  for (int k = 0; k < samples * 20 && done < samples; ++k) {
    Valuation v{{Symbol::time(), testkit::rational_of(ut(rng))},
                {Symbol::param("a"), testkit::rational_of(up(rng))},
                {Symbol::param("b"), testkit::rational_of(up(rng))},
                {Symbol::init("x0"), testkit::rational_of(up(rng))}};
    bool ok = true;
    for (const auto& eq : sys.equations()) {
      Expr rhs = substitute(eq.rhs, subst);
      const Expr& b = *sol.binding(eq.var);
      for (const auto& c : structural_conditions(rhs)) ok = ok && testkit::condition_holds(c, v, 1e-3);
      for (const auto& c : structural_conditions(b)) ok = ok && testkit::condition_holds(c, v, 1e-3);
    }
    if (!ok) continue;
    const double h = 1e-6;
    bool all = true;
    for (const auto& eq : sys.equations()) {
      const Expr& b = *sol.binding(eq.var);
      auto vp = v, vm = v;
      vp[Symbol::time()] = v[Symbol::time()] + testkit::rational_of(h);
      vm[Symbol::time()] = v[Symbol::time()] - testkit::rational_of(h);
      auto fp = eval(b, vp), fm = eval(b, vm);
      auto r = eval(substitute(eq.rhs, subst), v, {1e-3});
      if (!fp || !fm || !r) {
        all = false;
        break;
      }
      double fd = static_cast<double>((fp->real() - fm->real()) / Real(2 * h));
      double want = r->to_double();
      if (std::abs(fd - want) > 1e-4 * std::max(std::abs(want), 1e-4)) {
        if (why) *why = "t=" + std::to_string(v[Symbol::time()].to_double()) + " fd=" + std::to_string(fd) +
                        " rhs=" + std::to_string(want);
        return false;
      }
    }
    if (all) ++done;
  }
  return true;
}

}  // namespace

TEST(Property, NoFalseCertification) {
  testkit::ExprGen gen(123);
  gen.names = {"sin", "cos", "exp", "ln", "sqrt"};
  int certified = 0;
  for (int i = 0; i < 300; ++i) {
    Expr b = gen.gen(3);
    auto [sys, sol] = self_consistent(b);
    // Every other candidate is perturbed so wrong answers are in the mix too.
    if (i % 2) sol.bindings[0].second = Expr::add(b, Expr::mul(Expr::time(), Expr::constant(Rational(1, 7))));
    sol.domain = IntervalSpec::parse(i % 3 ? "(0,inf)" : "R");
    auto cert = certify(sys, sol, parse_assumptions({"a>0", "b>0", "x0>0"}, sys.context()));
    if (cert.status != Status::Certified) continue;
    ++certified;
    std::string why;
    EXPECT_TRUE(numerically_solves(sys, sol, gen.rng, 100, 0.05, 3, &why))
        << sys.to_string() << " with " << sol.to_string() << ": " << why;
  }
  EXPECT_GT(certified, 60);
}

TEST(Property, Compositionality) {
  testkit::ExprGen gen(321);
  gen.names = {"sin", "cos", "exp"};
  gen.division = false;
  for (int i = 0; i < 80; ++i) {
    Expr b1 = gen.gen(3), b2 = gen.gen(3);
    Expr d1 = canon::to_expr(canon::normalize(differentiate(b1).derivative));
    Expr d2 = canon::to_expr(canon::normalize(differentiate(b2).derivative));
    // Couple the equations through terms that vanish on the solution.
    Expr r1 = Expr::add(d1, Expr::mul(Expr::param("a"), Expr::add(Expr::state("y"), Expr::neg(b2))));
    Expr r2 = i % 3 == 0 ? Expr::add(d2, Expr::constant(Rational(1))) : d2;
    OdeSystem sys({Equation{"x", r1}, Equation{"y", r2}});
    Solution sol;
    sol.bindings = {{"x", b1}, {"y", b2}};
    auto whole = certify(sys, sol);
    bool all = true;
    for (std::size_t k = 0; k < 2; ++k) {
      auto [s1, p1] = project(sys, sol, k);
      all = all && certify(s1, p1).status == Status::Certified;
    }
    EXPECT_EQ(whole.status == Status::Certified, all && whole.range == RangeVerdict::Holds)
        << sys.to_string() << " with " << sol.to_string();
  }
}

TEST(Property, MonotoneInAssumptions) {
  testkit::ExprGen gen(55);
  for (int i = 0; i < 150; ++i) {
    Expr b = gen.gen(3);
    auto [sys, sol] = self_consistent(b);
    auto bare = certify(sys, sol);
    auto more = certify(sys, sol, parse_assumptions({"a>0", "b>0", "x0>0"}, sys.context()));
    if (bare.status == Status::Certified) EXPECT_NE(more.status, Status::Failed) << to_string(b);
    if (bare.status != Status::Failed) EXPECT_NE(more.status, Status::Failed) << to_string(b);
  }
}
