#include <gtest/gtest.h>

#include <chrono>

#include "odecert/refuter.hpp"
#include "odecert/solver.hpp"
#include "support.hpp"

using namespace odecert;

namespace {

const std::string kFake = std::string(ODECERT_FIXTURES) + "/backends/fake_backend.py";

BackendSpec fake(const std::string& mode, double timeout = 5.0) {
  BackendSpec s;
  s.id = "external";
  s.command = {"python3", kFake, mode};
  s.timeout = timeout;
  return s;
}

bool canon_same(const Expr& a, const Expr& b) { return canon::equal(a, b) == canon::Verdict::Equal; }

// Central difference of F against f at a few points where both are defined.
bool fd_antiderivative(const Expr& F, const Expr& f, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> ut(0.1, 2.5);
  int checked = 0;
  for (int k = 0; k < 200 && checked < 20; ++k) {
    double tv = ut(rng), h = 1e-6;
    Valuation v{{Symbol::time(), testkit::rational_of(tv)}, {Symbol::param("a"), Rational(3, 2)},
                {Symbol::param("x0"), Rational(2, 5)}};
    auto vp = v, vm = v;
    vp[Symbol::time()] = testkit::rational_of(tv + h);
    vm[Symbol::time()] = testkit::rational_of(tv - h);
    auto fp = eval(F, vp, {1e-3}), fm = eval(F, vm, {1e-3}), fv = eval(f, v, {1e-3});
    if (!fp || !fm || !fv) continue;
    double fd = static_cast<double>((fp->real() - fm->real()) / Real(2 * h));
    double want = fv->to_double();
    if (std::abs(fd - want) > 1e-5 * std::max(1.0, std::abs(want))) return false;
    ++checked;
  }
  return checked >= 10;
}

}  // namespace

TEST(Integrate, Table) {
  std::mt19937_64 rng(5);
  const char* cases[] = {"t",          "t^3 - 2*t + 7", "1/t",          "t^(1/2)",        "t^(1/5)",
                         "sin(2*t)",   "cos(t + 1)",    "exp(-a*t)",    "ln(t)",          "tan(t)",
                         "t*exp(-t)",  "t^2*sin(t)",    "t*cos(3*t)",   "t*ln(t)",        "ln(t)/t",
                         "arcsin(t/3)", "sqrt(t + 1)",  "1/(2*t + 1)",  "2^t",            "a*t^2/2 + 5",
                         "(t + 1)^3",  "t^sqrt(2)",     "exp(t)*exp(t)", "x0*t + a"};
  for (const char* c : cases) {
    Expr f = parse_expr(c);
    auto F = integrate(f);
    ASSERT_TRUE(F) << c;
    EXPECT_TRUE(fd_antiderivative(*F, f, rng)) << c << " -> " << to_string(*F);
  }
  for (const char* c : {"exp(t^2)", "sin(t)/t", "1/(t^2 + 1)", "sin(t)*exp(t)", "ln(ln(t))"})
    EXPECT_FALSE(integrate(parse_expr(c))) << c;
}

TEST(Builtin, ExampleOne) {
  auto sys = parse_system("x' = t, y' = x, z' = 1");
  auto r = solve_builtin(sys);
  ASSERT_TRUE(r.solved());
  ASSERT_EQ(r.solutions.size(), 1u);
  auto want = parse_solution("x = t^2/2 + x0, y = t^3/6 + x0*t + y0, z = z0 + t", sys);
  for (std::size_t i = 0; i < 3; ++i)
    EXPECT_TRUE(canon_same(r.solutions[0].bindings[i].second, want.bindings[i].second))
        << to_string(r.solutions[0].bindings[i].second);
}

TEST(Builtin, Examples) {
  auto sys = parse_system("x' = x^2");
  auto r = solve_builtin(sys);
  ASSERT_TRUE(r.solved());
  EXPECT_TRUE(canon_same(r.solutions[0].bindings[0].second, parse_expr("x0/(1 - x0*t)", sys.context())));

  auto zero = solve_builtin(parse_system("x' = 0"));
  ASSERT_TRUE(zero.solved());
  EXPECT_EQ(to_string(zero.solutions[0].bindings[0].second), "x0");

  auto rot_sys = parse_system("x' = -y, y' = x");
  auto rot = solve_builtin(rot_sys);
  ASSERT_TRUE(rot.solved());
  auto want = parse_solution("x = x0*cos(t) - y0*sin(t), y = x0*sin(t) + y0*cos(t)", rot_sys);
  for (std::size_t i = 0; i < 2; ++i)
    EXPECT_TRUE(canon_same(rot.solutions[0].bindings[i].second, want.bindings[i].second));

  auto two = solve_builtin(parse_system("x' = 1/(2*x - 1)"));
  ASSERT_TRUE(two.solved());
  EXPECT_EQ(two.solutions.size(), 2u);

  auto log = solve_builtin(parse_system("x' = 1/t"));
  ASSERT_TRUE(log.solved());
  EXPECT_EQ(log.solutions[0].domain.to_string(), "(0,inf)");
}

TEST(Builtin, Unsolved) {
  for (const char* s : {"x' = sin(x)/ln(x)", "x' = x^2 - t", "x' = y, y' = exp(t^2)",
                        "x' = x + y, y' = y + 2*z, z' = x^2 + 1"}) {
    auto r = solve_builtin(parse_system(s));
    EXPECT_EQ(r.status, SolveResult::Status::Unsolved) << s;
    EXPECT_FALSE(r.detail.empty());
  }
}

TEST(Builtin, InitialValueAnchoring) {
  // The init constant is the value at t = 0 whenever that value exists.
  for (const char* s : {"x' = x + t", "x' = cos(t)", "x' = x*y, y' = 3", "x' = -2*x + exp(t)",
                        "x' = c + b*(u - x)", "x' = -b*x + a*t", "x' = a*y, y' = b"}) {
    auto sys = parse_system(s);
    auto r = solve_builtin(sys);
    ASSERT_TRUE(r.solved()) << s;
    for (const auto& [v, e] : r.solutions[0].bindings) {
      Valuation val{{Symbol::time(), Rational(0)}, {Symbol::init("x0"), Rational(7, 3)},
                    {Symbol::init("y0"), Rational(-2)}, {Symbol::param("a"), Rational(3, 5)},
                    {Symbol::param("b"), Rational(2)}, {Symbol::param("c"), Rational(-1, 7)},
                    {Symbol::param("u"), Rational(5)}};
      auto at0 = eval(e, val);
      ASSERT_TRUE(at0) << to_string(e);
      EXPECT_NEAR(at0->to_double(), v == "x" ? 7.0 / 3 : -2.0, 1e-12) << s << ": " << to_string(e);
    }
  }
}

// ---------------------------------------------------------------------------


TEST(Property, SolverCertifierLoop) {
  std::mt19937_64 rng(2024);
  for (const char* cls : {"chain", "linear", "rotation", "separable"}) {
    int solved = 0;
    for (const auto& text : testkit::family(cls, rng)) {
      auto sys = parse_system(text);
      auto r = solve_builtin(sys);
      if (!r.solved()) {
        ADD_FAILURE() << cls << ": unsolved " << text;
        continue;
      }
      ++solved;
      for (const auto& sol : r.solutions) {
        auto c = certify(sys, sol);
        EXPECT_NE(c.status, Status::Failed) << text << " with " << sol.to_string() << "\n" << c.summary();
        if (r.solutions.size() > 1) continue;
        RefuteOptions o;
        o.trials = 50;
        for (const auto& iv : refute_initial_values(sol, o))
          EXPECT_FALSE(iv.violated()) << text << " with " << sol.to_string() << " at t = 0";
      }
      if (r.solutions.size() > 1) {
        // Each branch takes the value x0 on one side of the pole; together they cover every x0.
        for (int k = -20; k <= 20; ++k) {
          Rational x0(k, 3);
          Valuation val{{Symbol::time(), Rational(0)}, {Symbol::init("x0"), x0}};
          bool hit = false;
          for (const auto& sol : r.solutions) {
            auto v = eval(sol.bindings[0].second, val);
            hit = hit || (v && std::abs(v->to_double() - x0.to_double()) < 1e-12);
          }
          EXPECT_TRUE(hit) << text << " misses x0 = " << x0.to_string();
        }
      }
    }
    EXPECT_EQ(solved, 50) << cls;
  }
}

// ---------------------------------------------------------------------------

TEST(External, EchoServer) {
  auto sys = parse_system("x' = t, y' = x, z' = 1");
  auto r = solve(sys, fake("echo"));
  ASSERT_EQ(r.status, SolveResult::Status::Solved) << r.detail;
  EXPECT_TRUE(r.domain_reported);
  EXPECT_EQ(r.backend, "external");
  EXPECT_EQ(certify(sys, r.solutions[0]).status, Status::Certified);
}

TEST(External, RequestDocument) {
  auto sys = parse_system("x' = -b*x");
  auto r = request_external(sys, fake("request"), {"b>0"});
  ASSERT_EQ(r.status, SolveResult::Status::BackendError);
  EXPECT_EQ(r.detail, encode_request(sys, {"b>0"}));
  EXPECT_EQ(r.detail,
            R"({"assumptions":["b>0"],"equations":[{"rhs":"-b*x","var":"x"}],"indep":"t","version":1})");
}

TEST(External, Outcomes) {
  auto sys = parse_system("x' = t");
  auto un = request_external(sys, fake("unsolved"));
  EXPECT_EQ(un.status, SolveResult::Status::Unsolved);
  EXPECT_EQ(un.detail, "Bessel function");
  auto leak = request_external(sys, fake("leak"));
  EXPECT_EQ(leak.status, SolveResult::Status::BackendError);
  EXPECT_NE(leak.detail.find("symbol leak"), std::string::npos) << leak.detail;
  auto bessel = request_external(sys, fake("bessel"));
  EXPECT_EQ(bessel.status, SolveResult::Status::BackendError);
  EXPECT_NE(bessel.detail.find("unparseable"), std::string::npos) << bessel.detail;
  for (const char* m : {"garbage", "truncated", "silent", "exit3"})
    EXPECT_EQ(request_external(sys, fake(m)).status, SolveResult::Status::BackendError) << m;
  auto twice = request_external(sys, fake("twice"));
  EXPECT_EQ(twice.status, SolveResult::Status::Unsolved) << twice.detail;
  EXPECT_EQ(request_external(sys, BackendSpec::parse("external:does-not-exist")).status,
            SolveResult::Status::BackendError);
  EXPECT_EQ(request_external(sys, BackendSpec{"fricas", {}, 1.0}).status, SolveResult::Status::BackendError);
}

TEST(External, Timeout) {
  auto sys = parse_system("x' = t");
  auto start = std::chrono::steady_clock::now();
  auto r = request_external(sys, fake("sleep", 0.5));
  double took = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  EXPECT_EQ(r.status, SolveResult::Status::BackendError);
  EXPECT_NE(r.detail.find("timeout"), std::string::npos);
  EXPECT_LT(took, 0.5 + kBackendGrace);
}

TEST(External, RandomBytes) {
  auto sys = parse_system("x' = t");
  for (int seed = 0; seed < 20; ++seed) {
    auto s = fake("bytes", 0.5);
    s.command.push_back(std::to_string(seed));
    auto start = std::chrono::steady_clock::now();
    auto r = request_external(sys, s);
    double took = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    EXPECT_LT(took, 0.5 + kBackendGrace) << seed;
    EXPECT_NE(r.status, SolveResult::Status::Solved) << seed;
  }
}

TEST(Property, DecodeNeverThrows) {
  auto sys = parse_system("x' = t, y' = x");
  std::mt19937_64 rng(9);
  const std::string valid =
      R"({"status":"solved","domain":"R","solutions":[[{"var":"x","expr":"t^2/2 + x0"},{"var":"y","expr":"t^3/6 + x0*t + y0"}]]})";
  EXPECT_EQ(decode_response(valid, sys, {}).status, SolveResult::Status::Solved);
  for (int i = 0; i < 3000; ++i) {
    std::string s = valid;
    std::uniform_int_distribution<int> byte(0, 255);
    int edits = 1 + static_cast<int>(rng() % 4);
    for (int k = 0; k < edits; ++k) {
      std::size_t pos = rng() % s.size();
      switch (rng() % 3) {
        case 0: s[pos] = static_cast<char>(byte(rng)); break;
        case 1: s.erase(pos, 1 + rng() % 8); break;
        default: s.resize(pos); break;
      }
      if (s.empty()) break;
    }
    EXPECT_NO_THROW(decode_response(s, sys, {}));
  }
}
