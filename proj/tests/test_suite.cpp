#include <gtest/gtest.h>

#include <chrono>
#include <set>
#include <sstream>

#include "json.hpp"
#include "odecert/suite.hpp"

using namespace odecert;

namespace {

const std::string kFake = std::string(ODECERT_FIXTURES) + "/backends/fake_backend.py";

SuiteOptions builtin_opts(int jobs = 1) {
  SuiteOptions o;
  o.jobs = jobs;
  return o;
}

const ReportRow& row(const std::vector<ReportRow>& rows, const std::string& id) {
  for (const auto& r : rows)
    if (r.kase.id == id) return r;
  throw std::runtime_error("no row " + id);
}

}  // namespace

TEST(Suite, Names) {
  for (auto o : {Outcome::Certified, Outcome::Conditional, Outcome::Failed, Outcome::Unsolved, Outcome::Error})
    EXPECT_EQ(parse_outcome(outcome_name(o)), o);
  EXPECT_FALSE(parse_outcome("proved"));
  EXPECT_EQ(reason_name(Reason::BackendUnsolved), "backend-unsolved");
}

TEST(Suite, BuiltinTablePattern) {
  const auto& cases = reference_suite();
  ASSERT_EQ(cases.size(), 18u);
  auto start = std::chrono::steady_clock::now();
  auto rows = run_suite(cases, builtin_opts(4));
  double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  EXPECT_LT(secs, 30.0);
  ASSERT_EQ(rows.size(), 18u);
  for (std::size_t i = 0; i < rows.size(); ++i) EXPECT_EQ(rows[i].kase.id, cases[i].id);

  for (std::string id : {"1", "3", "4", "5", "7", "18"}) {
    auto o = row(rows, id).outcome;
    EXPECT_TRUE(o == Outcome::Certified || o == Outcome::Conditional) << "case " << id;
  }
  for (std::string id : {"14", "15", "16", "17"}) {
    EXPECT_EQ(row(rows, id).reason, Reason::BackendUnsolved) << "case " << id;
    EXPECT_FALSE(row(rows, id).solved);
    EXPECT_FALSE(row(rows, id).certified.has_value());
  }
  EXPECT_NE(row(rows, "17").note.find("Impossible"), std::string::npos) << row(rows, "17").note;
}

TEST(Suite, EveryNonCertifiedRowHasOneReason) {
  auto rows = run_suite(reference_suite(), builtin_opts(2));
  for (const auto& r : rows) {
    if (r.outcome == Outcome::Certified)
      EXPECT_EQ(r.reason, Reason::None) << r.kase.id;
    else
      EXPECT_NE(r.reason, Reason::None) << r.kase.id;
    if (r.outcome == Outcome::Conditional) EXPECT_EQ(r.reason, Reason::SideConditionUnresolved);
    if (r.outcome == Outcome::Unsolved || r.outcome == Outcome::Error) EXPECT_EQ(r.reason, Reason::BackendUnsolved);
  }
  auto sum = summary_line(rows);
  EXPECT_NE(sum.find("18 cases"), std::string::npos);
  EXPECT_NE(sum.find("backend-unsolved="), std::string::npos);
}

TEST(Suite, JobsDoNotChangeResults) {
  auto a = run_suite(reference_suite(), builtin_opts(1));
  auto b = run_suite(reference_suite(), builtin_opts(6));
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a[i].to_json(), b[i].to_json());
}

TEST(Suite, SingleCaseCertifies) {
  auto cases = load_suite(R"j([{"id": "t", "system": "x' = t", "expected": "certified"}])j");
  auto r = run_case(cases.at(0), builtin_opts());
  EXPECT_EQ(r.outcome, Outcome::Certified);
  EXPECT_TRUE(r.matches_expectation());
  EXPECT_EQ(r.certified, true);
  EXPECT_EQ(r.solution, "x = t^2/2 + x0");
}

TEST(Suite, MismatchDetected) {
  auto cases = load_suite(R"j([{"id": "q", "system": "x' = x^2 - t", "expected": "certified"}])j");
  auto r = run_case(cases.at(0), builtin_opts());
  EXPECT_EQ(r.outcome, Outcome::Unsolved);
  EXPECT_FALSE(r.matches_expectation());
}

TEST(Suite, WrongBackendAnswerFails) {
  SuiteOptions o;
  o.backend = BackendSpec::parse("external:python3 " + kFake + " wrong", 10);
  SuiteCase c{"w", "x' = x", std::nullopt, {}, "", ""};
  auto r = run_case(c, o);
  EXPECT_TRUE(r.solved);
  EXPECT_EQ(r.outcome, Outcome::Failed);
  EXPECT_EQ(r.reason, Reason::AlgebraicGoalTooLarge);
  EXPECT_NE(r.note.find("operators"), std::string::npos) << r.note;
  EXPECT_EQ(r.refuted, true);
}

TEST(Suite, BackendErrorBucketsAsUnsolved) {
  SuiteOptions o;
  o.backend = BackendSpec::parse("external:python3 " + kFake + " garbage", 10);
  SuiteCase c{"g", "x' = x", std::nullopt, {}, "", ""};
  auto r = run_case(c, o);
  EXPECT_EQ(r.outcome, Outcome::Error);
  EXPECT_EQ(r.reason, Reason::BackendUnsolved);
}

TEST(Suite, ReportRoundTrip) {
  auto rows = run_suite(reference_suite(), builtin_opts(4));
  std::ostringstream jsonl;
  for (const auto& r : rows) jsonl << r.to_json() << "\n";
  auto back = load_suite(jsonl.str());
  ASSERT_EQ(back.size(), rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    EXPECT_EQ(back[i].id, rows[i].kase.id);
    EXPECT_EQ(back[i].system, rows[i].kase.system);
    EXPECT_EQ(back[i].expected, rows[i].outcome);
  }
  auto again = run_suite(back, builtin_opts(4));
  for (const auto& r : again) EXPECT_TRUE(r.matches_expectation()) << r.kase.id;
}

TEST(Suite, RowJsonFields) {
  auto r = run_case(reference_suite().at(16), builtin_opts());
  auto j = nlohmann::json::parse(r.to_json());
  EXPECT_EQ(j["id"], "17");
  EXPECT_EQ(j["solved"], false);
  EXPECT_TRUE(j["certified"].is_null());
  EXPECT_EQ(j["reason"], "backend-unsolved");
  EXPECT_FALSE(j.contains("elapsed"));
}

TEST(Suite, AssumptionsAndDomain) {
  auto cases = load_suite(R"j([{"id": 1, "system": "x' = -b*x", "assumptions": ["b > 0"], "domain": "[0,inf)"}])j");
  ASSERT_EQ(cases.size(), 1u);
  EXPECT_EQ(cases[0].id, "1");
  EXPECT_EQ(cases[0].assumptions, std::vector<std::string>{"b > 0"});
  auto r = run_case(cases[0], builtin_opts());
  EXPECT_EQ(r.outcome, Outcome::Certified) << r.note;
}

TEST(Suite, MalformedInput) {
  for (const char* bad : {"", "[", "{\"id\": 1}", "[{\"id\": \"a\", \"system\": \"x' = \"}]",
                          "[{\"id\": \"a\", \"system\": \"x' = 1\", \"expected\": \"proved\"}]",
                          "[{\"id\": \"a\", \"system\": \"x' = 1\"}, {\"id\": \"a\", \"system\": \"x' = 2\"}]",
                          "[{\"id\": \"a\", \"system\": \"x' = 1\", \"assumptions\": \"b>0\"}]",
                          "[{\"id\": \"a\", \"system\": \"x' = 1\", \"assumptions\": [\"b >\"]}]",
                          "[{\"id\": \"a\", \"system\": \"x' = 1\", \"domain\": \"(1,0\"}]", "[3]"})
    EXPECT_THROW(load_suite(bad), SuiteError) << bad;
  EXPECT_THROW(load_suite_file("/nonexistent/suite.json"), IoError);
}

TEST(Suite, TableRendering) {
  auto rows = run_suite(reference_suite(), builtin_opts(4));
  auto table = render_table(rows);
  std::set<std::string> lines;
  std::istringstream in(table);
  std::string line;
  int n = 0;
  while (std::getline(in, line)) ++n;
  EXPECT_GE(n, 19);
  EXPECT_NE(table.find("x' = sin(x)/ln(x)"), std::string::npos);
}
