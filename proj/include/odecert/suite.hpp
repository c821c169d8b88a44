#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "odecert/errors.hpp"
#include "odecert/solver.hpp"

namespace odecert {

class SuiteError : public Error {
 public:
  using Error::Error;
};

/// Outcome of one case: certified, conditional, failed, unsolved or error.
enum class Outcome { Certified, Conditional, Failed, Unsolved, Error };
std::string_view outcome_name(Outcome o);
std::optional<Outcome> parse_outcome(std::string_view s);

/// The four buckets for cases that did not certify.
enum class Reason { None, AlgebraicGoalTooLarge, NoDerivativeRule, BackendUnsolved, SideConditionUnresolved };
std::string_view reason_name(Reason r);

struct SuiteCase {
  std::string id;
  std::string system;
  std::optional<Outcome> expected;
  std::vector<std::string> assumptions;
  std::string domain;  // empty: use the backend's domain, or R
  std::string rationale;
};

/// Accepts a JSON array of case objects or one object per line (so report
/// rows load back as cases, with their outcome as the expectation).
/// Throws SuiteError.
std::vector<SuiteCase> load_suite(std::string_view text);
std::vector<SuiteCase> load_suite_file(const std::string& path);

/// The eighteen additional test cases with their rationale.
const std::vector<SuiteCase>& reference_suite();

struct ReportRow {
  SuiteCase kase;
  std::string backend;
  bool solved = false;
  std::optional<bool> domain_reported;  // nullopt = N/A
  std::optional<bool> certified;
  Outcome outcome = Outcome::Unsolved;
  Reason reason = Reason::None;
  std::string note;
  std::string solution;
  std::string domain;
  std::vector<std::string> unresolved;
  std::optional<bool> refuted;  // refuter verdict on a solved, non-certified case
  std::size_t branches = 0;
  double elapsed = 0;

  bool matches_expectation() const { return !kase.expected || *kase.expected == outcome; }
  /// One JSON object, no trailing newline; elapsed time is left out.
  std::string to_json() const;
};

struct SuiteOptions {
  BackendSpec backend;
  std::uint64_t seed = 1;
  int jobs = 1;
  int refute_trials = 200;
};

ReportRow run_case(const SuiteCase& c, const SuiteOptions& opts);
std::vector<ReportRow> run_suite(const std::vector<SuiteCase>& cases, const SuiteOptions& opts);

/// Aligned text table, one line per row.
std::string render_table(const std::vector<ReportRow>& rows);
/// Tally of outcomes followed by the reason histogram.
std::string summary_line(const std::vector<ReportRow>& rows);

}  // namespace odecert
