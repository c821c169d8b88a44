#include "odecert/suite.hpp"

#include <atomic>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <thread>

#include "json.hpp"
#include "odecert/refuter.hpp"

namespace odecert {

using nlohmann::json;

std::string_view outcome_name(Outcome o) {
  switch (o) {
    case Outcome::Certified: return "certified";
    case Outcome::Conditional: return "conditional";
    case Outcome::Failed: return "failed";
    case Outcome::Unsolved: return "unsolved";
    case Outcome::Error: return "error";
  }
  return "?";
}

std::optional<Outcome> parse_outcome(std::string_view s) {
  for (auto o : {Outcome::Certified, Outcome::Conditional, Outcome::Failed, Outcome::Unsolved, Outcome::Error})
    if (outcome_name(o) == s) return o;
  return std::nullopt;
}

std::string_view reason_name(Reason r) {
  switch (r) {
    case Reason::None: return "";
    case Reason::AlgebraicGoalTooLarge: return "algebraic-goal-too-large";
    case Reason::NoDerivativeRule: return "no-derivative-rule";
    case Reason::BackendUnsolved: return "backend-unsolved";
    case Reason::SideConditionUnresolved: return "side-condition-unresolved";
  }
  return "?";
}

namespace {

std::string str_field(const json& o, const char* key, bool required, std::size_t index) {
  if (!o.contains(key) || o[key].is_null()) {
    if (required) throw SuiteError("case " + std::to_string(index + 1) + ": missing '" + key + "'");
    return {};
  }
  if (!o[key].is_string()) throw SuiteError("case " + std::to_string(index + 1) + ": '" + key + "' must be a string");
  return o[key].get<std::string>();
}

SuiteCase case_of(const json& o, std::size_t index) {
  if (!o.is_object()) throw SuiteError("case " + std::to_string(index + 1) + ": expected an object");
  SuiteCase c;
  c.id = o.contains("id") && o["id"].is_number_integer() ? std::to_string(o["id"].get<long>())
                                                          : str_field(o, "id", true, index);
  c.system = str_field(o, "system", true, index);
  c.rationale = str_field(o, "rationale", false, index);
  c.domain = str_field(o, "domain", false, index);
  std::string expect = o.contains("outcome") ? str_field(o, "outcome", false, index)
                                             : str_field(o, "expected", false, index);
  if (!expect.empty()) {
    c.expected = parse_outcome(expect);
    if (!c.expected) throw SuiteError("case " + c.id + ": unknown outcome '" + expect + "'");
  }
  if (o.contains("assumptions")) {
    if (!o["assumptions"].is_array()) throw SuiteError("case " + c.id + ": 'assumptions' must be a list");
    for (const auto& a : o["assumptions"]) {
      if (!a.is_string()) throw SuiteError("case " + c.id + ": assumptions must be strings");
      c.assumptions.push_back(a.get<std::string>());
    }
  }
  try {
    OdeSystem sys = parse_system(c.system);
    parse_assumptions(c.assumptions, sys.context());
    if (!c.domain.empty()) IntervalSpec::parse(c.domain);
  } catch (const Error& e) {
    throw SuiteError("case " + c.id + ": " + e.what());
  }
  return c;
}

int rank(Status s) {
  switch (s) {
    case Status::Certified: return 0;
    case Status::ConditionallyCertified: return 1;
    case Status::Failed: return 2;
  }
  return 3;
}

json opt(const std::optional<bool>& b) { return b ? json(*b) : json(nullptr); }

}  // namespace

std::vector<SuiteCase> load_suite(std::string_view text) {
  std::vector<SuiteCase> out;
  auto first = text.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) throw SuiteError("empty suite");
  try {
    if (text[first] == '[') {
      json doc = json::parse(text);
      for (std::size_t i = 0; i < doc.size(); ++i) out.push_back(case_of(doc[i], i));
    } else {
      std::istringstream in{std::string(text)};
      std::string line;
      while (std::getline(in, line)) {
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        out.push_back(case_of(json::parse(line), out.size()));
      }
    }
  } catch (const json::exception& e) {
    throw SuiteError(std::string("malformed suite: ") + e.what());
  }
  if (out.empty()) throw SuiteError("empty suite");
  std::set<std::string> ids;
  for (const auto& c : out)
    if (!ids.insert(c.id).second) throw SuiteError("duplicate case id '" + c.id + "'");
  return out;
}

std::vector<SuiteCase> load_suite_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return load_suite(ss.str());
}

const std::vector<SuiteCase>& reference_suite() {
  static const std::vector<SuiteCase> cases = [] {
    const std::pair<const char*, const char*> table[] = {
        {"x' = x + t", "Inhomogeneous polynomial"},
        {"x' = tan(t)", "Tangent function"},
        {"x' = x^2", "Second order polynomial"},
        {"x' = -y, y' = x", "Trigonometric solution"},
        {"x' = 1/t", "Domain issues at 0"},
        {"x' = 1/(2*x - 1)", "Has two solutions"},
        {"x' = x*y, y' = 3", "Contains a factor of xy"},
        {"x' = 2*x + y, y' = x", "Homogeneous 2nd order SODE"},
        {"x' = 2*x + y + t^2, y' = x", "Inhomogeneous 2nd order SODE"},
        {"x' = arcsin(t)", "Inverse trigonometric function"},
        {"x' = sqrt(t)", "Square root"},
        {"x' = t^(1/5)", "Higher roots"},
        {"x' = t^sqrt(2)", "Non-rational powers"},
        {"x' = x + y, y' = y + 2*z, z' = x^2 + 1", "Higher dimensional SODE"},
        {"x' = x^2 - t", "Bessel function"},
        {"x' = y, y' = exp(t^2)", "Imaginary error function"},
        {"x' = sin(x)/ln(x)", "Impossible to solve"},
        {"x' = ln(t), y' = x", "Logarithmic"},
    };
    std::vector<SuiteCase> out;
    int id = 1;
    for (const auto& [sys, why] : table) {
      SuiteCase c;
      c.id = std::to_string(id++);
      c.system = sys;
      c.rationale = why;
      out.push_back(std::move(c));
    }
    return out;
  }();
  return cases;
}

ReportRow run_case(const SuiteCase& c, const SuiteOptions& opts) {
  ReportRow row;
  row.kase = c;
  row.backend = opts.backend.id;
  OdeSystem sys = parse_system(c.system);
  auto assumptions = parse_assumptions(c.assumptions, sys.context());
  SolveResult r = solve(sys, opts.backend, c.assumptions);
  row.elapsed = r.elapsed;
  if (!r.solved()) {
    row.outcome = r.status == SolveResult::Status::Unsolved ? Outcome::Unsolved : Outcome::Error;
    row.reason = Reason::BackendUnsolved;
    row.note = r.detail;
    if (!c.rationale.empty()) row.note += (row.note.empty() ? "" : "; ") + c.rationale;
    return row;
  }
  row.solved = true;
  row.branches = r.solutions.size();
  row.domain_reported = r.domain_reported;

  std::optional<Certificate> best;
  Solution best_sol;
  for (auto sol : r.solutions) {
    if (!c.domain.empty()) sol.domain = IntervalSpec::parse(c.domain);
    Certificate cert;
    try {
      cert = certify(sys, sol, assumptions);
    } catch (const Error& e) {
      cert.status = Status::Failed;
      cert.reason = "no-derivative-rule";
      row.note = e.what();
    }
    if (!best || rank(cert.status) < rank(best->status)) {
      best = cert;
      best_sol = sol;
    }
  }
  row.solution = best_sol.to_string();
  row.domain = best_sol.domain.to_string();
  row.certified = best->status == Status::Certified;
  switch (best->status) {
    case Status::Certified: row.outcome = Outcome::Certified; break;
    case Status::ConditionallyCertified:
      row.outcome = Outcome::Conditional;
      row.reason = Reason::SideConditionUnresolved;
      break;
    case Status::Failed:
      row.outcome = Outcome::Failed;
      row.reason = best->reason == "no-derivative-rule" ? Reason::NoDerivativeRule : Reason::AlgebraicGoalTooLarge;
      break;
  }
  for (const auto* u : best->unresolved()) row.unresolved.push_back(u->condition.to_string());
  if (best->range == RangeVerdict::Unresolved) row.unresolved.push_back("range");
  if (best->status == Status::Failed) {
    for (const auto& comp : best->components)
      if (!comp.failure.empty()) {
        if (!row.note.empty()) row.note += "; ";
        row.note += comp.var + ": " + comp.failure + " (goal has " + std::to_string(comp.goal_ops) + " operators)";
      }
  }
  if (best->status != Status::Certified) {
    RefuteOptions ro;
    ro.seed = opts.seed;
    ro.trials = opts.refute_trials;
    try {
      row.refuted = any_found(refute_solution(sys, best_sol, assumptions, ro));
    } catch (const Error&) {
    }
  }
  return row;
}

std::vector<ReportRow> run_suite(const std::vector<SuiteCase>& cases, const SuiteOptions& opts) {
  std::vector<ReportRow> rows(cases.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i; (i = next++) < cases.size();) rows[i] = run_case(cases[i], opts);
  };
  int jobs = std::max(1, std::min<int>(opts.jobs, static_cast<int>(cases.size())));
  std::vector<std::thread> pool;
  for (int j = 1; j < jobs; ++j) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  return rows;
}

std::string ReportRow::to_json() const {
  json o = {{"id", kase.id},
            {"system", kase.system},
            {"assumptions", kase.assumptions},
            {"domain", kase.domain},
            {"rationale", kase.rationale},
            {"backend", backend},
            {"solved", solved},
            {"domain_reported", opt(domain_reported)},
            {"certified", opt(certified)},
            {"outcome", outcome_name(outcome)},
            {"reason", reason == Reason::None ? json(nullptr) : json(reason_name(reason))},
            {"note", note},
            {"solution", solution},
            {"solution_domain", domain},
            {"branches", branches},
            {"unresolved", unresolved},
            {"refuted", opt(refuted)}};
  if (kase.expected) o["expected"] = outcome_name(*kase.expected);
  return o.dump();
}

namespace {

std::string flag(const std::optional<bool>& b) { return b ? (*b ? "yes" : "no") : "N/A"; }

}  // namespace

std::string render_table(const std::vector<ReportRow>& rows) {
  std::vector<std::vector<std::string>> cells = {
      {"case", "system", "solved", "domain", "certified", "outcome", "reason"}};
  for (const auto& r : rows)
    cells.push_back({r.kase.id, r.kase.system, r.solved ? "yes" : "no", flag(r.domain_reported), flag(r.certified),
                     std::string(outcome_name(r.outcome)), std::string(reason_name(r.reason))});
  std::vector<std::size_t> width(cells.front().size(), 0);
  for (const auto& row : cells)
    for (std::size_t i = 0; i < row.size(); ++i) width[i] = std::max(width[i], row[i].size());
  std::ostringstream os;
  for (const auto& row : cells) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      os << std::left << std::setw(static_cast<int>(width[i])) << row[i];
      if (i + 1 < row.size()) os << "  ";
    }
    os << "\n";
  }
  return os.str();
}

std::string summary_line(const std::vector<ReportRow>& rows) {
  std::map<Outcome, int> by_outcome;
  std::map<Reason, int> by_reason;
  int solved = 0;
  for (const auto& r : rows) {
    ++by_outcome[r.outcome];
    if (r.reason != Reason::None) ++by_reason[r.reason];
    solved += r.solved;
  }
  std::ostringstream os;
  os << rows.size() << " cases: " << solved << " solved, " << by_outcome[Outcome::Certified] << " certified, "
     << by_outcome[Outcome::Conditional] << " conditional, " << by_outcome[Outcome::Failed] << " failed, "
     << by_outcome[Outcome::Unsolved] + by_outcome[Outcome::Error] << " unsolved; reasons:";
  for (auto r : {Reason::AlgebraicGoalTooLarge, Reason::NoDerivativeRule, Reason::BackendUnsolved,
                 Reason::SideConditionUnresolved})
    os << " " << reason_name(r) << "=" << by_reason[r];
  return os.str();
}

}  // namespace odecert
