#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include "CLI11.hpp"
#include "odecert/certifier.hpp"
#include "odecert/corpus.hpp"
#include "odecert/refuter.hpp"
#include "odecert/solver.hpp"
#include "odecert/suite.hpp"

using namespace odecert;

namespace {

constexpr int kExitUsage = 64;
constexpr int kExitData = 65;
constexpr int kExitIo = 66;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string shell_quote(const std::string& s) {
  std::string out = "'";
  for (char c : s) {
    if (c == '\'')
      out += "'\\''";
    else
      out += c;
  }
  return out + "'";
}

std::string default_backend() {
  const char* env = std::getenv("ODECERT_BACKEND");
  return env && *env ? env : "builtin";
}

BackendSpec backend_of(const std::string& text, double timeout) {
  try {
    return BackendSpec::parse(text, timeout);
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
}

struct SolveArgs {
  std::string system;
  std::string backend = default_backend();
  std::vector<std::string> assume;
  double timeout = 10;
};

std::string cert_command(const std::string& system, const Solution& sol, const std::vector<std::string>& assume) {
  std::ostringstream os;
  os << "odecert cert --solution " << shell_quote(sol.to_string());
  if (!sol.domain.is_whole()) os << " --domain " << shell_quote(sol.domain.to_string());
  for (const auto& a : assume) os << " --assume " << shell_quote(a);
  os << " " << shell_quote(system);
  return os.str();
}

int cmd_solve(const SolveArgs& a) {
  OdeSystem sys = parse_system(a.system);
  parse_assumptions(a.assume, sys.context());
  SolveResult res = solve(sys, backend_of(a.backend, a.timeout), a.assume);
  std::cout << "backend: " << res.backend << "\n";
  std::cout << "status: " << solve_status_name(res.status) << "\n";
  if (!res.detail.empty()) std::cout << "detail: " << res.detail << "\n";
  for (std::size_t i = 0; i < res.solutions.size(); ++i) {
    const Solution& sol = res.solutions[i];
    std::string tag = res.solutions.size() > 1 ? " " + std::to_string(i + 1) : "";
    std::cout << "solution" << tag << ": " << sol.to_string() << "\n";
    std::cout << "domain" << tag << ": " << (res.domain_reported ? sol.domain.to_string() : "not reported") << "\n";
    std::cout << "certify with:\n  " << cert_command(sys.to_string(), sol, a.assume) << "\n";
  }
  switch (res.status) {
    case SolveResult::Status::Solved: return 0;
    case SolveResult::Status::Unsolved: return 2;
    case SolveResult::Status::BackendError: return 3;
  }
  return 3;
}

struct CertArgs {
  std::string system;
  std::string solution;
  std::string name;
  std::string domain;
  std::vector<std::string> codomain;
  std::vector<std::string> assume;
  bool refute = false;
  std::uint64_t seed = 1;
};

int cmd_cert(const CertArgs& a) {
  OdeSystem sys = parse_system(a.system);
  Solution sol = parse_solution(a.solution, sys);
  if (!a.domain.empty()) sol.domain = IntervalSpec::parse(a.domain);
  for (const auto& c : a.codomain) {
    auto eq = c.find('=');
    if (eq == std::string::npos) throw UsageError("--codomain expects VAR=INTERVAL, got '" + c + "'");
    std::string var = c.substr(0, eq);
    var.erase(0, var.find_first_not_of(' '));
    var.erase(var.find_last_not_of(' ') + 1);
    if (!sol.binding(var)) throw ShapeMismatch("codomain for unknown state variable '" + var + "'");
    sol.codomain[var] = IntervalSpec::parse(c.substr(eq + 1));
  }
  auto assumptions = parse_assumptions(a.assume, sys.context());
  Certificate cert = certify(sys, sol, assumptions);

  if (!a.name.empty()) std::cout << a.name << ": ";
  std::cout << sys.to_string() << " on " << sol.domain.to_string() << "\n";
  for (const auto& c : cert.components) {
    std::cout << "  " << c.var << ": " << canon::verdict_name(c.verdict);
    if (!c.failure.empty()) std::cout << " (" << c.failure << ", goal has " << c.goal_ops << " operators)";
    std::cout << "\n";
    if (c.computed && c.verdict != canon::Verdict::Equal) {
      std::cout << "    derivative: " << to_string(*c.computed) << "\n";
      std::cout << "    expected:   " << to_string(c.expected) << "\n";
    }
  }
  for (const auto& r : cert.conditions) {
    std::cout << "  condition " << r.condition.to_string() << " [" << r.component << "]: "
              << disposition_name(r.discharge.disposition);
    if (!r.discharge.assumption.empty()) std::cout << " by " << r.discharge.assumption;
    std::cout << "\n";
  }
  if (!sol.codomain.empty()) std::cout << "  range: " << range_name(cert.range) << "\n";
  std::cout << cert.summary() << "\n";

  if (a.refute && cert.status != Status::Certified) {
    RefuteOptions opts;
    opts.seed = a.seed;
    try {
      for (const auto& r : refute_solution(sys, sol, assumptions, opts)) {
        std::cout << "refuter " << r.var << ": ";
        if (r.result.found())
          std::cout << "counterexample " << r.result.counterexample->to_string() << "\n";
        else
          std::cout << "no counterexample in " << r.result.trials << " trials\n";
      }
    } catch (const Unsatisfiable& e) {
      std::cout << "refuter: " << e.what() << "\n";
    }
  }

  switch (cert.status) {
    case Status::Certified: return 0;
    case Status::Failed: return 1;
    case Status::ConditionallyCertified: return 4;
  }
  return 1;
}

struct CorpusArgs {
  std::string root;
  std::string out;
  bool list = false;
};

int cmd_corpus(const CorpusArgs& a) {
  CorpusScan scan = scan_corpus(a.root);
  for (const auto& w : scan.warnings)
    std::cerr << "warning: " << w.file.string() << ":" << w.line << ": " << w.message << "\n";
  std::cout << "files: " << scan.files << "\n";
  std::cout << "raw: " << scan.raw << "\n";
  std::cout << "duplicates: " << scan.duplicates() << "\n";
  std::cout << "unique: " << scan.entries.size() << "\n";
  std::cout << "simple: " << scan.count(Complexity::Simple) << "\n";
  std::cout << "complex: " << scan.count(Complexity::Complex) << "\n";
  if (a.list)
    for (const auto& e : scan.entries)
      std::cout << complexity_name(classify(e.system)) << "  " << e.occurrences << "x  " << e.canonical_key << "  ("
                << e.source_file.string() << ":" << e.line << ")\n";
  if (!a.out.empty()) write_corpus(scan.entries, a.out);
  return 0;
}

struct SuiteArgs {
  std::string suite = "reference";
  std::string backend = default_backend();
  std::string json;
  double timeout = 10;
  int jobs = 1;
  std::uint64_t seed = 1;
  int refute_trials = 200;
};

int cmd_suite(const SuiteArgs& a) {
  std::vector<SuiteCase> cases = a.suite == "reference" ? reference_suite() : load_suite_file(a.suite);
  SuiteOptions opts;
  opts.backend = backend_of(a.backend, a.timeout);
  opts.jobs = a.jobs;
  opts.seed = a.seed;
  opts.refute_trials = a.refute_trials;
  auto rows = run_suite(cases, opts);

  std::cout << render_table(rows);
  for (const auto& r : rows)
    if (!r.note.empty()) std::cout << "note " << r.kase.id << ": " << r.note << "\n";
  for (const auto& r : rows)
    for (const auto& u : r.unresolved) std::cout << "unresolved " << r.kase.id << ": " << u << "\n";
  std::cout << summary_line(rows) << "\n";
  if (!a.json.empty()) {
    std::ofstream out;
    std::ostream* os = &std::cout;
    if (a.json != "-") {
      out.open(a.json);
      if (!out) throw IoError("cannot write " + a.json);
      os = &out;
    }
    for (const auto& r : rows) *os << r.to_json() << "\n";
  }
  int mismatches = 0;
  for (const auto& r : rows) {
    if (r.matches_expectation()) continue;
    if (mismatches++ == 0) std::cout << "expectation mismatches:\n";
    std::cout << "- case " << r.kase.id << ": expected " << outcome_name(*r.kase.expected) << "\n";
    std::cout << "+ case " << r.kase.id << ": got " << outcome_name(r.outcome);
    if (!r.note.empty()) std::cout << " (" << r.note << ")";
    std::cout << "\n";
  }
  return mismatches ? 1 : 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Solve systems of ODEs and certify candidate solutions"};
  app.require_subcommand(1);

  SolveArgs solve_args;
  auto* solve_cmd = app.add_subcommand("solve", "Ask a backend for closed-form solutions");
  solve_cmd->add_option("system", solve_args.system, "System, e.g. \"x' = t, y' = x\"")->required();
  solve_cmd->add_option("--backend", solve_args.backend,
                        "builtin, external:<command>, fricas, maxima, sympy or wolfram ($ODECERT_BACKEND)");
  solve_cmd->add_option("--assume", solve_args.assume, "Assumption such as \"b>0\" (repeatable)");
  solve_cmd->add_option("--timeout", solve_args.timeout, "Backend time budget in seconds")
      ->check(CLI::PositiveNumber);

  CertArgs cert_args;
  auto* cert_cmd = app.add_subcommand("cert", "Certify a candidate solution");
  cert_cmd->add_option("system", cert_args.system, "System, e.g. \"x' = t, y' = x\"")->required();
  cert_cmd->add_option("--solution", cert_args.solution, "Bindings, e.g. \"x = t^2/2 + x0, y = ...\"")->required();
  cert_cmd->add_option("--name", cert_args.name, "Label printed with the certificate");
  cert_cmd->add_option("--domain", cert_args.domain, "Time domain T, e.g. \"(0,inf)\"");
  cert_cmd->add_option("--codomain", cert_args.codomain, "Range for one variable, VAR=INTERVAL (repeatable)");
  cert_cmd->add_option("--assume", cert_args.assume, "Assumption such as \"b>0\" (repeatable)");
  cert_cmd->add_flag("--refute", cert_args.refute, "Search for a numeric counterexample when not certified");
  cert_cmd->add_option("--seed", cert_args.seed, "Refuter seed");

  CorpusArgs corpus_args;
  auto* corpus_cmd = app.add_subcommand("corpus", "Extract and deduplicate systems from a directory tree");
  corpus_cmd->add_option("root", corpus_args.root, "Directory to scan")->required();
  corpus_cmd->add_option("--out", corpus_args.out, "Write corpus.txt into this directory");
  corpus_cmd->add_flag("--list", corpus_args.list, "Print every unique system");

  SuiteArgs suite_args;
  auto* suite_cmd = app.add_subcommand("suite", "Run a suite of cases and print a report");
  suite_cmd->add_option("--suite", suite_args.suite, "\"reference\" for the bundled cases, or a suite file");
  suite_cmd->add_option("--backend", suite_args.backend, "Backend selector ($ODECERT_BACKEND)");
  suite_cmd->add_option("--timeout", suite_args.timeout, "Backend time budget in seconds")
      ->check(CLI::PositiveNumber);
  suite_cmd->add_option("--jobs", suite_args.jobs, "Cases run concurrently")->check(CLI::PositiveNumber);
  suite_cmd->add_option("--seed", suite_args.seed, "Refuter seed");
  suite_cmd->add_option("--refute-trials", suite_args.refute_trials, "Refuter samples per component")
      ->check(CLI::PositiveNumber);
  suite_cmd->add_option("--json", suite_args.json, "Write one JSON row per case to this file (\"-\" for stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (*solve_cmd) return cmd_solve(solve_args);
    if (*cert_cmd) return cmd_cert(cert_args);
    if (*corpus_cmd) return cmd_corpus(corpus_args);
    if (*suite_cmd) return cmd_suite(suite_args);
  } catch (const UsageError& e) {
    std::cerr << "odecert: " << e.what() << "\n";
    return kExitUsage;
  } catch (const IoError& e) {
    std::cerr << "odecert: " << e.what() << "\n";
    return kExitIo;
  } catch (const Error& e) {
    std::cerr << "odecert: " << e.what() << "\n";
    return kExitData;
  }
  return kExitUsage;
}
