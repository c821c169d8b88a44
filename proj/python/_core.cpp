#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <sstream>

#include "odecert/canon.hpp"
#include "odecert/certifier.hpp"
#include "odecert/corpus.hpp"
#include "odecert/deriv.hpp"
#include "odecert/errors.hpp"
#include "odecert/parser.hpp"
#include "odecert/refuter.hpp"
#include "odecert/solver.hpp"
#include "odecert/suite.hpp"

namespace py = pybind11;
using namespace odecert;

namespace {

py::list conditions_list(const std::vector<SideCondition>& cs) {
  py::list out;
  for (const auto& c : cs) out.append(c.to_string());
  return out;
}

Solution make_solution(const OdeSystem& sys, const std::string& text, const std::string& domain) {
  Solution sol = parse_solution(text, sys);
  if (!domain.empty()) sol.domain = IntervalSpec::parse(domain);
  return sol;
}

py::dict certify_py(const std::string& system, const std::string& solution, const std::vector<std::string>& assume,
                    const std::string& domain) {
  OdeSystem sys = parse_system(system);
  Solution sol = make_solution(sys, solution, domain);
  Certificate cert = certify(sys, sol, parse_assumptions(assume, sys.context()));
  py::list comps;
  for (const auto& c : cert.components) {
    py::dict d;
    d["var"] = c.var;
    d["binding"] = to_string(c.binding);
    d["derivative"] = c.computed ? py::object(py::str(to_string(*c.computed))) : py::object(py::none());
    d["expected"] = to_string(c.expected);
    d["verdict"] = std::string(canon::verdict_name(c.verdict));
    d["failure"] = c.failure;
    comps.append(d);
  }
  py::list conds;
  for (const auto& r : cert.conditions) {
    py::dict d;
    d["condition"] = r.condition.to_string();
    d["component"] = r.component;
    d["disposition"] = std::string(disposition_name(r.discharge.disposition));
    d["assumption"] = r.discharge.assumption;
    conds.append(d);
  }
  py::dict out;
  out["status"] = std::string(status_name(cert.status));
  out["reason"] = cert.reason;
  out["components"] = comps;
  out["conditions"] = conds;
  out["range"] = std::string(range_name(cert.range));
  out["summary"] = cert.summary();
  return out;
}

py::dict solve_py(const std::string& system, const std::string& backend, const std::vector<std::string>& assume,
                  double timeout) {
  OdeSystem sys = parse_system(system);
  BackendSpec spec = BackendSpec::parse(backend, timeout);
  SolveResult r;
  {
    py::gil_scoped_release unlocked;
    r = solve(sys, spec, assume);
  }
  py::list sols;
  for (const auto& s : r.solutions) {
    py::dict d;
    d["solution"] = s.to_string();
    d["domain"] = s.domain.to_string();
    sols.append(d);
  }
  py::dict out;
  out["status"] = std::string(solve_status_name(r.status));
  out["backend"] = r.backend;
  out["detail"] = r.detail;
  out["domain_reported"] = r.domain_reported;
  out["solutions"] = sols;
  return out;
}

py::list refute_py(const std::string& system, const std::string& solution, const std::vector<std::string>& assume,
                   const std::string& domain, std::uint64_t seed, int trials) {
  OdeSystem sys = parse_system(system);
  Solution sol = make_solution(sys, solution, domain);
  RefuteOptions o;
  o.seed = seed;
  o.trials = trials;
  py::list out;
  for (const auto& c : refute_solution(sys, sol, parse_assumptions(assume, sys.context()), o)) {
    py::dict d;
    d["var"] = c.var;
    d["trials"] = c.result.trials;
    d["counterexample"] =
        c.result.found() ? py::object(py::str(c.result.counterexample->to_string())) : py::object(py::none());
    out.append(d);
  }
  return out;
}

py::list corpus_py(const std::filesystem::path& root) {
  py::list out;
  for (const auto& e : extract_corpus(root)) {
    py::dict d;
    d["system"] = e.system.to_string();
    d["key"] = e.canonical_key;
    d["file"] = e.source_file.string();
    d["line"] = e.line;
    d["occurrences"] = e.occurrences;
    d["constraints"] = e.constraints;
    d["complexity"] = std::string(complexity_name(classify(e.system)));
    out.append(d);
  }
  return out;
}

std::vector<std::string> suite_py(const std::string& suite, const std::string& backend, int jobs,
                                  std::uint64_t seed) {
  SuiteOptions o;
  o.backend = BackendSpec::parse(backend);
  o.jobs = jobs;
  o.seed = seed;
  auto cases = suite == "reference" ? reference_suite() : load_suite_file(suite);
  std::vector<std::string> out;
  for (const auto& r : run_suite(cases, o)) out.push_back(r.to_json());
  return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  auto base = py::register_exception<Error>(m, "Error", PyExc_ValueError);
  py::register_exception<SyntaxError>(m, "ParseError", base.ptr());

  m.def("parse_system", [](const std::string& s) { return parse_system(s).to_string(); }, py::arg("text"));
  m.def("state_vars", [](const std::string& s) { return parse_system(s).state_vars(); }, py::arg("text"));
  m.def("classify", [](const std::string& s) { return std::string(complexity_name(classify(parse_system(s)))); },
        py::arg("text"));
  m.def(
      "differentiate",
      [](const std::string& e) {
        Derivation d = differentiate(parse_expr(e));
        return py::make_tuple(to_string(d.derivative), conditions_list(d.conditions));
      },
      py::arg("expr"));
  m.def(
      "equal",
      [](const std::string& a, const std::string& b) {
        return canon::equal(parse_expr(a), parse_expr(b)) == canon::Verdict::Equal;
      },
      py::arg("a"), py::arg("b"));
  m.def("certify", &certify_py, py::arg("system"), py::arg("solution"),
        py::arg("assume") = std::vector<std::string>{}, py::arg("domain") = "");
  m.def("solve", &solve_py, py::arg("system"), py::arg("backend") = "builtin",
        py::arg("assume") = std::vector<std::string>{}, py::arg("timeout") = 10.0);
  m.def("refute", &refute_py, py::arg("system"), py::arg("solution"), py::arg("assume") = std::vector<std::string>{},
        py::arg("domain") = "", py::arg("seed") = 1, py::arg("trials") = 1000);
  m.def("extract_corpus", &corpus_py, py::arg("root"));
  m.def("run_suite", &suite_py, py::arg("suite") = "reference", py::arg("backend") = "builtin", py::arg("jobs") = 1,
        py::arg("seed") = 1, py::call_guard<py::gil_scoped_release>());
}
