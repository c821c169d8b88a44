#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "odecert/certifier.hpp"

namespace odecert {

/// Which backend to ask. `builtin` is in-process; every other selector runs
/// `command` as a child speaking the line protocol on its standard streams.
struct BackendSpec {
  std::string id = "builtin";
  std::vector<std::string> command;
  double timeout = 10.0;  // seconds

  bool builtin() const { return id == "builtin"; }

  /// "builtin", "external:<command line>", or one of the selector names
  /// fricas, maxima, sympy, wolfram (which use $ODECERT_BRIDGE_CMD and pass
  /// "--cas <name>").
  static BackendSpec parse(std::string_view text, double timeout = 10.0);
};

struct SolveResult {
  enum class Status { Solved, Unsolved, BackendError };

  Status status = Status::Unsolved;
  std::vector<Solution> solutions;  // one per branch
  std::string detail;               // reason for Unsolved / BackendError
  std::string backend;
  double elapsed = 0;  // seconds
  bool domain_reported = false;

  bool solved() const { return status == Status::Solved; }
};

std::string_view solve_status_name(SolveResult::Status s);

inline constexpr double kBackendGrace = 2.0;

SolveResult solve(const OdeSystem& sys, const BackendSpec& backend,
                  const std::vector<std::string>& assumptions = {});

SolveResult solve_builtin(const OdeSystem& sys);

SolveResult request_external(const OdeSystem& sys, const BackendSpec& spec,
                             const std::vector<std::string>& assumptions = {});

/// Antiderivative in t from the builtin integration table, or nullopt.
std::optional<Expr> integrate(const Expr& f);

/// One request line of the wire protocol, without the trailing newline.
std::string encode_request(const OdeSystem& sys, const std::vector<std::string>& assumptions);

/// Validates one response document against the system. Never throws; bad
/// input becomes a BackendError result.
SolveResult decode_response(std::string_view line, const OdeSystem& sys,
                            const std::vector<std::string>& assumptions);

}  // namespace odecert
