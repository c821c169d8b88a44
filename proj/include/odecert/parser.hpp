#pragma once

#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "odecert/expr.hpp"

namespace odecert {

/// How identifiers resolve while parsing.
///
/// Without state variables every identifier other than `t` is a Param. With
/// state variables declared, those names become StateVars and `<name>0`
/// becomes the InitConst of that state variable. A system that declares a
/// state variable called `t` (a clock, common in hybrid-system models) shadows
/// the independent variable inside its right-hand sides.
struct ParseContext {
  std::set<std::string> state_vars;
  /// Function names accepted in addition to the builtin alphabet.
  std::set<std::string> extra_functions;
};

/// Throws SyntaxError or UnknownFunction.
Expr parse_expr(std::string_view text, const ParseContext& ctx = {});

struct Equation {
  std::string var;
  Expr rhs;
};

/// x_i' = f_i(t, x) for an ordered list of state variables.
class OdeSystem {
 public:
  OdeSystem() = default;
  /// Throws DuplicateStateVar or ShapeMismatch (undeclared state variable).
  explicit OdeSystem(std::vector<Equation> equations);

  const std::vector<Equation>& equations() const { return equations_; }
  std::size_t size() const { return equations_.size(); }
  std::vector<std::string> state_vars() const;
  bool declares(std::string_view var) const;
  const Expr& rhs(std::string_view var) const;
  std::set<std::string> params() const;
  ParseContext context() const;

  /// "x' = t, y' = x" in grammar syntax.
  std::string to_string() const;

 private:
  std::vector<Equation> equations_;
};

/// Comma-separated "name' = expr" clauses. Throws DuplicateStateVar or
/// SyntaxError.
OdeSystem parse_system(std::string_view text, const ParseContext& extra = {});

}  // namespace odecert
