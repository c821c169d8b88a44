#include "odecert/parser.hpp"

#include <cctype>
#include <sstream>

#include "odecert/errors.hpp"

namespace odecert {

namespace {

bool is_ident_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) != 0; }
bool is_ident_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) != 0 || c == '_';
}
bool is_digit(char c) { return std::isdigit(static_cast<unsigned char>(c)) != 0; }

// Recursive descent over the expression grammar:
//   expr   := term (("+"|"-") term)*
//   term   := factor (("*"|"/") factor)*
//   factor := "-" factor | power
//   power  := atom ("^" factor)?
//   atom   := NUMBER | IDENT | IDENT "(" expr ")" | "(" expr ")"
class ExprParser {
 public:
  ExprParser(std::string_view text, const ParseContext& ctx) : text_(text), ctx_(ctx) {}

  Expr parse_all() {
    Expr e = expr();
    skip_ws();
    if (pos_ != text_.size()) throw SyntaxError(pos_, "end of input");
    return e;
  }

 private:
  void skip_ws() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  bool accept(char c) {
    skip_ws();
    if (pos_ < text_.size() && text_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  void expect(char c) {
    if (!accept(c)) throw SyntaxError(pos_, std::string("'") + c + "'");
  }

  Expr expr() {
    Expr lhs = term();
    for (;;) {
      if (accept('+')) {
        lhs = Expr::add(lhs, term());
      } else if (accept('-')) {
        lhs = Expr::add(lhs, Expr::neg(term()));
      } else {
        return lhs;
      }
    }
  }

  Expr term() {
    Expr lhs = factor();
    for (;;) {
      if (accept('*')) {
        lhs = Expr::mul(lhs, factor());
      } else if (accept('/')) {
        lhs = Expr::div(lhs, factor());
      } else {
        return lhs;
      }
    }
  }

  Expr factor() {
    if (accept('-')) return Expr::neg(factor());
    return power();
  }

  Expr power() {
    Expr base = atom();
    if (accept('^')) return Expr::pow(base, factor());
    return base;
  }

  Expr atom() {
    skip_ws();
    if (pos_ >= text_.size()) throw SyntaxError(pos_, "number, identifier or '('");
    char c = text_[pos_];
    if (c == '(') {
      ++pos_;
      Expr inner = expr();
      expect(')');
      return inner;
    }
    if (is_digit(c)) return number();
    if (is_ident_start(c)) {
      std::size_t start = pos_;
      while (pos_ < text_.size() && is_ident_char(text_[pos_])) ++pos_;
      std::string name(text_.substr(start, pos_ - start));
      skip_ws();
      if (pos_ < text_.size() && text_[pos_] == '(') {
        if (!is_builtin_function(name) && !ctx_.extra_functions.contains(name))
          throw UnknownFunction(name);
        ++pos_;
        Expr arg = expr();
        expect(')');
        return Expr::func(std::move(name), std::move(arg));
      }
      return identifier(name);
    }
    throw SyntaxError(pos_, "number, identifier or '('");
  }

  Expr number() {
    std::size_t start = pos_;
    while (pos_ < text_.size() && is_digit(text_[pos_])) ++pos_;
    if (pos_ + 1 < text_.size() && text_[pos_] == '.' && is_digit(text_[pos_ + 1])) {
      ++pos_;
      while (pos_ < text_.size() && is_digit(text_[pos_])) ++pos_;
    }
    return Expr::constant(Rational::parse(text_.substr(start, pos_ - start)));
  }

  Expr identifier(const std::string& name) const {
    if (ctx_.state_vars.contains(name)) return Expr::state(name);
    if (name == "t") return Expr::time();
    if (name.size() > 1 && name.back() == '0' &&
        ctx_.state_vars.contains(name.substr(0, name.size() - 1)))
      return Expr::init(name);
    return Expr::param(name);
  }

  std::string_view text_;
  const ParseContext& ctx_;
  std::size_t pos_ = 0;
};

}  // namespace

Expr parse_expr(std::string_view text, const ParseContext& ctx) {
  return ExprParser(text, ctx).parse_all();
}

// ---------------------------------------------------------------------------

OdeSystem::OdeSystem(std::vector<Equation> equations) : equations_(std::move(equations)) {
  std::set<std::string> seen;
  for (const auto& eq : equations_)
    if (!seen.insert(eq.var).second) throw DuplicateStateVar(eq.var);
  for (const auto& eq : equations_)
    for (const auto& s : free_symbols(eq.rhs))
      if (s.kind == Kind::State && !seen.contains(s.name))
        throw ShapeMismatch("state variable '" + s.name + "' has no equation");
}

std::vector<std::string> OdeSystem::state_vars() const {
  std::vector<std::string> out;
  for (const auto& eq : equations_) out.push_back(eq.var);
  return out;
}

bool OdeSystem::declares(std::string_view var) const {
  for (const auto& eq : equations_)
    if (eq.var == var) return true;
  return false;
}

const Expr& OdeSystem::rhs(std::string_view var) const {
  for (const auto& eq : equations_)
    if (eq.var == var) return eq.rhs;
  throw ShapeMismatch("no equation for '" + std::string(var) + "'");
}

std::set<std::string> OdeSystem::params() const {
  std::set<std::string> out;
  for (const auto& eq : equations_)
    for (const auto& s : free_symbols(eq.rhs))
      if (s.kind == Kind::Param) out.insert(s.name);
  return out;
}

ParseContext OdeSystem::context() const {
  ParseContext ctx;
  for (const auto& eq : equations_) ctx.state_vars.insert(eq.var);
  return ctx;
}

std::string OdeSystem::to_string() const {
  std::ostringstream os;
  bool first = true;
  for (const auto& eq : equations_) {
    if (!first) os << ", ";
    first = false;
    os << eq.var << "' = " << odecert::to_string(eq.rhs);
  }
  return os.str();
}

OdeSystem parse_system(std::string_view text, const ParseContext& extra) {
  struct Clause {
    std::string var;
    std::string_view rhs;
    std::size_t offset;
  };
  std::vector<Clause> clauses;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t comma = text.find(',', start);
    std::size_t end = comma == std::string_view::npos ? text.size() : comma;
    std::string_view clause = text.substr(start, end - start);
    std::size_t i = 0;
    auto skip = [&] {
      while (i < clause.size() && std::isspace(static_cast<unsigned char>(clause[i]))) ++i;
    };
    skip();
    if (i >= clause.size() || !is_ident_start(clause[i]))
      throw SyntaxError(start + i, "state variable name");
    std::size_t name_start = i;
    while (i < clause.size() && is_ident_char(clause[i])) ++i;
    std::string var(clause.substr(name_start, i - name_start));
    skip();
    if (i >= clause.size() || clause[i] != '\'') throw SyntaxError(start + i, "'''");
    ++i;
    skip();
    if (i >= clause.size() || clause[i] != '=') throw SyntaxError(start + i, "'='");
    ++i;
    clauses.push_back({std::move(var), clause.substr(i), start + i});
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }

  ParseContext ctx = extra;
  for (const auto& c : clauses)
    if (!ctx.state_vars.insert(c.var).second) throw DuplicateStateVar(c.var);

  std::vector<Equation> eqs;
  for (const auto& c : clauses) {
    try {
      eqs.push_back({c.var, parse_expr(c.rhs, ctx)});
    } catch (const SyntaxError& e) {
      throw SyntaxError(c.offset + e.position(), e.expected());
    }
  }
  return OdeSystem(std::move(eqs));
}

}  // namespace odecert
