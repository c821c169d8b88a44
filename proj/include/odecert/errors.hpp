#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace odecert {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class SyntaxError : public Error {
 public:
  SyntaxError(std::size_t position, std::string expected)
      : Error("syntax error at " + std::to_string(position) + ": expected " + expected),
        position_(position),
        expected_(std::move(expected)) {}
  std::size_t position() const { return position_; }
  const std::string& expected() const { return expected_; }

 private:
  std::size_t position_;
  std::string expected_;
};

class UnknownFunction : public Error {
 public:
  explicit UnknownFunction(std::string name)
      : Error("unknown function '" + name + "'"), name_(std::move(name)) {}
  const std::string& name() const { return name_; }

 private:
  std::string name_;
};

class DuplicateStateVar : public Error {
 public:
  explicit DuplicateStateVar(const std::string& name)
      : Error("state variable '" + name + "' declared twice"), name_(name) {}
  const std::string& name() const { return name_; }

 private:
  std::string name_;
};

class UnboundSymbol : public Error {
 public:
  explicit UnboundSymbol(const std::string& name)
      : Error("no value bound for symbol '" + name + "'"), name_(name) {}
  const std::string& name() const { return name_; }

 private:
  std::string name_;
};

class NoRule : public Error {
 public:
  explicit NoRule(std::string subject)
      : Error("no derivative rule applies to " + subject), subject_(std::move(subject)) {}
  /// The function name (or node kind) that lacked a rule.
  const std::string& subject() const { return subject_; }

 private:
  std::string subject_;
};

class DuplicateRule : public Error {
 public:
  explicit DuplicateRule(const std::string& id) : Error("rule '" + id + "' already registered") {}
};

class ShapeMismatch : public Error {
 public:
  using Error::Error;
};

class Unsatisfiable : public Error {
 public:
  using Error::Error;
};

class NormalFormTooLarge : public Error {
 public:
  NormalFormTooLarge() : Error("normal form exceeded its work budget") {}
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace odecert
