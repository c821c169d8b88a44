#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "odecert/certifier.hpp"

namespace odecert {

struct RefuteOptions {
  std::uint64_t seed = 1;
  int trials = 1000;
  double margin = 1e-3;     // distance kept from every side-condition boundary
  double threshold = 1e-6;  // relative gap that counts as a disagreement
};

struct Counterexample {
  Valuation valuation;
  Real lhs, rhs;
  double abs_gap = 0;
  double rel_gap = 0;
  int trial = 0;

  std::string to_string() const;
};

struct Refutation {
  std::optional<Counterexample> counterexample;
  int trials = 0;  // accepted samples
  std::uint64_t seed = 0;

  bool found() const { return counterexample.has_value(); }
};

/// Random search for a valuation where a and b differ. Samples violating a
/// constraint (with margin) or leaving either side undefined are rejected.
/// Throws Unsatisfiable when 10*trials draws are all rejected.
Refutation refute_equality(const Expr& a, const Expr& b, const std::vector<SideCondition>& constraints,
                           const RefuteOptions& opts = {}, const IntervalSpec& domain = IntervalSpec::whole());

struct ComponentRefutation {
  std::string var;
  Refutation result;
};

/// Compares each binding's derivative against the substituted rhs at sampled
/// points of the solution's domain.
std::vector<ComponentRefutation> refute_solution(const OdeSystem& sys, const Solution& sol,
                                                 const std::vector<Assumption>& assumptions = {},
                                                 const RefuteOptions& opts = {});

bool any_found(const std::vector<ComponentRefutation>& r);

struct InitialValueCheck {
  std::string var;
  bool undefined = false;  // the binding has no value at t = 0 for any sample
  Refutation result;       // binding at t = 0 against <var>0

  bool violated() const { return undefined || result.found(); }
};

/// Tests the reading of <var>0 as the value at t = 0.
std::vector<InitialValueCheck> refute_initial_values(const Solution& sol, const RefuteOptions& opts = {});

bool any_violated(const std::vector<InitialValueCheck>& r);

/// All single-node mutations: each constant moved by +1 and -1, each Add
/// turned into Mul and each Mul into Add.
std::vector<Expr> single_node_mutations(const Expr& e);

/// A solution with one binding replaced by a random single-node mutation,
/// or nullopt when no binding has a mutable node.
std::optional<Solution> mutate_solution(const Solution& sol, std::mt19937_64& rng);

}  // namespace odecert
