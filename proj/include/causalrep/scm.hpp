// Copyright 2026 The causalrep Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//   http://www.apache.org/licenses/LICENSE-2.0

#ifndef CAUSALREP_SCM_HPP_
#define CAUSALREP_SCM_HPP_

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "causalrep/common.hpp"
#include "causalrep/json_util.hpp"

namespace causalrep::scm {

// Structural equation of one boolean variable:
//   value = f(parent values) XOR noise,   noise ~ Bernoulli(noise_p).
// A root is a Const0 node, so its value is Bernoulli(noise_p) directly.
enum class Expr { kConst0, kIdentity, kXor, kAnd, kOr, kTable };

struct Variable {
  std::string name;
  std::vector<int> parents;  // indices of strictly earlier variables
  Expr expr = Expr::kConst0;
  std::vector<std::uint8_t> table;  // Expr::kTable: size 2^|parents|
  double noise_p = 0.0;
};

// Finite structural causal model over boolean variables whose definition
// order is a topological order. Exact enumeration is over the exogenous
// noise bits, i.e. variables with noise_p strictly inside (0, 1); at most
// 24 such bits are supported.
class BinaryScm {
 public:
  static constexpr int kMaxNoiseBits = 24;
  static constexpr int kMaxVariables = 32;

  static BinaryScm from_variables(std::vector<Variable> variables);
  static BinaryScm from_json(const Json& j);
  Json to_json() const;

  int size() const { return static_cast<int>(variables_.size()); }
  const Variable& variable(int i) const { return variables_[i]; }
  int index_of(std::string_view name) const;        // throws InputError
  std::optional<int> find(std::string_view name) const;

  // Variables whose noise bit is genuinely random.
  const std::vector<int>& stochastic_variables() const { return stochastic_; }
  int noise_bit_count() const { return static_cast<int>(stochastic_.size()); }

  // Evaluates a single boolean function given the full assignment so far.
  int evaluate_variable(int index, std::uint32_t assignment) const;

 private:
  std::vector<Variable> variables_;
  std::vector<int> stochastic_;
};

// An event {V = value} or, with `negated`, {V != value}.
struct EventSpec {
  std::string variable;
  int value = 1;
  bool negated = false;
};

// A hard intervention do(V = value).
struct Clamp {
  std::string variable;
  int value = 1;
};

// Exact distribution over full variable assignments, each packed as a
// bitmask in definition order (bit i = value of variable i).
class Pmf {
 public:
  Pmf() = default;
  explicit Pmf(std::vector<std::pair<std::uint32_t, double>> entries);

  const std::vector<std::pair<std::uint32_t, double>>& entries() const {
    return entries_;
  }
  double total_mass() const;
  double mass(std::uint32_t assignment) const;
  double prob(const BinaryScm& model, const EventSpec& event) const;
  double prob_all(const BinaryScm& model,
                  const std::vector<EventSpec>& events) const;
  double marginal(const BinaryScm& model, std::string_view variable) const;

 private:
  std::vector<std::pair<std::uint32_t, double>> entries_;  // sorted by mask
};

// Exact joint over all variables by enumerating the exogenous noise bits.
Pmf observational_dist(const BinaryScm& model);

// Mutilated-model joint: clamped variables lose their structural equation
// and noise; everything downstream is recomputed exactly.
Pmf interventional_dist(const BinaryScm& model,
                        const std::vector<Clamp>& do_set);

// Soft intervention do(V != value): the mixture of hard interventions over
// the complementary values, weighted by the observational conditional.
Pmf do_not_equal_dist(const BinaryScm& model, const EventSpec& event);

// Joint-event variant: mixture of do(W = w) over all assignments w of the
// named variables with w != the given one, weighted by the observational
// P(W = w | W != given).
Pmf do_not_equal_dist(const BinaryScm& model, const std::vector<Clamp>& event);

// P(Y=y | do(Z=z)) - P(Y=y | do(Z!=z)). May be negative; callers clamp to
// [0,1] for reporting only.
double pns_lower_bound(const BinaryScm& model, const EventSpec& cause,
                       const EventSpec& outcome);

struct Poc {
  double pn = 0;
  double ps = 0;
  double pns = 0;
};

// Exact probabilities of causation by twin-world enumeration: factual and
// counterfactual worlds share the same exogenous noise.
Poc true_poc(const BinaryScm& model, const EventSpec& cause,
             const EventSpec& outcome);

// Probability that the outcome responds anti-monotonically to the cause,
// P(Y(Z=z) != y, Y(Z!=z) = y). The lower bound is tight iff this is zero.
double monotonicity_violation(const BinaryScm& model, const EventSpec& cause,
                              const EventSpec& outcome);

// Sum of log true-PNS over datapoints; -inf if any factor is zero.
double dataset_pns(
    const BinaryScm& model,
    const std::vector<std::pair<EventSpec, EventSpec>>& events);

// Exact conditional counterpart: contrasts do(Zj=zj, held fixed) against
// do(Zj!=zj, held fixed) with shared noise.
double conditional_pns_oracle(const BinaryScm& model, const EventSpec& cause,
                              const std::vector<EventSpec>& held_fixed,
                              const EventSpec& outcome);

// Adjustment formula sum_c P(outcome | X = x, C = c) P(C = c) computed from
// the observational joint. Requires every (x, c) cell with P(c) > 0 to have
// positive probability.
double backdoor_adjustment(const BinaryScm& model,
                           const std::vector<Clamp>& x_assignment,
                           const std::vector<std::string>& common_causes,
                           const EventSpec& outcome);

// Seeded Monte Carlo approximation of the observational joint, for models
// beyond the exact-enumeration bound. Approximate; not used by oracles.
Pmf sample_observational_dist(const BinaryScm& model, int n_samples,
                              std::uint64_t seed);

}  // namespace causalrep::scm

#endif  // CAUSALREP_SCM_HPP_
