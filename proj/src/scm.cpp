// Copyright 2026 The causalrep Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//   http://www.apache.org/licenses/LICENSE-2.0

#include "causalrep/scm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <unordered_map>

namespace causalrep::scm {

namespace {

const char* expr_name(Expr e) {
  switch (e) {
    case Expr::kConst0: return "const";
    case Expr::kIdentity: return "id";
    case Expr::kXor: return "xor";
    case Expr::kAnd: return "and";
    case Expr::kOr: return "or";
    case Expr::kTable: return "table";
  }
  return "?";
}

Expr expr_from_name(const std::string& s) {
  if (s == "const") return Expr::kConst0;
  if (s == "id") return Expr::kIdentity;
  if (s == "xor") return Expr::kXor;
  if (s == "and") return Expr::kAnd;
  if (s == "or") return Expr::kOr;
  throw InputError("unknown expr '" + s + "'");
}

}  // namespace

BinaryScm BinaryScm::from_variables(std::vector<Variable> variables) {
  BinaryScm model;
  if (variables.empty()) throw InputError("scm needs at least one variable");
  if (static_cast<int>(variables.size()) > kMaxVariables) {
    throw CapacityError("scm supports at most 32 variables");
  }
  for (int i = 0; i < static_cast<int>(variables.size()); ++i) {
    const Variable& v = variables[i];
    if (v.name.empty()) throw InputError("variable without a name");
    for (int j = 0; j < i; ++j) {
      if (variables[j].name == v.name) {
        throw InputError("duplicate variable name '" + v.name + "'");
      }
    }
    for (int p : v.parents) {
      if (p < 0 || p >= i) {
        throw InputError("variable '" + v.name +
                         "' references a non-earlier parent; definition "
                         "order must be topological");
      }
    }
    if (!(v.noise_p >= 0.0 && v.noise_p <= 1.0)) {
      throw InputError("noise probability of '" + v.name +
                       "' must be in [0,1]");
    }
    const std::size_t arity = v.parents.size();
    switch (v.expr) {
      case Expr::kConst0:
        if (arity != 0) throw InputError("const takes no parents");
        break;
      case Expr::kIdentity:
        if (arity != 1) throw InputError("id takes exactly one parent");
        break;
      case Expr::kXor:
      case Expr::kAnd:
      case Expr::kOr:
        if (arity < 1) {
          throw InputError(std::string(expr_name(v.expr)) +
                           " needs at least one parent");
        }
        break;
      case Expr::kTable:
        if (arity > 20 || v.table.size() != (std::size_t{1} << arity)) {
          throw InputError("truth table of '" + v.name +
                           "' must have 2^|parents| entries");
        }
        for (auto t : v.table) {
          if (t > 1) throw InputError("truth table entries must be 0/1");
        }
        break;
    }
    if (v.noise_p > 0.0 && v.noise_p < 1.0) {
      model.stochastic_.push_back(i);
    }
  }
  if (static_cast<int>(model.stochastic_.size()) > kMaxNoiseBits) {
    throw CapacityError("scm has " + std::to_string(model.stochastic_.size()) +
                        " noise bits; exact enumeration supports at most 24");
  }
  model.variables_ = std::move(variables);
  return model;
}

int BinaryScm::index_of(std::string_view name) const {
  if (auto i = find(name)) return *i;
  throw InputError("unknown variable '" + std::string(name) + "'");
}

std::optional<int> BinaryScm::find(std::string_view name) const {
  for (int i = 0; i < size(); ++i) {
    if (variables_[i].name == name) return i;
  }
  return std::nullopt;
}

int BinaryScm::evaluate_variable(int index, std::uint32_t assignment) const {
  const Variable& v = variables_[index];
  switch (v.expr) {
    case Expr::kConst0:
      return 0;
    case Expr::kIdentity:
      return (assignment >> v.parents[0]) & 1u;
    case Expr::kXor: {
      int acc = 0;
      for (int p : v.parents) acc ^= (assignment >> p) & 1u;
      return acc;
    }
    case Expr::kAnd: {
      for (int p : v.parents) {
        if (((assignment >> p) & 1u) == 0) return 0;
      }
      return 1;
    }
    case Expr::kOr: {
      for (int p : v.parents) {
        if ((assignment >> p) & 1u) return 1;
      }
      return 0;
    }
    case Expr::kTable: {
      std::uint32_t idx = 0;
      for (std::size_t b = 0; b < v.parents.size(); ++b) {
        idx |= ((assignment >> v.parents[b]) & 1u) << b;
      }
      return v.table[idx];
    }
  }
  return 0;
}

BinaryScm BinaryScm::from_json(const Json& j) {
  std::vector<Variable> vars;
  std::vector<std::string> names;
  for (const Json& vj : j.at("variables")) {
    Variable v;
    v.name = vj.at("name").get<std::string>();
    if (vj.contains("parents")) {
      for (const Json& pj : vj.at("parents")) {
        const std::string pname = pj.get<std::string>();
        const auto it = std::find(names.begin(), names.end(), pname);
        if (it == names.end()) {
          throw InputError("variable '" + v.name + "' references '" + pname +
                           "' which is not defined earlier; definition order "
                           "must be topological");
        }
        v.parents.push_back(static_cast<int>(it - names.begin()));
      }
    }
    if (vj.contains("truth_table")) {
      v.expr = Expr::kTable;
      for (const Json& t : vj.at("truth_table")) {
        v.table.push_back(static_cast<std::uint8_t>(t.get<int>()));
      }
    } else if (vj.contains("expr")) {
      v.expr = expr_from_name(vj.at("expr").get<std::string>());
    } else if (v.parents.empty()) {
      v.expr = Expr::kConst0;
    } else {
      throw InputError("variable '" + v.name + "' needs expr or truth_table");
    }
    v.noise_p = vj.value("noise_p", 0.0);
    names.push_back(v.name);
    vars.push_back(std::move(v));
  }
  return from_variables(std::move(vars));
}

Json BinaryScm::to_json() const {
  Json out;
  Json vars = Json::array();
  for (const Variable& v : variables_) {
    Json vj;
    vj["name"] = v.name;
    Json parents = Json::array();
    for (int p : v.parents) parents.push_back(variables_[p].name);
    vj["parents"] = parents;
    if (v.expr == Expr::kTable) {
      Json table = Json::array();
      for (auto t : v.table) table.push_back(static_cast<int>(t));
      vj["truth_table"] = table;
    } else {
      vj["expr"] = expr_name(v.expr);
    }
    vj["noise_p"] = v.noise_p;
    vars.push_back(std::move(vj));
  }
  out["variables"] = vars;
  return out;
}

// ---------------------------------------------------------------------------
// Pmf
// ---------------------------------------------------------------------------

Pmf::Pmf(std::vector<std::pair<std::uint32_t, double>> entries)
    : entries_(std::move(entries)) {
  std::sort(entries_.begin(), entries_.end());
}

double Pmf::total_mass() const {
  double s = 0;
  for (const auto& [mask, mass] : entries_) s += mass;
  return s;
}

double Pmf::mass(std::uint32_t assignment) const {
  const auto it = std::lower_bound(
      entries_.begin(), entries_.end(), assignment,
      [](const auto& e, std::uint32_t a) { return e.first < a; });
  if (it != entries_.end() && it->first == assignment) return it->second;
  return 0.0;
}

static bool event_holds(std::uint32_t assignment, int index,
                        const EventSpec& event) {
  const int v = (assignment >> index) & 1u;
  return event.negated ? v != event.value : v == event.value;
}

double Pmf::prob(const BinaryScm& model, const EventSpec& event) const {
  if (event.value != 0 && event.value != 1) {
    throw InputError("event value must be 0 or 1");
  }
  const int index = model.index_of(event.variable);
  double s = 0;
  for (const auto& [mask, mass] : entries_) {
    if (event_holds(mask, index, event)) s += mass;
  }
  return s;
}

double Pmf::prob_all(const BinaryScm& model,
                     const std::vector<EventSpec>& events) const {
  std::vector<int> indices;
  indices.reserve(events.size());
  for (const EventSpec& e : events) {
    if (e.value != 0 && e.value != 1) {
      throw InputError("event value must be 0 or 1");
    }
    indices.push_back(model.index_of(e.variable));
  }
  double s = 0;
  for (const auto& [mask, mass] : entries_) {
    bool ok = true;
    for (std::size_t k = 0; k < events.size(); ++k) {
      if (!event_holds(mask, indices[k], events[k])) {
        ok = false;
        break;
      }
    }
    if (ok) s += mass;
  }
  return s;
}

double Pmf::marginal(const BinaryScm& model, std::string_view variable) const {
  return prob(model, EventSpec{std::string(variable), 1, false});
}

// ---------------------------------------------------------------------------
// Enumeration engine
// ---------------------------------------------------------------------------

namespace {

struct ClampSet {
  std::uint32_t mask = 0;    // clamped variables
  std::uint32_t values = 0;  // their values
};

ClampSet resolve_clamps(const BinaryScm& model,
                        const std::vector<Clamp>& clamps) {
  ClampSet set;
  for (const Clamp& c : clamps) {
    if (c.value != 0 && c.value != 1) {
      throw InputError("intervention value must be 0 or 1");
    }
    const int i = model.index_of(c.variable);
    const std::uint32_t bit = 1u << i;
    if (set.mask & bit) {
      throw InputError("variable '" + c.variable + "' intervened twice");
    }
    set.mask |= bit;
    if (c.value) set.values |= bit;
  }
  return set;
}

// Evaluates the model under one exogenous noise word, with optional clamps.
// Noise bits are indexed by the model's stochastic-variable list so that the
// same word drives factual and counterfactual evaluations alike.
std::uint32_t evaluate_world(const BinaryScm& model, std::uint32_t noise_word,
                             const ClampSet& clamps) {
  std::uint32_t assignment = 0;
  int noise_index = 0;
  const auto& stochastic = model.stochastic_variables();
  for (int i = 0; i < model.size(); ++i) {
    int noise_bit = 0;
    if (noise_index < static_cast<int>(stochastic.size()) &&
        stochastic[noise_index] == i) {
      noise_bit = (noise_word >> noise_index) & 1u;
      ++noise_index;
    } else if (model.variable(i).noise_p == 1.0) {
      noise_bit = 1;
    }
    int value;
    const std::uint32_t bit = 1u << i;
    if (clamps.mask & bit) {
      value = (clamps.values & bit) ? 1 : 0;
    } else {
      value = model.evaluate_variable(i, assignment) ^ noise_bit;
    }
    if (value) assignment |= bit;
  }
  return assignment;
}

// Calls fn(noise_word, weight) for every exogenous assignment. Weights are
// products of Bernoulli masses and sum to one exactly (up to fp roundoff).
template <typename Fn>
void for_each_noise_word(const BinaryScm& model, Fn&& fn) {
  const auto& stochastic = model.stochastic_variables();
  const int bits = static_cast<int>(stochastic.size());
  const std::uint32_t worlds = 1u << bits;
  std::vector<double> p(bits);
  for (int b = 0; b < bits; ++b) {
    p[b] = model.variable(stochastic[b]).noise_p;
  }
  for (std::uint32_t word = 0; word < worlds; ++word) {
    double weight = 1.0;
    for (int b = 0; b < bits; ++b) {
      weight *= (word >> b) & 1u ? p[b] : 1.0 - p[b];
    }
    fn(word, weight);
  }
}

Pmf accumulate_dist(const BinaryScm& model, const ClampSet& clamps) {
  std::map<std::uint32_t, double> acc;
  for_each_noise_word(model, [&](std::uint32_t word, double weight) {
    acc[evaluate_world(model, word, clamps)] += weight;
  });
  std::vector<std::pair<std::uint32_t, double>> entries(acc.begin(),
                                                        acc.end());
  return Pmf(std::move(entries));
}

EventSpec normalized_cause(const BinaryScm& model, const EventSpec& cause) {
  if (cause.value != 0 && cause.value != 1) {
    throw InputError("event value must be 0 or 1");
  }
  model.index_of(cause.variable);
  // For boolean variables {V != v} is exactly {V = 1-v}.
  EventSpec c = cause;
  if (c.negated) {
    c.value = 1 - c.value;
    c.negated = false;
  }
  return c;
}

}  // namespace

Pmf observational_dist(const BinaryScm& model) {
  return accumulate_dist(model, ClampSet{});
}

Pmf interventional_dist(const BinaryScm& model,
                        const std::vector<Clamp>& do_set) {
  return accumulate_dist(model, resolve_clamps(model, do_set));
}

Pmf do_not_equal_dist(const BinaryScm& model, const EventSpec& event) {
  const EventSpec e = normalized_cause(model, event);
  return do_not_equal_dist(model, std::vector<Clamp>{{e.variable, e.value}});
}

Pmf do_not_equal_dist(const BinaryScm& model,
                      const std::vector<Clamp>& event) {
  if (event.empty()) throw InputError("do_not_equal needs an event");
  const Pmf obs = observational_dist(model);

  std::vector<int> indices;
  std::uint32_t target = 0;
  for (std::size_t k = 0; k < event.size(); ++k) {
    if (event[k].value != 0 && event[k].value != 1) {
      throw InputError("event value must be 0 or 1");
    }
    indices.push_back(model.index_of(event[k].variable));
    if (event[k].value) target |= 1u << k;
  }

  // Observational mass of each joint value of the event variables.
  const std::uint32_t combos = 1u << event.size();
  std::vector<double> mass(combos, 0.0);
  for (const auto& [assignment, m] : obs.entries()) {
    std::uint32_t combo = 0;
    for (std::size_t k = 0; k < indices.size(); ++k) {
      combo |= ((assignment >> indices[k]) & 1u) << k;
    }
    mass[combo] += m;
  }

  double complement = 0.0;
  for (std::uint32_t c = 0; c < combos; ++c) {
    if (c != target) complement += mass[c];
  }
  if (complement <= 0.0) {
    throw DegenerateEventError(
        "do_not_equal: the complementary event has zero probability");
  }

  std::map<std::uint32_t, double> acc;
  for (std::uint32_t c = 0; c < combos; ++c) {
    if (c == target || mass[c] <= 0.0) continue;
    std::vector<Clamp> clamps;
    for (std::size_t k = 0; k < event.size(); ++k) {
      clamps.push_back({event[k].variable, static_cast<int>((c >> k) & 1u)});
    }
    const Pmf part = interventional_dist(model, clamps);
    const double w = mass[c] / complement;
    for (const auto& [assignment, m] : part.entries()) {
      acc[assignment] += w * m;
    }
  }
  std::vector<std::pair<std::uint32_t, double>> entries(acc.begin(),
                                                        acc.end());
  return Pmf(std::move(entries));
}

double pns_lower_bound(const BinaryScm& model, const EventSpec& cause,
                       const EventSpec& outcome) {
  const EventSpec c = normalized_cause(model, cause);
  const Pmf with = interventional_dist(model, {{c.variable, c.value}});
  const Pmf without = do_not_equal_dist(model, std::vector<Clamp>{{c.variable, c.value}});
  return with.prob(model, outcome) - without.prob(model, outcome);
}

namespace {

struct TwinWorlds {
  // Probabilities of joint counterfactual/factual events, accumulated over
  // the shared exogenous noise.
  double p_cf_with = 0;       // Y(Z=z) = y
  double p_both = 0;          // Y(Z=z) = y and Y(Z!=z) != y  (the PNS event)
  double p_violation = 0;     // Y(Z=z) != y and Y(Z!=z) = y
  double p_factual_pos = 0;   // Z = z, Y = y
  double p_factual_neg = 0;   // Z != z, Y != y
  double pn_numerator = 0;    // Z=z, Y=y, Y(Z!=z) != y
  double ps_numerator = 0;    // Z!=z, Y!=y, Y(Z=z) = y
};

TwinWorlds enumerate_twins(const BinaryScm& model, const EventSpec& cause_in,
                           const EventSpec& outcome) {
  const EventSpec cause = normalized_cause(model, cause_in);
  const int zi = model.index_of(cause.variable);
  const int yi = model.index_of(outcome.variable);
  const ClampSet with{1u << zi,
                      cause.value ? (1u << zi) : 0u};
  const ClampSet without{1u << zi,
                         cause.value ? 0u : (1u << zi)};

  TwinWorlds t;
  for_each_noise_word(model, [&](std::uint32_t word, double weight) {
    const std::uint32_t factual = evaluate_world(model, word, ClampSet{});
    const std::uint32_t cf_with = evaluate_world(model, word, with);
    const std::uint32_t cf_without = evaluate_world(model, word, without);

    const bool y_with = event_holds(cf_with, yi, outcome);
    const bool y_without = event_holds(cf_without, yi, outcome);
    const bool z_factual = ((factual >> zi) & 1u) ==
                           static_cast<std::uint32_t>(cause.value);
    const bool y_factual = event_holds(factual, yi, outcome);

    if (y_with) t.p_cf_with += weight;
    if (y_with && !y_without) t.p_both += weight;
    if (!y_with && y_without) t.p_violation += weight;
    if (z_factual && y_factual) {
      t.p_factual_pos += weight;
      if (!y_without) t.pn_numerator += weight;
    }
    if (!z_factual && !y_factual) {
      t.p_factual_neg += weight;
      if (y_with) t.ps_numerator += weight;
    }
  });
  return t;
}

}  // namespace

Poc true_poc(const BinaryScm& model, const EventSpec& cause,
             const EventSpec& outcome) {
  const TwinWorlds t = enumerate_twins(model, cause, outcome);
  if (t.p_factual_pos <= 0.0) {
    throw DegenerateEventError(
        "probability of necessity conditions on {Z=z, Y=y}, which has zero "
        "probability");
  }
  if (t.p_factual_neg <= 0.0) {
    throw DegenerateEventError(
        "probability of sufficiency conditions on {Z!=z, Y!=y}, which has "
        "zero probability");
  }
  Poc poc;
  poc.pn = t.pn_numerator / t.p_factual_pos;
  poc.ps = t.ps_numerator / t.p_factual_neg;
  poc.pns = t.p_both;
  return poc;
}

double monotonicity_violation(const BinaryScm& model, const EventSpec& cause,
                              const EventSpec& outcome) {
  return enumerate_twins(model, cause, outcome).p_violation;
}

double dataset_pns(
    const BinaryScm& model,
    const std::vector<std::pair<EventSpec, EventSpec>>& events) {
  double log_sum = 0;
  for (const auto& [cause, outcome] : events) {
    const double pns = enumerate_twins(model, cause, outcome).p_both;
    if (pns <= 0.0) return -std::numeric_limits<double>::infinity();
    log_sum += std::log(pns);
  }
  return log_sum;
}

double conditional_pns_oracle(const BinaryScm& model, const EventSpec& cause,
                              const std::vector<EventSpec>& held_fixed,
                              const EventSpec& outcome) {
  const EventSpec c = normalized_cause(model, cause);
  const int zi = model.index_of(c.variable);
  const int yi = model.index_of(outcome.variable);

  ClampSet with{1u << zi, c.value ? (1u << zi) : 0u};
  ClampSet without{1u << zi, c.value ? 0u : (1u << zi)};
  for (const EventSpec& h : held_fixed) {
    if (h.negated) {
      throw InputError("held-fixed coordinates must be equality events");
    }
    if (h.value != 0 && h.value != 1) {
      throw InputError("event value must be 0 or 1");
    }
    const int i = model.index_of(h.variable);
    if (i == zi) throw InputError("cause variable cannot also be held fixed");
    const std::uint32_t bit = 1u << i;
    if (with.mask & bit) {
      throw InputError("variable '" + h.variable + "' held fixed twice");
    }
    with.mask |= bit;
    without.mask |= bit;
    if (h.value) {
      with.values |= bit;
      without.values |= bit;
    }
  }

  double p_both = 0;
  for_each_noise_word(model, [&](std::uint32_t word, double weight) {
    const std::uint32_t cf_with = evaluate_world(model, word, with);
    const std::uint32_t cf_without = evaluate_world(model, word, without);
    if (event_holds(cf_with, yi, outcome) &&
        !event_holds(cf_without, yi, outcome)) {
      p_both += weight;
    }
  });
  return p_both;
}

double backdoor_adjustment(const BinaryScm& model,
                           const std::vector<Clamp>& x_assignment,
                           const std::vector<std::string>& common_causes,
                           const EventSpec& outcome) {
  if (common_causes.empty()) {
    throw InputError("backdoor_adjustment needs at least one adjustment "
                     "variable");
  }
  const Pmf obs = observational_dist(model);

  std::vector<int> x_idx;
  std::uint32_t x_mask = 0, x_values = 0;
  for (const Clamp& c : x_assignment) {
    const int i = model.index_of(c.variable);
    x_mask |= 1u << i;
    if (c.value) x_values |= 1u << i;
  }
  std::vector<int> c_idx;
  for (const std::string& name : common_causes) {
    c_idx.push_back(model.index_of(name));
  }
  const int yi = model.index_of(outcome.variable);

  const std::uint32_t combos = 1u << common_causes.size();
  std::vector<double> p_c(combos, 0.0);       // P(C = c)
  std::vector<double> p_cx(combos, 0.0);      // P(C = c, X = x)
  std::vector<double> p_cxy(combos, 0.0);     // P(C = c, X = x, outcome)
  for (const auto& [assignment, mass] : obs.entries()) {
    std::uint32_t combo = 0;
    for (std::size_t k = 0; k < c_idx.size(); ++k) {
      combo |= ((assignment >> c_idx[k]) & 1u) << k;
    }
    p_c[combo] += mass;
    if ((assignment & x_mask) == x_values) {
      p_cx[combo] += mass;
      if (event_holds(assignment, yi, outcome)) p_cxy[combo] += mass;
    }
  }

  double total = 0;
  for (std::uint32_t c = 0; c < combos; ++c) {
    if (p_c[c] <= 0.0) continue;
    if (p_cx[c] <= 0.0) {
      throw DegenerateEventError(
          "backdoor_adjustment: positivity fails; P(X=x, C=c) = 0 for a "
          "common-cause value with positive probability");
    }
    total += p_c[c] * (p_cxy[c] / p_cx[c]);
  }
  return total;
}

Pmf sample_observational_dist(const BinaryScm& model, int n_samples,
                              std::uint64_t seed) {
  if (n_samples < 1) throw InputError("need at least one sample");
  Rng rng(seed);
  std::unordered_map<std::uint32_t, std::int64_t> counts;
  for (int s = 0; s < n_samples; ++s) {
    std::uint32_t assignment = 0;
    for (int i = 0; i < model.size(); ++i) {
      const Variable& v = model.variable(i);
      int noise = 0;
      if (v.noise_p > 0.0) noise = rng.bernoulli(v.noise_p);
      const int value = model.evaluate_variable(i, assignment) ^ noise;
      if (value) assignment |= 1u << i;
    }
    counts[assignment] += 1;
  }
  std::vector<std::pair<std::uint32_t, double>> entries;
  entries.reserve(counts.size());
  for (const auto& [mask, count] : counts) {
    entries.emplace_back(mask,
                         static_cast<double>(count) / n_samples);
  }
  return Pmf(std::move(entries));
}

}  // namespace causalrep::scm
