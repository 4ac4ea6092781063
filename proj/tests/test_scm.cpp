// Copyright 2026 The causalrep Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//   http://www.apache.org/licenses/LICENSE-2.0

#include "causalrep/scm.hpp"

#include <cmath>

#include "causalrep/synth.hpp"
#include "doctest.h"
#include "test_support.hpp"

using namespace causalrep;
using scm::BinaryScm;
using scm::Clamp;
using scm::EventSpec;
using scm::Expr;
using scm::Pmf;
using scm::Variable;

namespace {

BinaryScm single_root(double q) {
  return BinaryScm::from_variables({{"Z", {}, Expr::kConst0, {}, q}});
}

BinaryScm chain_y_equals_z(double q) {
  return BinaryScm::from_variables({{"Z", {}, Expr::kConst0, {}, q},
                                    {"Y", {0}, Expr::kIdentity, {}, 0.0}});
}

// Y independent of Z.
BinaryScm independent_pair() {
  return BinaryScm::from_variables({{"Z", {}, Expr::kConst0, {}, 0.5},
                                    {"Y", {}, Expr::kConst0, {}, 0.3}});
}

}  // namespace

TEST_CASE("observational_dist matches the defining Bernoulli masses") {
  const BinaryScm root = single_root(0.4);
  const Pmf pmf = scm::observational_dist(root);
  CHECK(pmf.marginal(root, "Z") == doctest::Approx(0.4).epsilon(1e-14));

  const BinaryScm poc = synth::gen_binary_poc(0.5);
  const Pmf joint = scm::observational_dist(poc);
  CHECK(joint.marginal(poc, "Z2") == doctest::Approx(0.5).epsilon(1e-13));
  CHECK(joint.marginal(poc, "Z1") == doctest::Approx(0.4).epsilon(1e-13));

  const BinaryScm chain = chain_y_equals_z(0.3);
  const Pmf cpmf = scm::observational_dist(chain);
  CHECK(cpmf.prob_all(chain, {{"Y", 1, false}, {"Z", 1, false}}) ==
        doctest::Approx(0.3).epsilon(1e-14));
}

TEST_CASE("pmf masses are nonnegative and sum to one") {
  Rng rng(11);
  for (int t = 0; t < 30; ++t) {
    const BinaryScm model = testsupport::random_scm(rng);
    const Pmf pmf = scm::observational_dist(model);
    double total = 0;
    for (const auto& [mask, mass] : pmf.entries()) {
      CHECK(mass >= 0.0);
      total += mass;
    }
    CHECK(std::abs(total - 1.0) < 1e-12);
  }
}

TEST_CASE("noise-bit capacity is enforced") {
  std::vector<Variable> vars;
  for (int i = 0; i < 25; ++i) {
    vars.push_back({"R" + std::to_string(i), {}, Expr::kConst0, {}, 0.3});
  }
  CHECK_THROWS_AS(BinaryScm::from_variables(std::move(vars)), CapacityError);
}

TEST_CASE("interventional_dist clamps and recomputes downstream") {
  const BinaryScm poc = synth::gen_binary_poc(0.3);
  const Pmf do_z1 = scm::interventional_dist(poc, {{"Z1", 1}});
  CHECK(do_z1.marginal(poc, "Y1") == doctest::Approx(0.8).epsilon(1e-13));

  // Z2 has no causal path to Y1.
  const Pmf do_z2 = scm::interventional_dist(poc, {{"Z2", 1}});
  const Pmf obs = scm::observational_dist(poc);
  CHECK(do_z2.marginal(poc, "Y1") ==
        doctest::Approx(obs.marginal(poc, "Y1")).epsilon(1e-13));

  CHECK_THROWS_AS(scm::interventional_dist(poc, {{"nope", 1}}), InputError);
}

TEST_CASE("intervening on a sink leaves other marginals unchanged") {
  const BinaryScm model = BinaryScm::from_variables(
      {{"A", {}, Expr::kConst0, {}, 0.6},
       {"B", {0}, Expr::kIdentity, {}, 0.25},
       {"S", {}, Expr::kConst0, {}, 0.5}});  // S is a root with no children
  const Pmf obs = scm::observational_dist(model);
  const Pmf mut = scm::interventional_dist(model, {{"S", 1}});
  for (const char* name : {"A", "B"}) {
    CHECK(mut.marginal(model, name) ==
          doctest::Approx(obs.marginal(model, name)).epsilon(1e-14));
  }
}

TEST_CASE("empty do-set reproduces the observational joint exactly") {
  Rng rng(17);
  const BinaryScm model = testsupport::random_scm(rng);
  const Pmf obs = scm::observational_dist(model);
  const Pmf empty = scm::interventional_dist(model, {});
  REQUIRE(obs.entries().size() == empty.entries().size());
  for (std::size_t i = 0; i < obs.entries().size(); ++i) {
    CHECK(obs.entries()[i].first == empty.entries()[i].first);
    CHECK(obs.entries()[i].second == empty.entries()[i].second);
  }
}

TEST_CASE("do_not_equal on a binary event equals the complement clamp") {
  const BinaryScm poc = synth::gen_binary_poc(0.3);
  const Pmf soft = scm::do_not_equal_dist(poc, EventSpec{"Z1", 1, false});
  const Pmf hard = scm::interventional_dist(poc, {{"Z1", 0}});
  REQUIRE(soft.entries().size() == hard.entries().size());
  for (std::size_t i = 0; i < soft.entries().size(); ++i) {
    CHECK(soft.entries()[i].first == hard.entries()[i].first);
    CHECK(soft.entries()[i].second ==
          doctest::Approx(hard.entries()[i].second).epsilon(1e-13));
  }
}

TEST_CASE("joint do_not_equal mixes complements by observational mass") {
  // Three-valued joint support of (F1, F2): the combination (1,1) is
  // impossible because F2 = (1 - F1) & N.
  const BinaryScm model = BinaryScm::from_variables(
      {{"F1", {}, Expr::kConst0, {}, 0.45},
       {"N", {}, Expr::kConst0, {}, 0.7},
       {"F2", {0, 1}, Expr::kTable, {0, 0, 1, 0}, 0.0},
       {"Y", {0, 2}, Expr::kOr, {}, 0.1}});
  const Pmf obs = scm::observational_dist(model);
  const double m01 =
      obs.prob_all(model, {{"F1", 0, false}, {"F2", 1, false}});
  const double m10 =
      obs.prob_all(model, {{"F1", 1, false}, {"F2", 0, false}});
  const double m11 =
      obs.prob_all(model, {{"F1", 1, false}, {"F2", 1, false}});
  REQUIRE(m11 == doctest::Approx(0.0));

  const Pmf mixed = scm::do_not_equal_dist(
      model, std::vector<Clamp>{{"F1", 0}, {"F2", 0}});
  // Manual mixture oracle over the two possible complements.
  const Pmf part01 = scm::interventional_dist(model, {{"F1", 0}, {"F2", 1}});
  const Pmf part10 = scm::interventional_dist(model, {{"F1", 1}, {"F2", 0}});
  const double w01 = m01 / (m01 + m10);
  const double w10 = m10 / (m01 + m10);
  const EventSpec y1{"Y", 1, false};
  CHECK(mixed.prob(model, y1) ==
        doctest::Approx(w01 * part01.prob(model, y1) +
                        w10 * part10.prob(model, y1))
            .epsilon(1e-13));
}

TEST_CASE("do_not_equal on an impossible complement is degenerate") {
  const BinaryScm model = BinaryScm::from_variables(
      {{"Z", {}, Expr::kConst0, {}, 0.0},  // Z is always 0
       {"Y", {0}, Expr::kIdentity, {}, 0.2}});
  CHECK_THROWS_AS(scm::do_not_equal_dist(model, EventSpec{"Z", 0, false}),
                  DegenerateEventError);
}

TEST_CASE("pns_lower_bound on the binary example and the extremes") {
  const BinaryScm poc = synth::gen_binary_poc(0.5);
  CHECK(scm::pns_lower_bound(poc, {"Z1", 1, false}, {"Y1", 1, false}) ==
        doctest::Approx(0.6).epsilon(1e-13));

  const BinaryScm indep = independent_pair();
  CHECK(scm::pns_lower_bound(indep, {"Z", 1, false}, {"Y", 1, false}) ==
        doctest::Approx(0.0));

  const BinaryScm chain = chain_y_equals_z(0.3);
  CHECK(scm::pns_lower_bound(chain, {"Z", 1, false}, {"Y", 1, false}) ==
        doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("true_poc twin-world oracle on the binary example") {
  const BinaryScm poc = synth::gen_binary_poc(0.5);
  const scm::Poc z1y1 = scm::true_poc(poc, {"Z1", 1, false}, {"Y1", 1, false});
  CHECK(z1y1.pn == doctest::Approx(1.0).epsilon(1e-13));
  CHECK(z1y1.ps == doctest::Approx(1.0).epsilon(1e-13));
  CHECK(z1y1.pns == doctest::Approx(0.8).epsilon(1e-13));

  const BinaryScm indep = independent_pair();
  CHECK(scm::true_poc(indep, {"Z", 1, false}, {"Y", 1, false}).pns ==
        doctest::Approx(0.0));

  const BinaryScm chain = chain_y_equals_z(0.3);
  const scm::Poc det = scm::true_poc(chain, {"Z", 1, false}, {"Y", 1, false});
  CHECK(det.pn == doctest::Approx(1.0));
  CHECK(det.ps == doctest::Approx(1.0));
  CHECK(det.pns == doctest::Approx(1.0));
}

TEST_CASE("true_poc rejects zero-probability conditioning events") {
  const BinaryScm model = BinaryScm::from_variables(
      {{"Z", {}, Expr::kConst0, {}, 1.0},  // Z is always 1
       {"Y", {0}, Expr::kIdentity, {}, 0.2}});
  // {Z != 1, Y != 1} has zero probability, so PS conditions on nothing.
  CHECK_THROWS_AS(scm::true_poc(model, {"Z", 1, false}, {"Y", 1, false}),
                  DegenerateEventError);
}

TEST_CASE("dataset_pns sums logs and hits -inf on zero factors") {
  const BinaryScm poc = synth::gen_binary_poc(0.4);
  const EventSpec cause{"Z1", 1, false};
  const EventSpec outcome{"Y1", 1, false};
  const double single = scm::true_poc(poc, cause, outcome).pns;
  CHECK(scm::dataset_pns(poc, {{cause, outcome}}) ==
        doctest::Approx(std::log(single)).epsilon(1e-13));
  CHECK(scm::dataset_pns(poc, {{cause, outcome}, {cause, outcome}}) ==
        doctest::Approx(2.0 * std::log(single)).epsilon(1e-13));

  // Mixed events match the product of individual oracle values.
  const EventSpec cause2{"Z2", 1, false};
  const EventSpec outcome2{"Y2", 1, false};
  const double mixed =
      scm::dataset_pns(poc, {{cause, outcome}, {cause2, outcome2}});
  const double expected = std::log(scm::true_poc(poc, cause, outcome).pns) +
                          std::log(scm::true_poc(poc, cause2, outcome2).pns);
  CHECK(mixed == doctest::Approx(expected).epsilon(1e-13));

  const BinaryScm indep = independent_pair();
  CHECK(scm::dataset_pns(indep, {{{"Z", 1, false}, {"Y", 1, false}}}) ==
        -std::numeric_limits<double>::infinity());
}

TEST_CASE("conditional_pns_oracle clamps the held coordinates") {
  const BinaryScm poc = synth::gen_binary_poc(0.3);
  // Y1 ignores Z2 once Z1 is clamped.
  CHECK(scm::conditional_pns_oracle(poc, {"Z2", 1, false},
                                    {{"Z1", 1, false}}, {"Y1", 1, false}) ==
        doctest::Approx(0.0));
  // Y2 = (Z1 & Z2) xor noise: with Z2 clamped to 1 the response to Z1 is
  // the no-flip probability.
  CHECK(scm::conditional_pns_oracle(poc, {"Z1", 1, false},
                                    {{"Z2", 1, false}}, {"Y2", 1, false}) ==
        doctest::Approx(0.8).epsilon(1e-13));
  // Empty conditioning set reduces to the unconditional quantity.
  const double unconditional =
      scm::true_poc(poc, {"Z1", 1, false}, {"Y1", 1, false}).pns;
  CHECK(scm::conditional_pns_oracle(poc, {"Z1", 1, false}, {},
                                    {"Y1", 1, false}) ==
        doctest::Approx(unconditional).epsilon(1e-14));
}

TEST_CASE("bound, oracle, and the weighted identity across random models") {
  Rng rng(2024);
  int checked = 0;
  int attempts = 0;
  while (checked < 100 && attempts < 2000) {
    ++attempts;
    const BinaryScm model = testsupport::random_scm(rng);
    const int nv = model.size();
    const int zi = static_cast<int>(rng.uniform_index(nv));
    int yi = static_cast<int>(rng.uniform_index(nv));
    if (yi == zi) yi = (yi + 1) % nv;
    const EventSpec cause{model.variable(zi).name,
                          static_cast<int>(rng.uniform_index(2)), false};
    const EventSpec outcome{model.variable(yi).name,
                            static_cast<int>(rng.uniform_index(2)), false};
    scm::Poc poc;
    try {
      poc = scm::true_poc(model, cause, outcome);
    } catch (const DegenerateEventError&) {
      continue;  // conditioning event impossible for this draw
    }
    ++checked;
    const double bound = scm::pns_lower_bound(model, cause, outcome);
    CHECK(bound <= poc.pns + 1e-12);

    const double violation = scm::monotonicity_violation(model, cause, outcome);
    if (violation == 0.0) {
      CHECK(std::abs(bound - poc.pns) <= 1e-12);
    }

    // PNS = P(Z=z, Y=y) PN + P(Z!=z, Y!=y) PS.
    const Pmf obs = scm::observational_dist(model);
    const double p_pos = obs.prob_all(model, {cause, outcome});
    const EventSpec not_cause{cause.variable, cause.value, true};
    const EventSpec not_outcome{outcome.variable, outcome.value, true};
    const double p_neg = obs.prob_all(model, {not_cause, not_outcome});
    CHECK(std::abs(poc.pns - (p_pos * poc.pn + p_neg * poc.ps)) <= 1e-12);
  }
  REQUIRE(checked == 100);
}

TEST_CASE("backdoor adjustment reduces to the plain conditional") {
  // C drives X with genuine overlap; Y depends on X alone.
  const BinaryScm model = BinaryScm::from_variables(
      {{"C", {}, Expr::kConst0, {}, 0.5},
       {"X", {0}, Expr::kIdentity, {}, 0.2},
       {"Y", {1}, Expr::kIdentity, {}, 0.3}});
  const double adjusted = scm::backdoor_adjustment(
      model, {{"X", 1}}, {"C"}, {"Y", 1, false});
  const Pmf obs = scm::observational_dist(model);
  const double plain =
      obs.prob_all(model, {{"Y", 1, false}, {"X", 1, false}}) /
      obs.prob(model, {"X", 1, false});
  CHECK(adjusted == doctest::Approx(plain).epsilon(1e-12));
}

TEST_CASE("monte carlo fallback approximates the exact joint") {
  const BinaryScm poc = synth::gen_binary_poc(0.3);
  const Pmf exact = scm::observational_dist(poc);
  const Pmf approx = scm::sample_observational_dist(poc, 200000, 99);
  CHECK(std::abs(approx.marginal(poc, "Y2") - exact.marginal(poc, "Y2")) <
        0.01);
  // Seeded: identical reruns.
  const Pmf again = scm::sample_observational_dist(poc, 1000, 7);
  const Pmf again2 = scm::sample_observational_dist(poc, 1000, 7);
  REQUIRE(again.entries().size() == again2.entries().size());
  for (std::size_t i = 0; i < again.entries().size(); ++i) {
    CHECK(again.entries()[i] == again2.entries()[i]);
  }
}

TEST_CASE("scm json round trip preserves the model") {
  const BinaryScm poc = synth::gen_binary_poc(0.25);
  const BinaryScm back = BinaryScm::from_json(poc.to_json());
  const Pmf a = scm::observational_dist(poc);
  const Pmf b = scm::observational_dist(back);
  REQUIRE(a.entries().size() == b.entries().size());
  for (std::size_t i = 0; i < a.entries().size(); ++i) {
    CHECK(a.entries()[i] == b.entries()[i]);
  }
  // Non-topological order is rejected at parse time.
  Json bad = poc.to_json();
  std::swap(bad["variables"][0], bad["variables"][4]);
  CHECK_THROWS_AS(BinaryScm::from_json(bad), InputError);
}
