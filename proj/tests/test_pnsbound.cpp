// Copyright 2026 The causalrep Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//   http://www.apache.org/licenses/LICENSE-2.0

#include "causalrep/pnsbound.hpp"

#include <Eigen/Dense>
#include <cmath>

#include "causalrep/synth.hpp"
#include "doctest.h"
#include "test_support.hpp"

using namespace causalrep;
using pns::OutcomeModelFit;

namespace {

struct RandomInstance {
  Eigen::MatrixXd f_vals;
  Eigen::MatrixXd c_hats;
  Eigen::VectorXd y;
};

RandomInstance random_instance(Rng& rng, int n, int d, int k) {
  RandomInstance inst;
  inst.f_vals.resize(n, d);
  inst.c_hats.resize(n, k);
  inst.y.resize(n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < d; ++j) inst.f_vals(i, j) = rng.normal();
    for (int j = 0; j < k; ++j) inst.c_hats(i, j) = rng.normal();
    inst.y(i) = rng.normal();
  }
  return inst;
}

// Pinned 5-point fixture; expected values come from the transcription
// oracle, which is evaluated term by term from the formula.
RandomInstance fixture_instance() {
  RandomInstance inst;
  inst.f_vals.resize(5, 2);
  inst.f_vals << 0.1, -1.2, 0.7, 0.3, -0.4, 0.9, 1.5, -0.6, -0.2, 0.05;
  inst.c_hats.resize(5, 1);
  inst.c_hats << 0.3, -0.1, 0.8, -1.1, 0.25;
  inst.y.resize(5);
  inst.y << 1.0, 0.2, -0.5, 2.0, 0.7;
  return inst;
}

}  // namespace

TEST_CASE("outcome fit interpolates exact linear data") {
  Rng rng(41);
  const RandomInstance inst = random_instance(rng, 60, 2, 1);
  const double b0 = 0.7;
  Eigen::VectorXd beta(2);
  beta << 1.5, -2.25;
  Eigen::VectorXd gamma(1);
  gamma << 0.8;
  const Eigen::VectorXd y =
      (inst.f_vals * beta + inst.c_hats * gamma).array() + b0;
  const OutcomeModelFit fit = pns::fit_outcome_linear(inst.f_vals, y, inst.c_hats);
  CHECK(std::abs(fit.intercept - b0) < 1e-8);
  CHECK((fit.rep_coeffs - beta).cwiseAbs().maxCoeff() < 1e-8);
  CHECK((fit.cause_coeffs - gamma).cwiseAbs().maxCoeff() < 1e-8);
  CHECK(fit.noise_variance < 1e-12);
}

TEST_CASE("outcome fit on pure noise gives near-zero coefficients") {
  Rng rng(42);
  const RandomInstance inst = random_instance(rng, 4000, 2, 1);
  const OutcomeModelFit fit =
      pns::fit_outcome_linear(inst.f_vals, inst.y, inst.c_hats);
  CHECK(fit.rep_coeffs.cwiseAbs().maxCoeff() < 0.1);
  CHECK(fit.cause_coeffs.cwiseAbs().maxCoeff() < 0.1);
}

TEST_CASE("residuals are orthogonal to the regressors") {
  Rng rng(43);
  const RandomInstance inst = random_instance(rng, 200, 3, 2);
  const OutcomeModelFit fit =
      pns::fit_outcome_linear(inst.f_vals, inst.y, inst.c_hats);
  CHECK(std::abs(fit.residuals.sum()) < 1e-8);
  for (int j = 0; j < 3; ++j) {
    CHECK(std::abs(fit.residuals.dot(inst.f_vals.col(j))) < 1e-8);
  }
  for (int j = 0; j < 2; ++j) {
    CHECK(std::abs(fit.residuals.dot(inst.c_hats.col(j))) < 1e-8);
  }
  const double expected_var =
      fit.residuals.squaredNorm() / static_cast<double>(inst.y.size());
  CHECK(fit.noise_variance == expected_var);
}

TEST_CASE("collinear designs raise with the condition number attached") {
  Rng rng(44);
  RandomInstance inst = random_instance(rng, 100, 2, 1);
  inst.f_vals.col(1) = 2.0 * inst.f_vals.col(0);  // duplicated direction
  try {
    pns::fit_outcome_linear(inst.f_vals, inst.y, inst.c_hats);
    FAIL("expected CollinearityError");
  } catch (const CollinearityError& e) {
    CHECK(e.condition_number() > pns::kMaxConditionNumber);
  }
}

TEST_CASE("pixel-example representation fits with reduced residual variance") {
  const synth::PixelLinearData pixel = synth::gen_pixel_linear(7);
  const Eigen::Index n = pixel.data.x.rows();
  Eigen::MatrixXd f_vals(n, 2);
  f_vals.col(0) = pixel.data.x.values.col(1);
  f_vals.col(1) =
      0.5 * pixel.data.x.values.col(0) + pixel.data.x.values.col(3);
  const pinpoint::PpcaFit ppca = pinpoint::fit_ppca(pixel.data.x, 1);
  const Eigen::MatrixXd c_hats = pinpoint::posterior_means(ppca, pixel.data.x);
  const OutcomeModelFit fit =
      pns::fit_outcome_linear(f_vals, pixel.data.y, c_hats);
  const double raw_var =
      (pixel.data.y.array() - pixel.data.y.mean()).square().sum() /
      static_cast<double>(n);
  CHECK(std::isfinite(fit.noise_variance));
  CHECK(fit.noise_variance < raw_var);
}

TEST_CASE("conditional bound terms vanish and simplify as the formula says") {
  Rng rng(45);
  const RandomInstance inst = random_instance(rng, 50, 2, 1);
  OutcomeModelFit fit =
      pns::fit_outcome_linear(inst.f_vals, inst.y, inst.c_hats);

  SUBCASE("zero coefficient kills the dimension's bound") {
    fit.rep_coeffs(0) = 0.0;
    CHECK(pns::log_cond_pns_lower(fit, inst.f_vals, inst.c_hats, 0) == 0.0);
  }
  SUBCASE("zero cause coefficients leave only the quadratic term") {
    fit.cause_coeffs.setZero();
    Eigen::MatrixXd centered = inst.f_vals;
    centered.col(0).array() -= centered.col(0).mean();
    const double expected = fit.rep_coeffs(0) * fit.rep_coeffs(0) *
                            centered.col(0).squaredNorm() /
                            (2.0 * fit.noise_variance);
    CHECK(pns::log_cond_pns_lower(fit, inst.f_vals, inst.c_hats, 0) ==
          doctest::Approx(expected).epsilon(1e-12));
  }
  SUBCASE("out-of-range dimension and zero variance are rejected") {
    CHECK_THROWS_AS(pns::log_cond_pns_lower(fit, inst.f_vals, inst.c_hats, 2),
                    InputError);
    fit.noise_variance = 0.0;
    CHECK_THROWS_AS(pns::log_cond_pns_lower(fit, inst.f_vals, inst.c_hats, 0),
                    NumericalError);
  }
}

TEST_CASE("fixture values match the literal transcription") {
  const RandomInstance inst = fixture_instance();
  const OutcomeModelFit fit =
      pns::fit_outcome_linear(inst.f_vals, inst.y, inst.c_hats);
  for (int j = 0; j < 2; ++j) {
    const double expected = testsupport::transcribed_cond_log_bound(
        fit.rep_coeffs, fit.cause_coeffs, fit.noise_variance, inst.f_vals,
        inst.c_hats, j);
    CHECK(pns::log_cond_pns_lower(fit, inst.f_vals, inst.c_hats, j) ==
          doctest::Approx(expected).epsilon(1e-12));
  }
  const double expected_total = testsupport::transcribed_log_bound(
      fit.rep_coeffs, fit.cause_coeffs, fit.noise_variance, inst.f_vals,
      inst.c_hats);
  CHECK(pns::log_pns_lower(fit, inst.f_vals, inst.c_hats) ==
        doctest::Approx(expected_total).epsilon(1e-12));
}

TEST_CASE("evaluators agree with independent transcriptions on 100 draws") {
  Rng rng(46);
  for (int t = 0; t < 100; ++t) {
    const int n = 20 + static_cast<int>(rng.uniform_index(60));
    const int d = 1 + static_cast<int>(rng.uniform_index(3));
    const int k = 1 + static_cast<int>(rng.uniform_index(2));
    const RandomInstance inst = random_instance(rng, n, d, k);
    const OutcomeModelFit fit =
        pns::fit_outcome_linear(inst.f_vals, inst.y, inst.c_hats);
    for (int j = 0; j < d; ++j) {
      const double ours =
          pns::log_cond_pns_lower(fit, inst.f_vals, inst.c_hats, j);
      const double oracle = testsupport::transcribed_cond_log_bound(
          fit.rep_coeffs, fit.cause_coeffs, fit.noise_variance, inst.f_vals,
          inst.c_hats, j);
      CHECK(std::abs(ours - oracle) <= 1e-10 * (1.0 + std::abs(oracle)));
    }
    const double ours = pns::log_pns_lower(fit, inst.f_vals, inst.c_hats);
    const double oracle = testsupport::transcribed_log_bound(
        fit.rep_coeffs, fit.cause_coeffs, fit.noise_variance, inst.f_vals,
        inst.c_hats);
    CHECK(std::abs(ours - oracle) <= 1e-10 * (1.0 + std::abs(oracle)));
  }
}

TEST_CASE("single-dimension reduction is exact") {
  Rng rng(47);
  for (int t = 0; t < 20; ++t) {
    const RandomInstance inst = random_instance(rng, 40, 1, 2);
    const OutcomeModelFit fit =
        pns::fit_outcome_linear(inst.f_vals, inst.y, inst.c_hats);
    CHECK(pns::log_pns_lower(fit, inst.f_vals, inst.c_hats) ==
          pns::log_cond_pns_lower(fit, inst.f_vals, inst.c_hats, 0));
  }
}

TEST_CASE("bounds are invariant to shifting any dimension by a constant") {
  Rng rng(48);
  const RandomInstance inst = random_instance(rng, 80, 2, 1);
  const OutcomeModelFit fit =
      pns::fit_outcome_linear(inst.f_vals, inst.y, inst.c_hats);
  Eigen::MatrixXd shifted = inst.f_vals;
  shifted.col(0).array() += 17.5;
  shifted.col(1).array() += -3.25;
  for (int j = 0; j < 2; ++j) {
    const double a = pns::log_cond_pns_lower(fit, inst.f_vals, inst.c_hats, j);
    const double b = pns::log_cond_pns_lower(fit, shifted, inst.c_hats, j);
    CHECK(std::abs(a - b) <= 1e-10 * (1.0 + std::abs(a)));
  }
  const double a = pns::log_pns_lower(fit, inst.f_vals, inst.c_hats);
  const double b = pns::log_pns_lower(fit, shifted, inst.c_hats);
  CHECK(std::abs(a - b) <= 1e-10 * (1.0 + std::abs(a)));
}

TEST_CASE("bounds depend only on the product beta_j f_j") {
  Rng rng(49);
  const RandomInstance inst = random_instance(rng, 80, 2, 1);
  OutcomeModelFit fit =
      pns::fit_outcome_linear(inst.f_vals, inst.y, inst.c_hats);
  const double before =
      pns::log_cond_pns_lower(fit, inst.f_vals, inst.c_hats, 0);
  const double s = 3.7;
  Eigen::MatrixXd scaled = inst.f_vals;
  scaled.col(0) *= s;
  fit.rep_coeffs(0) /= s;
  const double after = pns::log_cond_pns_lower(fit, scaled, inst.c_hats, 0);
  CHECK(std::abs(before - after) <= 1e-8 * (1.0 + std::abs(before)));
}

TEST_CASE("positivity diagnostic flags near-deterministic dimensions") {
  Rng rng(50);
  const int n = 300;
  Eigen::MatrixXd c(n, 1);
  for (int i = 0; i < n; ++i) c(i, 0) = rng.normal();
  Eigen::MatrixXd f(n, 2);
  f.col(0) = 2.0 * c.col(0);  // exactly linear in the cause
  for (int i = 0; i < n; ++i) f(i, 1) = rng.normal();  // independent
  const pns::PositivityDiagnostic diag = pns::positivity_diagnostic(f, c);
  CHECK(diag.flagged[0]);
  CHECK_FALSE(diag.flagged[1]);
  CHECK(diag.r_squared(0) > 1.0 - 1e-6);
  CHECK(diag.r_squared(1) < 0.1);
  // Against the regression oracle.
  CHECK(diag.r_squared(1) ==
        doctest::Approx(testsupport::oracle_r_squared(f.col(1), c))
            .epsilon(1e-8));
}

TEST_CASE("observability diagnostic ranks the selected columns") {
  Rng rng(51);
  Eigen::MatrixXd x(100, 3);
  for (int i = 0; i < 100; ++i) {
    x(i, 0) = rng.normal();
    x(i, 1) = rng.normal();
    x(i, 2) = x(i, 0);  // duplicate of the first column
  }
  const DataMatrix data(x);

  SUBCASE("independent selected columns pass") {
    const rep::RepFunction f = rep::RepFunction::selection_of_columns(3, {0, 1});
    const pns::ObservabilityDiagnostic diag =
        pns::observability_diagnostic(data, f);
    CHECK(diag.support == std::vector<int>{0, 1});
    CHECK(diag.rank == 2);
    CHECK_FALSE(diag.rank_deficient);
  }
  SUBCASE("duplicated selected columns are flagged") {
    const rep::RepFunction f = rep::RepFunction::selection_of_columns(3, {0, 2});
    const pns::ObservabilityDiagnostic diag =
        pns::observability_diagnostic(data, f);
    CHECK(diag.rank == 1);
    CHECK(diag.rank_deficient);
  }
}

TEST_CASE("pixel-example support is full rank") {
  const synth::PixelLinearData pixel = synth::gen_pixel_linear(8);
  const rep::RepFunction f = rep::RepFunction::selection_of_columns(5, {0, 1});
  const pns::ObservabilityDiagnostic diag =
      pns::observability_diagnostic(pixel.data.x, f);
  CHECK(diag.rank == 2);
  CHECK_FALSE(diag.rank_deficient);
}

TEST_CASE("measure_pns runs the gated pipeline end to end") {
  const synth::PixelLinearData pixel = synth::gen_pixel_linear(9);
  // Convex weights equivalent to the pixel-example representation up to a
  // positive rescaling of each dimension, which the bound absorbs.
  Eigen::MatrixXd logits = Eigen::MatrixXd::Constant(5, 2, -30.0);
  logits(1, 0) = 0.0;
  logits(0, 1) = std::log(1.0 / 3.0);
  logits(3, 1) = std::log(2.0 / 3.0);
  const rep::RepFunction f(rep::RepClass::kConvexCombination, logits);

  pns::MeasureConfig config;
  config.latent_dim = 1;
  const pns::PnsReport report =
      pns::measure_pns(pixel.data.x, pixel.data.y, f, config);
  CHECK(report.pinpointability.passed);
  REQUIRE(report.log_pns_lower.has_value());
  REQUIRE(report.cond_log_pns_lower.has_value());
  CHECK(report.cond_log_pns_lower->size() == 2);
  CHECK(std::isfinite(*report.log_pns_lower));
  const Json j = report.to_json();
  CHECK(j.contains("gates"));
  CHECK(j.at("gates").at("pinpointability").at("passed").get<bool>());
}

TEST_CASE("measure_pns withholds bounds when pinpointing fails") {
  Rng rng(52);
  Eigen::MatrixXd x(300, 4);
  for (int i = 0; i < 300; ++i) {
    for (int j = 0; j < 4; ++j) x(i, j) = rng.normal();
  }
  Eigen::VectorXd y(300);
  for (int i = 0; i < 300; ++i) y(i) = rng.normal();
  const rep::RepFunction f = rep::RepFunction::selection_of_columns(4, {0});
  pns::MeasureConfig config;
  config.latent_dim = 1;
  const pns::PnsReport report = pns::measure_pns(DataMatrix(x), y, f, config);
  CHECK_FALSE(report.pinpointability.passed);
  CHECK_FALSE(report.log_pns_lower.has_value());
  CHECK_FALSE(report.cond_log_pns_lower.has_value());
  CHECK_FALSE(report.positivity.has_value());
}

TEST_CASE("measure_pns ordering matches the counterfactual oracle") {
  // Binary features from the two-feature model as data columns; the label
  // ignores the second feature, and the conditional bound must notice.
  const scm::BinaryScm model = synth::gen_binary_poc(0.3);
  const scm::Pmf joint = scm::observational_dist(model);
  const int n = 600;
  Rng rng(53);
  Eigen::MatrixXd x(n, 2);
  Eigen::VectorXd y(n);
  // Sample rows from the exact joint by inverse cdf over its entries.
  for (int i = 0; i < n; ++i) {
    double u = rng.uniform01();
    std::uint32_t mask = 0;
    for (const auto& [assignment, mass] : joint.entries()) {
      mask = assignment;
      if (u < mass) break;
      u -= mass;
    }
    const int z1 = (mask >> 0) & 1u;
    const int z2 = (mask >> 1) & 1u;
    const int y1 = (mask >> 3) & 1u;
    x(i, 0) = z1 + 0.05 * rng.normal();
    x(i, 1) = z2 + 0.05 * rng.normal();
    y(i) = y1;
  }
  pns::MeasureConfig config;
  config.latent_dim = 1;
  config.pinpoint_threshold = 0.95;  // binary columns pin the factor loosely
  Eigen::MatrixXd logits = Eigen::MatrixXd::Constant(2, 2, -30.0);
  logits(0, 0) = 0.0;
  logits(1, 1) = 0.0;
  const rep::RepFunction f(rep::RepClass::kConvexCombination, logits);
  const pns::PnsReport report = pns::measure_pns(DataMatrix(x), y, f, config);
  REQUIRE(report.cond_log_pns_lower.has_value());
  const Eigen::VectorXd cond = *report.cond_log_pns_lower;
  // Oracle ordering: the second feature is useless for Y1 given the first.
  const double oracle_z1 = scm::conditional_pns_oracle(
      model, {"Z1", 1, false}, {{"Z2", 1, false}}, {"Y1", 1, false});
  const double oracle_z2 = scm::conditional_pns_oracle(
      model, {"Z2", 1, false}, {{"Z1", 1, false}}, {"Y1", 1, false});
  REQUIRE(oracle_z2 < oracle_z1);
  CHECK(cond(1) < cond(0));
  CHECK(cond.minCoeff() == cond(1));
}
