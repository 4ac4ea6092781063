// Copyright 2026 The causalrep Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//   http://www.apache.org/licenses/LICENSE-2.0

#include "causalrep/pinpoint.hpp"

#include <Eigen/Dense>
#include <cmath>

#include "causalrep/synth.hpp"
#include "doctest.h"
#include "test_support.hpp"

using namespace causalrep;
using pinpoint::PpcaFit;

namespace {

// Draws from the factor model x = W c + mean + noise, c ~ N(0, I).
DataMatrix draw_factor_data(const Eigen::MatrixXd& w, double noise_sd, int n,
                            Rng& rng) {
  const int m = static_cast<int>(w.rows());
  const int k = static_cast<int>(w.cols());
  Eigen::MatrixXd x(n, m);
  for (int i = 0; i < n; ++i) {
    Eigen::VectorXd c(k);
    for (int j = 0; j < k; ++j) c(j) = rng.normal();
    for (int l = 0; l < m; ++l) {
      x(i, l) = w.row(l).dot(c) + noise_sd * rng.normal();
    }
  }
  return DataMatrix(std::move(x));
}

PpcaFit manual_fit(Eigen::MatrixXd loadings, double sigma2,
                   Eigen::VectorXd mean) {
  PpcaFit fit;
  fit.latent_dim = static_cast<int>(loadings.cols());
  fit.loadings = std::move(loadings);
  fit.noise_variance = sigma2;
  fit.mean = std::move(mean);
  fit.posterior_precision =
      fit.loadings.transpose() * fit.loadings +
      sigma2 * Eigen::MatrixXd::Identity(fit.latent_dim, fit.latent_dim);
  return fit;
}

}  // namespace

TEST_CASE("closed-form fit recovers the noise floor of a rank-K model") {
  Rng rng(31);
  Eigen::MatrixXd w(6, 2);
  for (int i = 0; i < 6; ++i) {
    for (int j = 0; j < 2; ++j) w(i, j) = rng.normal();
  }
  const double tau = 0.35;
  const DataMatrix x = draw_factor_data(w, tau, 10000, rng);
  const PpcaFit fit = pinpoint::fit_ppca(x, 2);
  CHECK(std::abs(fit.noise_variance - tau * tau) < 0.05 * tau * tau);
}

TEST_CASE("pure-noise data yields vanishing leading loadings") {
  Rng rng(32);
  const double tau = 0.8;
  const DataMatrix x =
      draw_factor_data(Eigen::MatrixXd::Zero(5, 1), tau, 1000000, rng);
  const PpcaFit fit = pinpoint::fit_ppca(x, 1);
  CHECK(fit.loadings.norm() < 0.1 * tau);
}

TEST_CASE("column means are absorbed into the mean vector") {
  Rng rng(33);
  Eigen::MatrixXd x(500, 3);
  for (int i = 0; i < 500; ++i) {
    for (int j = 0; j < 3; ++j) x(i, j) = rng.normal();
  }
  x = x.rowwise() - x.colwise().mean();  // exactly centered
  const PpcaFit fit = pinpoint::fit_ppca(DataMatrix(x), 1);
  CHECK(fit.mean.cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("fit rejects bad latent dimensions and degenerate spectra") {
  Rng rng(34);
  Eigen::MatrixXd x(50, 3);
  for (int i = 0; i < 50; ++i) {
    for (int j = 0; j < 3; ++j) x(i, j) = rng.normal();
  }
  CHECK_THROWS_AS(pinpoint::fit_ppca(DataMatrix(x), 3), InputError);
  CHECK_THROWS_AS(pinpoint::fit_ppca(DataMatrix(x), 0), InputError);

  // Identical rows: the covariance is exactly zero, so no strictly
  // positive eigenvalue exists.
  Eigen::MatrixXd flat(4, 3);
  flat << 1, 2, 3, 1, 2, 3, 1, 2, 3, 1, 2, 3;
  CHECK_THROWS_AS(pinpoint::fit_ppca(DataMatrix(flat), 1),
                  DegenerateDataError);
}

TEST_CASE("posterior mean is the pinpointing map") {
  Rng rng(35);
  Eigen::MatrixXd w(5, 2);
  for (int i = 0; i < 5; ++i) {
    for (int j = 0; j < 2; ++j) w(i, j) = rng.normal();
  }
  const DataMatrix x = draw_factor_data(w, 0.3, 400, rng);
  const PpcaFit fit = pinpoint::fit_ppca(x, 2);

  SUBCASE("at the mean the posterior is centered") {
    CHECK(pinpoint::posterior_mean(fit, fit.mean).norm() < 1e-12);
  }
  SUBCASE("dimension mismatch is rejected") {
    CHECK_THROWS_AS(pinpoint::posterior_mean(fit, Eigen::VectorXd::Zero(4)),
                    InputError);
  }
  SUBCASE("vanishing noise recovers least-squares coefficients") {
    PpcaFit sharp = manual_fit(fit.loadings, 1e-12, fit.mean);
    Eigen::VectorXd probe(5);
    for (int i = 0; i < 5; ++i) probe(i) = rng.normal();
    const Eigen::VectorXd pm = pinpoint::posterior_mean(sharp, probe);
    const Eigen::VectorXd ls =
        fit.loadings.colPivHouseholderQr().solve(probe - fit.mean);
    CHECK((pm - ls).norm() < 1e-6 * (1.0 + ls.norm()));
  }
  SUBCASE("single-axis loadings reduce to a scaled coordinate") {
    Eigen::MatrixXd axis = Eigen::MatrixXd::Zero(5, 1);
    const double scale = 1.7;
    axis(0, 0) = scale;
    PpcaFit single = manual_fit(axis, 0.2, Eigen::VectorXd::Zero(5));
    Eigen::VectorXd probe = Eigen::VectorXd::Zero(5);
    probe(0) = 2.5;
    const Eigen::VectorXd pm = pinpoint::posterior_mean(single, probe);
    CHECK(pm(0) == doctest::Approx(scale * 2.5 / (scale * scale + 0.2))
                       .epsilon(1e-12));
  }
  SUBCASE("posterior mean is affine in the input") {
    Eigen::VectorXd x1(5), x2(5);
    for (int i = 0; i < 5; ++i) {
      x1(i) = rng.normal();
      x2(i) = rng.normal();
    }
    const double alpha = 0.3;
    const Eigen::VectorXd blend = alpha * x1 + (1 - alpha) * x2;
    const Eigen::VectorXd lhs = pinpoint::posterior_mean(fit, blend);
    const Eigen::VectorXd rhs =
        alpha * pinpoint::posterior_mean(fit, x1) +
        (1 - alpha) * pinpoint::posterior_mean(fit, x2);
    CHECK((lhs - rhs).cwiseAbs().maxCoeff() < 1e-10);
  }
}

TEST_CASE("posterior variance spans (0, 1] and hits the limits") {
  SUBCASE("vanishing noise gives vanishing variance") {
    Eigen::MatrixXd w = Eigen::MatrixXd::Identity(4, 2);
    PpcaFit fit = manual_fit(w, 1e-14, Eigen::VectorXd::Zero(4));
    CHECK(pinpoint::posterior_variance(fit).maxCoeff() < 1e-12);
    CHECK(pinpoint::pinpointability_check(fit).passed);
  }
  SUBCASE("zero loadings mean the prior is untouched") {
    PpcaFit fit =
        manual_fit(Eigen::MatrixXd::Zero(4, 1), 0.7, Eigen::VectorXd::Zero(4));
    CHECK(pinpoint::posterior_variance(fit)(0) == doctest::Approx(1.0));
    CHECK_FALSE(pinpoint::pinpointability_check(fit).passed);
  }
  SUBCASE("random fits stay inside the prior range") {
    Rng rng(36);
    for (int t = 0; t < 10; ++t) {
      Eigen::MatrixXd w(6, 2);
      for (int i = 0; i < 6; ++i) {
        for (int j = 0; j < 2; ++j) w(i, j) = rng.normal();
      }
      const DataMatrix x = draw_factor_data(w, rng.uniform(0.1, 2.0), 300, rng);
      const Eigen::VectorXd var =
          pinpoint::posterior_variance(pinpoint::fit_ppca(x, 2));
      CHECK(var.minCoeff() > 0.0);
      CHECK(var.maxCoeff() <= 1.0 + 1e-12);
    }
  }
}

TEST_CASE("correlated-pixel data is pinpointable at the default threshold") {
  const synth::PixelLinearData pixel = synth::gen_pixel_linear(5);
  const PpcaFit fit = pinpoint::fit_ppca(pixel.data.x, 1);
  const Eigen::VectorXd var = pinpoint::posterior_variance(fit);
  CHECK(var.maxCoeff() < 0.01);
  const pinpoint::PinpointReport report = pinpoint::pinpointability_check(fit);
  CHECK(report.passed);
  CHECK(report.threshold == 0.01);
}

TEST_CASE("fitted likelihood beats random perturbations") {
  Rng rng(37);
  Eigen::MatrixXd w(5, 1);
  for (int i = 0; i < 5; ++i) w(i, 0) = rng.normal();
  const DataMatrix x = draw_factor_data(w, 0.5, 2000, rng);
  const PpcaFit fit = pinpoint::fit_ppca(x, 1);
  const double best = pinpoint::log_likelihood(fit, x);
  for (int t = 0; t < 20; ++t) {
    PpcaFit probe = fit;
    Eigen::MatrixXd noise(5, 1);
    for (int i = 0; i < 5; ++i) noise(i, 0) = 0.05 * rng.normal();
    probe = manual_fit(fit.loadings + noise,
                       fit.noise_variance * rng.uniform(0.9, 1.1), fit.mean);
    CHECK(pinpoint::log_likelihood(probe, x) <= best + 1e-9);
  }
}

TEST_CASE("row permutation leaves the fit invariant up to column signs") {
  Rng rng(38);
  Eigen::MatrixXd w(5, 2);
  for (int i = 0; i < 5; ++i) {
    for (int j = 0; j < 2; ++j) w(i, j) = rng.normal();
  }
  const DataMatrix x = draw_factor_data(w, 0.4, 300, rng);
  Eigen::MatrixXd permuted = x.values;
  for (Eigen::Index i = 0; i < permuted.rows() / 2; ++i) {
    permuted.row(i).swap(permuted.row(permuted.rows() - 1 - i));
  }
  const PpcaFit a = pinpoint::fit_ppca(x, 2);
  const PpcaFit b = pinpoint::fit_ppca(DataMatrix(permuted), 2);
  CHECK(std::abs(a.noise_variance - b.noise_variance) < 1e-10);
  CHECK((a.mean - b.mean).cwiseAbs().maxCoeff() < 1e-10);
  CHECK((a.loadings.cwiseAbs() - b.loadings.cwiseAbs()).cwiseAbs().maxCoeff() <
        1e-8);
}

TEST_CASE("em fit agrees with the closed form") {
  Rng rng(39);
  Eigen::MatrixXd w(5, 1);
  for (int i = 0; i < 5; ++i) w(i, 0) = rng.normal();
  const DataMatrix x = draw_factor_data(w, 0.5, 800, rng);
  const PpcaFit closed = pinpoint::fit_ppca(x, 1);
  pinpoint::FitOptions opts;
  opts.method = pinpoint::FitMethod::kEm;
  const PpcaFit em = pinpoint::fit_ppca(x, 1, opts);
  const double ll_closed = pinpoint::log_likelihood(closed, x);
  const double ll_em = pinpoint::log_likelihood(em, x);
  CHECK(std::abs(ll_closed - ll_em) < 1e-6 * std::abs(ll_closed));
}

TEST_CASE("ppca fit json round trip") {
  const synth::PixelLinearData pixel = synth::gen_pixel_linear(6);
  const PpcaFit fit = pinpoint::fit_ppca(pixel.data.x, 1);
  const PpcaFit back = PpcaFit::from_json(fit.to_json());
  CHECK(back.noise_variance == fit.noise_variance);
  CHECK((back.loadings - fit.loadings).norm() == 0.0);
  CHECK((back.mean - fit.mean).norm() == 0.0);
}
