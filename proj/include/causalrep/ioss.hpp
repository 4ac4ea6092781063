// Copyright 2026 The causalrep Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//   http://www.apache.org/licenses/LICENSE-2.0

#ifndef CAUSALREP_IOSS_HPP_
#define CAUSALREP_IOSS_HPP_

#include <Eigen/Core>
#include <cstdint>
#include <functional>
#include <vector>

#include "causalrep/dataset.hpp"
#include "causalrep/json_util.hpp"

namespace causalrep::ioss {

// A sample of d factors (columns). Each column must have positive range.
struct FactorSample {
  Eigen::MatrixXd values;      // n x d
  std::vector<bool> discrete;  // per column
  Eigen::VectorXd col_min;     // observed support bounds
  Eigen::VectorXd col_max;

  static FactorSample from_matrix(Eigen::MatrixXd values,
                                  std::vector<bool> discrete = {});
  Eigen::Index rows() const { return values.rows(); }
  Eigen::Index dims() const { return values.cols(); }
  bool all_discrete() const;
};

// Min-max rescale of every column onto [0, 1] using the sample extremes.
// Invariant under per-column affine maps with positive slope.
FactorSample standardize(const FactorSample& z);

// Independence-of-support score estimate. All distances are squared
// Euclidean in the standardized d-cube; estimates are comparable only at
// equal (n, d, k_draws, alpha_quantile).
struct IossEstimate {
  double value = 0;
  int n = 0;
  int d = 0;
  long k_draws = 0;
  double alpha_quantile = 0;  // 0 = exact max / min
  std::uint64_t seed = 0;

  Json to_json() const;
};

// K_draws convention from the reference computation: 10^d * n, capped.
long default_k_draws(int d, int n);
inline constexpr long kMaxDraws = 1000000;

// Monte Carlo estimate: draw points uniformly on [0,1]^d, take the minimum
// squared distance to the standardized sample for each draw, and aggregate
// with max (alpha = 0) or the (100-alpha)th percentile of the alpha-th
// percentile inner values. Deterministic for a fixed seed regardless of the
// thread budget.
IossEstimate sample_ioss(const FactorSample& z, long k_draws,
                         double alpha_quantile, std::uint64_t seed);

// Exact squared Hausdorff distance between the observed joint support and
// the product of observed marginal supports, on the standardized grid.
// Zero iff the joint support fills the whole product.
double discrete_ioss(const FactorSample& z);

// Entangles factors with a seeded degree-3 polynomial: each output is the
// matching input plus a polynomial in all sd-normalized inputs whose
// coefficients are uniform on [-2.5, 2.5].
FactorSample entangle_factors(const FactorSample& z, std::uint64_t seed);

// Fixed three-factor entangler instance with pinned coefficients
//   out1 = 6 z1   + 8 (z2/sd)^3 + 1 (z3/sd)^3 + noise
//   out2 = 12 z1^2 + 1 (z2/sd)^2 + 8 (z3/sd)^1 + noise
//   out3 = 0 z1^3 + 4 (z2/sd)^1 + 4 (z3/sd)^2 + noise
// where noise is noise_scale * N(0,1), seeded.
FactorSample entangle_factors_preset(const FactorSample& z,
                                     std::uint64_t seed,
                                     double noise_scale = 0.2);

// Explicit-coefficient form: coefficients[(out * d + in) * 3 + (power - 1)]
// multiplies (z_in / sd or z_in)^power; add_identity adds z_out.
FactorSample entangle_factors_custom(const FactorSample& z,
                                     const std::vector<double>& coefficients,
                                     const std::vector<bool>& normalize,
                                     bool add_identity, double noise_scale,
                                     std::uint64_t seed);

struct DistinguishResult {
  double proportion_correct = 0;
  int trials = 0;
  Json to_json() const;
};

// For each trial: generate factors, entangle a copy, score both, and count
// the trial correct iff the original scores strictly lower. Ties count as
// incorrect. The entangler defaults to the random polynomial one.
using Entangler =
    std::function<FactorSample(const FactorSample& z, std::uint64_t seed)>;

DistinguishResult distinguish_experiment(
    const std::function<FactorSample(std::uint64_t seed)>& factor_gen,
    int trials, long k_draws, std::uint64_t seed,
    const Entangler& entangler = {});

// ---------------------------------------------------------------------------
// Training with the score as a regularizer (linear autoencoder scale).
// ---------------------------------------------------------------------------

struct IossTrainConfig {
  int dim = 3;  // code dimension
  double lambda = 0;
  double learning_rate = 0.1;
  int iterations = 400;
  long surrogate_draws = 256;
  double softmin_temperature = 0.03;
  double alpha_quantile = 2.0;  // robust surrogate trim
  std::uint64_t seed = 0;
  double tolerance = 1e-6;
  long report_draws = 0;  // 0: default_k_draws
};

struct IossTrainResult {
  Eigen::MatrixXd encoder;  // m x dim
  Eigen::MatrixXd decoder;  // dim x m
  Eigen::VectorXd data_mean;
  std::vector<double> trace;  // accepted total loss per iteration
  double reconstruction_loss = 0;
  double surrogate_value = 0;
  IossEstimate exact_ioss;  // recomputed with the exact estimator
};

// Minimizes mean squared reconstruction error of the centered data plus
// lambda times a differentiable surrogate of the score (softmin over
// samples, trimmed smooth max over a fixed set of draws). The reported
// metric is always the exact estimator on the learned code.
IossTrainResult ioss_train(const DataMatrix& x, const IossTrainConfig& cfg);

// Surrogate used inside training; returns the value and optionally the
// gradient with respect to the (unstandardized) code matrix.
double surrogate_ioss(const Eigen::MatrixXd& code,
                      const Eigen::MatrixXd& draws, double temperature,
                      double alpha_quantile, Eigen::MatrixXd* grad = nullptr);

}  // namespace causalrep::ioss

#endif  // CAUSALREP_IOSS_HPP_
