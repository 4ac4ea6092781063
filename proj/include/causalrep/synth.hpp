// Copyright 2026 The causalrep Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//   http://www.apache.org/licenses/LICENSE-2.0

#ifndef CAUSALREP_SYNTH_HPP_
#define CAUSALREP_SYNTH_HPP_

#include <cstdint>

#include "causalrep/dataset.hpp"
#include "causalrep/ioss.hpp"
#include "causalrep/scm.hpp"

namespace causalrep::synth {

// Four binary variables plus an auxiliary conjunction node:
//   Z1 ~ Bernoulli(0.4)
//   Z2 = Z1 xor Bernoulli(p)
//   Z1andZ2 = Z1 & Z2            (auxiliary, noise-free)
//   Y1 = Z1 xor Bernoulli(0.2)
//   Y2 = Z1andZ2 xor Bernoulli(0.2)
// Small p means high correlation between Z1 and Z2.
scm::BinaryScm gen_binary_poc(double p);

struct ToyLinearData {
  LabeledDataset train;
  LabeledDataset test;
  Eigen::MatrixXd train_latent;     // pre-noise feature draws
  Eigen::MatrixXd test_latent;
  Eigen::Vector2d beta;             // outcome coefficients on columns 1-2
  std::vector<int> causal_columns;  // {0, 1}
};

// Five features built from a latent vector whose covariance is
// 0.05 I + 0.95 J in training and 0.05 I + 0.05 J in test, with observation
// noise sd 0.4 on columns 1-2 and 0.3 on columns 3-5. The outcome uses only
// columns 1-2 with coefficients drawn uniformly from [0, 10], plus unit
// noise. The same coefficients drive train and test.
ToyLinearData gen_toy_linear(std::uint64_t seed, int n_train = 1000,
                             int n_test = 1000);

struct PixelLinearData {
  LabeledDataset data;  // n = 1000 rows, m = 5 pixels
  Eigen::Vector2d beta;             // (0.5, 1.0)
  std::vector<int> causal_columns;  // {0, 1}
};

// Correlated pixel columns from a one-factor Gaussian with mixed loading
// signs, tuned so every pairwise correlation exceeds 0.8 in magnitude;
// y = 0.5 x1 + 1.0 x2 + noise.
PixelLinearData gen_pixel_linear(std::uint64_t seed);

// Discrete factor sample with the full product support represented and the
// mean pairwise Spearman correlation tuned to the target: one copy of every
// grid tuple, a block from the top of the sum-sorted grid, and uniformly
// random tuples, with the block fraction chosen by scanning.
ioss::FactorSample gen_correlated_factors(int d, int levels,
                                          double target_corr, int n,
                                          std::uint64_t seed);

// Mean over column pairs of the Spearman rank correlation (average ranks
// under ties).
double mean_pairwise_spearman(const Eigen::MatrixXd& values);

}  // namespace causalrep::synth

#endif  // CAUSALREP_SYNTH_HPP_
