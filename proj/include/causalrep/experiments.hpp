// Copyright 2026 The causalrep Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//   http://www.apache.org/licenses/LICENSE-2.0

#ifndef CAUSALREP_EXPERIMENTS_HPP_
#define CAUSALREP_EXPERIMENTS_HPP_

#include <cstdint>
#include <string>
#include <vector>

#include "causalrep/causal_rep.hpp"
#include "causalrep/ioss.hpp"
#include "causalrep/json_util.hpp"

namespace causalrep::experiments {

struct Assertion {
  std::string name;
  bool passed = false;
  std::string detail;
};

// One metric in one grid cell, aggregated over repetitions. The standard
// deviation is reported only when there are at least two repetitions.
struct Cell {
  Json params;
  std::string metric;
  double mean = 0;
  double stddev = 0;
  int count = 1;
};

struct ExperimentResult {
  std::string name;
  Json parameters;
  int repetitions = 1;
  std::vector<Cell> cells;
  std::vector<Assertion> assertions;

  bool all_assertions_passed() const;
  Json to_json() const;
  static ExperimentResult from_json(const Json& j);
  // Long-format table: one row per cell, columns param.../metric/mean/std/n.
  std::string to_csv() const;
};

// Exact probabilities of causation, their interventional lower bounds, and
// the conditional oracle across the p grid of the two-feature/two-outcome
// binary model. Lower bounds are clamped to [0, 1] for reporting.
ExperimentResult poc_sweep(const std::vector<double>& p_grid,
                           std::uint64_t seed);

struct OodLinearOptions {
  int seeds = 20;
  int n_train = 1000;
  int n_test = 1000;
  rep::TrainConfig train;

  OodLinearOptions();
};

// Out-of-distribution R^2 of the trained representation, plain least
// squares on all columns, and the oracle regression on the true causal
// columns, per seed.
ExperimentResult ood_linear(const OodLinearOptions& opts, std::uint64_t seed);

struct IossSuiteOptions {
  int trials = 100;
  // Correlated-factor geometry for the discrimination study.
  int factor_dim = 3;
  int factor_levels = 3;
  double factor_corr = 0.8;
  int factor_n = 120;
  // Regularization sweep.
  std::vector<double> lambdas = {0.0, 10.0, 100.0};
  int sweep_seeds = 20;
  int sweep_n = 2000;
  int sweep_m = 10;
  ioss::IossTrainConfig sweep_train;
};

// Entangled-vs-disentangled discrimination proportion plus the
// regularization sweep of (reconstruction loss, exact score) on linearly
// mixed correlated factors.
ExperimentResult ioss_suite(const IossSuiteOptions& opts, std::uint64_t seed);

// Merges experiment-result files; all embedded assertions must pass for the
// report to be considered green.
struct Report {
  std::vector<ExperimentResult> results;
  bool all_passed() const;
  Json to_json() const;
  std::string to_text() const;
};

Report merge_reports(const std::vector<ExperimentResult>& results);

}  // namespace causalrep::experiments

#endif  // CAUSALREP_EXPERIMENTS_HPP_
