// Copyright 2026 The causalrep Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//   http://www.apache.org/licenses/LICENSE-2.0

#ifndef CAUSALREP_CAUSAL_REP_HPP_
#define CAUSALREP_CAUSAL_REP_HPP_

#include <Eigen/Core>
#include <cstdint>
#include <functional>
#include <optional>
#include <utility>
#include <vector>

#include "causalrep/dataset.hpp"
#include "causalrep/pinpoint.hpp"
#include "causalrep/pnsbound.hpp"
#include "causalrep/rep_function.hpp"

namespace causalrep::rep {

struct TrainConfig {
  RepClass rep_class = RepClass::kConvexCombination;
  int rep_dim = 2;     // d, output dimensions of f
  int latent_dim = 1;  // K, pinpointed-cause dimensions
  double lambda = 1.0;
  double alpha = 1e-3;
  double learning_rate = 0.05;
  int iterations = 500;
  int restarts = 5;
  std::uint64_t seed = 0;
  double tolerance = 1e-9;  // objective improvement considered progress
  double pinpoint_threshold = 0.01;
  // Selection-class temperature annealing (geometric schedule).
  double temperature_init = 1.0;
  double temperature_final = 0.1;
  pinpoint::FitOptions ppca;
  // When set, restart 0 starts from these logits instead of a random draw.
  std::optional<Eigen::MatrixXd> init_logits;
};

// Mean over dimensions of log(1 - Rsq(f_j ; C)), with each R-squared
// clamped to at most 1 - 1e-6 so the penalty stays finite. More negative
// means closer to a positivity violation.
double rsq_penalty(const Eigen::MatrixXd& f_vals,
                   const Eigen::MatrixXd& c_hats);

// Training objective: per-dimension conditional lower-bound terms with the
// inner outcome model refit from the current representation, plus
// lambda * (rsq_penalty - alpha * ||W||^2).
double objective(const RepFunction& f, const DataMatrix& x,
                 const Eigen::VectorXd& y, const Eigen::MatrixXd& c_hats,
                 const TrainConfig& cfg);

// Multi-outcome variant (one column per outcome, shared penalty); the
// supervised objective is the single-column case.
double objective_multi(const RepFunction& f, const DataMatrix& x,
                       const Eigen::MatrixXd& outcomes,
                       const Eigen::MatrixXd& c_hats, const TrainConfig& cfg);

// Gradient of the objective with respect to the logits, with the inner
// least-squares solution treated as a function of the weights. Computed by
// forward-mode algorithmic differentiation of the evaluation.
Eigen::MatrixXd objective_gradient(const RepFunction& f, const DataMatrix& x,
                                   const Eigen::VectorXd& y,
                                   const Eigen::MatrixXd& c_hats,
                                   const TrainConfig& cfg);
Eigen::MatrixXd objective_gradient_multi(const RepFunction& f,
                                         const DataMatrix& x,
                                         const Eigen::MatrixXd& outcomes,
                                         const Eigen::MatrixXd& c_hats,
                                         const TrainConfig& cfg);

struct TrainResult {
  RepFunction rep;
  double best_objective = 0;
  int best_restart = 0;
  std::vector<double> trace;       // accepted objective per iteration
  std::vector<double> best_trace;  // running best, non-decreasing
  pinpoint::PinpointReport gate;
  pinpoint::PpcaFit factor_model;
  Eigen::MatrixXd c_hats;
};

// Supervised training: pinpoint the common cause (hard gate), then run
// restarted backtracking gradient ascent on the logits and keep the best
// iterate. Selection-class runs anneal the temperature and export hardened
// one-hot weights.
TrainResult train(const DataMatrix& x, const Eigen::VectorXd& y,
                  const TrainConfig& cfg);

struct Predictor {
  double intercept = 0;
  Eigen::VectorXd coeffs;
  double noise_variance = 0;

  Json to_json() const;
  static Predictor from_json(const Json& j);
};

// Prediction head on the representation alone; the pinpointed cause is
// deliberately excluded so predictions transfer out of distribution.
Predictor fit_predictor(const RepFunction& f, const DataMatrix& x_train,
                        const Eigen::VectorXd& y_train);

Eigen::VectorXd predict(const Predictor& p, const RepFunction& f,
                        const DataMatrix& x_test);

// ---------------------------------------------------------------------------
// Unsupervised route: instance discrimination through augmentation.
// ---------------------------------------------------------------------------

using Augmenter =
    std::function<Eigen::VectorXd(const Eigen::VectorXd& row, Rng& rng)>;

Augmenter identity_augmenter();
Augmenter jitter_augmenter(double sd);
// Replaces the named columns with fresh uniform noise on [lo, hi].
Augmenter randomize_columns_augmenter(std::vector<int> columns, double lo,
                                      double hi);

struct AugmentedDataset {
  DataMatrix x;            // n * copies rows, subject-major
  Eigen::MatrixXd labels;  // one-vs-all indicator per subject (n columns)
  std::vector<std::pair<int, int>> provenance;  // (subject, copy) per row
};

// Row u=0 of each subject is the raw observation; rows u>=1 are augmented
// with a generator seeded per (subject, copy).
AugmentedDataset augment_and_label(const DataMatrix& subjects,
                                   const Augmenter& augmenter, int copies,
                                   std::uint64_t seed);

// Maximizes the summed one-vs-all conditional bounds over the augmented
// dataset with the shared penalty; indicators are fit with the linear
// outcome model.
TrainResult train_unsupervised(const DataMatrix& subjects,
                               const Augmenter& augmenter, int copies,
                               const TrainConfig& cfg);

}  // namespace causalrep::rep

#endif  // CAUSALREP_CAUSAL_REP_HPP_
