// Copyright 2026 The causalrep Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//   http://www.apache.org/licenses/LICENSE-2.0

#ifndef CAUSALREP_PNSBOUND_HPP_
#define CAUSALREP_PNSBOUND_HPP_

#include <Eigen/Core>
#include <optional>
#include <vector>

#include "causalrep/dataset.hpp"
#include "causalrep/json_util.hpp"
#include "causalrep/pinpoint.hpp"
#include "causalrep/rep_function.hpp"

namespace causalrep::pns {

// Linear outcome model y ~ N(intercept + rep_coeffs . f(x) +
// cause_coeffs . c, noise_variance), fit by least squares.
struct OutcomeModelFit {
  double intercept = 0.0;
  Eigen::VectorXd rep_coeffs;    // d
  Eigen::VectorXd cause_coeffs;  // K
  double noise_variance = 0.0;   // mean squared residual
  Eigen::VectorXd residuals;     // n
};

// Ridge jitter added to the normal-equation Gram matrix for conditioning.
inline constexpr double kGramJitter = 1e-10;

// Designs whose Gram condition number exceeds this raise CollinearityError.
inline constexpr double kMaxConditionNumber = 1e12;

OutcomeModelFit fit_outcome_linear(const Eigen::MatrixXd& f_vals,
                                   const Eigen::VectorXd& y,
                                   const Eigen::MatrixXd& c_hats);
OutcomeModelFit fit_outcome_linear(const DataMatrix& x,
                                   const Eigen::VectorXd& y,
                                   const rep::RepFunction& f,
                                   const Eigen::MatrixXd& c_hats);

// Log lower bound (additive constant dropped) of the conditional
// efficiency-and-non-spuriousness of dimension j:
//   (1 / 2 sigma^2) [ sum_i (beta_j (f_ij - mean_j))^2
//                     + 2 sum_i beta_j (f_ij - mean_j) gamma.(c_i - c_mean) ]
// Population means are replaced by sample means. Values are comparable only
// within a fixed (n, sigma^2) context.
double log_cond_pns_lower(const OutcomeModelFit& fit,
                          const Eigen::MatrixXd& f_vals,
                          const Eigen::MatrixXd& c_hats, int j);

// Unconditional variant: the per-dimension terms are lumped into a single
// sum_j beta_j (f_ij - mean_j) before squaring.
double log_pns_lower(const OutcomeModelFit& fit,
                     const Eigen::MatrixXd& f_vals,
                     const Eigen::MatrixXd& c_hats);

// R-squared of regressing v on [1, c_hats]. Degenerate (constant) targets
// count as fully explained.
double r_squared_on_cause(const Eigen::VectorXd& v,
                          const Eigen::MatrixXd& c_hats);

struct PositivityDiagnostic {
  Eigen::VectorXd r_squared;  // per representation dimension
  double threshold = 0.0;     // flag when r_squared > threshold
  std::vector<bool> flagged;

  bool any_flagged() const;
  Json to_json() const;
};

// Near-one R-squared of f_j on the pinpointed cause means f_j is almost a
// function of C and the overlap condition is about to fail.
PositivityDiagnostic positivity_diagnostic(const Eigen::MatrixXd& f_vals,
                                           const Eigen::MatrixXd& c_hats,
                                           double threshold = 1.0 - 1e-3);

struct ObservabilityDiagnostic {
  std::vector<int> support;  // columns the representation actually uses
  int rank = 0;
  bool rank_deficient = false;
  Eigen::VectorXd singular_values;

  Json to_json() const;
};

// The support of f must see full-rank data, otherwise P(Y | f(X), C) is not
// estimable off the observed manifold.
ObservabilityDiagnostic observability_diagnostic(
    const DataMatrix& x, const rep::RepFunction& f,
    double weight_cutoff = 1e-6, double sv_rel_cutoff = 1e-8);

struct MeasureConfig {
  int latent_dim = 1;
  double pinpoint_threshold = 0.01;
  double positivity_threshold = 1.0 - 1e-3;
  double weight_cutoff = 1e-6;
  double sv_rel_cutoff = 1e-8;
  pinpoint::FitOptions ppca;
};

struct PnsReport {
  pinpoint::PinpointReport pinpointability;
  std::optional<PositivityDiagnostic> positivity;
  std::optional<ObservabilityDiagnostic> observability;
  // Present only when the pinpointability gate passed.
  std::optional<double> log_pns_lower;
  std::optional<Eigen::VectorXd> cond_log_pns_lower;

  Json to_json() const;
};

// Full measurement pipeline: fit the factor model, gate on
// pinpointability, run the diagnostics, fit the outcome model, and
// evaluate both bounds. Gate failures are reported, never thrown.
PnsReport measure_pns(const DataMatrix& x, const Eigen::VectorXd& y,
                      const rep::RepFunction& f, const MeasureConfig& config);

}  // namespace causalrep::pns

#endif  // CAUSALREP_PNSBOUND_HPP_
