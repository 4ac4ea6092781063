// Copyright 2026 The causalrep Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//   http://www.apache.org/licenses/LICENSE-2.0

#ifndef CAUSALREP_PINPOINT_HPP_
#define CAUSALREP_PINPOINT_HPP_

#include <Eigen/Core>

#include "causalrep/dataset.hpp"
#include "causalrep/json_util.hpp"

namespace causalrep::pinpoint {

// Fitted probabilistic PCA:
//   c ~ N(0, I_K),  x | c ~ N(loadings * c + mean, noise_variance * I_m).
// The posterior of c given x is Gaussian with precision
// posterior_precision = loadings^T loadings + noise_variance * I_K.
struct PpcaFit {
  Eigen::MatrixXd loadings;             // m x K
  double noise_variance = 0.0;          // > 0
  Eigen::VectorXd mean;                 // m
  Eigen::MatrixXd posterior_precision;  // K x K, SPD
  int latent_dim = 0;

  Json to_json() const;
  static PpcaFit from_json(const Json& j);
};

enum class FitMethod { kClosedForm, kEm };

struct FitOptions {
  FitMethod method = FitMethod::kClosedForm;
  int em_iterations = 500;
  double em_tolerance = 1e-12;
};

// Maximum-likelihood fit. The closed form eigendecomposes the sample
// covariance: noise variance is the mean of the m-K trailing eigenvalues
// and the loadings are the top-K eigenvectors scaled by
// sqrt(eigenvalue - noise variance), rotation fixed to identity. The EM
// route exists to cross-check the closed form.
PpcaFit fit_ppca(const DataMatrix& x, int latent_dim, FitOptions opts = {});

// Posterior mean of the latent cause for one datapoint; this is the
// pinpointing map h(x).
Eigen::VectorXd posterior_mean(const PpcaFit& fit, const Eigen::VectorXd& x);

// Posterior means for every row, n x K.
Eigen::MatrixXd posterior_means(const PpcaFit& fit, const DataMatrix& x);

// Marginal posterior variances, the diagonal of
// noise_variance * posterior_precision^-1. Constant across datapoints.
Eigen::VectorXd posterior_variance(const PpcaFit& fit);

struct PinpointReport {
  double max_posterior_variance = 0.0;
  double threshold = 0.0;
  bool passed = false;

  Json to_json() const;
};

// The latent cause counts as pinpointed when the posterior is close enough
// to a point mass: max posterior variance < threshold. The default 0.01 is
// a convention, not a derived constant; override as needed.
PinpointReport pinpointability_check(const PpcaFit& fit,
                                     double threshold = 0.01);

// Average log-likelihood of the data under the fitted model.
double log_likelihood(const PpcaFit& fit, const DataMatrix& x);

}  // namespace causalrep::pinpoint

#endif  // CAUSALREP_PINPOINT_HPP_
