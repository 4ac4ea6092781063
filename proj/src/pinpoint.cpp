// Copyright 2026 The causalrep Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//   http://www.apache.org/licenses/LICENSE-2.0

#include "causalrep/pinpoint.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <cmath>
#include <limits>

namespace causalrep::pinpoint {

namespace {

constexpr int kSchemaVersion = 1;

void validate(const PpcaFit& fit) {
  const Eigen::Index m = fit.loadings.rows();
  const Eigen::Index k = fit.loadings.cols();
  if (k != fit.latent_dim || fit.mean.size() != m) {
    throw InputError("ppca fit has inconsistent dimensions");
  }
  if (!(fit.noise_variance > 0.0)) {
    throw InputError("ppca noise variance must be positive");
  }
  if (fit.posterior_precision.rows() != k ||
      fit.posterior_precision.cols() != k) {
    throw InputError("ppca posterior precision must be K x K");
  }
}

Eigen::MatrixXd sample_covariance(const DataMatrix& x,
                                  const Eigen::VectorXd& mean) {
  const Eigen::MatrixXd centered = x.values.rowwise() - mean.transpose();
  return centered.transpose() * centered / static_cast<double>(x.rows());
}

PpcaFit finalize(Eigen::MatrixXd loadings, double sigma2,
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

// Fixes each loading column's sign so the entry of largest magnitude is
// positive; the likelihood is invariant and serialization stays stable.
void fix_column_signs(Eigen::MatrixXd& loadings) {
  for (Eigen::Index j = 0; j < loadings.cols(); ++j) {
    Eigen::Index argmax = 0;
    loadings.col(j).cwiseAbs().maxCoeff(&argmax);
    if (loadings(argmax, j) < 0) loadings.col(j) = -loadings.col(j);
  }
}

PpcaFit fit_closed_form(const DataMatrix& x, int k) {
  const Eigen::Index m = x.cols();
  const Eigen::VectorXd mean = x.column_means().transpose();
  const Eigen::MatrixXd s = sample_covariance(x, mean);

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(s);
  if (eig.info() != Eigen::Success) {
    throw NumericalError("eigendecomposition of the sample covariance failed");
  }
  // Eigen returns ascending order.
  const Eigen::VectorXd evals = eig.eigenvalues().reverse();
  const Eigen::MatrixXd evecs = eig.eigenvectors().rowwise().reverse();

  if (evals(k - 1) <= 0.0) {
    throw DegenerateDataError(
        "fewer than K strictly positive covariance eigenvalues");
  }

  double sigma2 = evals.tail(m - k).sum() / static_cast<double>(m - k);
  // A strictly positive floor keeps the posterior well-defined on exactly
  // rank-K data.
  sigma2 = std::max(sigma2, 1e-15 * evals(0));

  Eigen::MatrixXd loadings(m, k);
  for (int j = 0; j < k; ++j) {
    loadings.col(j) =
        evecs.col(j) * std::sqrt(std::max(evals(j) - sigma2, 0.0));
  }
  fix_column_signs(loadings);
  return finalize(std::move(loadings), sigma2, mean);
}

PpcaFit fit_em(const DataMatrix& x, int k, const FitOptions& opts) {
  const Eigen::Index m = x.cols();
  const Eigen::VectorXd mean = x.column_means().transpose();
  const Eigen::MatrixXd s = sample_covariance(x, mean);

  // Deterministic init: scaled coordinate directions.
  Eigen::MatrixXd w = Eigen::MatrixXd::Zero(m, k);
  const double scale = std::sqrt(s.trace() / static_cast<double>(m));
  for (int j = 0; j < k; ++j) w(j % m, j) = scale;
  double sigma2 = std::max(s.trace() / static_cast<double>(m), 1e-12);

  double prev = -std::numeric_limits<double>::infinity();
  for (int it = 0; it < opts.em_iterations; ++it) {
    const Eigen::MatrixXd mmat =
        w.transpose() * w + sigma2 * Eigen::MatrixXd::Identity(k, k);
    const Eigen::LLT<Eigen::MatrixXd> mllt(mmat);
    const Eigen::MatrixXd sw = s * w;
    const Eigen::MatrixXd inner =
        sigma2 * Eigen::MatrixXd::Identity(k, k) + mllt.solve(w.transpose() * sw);
    const Eigen::MatrixXd w_new = sw * inner.inverse();
    const double sigma2_new =
        (s - sw * mllt.solve(w_new.transpose())).trace() /
        static_cast<double>(m);
    w = w_new;
    sigma2 = std::max(sigma2_new, 1e-15 * std::max(s.trace(), 1.0));

    PpcaFit probe = finalize(w, sigma2, mean);
    const double ll = log_likelihood(probe, x);
    if (std::abs(ll - prev) < opts.em_tolerance * (1.0 + std::abs(ll))) break;
    prev = ll;
  }
  fix_column_signs(w);
  return finalize(std::move(w), sigma2, mean);
}

}  // namespace

PpcaFit fit_ppca(const DataMatrix& x, int latent_dim, FitOptions opts) {
  if (latent_dim < 1) throw InputError("latent dimension must be positive");
  if (latent_dim >= x.cols()) {
    throw InputError("latent dimension must be smaller than the data "
                     "dimension");
  }
  switch (opts.method) {
    case FitMethod::kClosedForm:
      return fit_closed_form(x, latent_dim);
    case FitMethod::kEm:
      return fit_em(x, latent_dim, opts);
  }
  throw InputError("unknown fit method");
}

Eigen::VectorXd posterior_mean(const PpcaFit& fit, const Eigen::VectorXd& x) {
  validate(fit);
  if (x.size() != fit.mean.size()) {
    throw InputError("posterior_mean: dimension mismatch");
  }
  const Eigen::LLT<Eigen::MatrixXd> llt(fit.posterior_precision);
  return llt.solve(fit.loadings.transpose() * (x - fit.mean));
}

Eigen::MatrixXd posterior_means(const PpcaFit& fit, const DataMatrix& x) {
  validate(fit);
  if (x.cols() != fit.mean.size()) {
    throw InputError("posterior_means: dimension mismatch");
  }
  const Eigen::LLT<Eigen::MatrixXd> llt(fit.posterior_precision);
  const Eigen::MatrixXd centered =
      x.values.rowwise() - fit.mean.transpose();
  return llt.solve(fit.loadings.transpose() * centered.transpose())
      .transpose();
}

Eigen::VectorXd posterior_variance(const PpcaFit& fit) {
  validate(fit);
  const Eigen::LLT<Eigen::MatrixXd> llt(fit.posterior_precision);
  const Eigen::MatrixXd cov =
      fit.noise_variance *
      llt.solve(Eigen::MatrixXd::Identity(fit.latent_dim, fit.latent_dim));
  return cov.diagonal();
}

PinpointReport pinpointability_check(const PpcaFit& fit, double threshold) {
  PinpointReport report;
  report.threshold = threshold;
  report.max_posterior_variance = posterior_variance(fit).maxCoeff();
  report.passed = report.max_posterior_variance < threshold;
  return report;
}

double log_likelihood(const PpcaFit& fit, const DataMatrix& x) {
  validate(fit);
  const Eigen::Index m = x.cols();
  const Eigen::MatrixXd c =
      fit.loadings * fit.loadings.transpose() +
      fit.noise_variance * Eigen::MatrixXd::Identity(m, m);
  const Eigen::LLT<Eigen::MatrixXd> llt(c);
  if (llt.info() != Eigen::Success) {
    throw NumericalError("model covariance is not positive definite");
  }
  double log_det = 0;
  for (Eigen::Index i = 0; i < m; ++i) {
    log_det += 2.0 * std::log(llt.matrixL()(i, i));
  }
  const Eigen::MatrixXd s = sample_covariance(x, fit.mean);
  const double trace_term = llt.solve(s).trace();
  const double n = static_cast<double>(x.rows());
  return -0.5 * n *
         (m * std::log(2.0 * 3.14159265358979323846) + log_det + trace_term);
}

Json PpcaFit::to_json() const {
  return Json{{"schema_version", kSchemaVersion},
              {"latent_dim", latent_dim},
              {"noise_variance", noise_variance},
              {"mean", vector_to_json(mean)},
              {"loadings", matrix_to_json(loadings)}};
}

PpcaFit PpcaFit::from_json(const Json& j) {
  if (j.value("schema_version", 0) != kSchemaVersion) {
    throw InputError("unsupported ppca fit schema version");
  }
  Eigen::MatrixXd loadings = matrix_from_json(j.at("loadings"));
  PpcaFit fit = [&] {
    PpcaFit f;
    f.latent_dim = j.at("latent_dim").get<int>();
    f.noise_variance = j.at("noise_variance").get<double>();
    f.mean = vector_from_json(j.at("mean"));
    f.loadings = std::move(loadings);
    f.posterior_precision =
        f.loadings.transpose() * f.loadings +
        f.noise_variance *
            Eigen::MatrixXd::Identity(f.latent_dim, f.latent_dim);
    return f;
  }();
  validate(fit);
  return fit;
}

Json PinpointReport::to_json() const {
  return Json{{"max_posterior_variance", max_posterior_variance},
              {"threshold", threshold},
              {"passed", passed}};
}

}  // namespace causalrep::pinpoint
