// Copyright 2026 The causalrep Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//   http://www.apache.org/licenses/LICENSE-2.0

#include "causalrep/pnsbound.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <Eigen/SVD>
#include <cmath>
#include <limits>

namespace causalrep::pns {

namespace {

// Plain sequential reductions, shared by both bound evaluators so the d=1
// unconditional bound reduces to the conditional one bit for bit.
double column_mean(const Eigen::MatrixXd& m, Eigen::Index j) {
  double s = 0;
  for (Eigen::Index i = 0; i < m.rows(); ++i) s += m(i, j);
  return s / static_cast<double>(m.rows());
}

Eigen::RowVectorXd column_means(const Eigen::MatrixXd& m) {
  Eigen::RowVectorXd out(m.cols());
  for (Eigen::Index j = 0; j < m.cols(); ++j) out(j) = column_mean(m, j);
  return out;
}

double centered_dot(const Eigen::VectorXd& coeffs, const Eigen::MatrixXd& c,
                    const Eigen::RowVectorXd& c_mean, Eigen::Index i) {
  double s = 0;
  for (Eigen::Index k = 0; k < c.cols(); ++k) {
    s += coeffs(k) * (c(i, k) - c_mean(k));
  }
  return s;
}

// Least squares of y on the given design via jittered normal equations.
Eigen::VectorXd solve_normal_equations(const Eigen::MatrixXd& design,
                                       const Eigen::VectorXd& y) {
  const Eigen::MatrixXd gram = design.transpose() * design;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(gram);
  const double max_ev = eig.eigenvalues().maxCoeff();
  const double min_ev = eig.eigenvalues().minCoeff();
  const double cond =
      min_ev > 0 ? max_ev / min_ev : std::numeric_limits<double>::infinity();
  if (!(cond < kMaxConditionNumber)) {
    throw CollinearityError(
        "design matrix is numerically rank deficient (condition number " +
        format_double(cond) + ")",
        cond);
  }
  const Eigen::MatrixXd jittered =
      gram + kGramJitter * Eigen::MatrixXd::Identity(gram.rows(), gram.cols());
  return Eigen::LLT<Eigen::MatrixXd>(jittered).solve(design.transpose() * y);
}

}  // namespace

OutcomeModelFit fit_outcome_linear(const Eigen::MatrixXd& f_vals,
                                   const Eigen::VectorXd& y,
                                   const Eigen::MatrixXd& c_hats) {
  const Eigen::Index n = f_vals.rows();
  const Eigen::Index d = f_vals.cols();
  const Eigen::Index k = c_hats.cols();
  if (y.size() != n || c_hats.rows() != n) {
    throw InputError("fit_outcome_linear: row counts disagree");
  }
  if (n <= d + k + 1) {
    throw InputError("fit_outcome_linear needs n > d + K + 1");
  }

  Eigen::MatrixXd design(n, 1 + d + k);
  design.col(0).setOnes();
  design.middleCols(1, d) = f_vals;
  design.rightCols(k) = c_hats;

  const Eigen::VectorXd theta = solve_normal_equations(design, y);

  OutcomeModelFit fit;
  fit.intercept = theta(0);
  fit.rep_coeffs = theta.segment(1, d);
  fit.cause_coeffs = theta.tail(k);
  fit.residuals = y - design * theta;
  fit.noise_variance = fit.residuals.squaredNorm() / static_cast<double>(n);
  return fit;
}

OutcomeModelFit fit_outcome_linear(const DataMatrix& x,
                                   const Eigen::VectorXd& y,
                                   const rep::RepFunction& f,
                                   const Eigen::MatrixXd& c_hats) {
  return fit_outcome_linear(f.apply(x), y, c_hats);
}

namespace {

void check_bound_inputs(const OutcomeModelFit& fit,
                        const Eigen::MatrixXd& f_vals,
                        const Eigen::MatrixXd& c_hats) {
  if (fit.rep_coeffs.size() != f_vals.cols() ||
      fit.cause_coeffs.size() != c_hats.cols() ||
      f_vals.rows() != c_hats.rows()) {
    throw InputError("bound evaluator: dimension mismatch");
  }
  if (!(fit.noise_variance > 0.0)) {
    throw NumericalError(
        "outcome model has zero noise variance; the bound is degenerate");
  }
}

}  // namespace

double log_cond_pns_lower(const OutcomeModelFit& fit,
                          const Eigen::MatrixXd& f_vals,
                          const Eigen::MatrixXd& c_hats, int j) {
  check_bound_inputs(fit, f_vals, c_hats);
  if (j < 0 || j >= f_vals.cols()) {
    throw InputError("dimension index out of range");
  }
  const Eigen::Index n = f_vals.rows();
  const double f_mean = column_mean(f_vals, j);
  const Eigen::RowVectorXd c_mean = column_means(c_hats);
  const double beta_j = fit.rep_coeffs(j);

  double quad = 0, cross = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double a = beta_j * (f_vals(i, j) - f_mean);
    const double g = centered_dot(fit.cause_coeffs, c_hats, c_mean, i);
    quad += a * a;
    cross += a * g;
  }
  return (quad + 2.0 * cross) / (2.0 * fit.noise_variance);
}

double log_pns_lower(const OutcomeModelFit& fit,
                     const Eigen::MatrixXd& f_vals,
                     const Eigen::MatrixXd& c_hats) {
  check_bound_inputs(fit, f_vals, c_hats);
  const Eigen::Index n = f_vals.rows();
  const Eigen::Index d = f_vals.cols();
  const Eigen::RowVectorXd f_mean = column_means(f_vals);
  const Eigen::RowVectorXd c_mean = column_means(c_hats);

  double quad = 0, cross = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    double a = 0;
    for (Eigen::Index j = 0; j < d; ++j) {
      a += fit.rep_coeffs(j) * (f_vals(i, j) - f_mean(j));
    }
    const double g = centered_dot(fit.cause_coeffs, c_hats, c_mean, i);
    quad += a * a;
    cross += a * g;
  }
  return (quad + 2.0 * cross) / (2.0 * fit.noise_variance);
}

double r_squared_on_cause(const Eigen::VectorXd& v,
                          const Eigen::MatrixXd& c_hats) {
  const Eigen::Index n = v.size();
  const Eigen::Index k = c_hats.cols();
  if (c_hats.rows() != n) throw InputError("r_squared: row counts disagree");
  if (n <= k + 1) throw InputError("r_squared needs n > K + 1");

  const double mean = v.mean();
  const double sst = (v.array() - mean).matrix().squaredNorm();
  if (sst <= 1e-300) return 1.0;  // constant target: trivially explained

  Eigen::MatrixXd design(n, 1 + k);
  design.col(0).setOnes();
  design.rightCols(k) = c_hats;
  const Eigen::MatrixXd gram =
      design.transpose() * design +
      kGramJitter * Eigen::MatrixXd::Identity(1 + k, 1 + k);
  const Eigen::VectorXd theta =
      Eigen::LLT<Eigen::MatrixXd>(gram).solve(design.transpose() * v);
  const double ssr = (v - design * theta).squaredNorm();
  double rsq = 1.0 - ssr / sst;
  if (rsq < 0.0) rsq = 0.0;
  if (rsq > 1.0) rsq = 1.0;
  return rsq;
}

bool PositivityDiagnostic::any_flagged() const {
  for (bool f : flagged) {
    if (f) return true;
  }
  return false;
}

PositivityDiagnostic positivity_diagnostic(const Eigen::MatrixXd& f_vals,
                                           const Eigen::MatrixXd& c_hats,
                                           double threshold) {
  PositivityDiagnostic diag;
  diag.threshold = threshold;
  diag.r_squared.resize(f_vals.cols());
  diag.flagged.resize(static_cast<std::size_t>(f_vals.cols()));
  for (Eigen::Index j = 0; j < f_vals.cols(); ++j) {
    diag.r_squared(j) = r_squared_on_cause(f_vals.col(j), c_hats);
    diag.flagged[static_cast<std::size_t>(j)] = diag.r_squared(j) > threshold;
  }
  return diag;
}

ObservabilityDiagnostic observability_diagnostic(const DataMatrix& x,
                                                 const rep::RepFunction& f,
                                                 double weight_cutoff,
                                                 double sv_rel_cutoff) {
  if (x.cols() != f.input_dim()) {
    throw InputError("observability_diagnostic: dimension mismatch");
  }
  ObservabilityDiagnostic diag;
  const Eigen::VectorXd magnitudes = f.column_weight_magnitudes();
  for (int l = 0; l < f.input_dim(); ++l) {
    if (magnitudes(l) > weight_cutoff) diag.support.push_back(l);
  }
  if (diag.support.empty()) {
    diag.rank = 0;
    diag.rank_deficient = true;
    return diag;
  }
  Eigen::MatrixXd sub(x.rows(), static_cast<Eigen::Index>(diag.support.size()));
  for (std::size_t k = 0; k < diag.support.size(); ++k) {
    sub.col(static_cast<Eigen::Index>(k)) = x.values.col(diag.support[k]);
  }
  const Eigen::JacobiSVD<Eigen::MatrixXd> svd(sub);
  diag.singular_values = svd.singularValues();
  const double cutoff = sv_rel_cutoff * diag.singular_values.maxCoeff();
  diag.rank = 0;
  for (Eigen::Index i = 0; i < diag.singular_values.size(); ++i) {
    if (diag.singular_values(i) > cutoff) ++diag.rank;
  }
  diag.rank_deficient =
      diag.rank < static_cast<int>(diag.support.size());
  return diag;
}

PnsReport measure_pns(const DataMatrix& x, const Eigen::VectorXd& y,
                      const rep::RepFunction& f, const MeasureConfig& config) {
  PnsReport report;
  const pinpoint::PpcaFit fit =
      pinpoint::fit_ppca(x, config.latent_dim, config.ppca);
  report.pinpointability =
      pinpoint::pinpointability_check(fit, config.pinpoint_threshold);
  if (!report.pinpointability.passed) {
    return report;  // gated: no bounds without a pinpointed cause
  }

  const Eigen::MatrixXd c_hats = pinpoint::posterior_means(fit, x);
  const Eigen::MatrixXd f_vals = f.apply(x);
  report.positivity =
      positivity_diagnostic(f_vals, c_hats, config.positivity_threshold);
  report.observability = observability_diagnostic(
      x, f, config.weight_cutoff, config.sv_rel_cutoff);

  const OutcomeModelFit outcome = fit_outcome_linear(f_vals, y, c_hats);
  report.log_pns_lower = log_pns_lower(outcome, f_vals, c_hats);
  Eigen::VectorXd cond(f_vals.cols());
  for (Eigen::Index j = 0; j < f_vals.cols(); ++j) {
    cond(j) = log_cond_pns_lower(outcome, f_vals, c_hats,
                                 static_cast<int>(j));
  }
  report.cond_log_pns_lower = std::move(cond);
  return report;
}

Json PositivityDiagnostic::to_json() const {
  Json flags = Json::array();
  for (bool f : flagged) flags.push_back(f);
  return Json{{"r_squared", vector_to_json(r_squared)},
              {"threshold", threshold},
              {"flagged", flags}};
}

Json ObservabilityDiagnostic::to_json() const {
  return Json{{"support", support},
              {"rank", rank},
              {"rank_deficient", rank_deficient},
              {"singular_values", vector_to_json(singular_values)}};
}

Json PnsReport::to_json() const {
  Json gates;
  gates["pinpointability"] = pinpointability.to_json();
  gates["positivity"] = positivity ? positivity->to_json() : Json();
  gates["observability"] = observability ? observability->to_json() : Json();
  Json out;
  out["gates"] = gates;
  out["log_pns_lower"] = log_pns_lower ? Json(*log_pns_lower) : Json();
  out["cond_log_pns_lower"] =
      cond_log_pns_lower ? vector_to_json(*cond_log_pns_lower) : Json();
  return out;
}

}  // namespace causalrep::pns
