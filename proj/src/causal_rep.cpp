// Copyright 2026 The causalrep Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//   http://www.apache.org/licenses/LICENSE-2.0

#include "causalrep/causal_rep.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "causal_rep_eval.hpp"

namespace causalrep::rep {

double rsq_penalty(const Eigen::MatrixXd& f_vals,
                   const Eigen::MatrixXd& c_hats) {
  const Eigen::Index d = f_vals.cols();
  double acc = 0;
  for (Eigen::Index j = 0; j < d; ++j) {
    double rsq = pns::r_squared_on_cause(f_vals.col(j), c_hats);
    rsq = std::min(rsq, 1.0 - 1e-6);
    acc += std::log(1.0 - rsq);
  }
  return acc / static_cast<double>(d);
}

double objective_multi(const RepFunction& f, const DataMatrix& x,
                       const Eigen::MatrixXd& outcomes,
                       const Eigen::MatrixXd& c_hats, const TrainConfig& cfg) {
  const Eigen::MatrixXd f_vals = f.apply(x);
  double pns_total = 0;
  for (Eigen::Index s = 0; s < outcomes.cols(); ++s) {
    const pns::OutcomeModelFit fit =
        pns::fit_outcome_linear(f_vals, outcomes.col(s), c_hats);
    for (Eigen::Index j = 0; j < f_vals.cols(); ++j) {
      pns_total += pns::log_cond_pns_lower(fit, f_vals, c_hats,
                                           static_cast<int>(j));
    }
  }
  const double wnorm = f.weights().squaredNorm();
  return pns_total +
         cfg.lambda * (rsq_penalty(f_vals, c_hats) - cfg.alpha * wnorm);
}

double objective(const RepFunction& f, const DataMatrix& x,
                 const Eigen::VectorXd& y, const Eigen::MatrixXd& c_hats,
                 const TrainConfig& cfg) {
  return objective_multi(f, x, y, c_hats, cfg);
}

Eigen::MatrixXd objective_gradient_multi(const RepFunction& f,
                                         const DataMatrix& x,
                                         const Eigen::MatrixXd& outcomes,
                                         const Eigen::MatrixXd& c_hats,
                                         const TrainConfig& cfg) {
  const int m = f.input_dim();
  const int d = f.output_dim();
  const double temperature =
      f.rep_class() == RepClass::kSelection ? f.temperature() : 1.0;

  std::vector<detail::Dual> logits(static_cast<std::size_t>(m) * d);
  for (int j = 0; j < d; ++j) {
    for (int l = 0; l < m; ++l) {
      logits[static_cast<std::size_t>(j) * m + l] = f.logits()(l, j);
    }
  }

  Eigen::MatrixXd grad(m, d);
  for (int p = 0; p < m * d; ++p) {
    logits[static_cast<std::size_t>(p)].d = 1.0;
    const detail::Dual out = detail::evaluate_objective(
        x.values, outcomes, c_hats, logits, d, temperature, cfg.lambda,
        cfg.alpha);
    logits[static_cast<std::size_t>(p)].d = 0.0;
    grad(p % m, p / m) = out.d;
  }
  return grad;
}

Eigen::MatrixXd objective_gradient(const RepFunction& f, const DataMatrix& x,
                                   const Eigen::VectorXd& y,
                                   const Eigen::MatrixXd& c_hats,
                                   const TrainConfig& cfg) {
  return objective_gradient_multi(f, x, y, c_hats, cfg);
}

namespace {

std::string dump_iterate(const Eigen::MatrixXd& logits) {
  std::ostringstream os;
  os << logits.transpose();
  return os.str();
}

struct AscentOutcome {
  RepFunction rep;
  double best_objective = -std::numeric_limits<double>::infinity();
  std::vector<double> trace;
  std::vector<double> best_trace;
};

// Backtracking gradient ascent on the logits. Steps are accepted only when
// the objective does not fall by more than the tolerance, so the per-
// iteration trace is monotone up to that slack (and up to Selection
// temperature changes between iterations).
AscentOutcome ascend(const DataMatrix& x, const Eigen::MatrixXd& outcomes,
                     const Eigen::MatrixXd& c_hats, const TrainConfig& cfg,
                     Rng& rng, const Eigen::MatrixXd* init) {
  const int m = static_cast<int>(x.cols());
  Eigen::MatrixXd logits(m, cfg.rep_dim);
  if (init) {
    if (init->rows() != m || init->cols() != cfg.rep_dim) {
      throw InputError("init_logits shape mismatch");
    }
    logits = *init;
  } else {
    for (int l = 0; l < m; ++l) {
      for (int j = 0; j < cfg.rep_dim; ++j) logits(l, j) = 0.1 * rng.normal();
    }
  }
  RepFunction f(cfg.rep_class, logits, cfg.temperature_init);

  const bool anneal = cfg.rep_class == RepClass::kSelection;
  const double anneal_rate =
      anneal && cfg.iterations > 1
          ? std::pow(cfg.temperature_final / cfg.temperature_init,
                     1.0 / (cfg.iterations - 1))
          : 1.0;

  AscentOutcome out;
  out.rep = f;
  double rate = cfg.learning_rate;
  double current = objective_multi(f, x, outcomes, c_hats, cfg);
  if (!std::isfinite(current)) {
    throw NumericalError("objective is not finite at the initial iterate; "
                         "logits: " + dump_iterate(f.logits()));
  }
  out.best_objective = current;
  out.trace.push_back(current);
  out.best_trace.push_back(current);

  for (int it = 0; it < cfg.iterations; ++it) {
    if (anneal) {
      f.set_temperature(std::max(cfg.temperature_final,
                                 f.temperature() * anneal_rate));
      current = objective_multi(f, x, outcomes, c_hats, cfg);
    }
    const Eigen::MatrixXd grad =
        objective_gradient_multi(f, x, outcomes, c_hats, cfg);
    if (!grad.allFinite()) {
      throw NumericalError("gradient is not finite; logits: " +
                           dump_iterate(f.logits()));
    }

    bool accepted = false;
    const Eigen::MatrixXd base = f.logits();
    for (int half = 0; half < 30; ++half) {
      RepFunction candidate = f;
      candidate.set_logits(base + rate * grad);
      const double value = objective_multi(candidate, x, outcomes, c_hats, cfg);
      if (std::isfinite(value) && value >= current - cfg.tolerance) {
        f = candidate;
        current = value;
        rate = std::min(rate * 1.5, 1e3);
        accepted = true;
        break;
      }
      rate *= 0.5;
    }
    if (!accepted) break;  // no ascent direction left at this scale

    out.trace.push_back(current);
    if (current > out.best_objective) {
      out.best_objective = current;
      out.rep = f;
    }
    out.best_trace.push_back(out.best_objective);
  }
  return out;
}

TrainResult train_on_outcomes(const DataMatrix& x,
                              const Eigen::MatrixXd& outcomes,
                              const TrainConfig& cfg) {
  if (cfg.rep_dim < 1 || cfg.iterations < 1 || cfg.restarts < 1) {
    throw InputError("rep_dim, iterations, and restarts must be positive");
  }
  if (cfg.lambda < 0 || cfg.alpha < 0) {
    throw InputError("lambda and alpha must be nonnegative");
  }

  TrainResult result;
  result.factor_model = pinpoint::fit_ppca(x, cfg.latent_dim, cfg.ppca);
  result.gate = pinpoint::pinpointability_check(result.factor_model,
                                                cfg.pinpoint_threshold);
  if (!result.gate.passed) {
    throw PinpointabilityError(
        "the common cause is not pinpointable (max posterior variance " +
        format_double(result.gate.max_posterior_variance) + " >= threshold " +
        format_double(result.gate.threshold) + ")");
  }
  result.c_hats = pinpoint::posterior_means(result.factor_model, x);

  bool have_best = false;
  for (int r = 0; r < cfg.restarts; ++r) {
    Rng rng(split_seed(cfg.seed, static_cast<std::uint64_t>(r)));
    const Eigen::MatrixXd* init =
        (r == 0 && cfg.init_logits) ? &*cfg.init_logits : nullptr;
    AscentOutcome outcome = ascend(x, outcomes, result.c_hats, cfg, rng, init);
    if (!have_best || outcome.best_objective > result.best_objective) {
      have_best = true;
      result.best_objective = outcome.best_objective;
      result.best_restart = r;
      result.rep = outcome.rep;
      result.trace = std::move(outcome.trace);
      result.best_trace = std::move(outcome.best_trace);
    }
  }
  if (cfg.rep_class == RepClass::kSelection) {
    result.rep.set_hard(true);
  }
  return result;
}

}  // namespace

TrainResult train(const DataMatrix& x, const Eigen::VectorXd& y,
                  const TrainConfig& cfg) {
  if (y.size() != x.rows()) throw InputError("train: label length mismatch");
  return train_on_outcomes(x, y, cfg);
}

Predictor fit_predictor(const RepFunction& f, const DataMatrix& x_train,
                        const Eigen::VectorXd& y_train) {
  const Eigen::MatrixXd f_vals = f.apply(x_train);
  // Least squares of y on [1, f(X)]; reuses the outcome fit with an empty
  // cause block.
  const pns::OutcomeModelFit fit = pns::fit_outcome_linear(
      f_vals, y_train, Eigen::MatrixXd(f_vals.rows(), 0));
  Predictor p;
  p.intercept = fit.intercept;
  p.coeffs = fit.rep_coeffs;
  p.noise_variance = fit.noise_variance;
  return p;
}

Eigen::VectorXd predict(const Predictor& p, const RepFunction& f,
                        const DataMatrix& x_test) {
  const Eigen::MatrixXd f_vals = f.apply(x_test);
  if (f_vals.cols() != p.coeffs.size()) {
    throw InputError("predict: representation/predictor dimension mismatch");
  }
  return (f_vals * p.coeffs).array() + p.intercept;
}

Json Predictor::to_json() const {
  return Json{{"schema_version", 1},
              {"intercept", intercept},
              {"coeffs", vector_to_json(coeffs)},
              {"noise_variance", noise_variance}};
}

Predictor Predictor::from_json(const Json& j) {
  if (j.value("schema_version", 0) != 1) {
    throw InputError("unsupported predictor schema version");
  }
  Predictor p;
  p.intercept = j.at("intercept").get<double>();
  p.coeffs = vector_from_json(j.at("coeffs"));
  p.noise_variance = j.at("noise_variance").get<double>();
  return p;
}

Augmenter identity_augmenter() {
  return [](const Eigen::VectorXd& row, Rng&) { return row; };
}

Augmenter jitter_augmenter(double sd) {
  return [sd](const Eigen::VectorXd& row, Rng& rng) {
    Eigen::VectorXd out = row;
    for (Eigen::Index i = 0; i < out.size(); ++i) out(i) += sd * rng.normal();
    return out;
  };
}

Augmenter randomize_columns_augmenter(std::vector<int> columns, double lo,
                                      double hi) {
  return [columns = std::move(columns), lo, hi](const Eigen::VectorXd& row,
                                                Rng& rng) {
    Eigen::VectorXd out = row;
    for (int c : columns) out(c) = rng.uniform(lo, hi);
    return out;
  };
}

AugmentedDataset augment_and_label(const DataMatrix& subjects,
                                   const Augmenter& augmenter, int copies,
                                   std::uint64_t seed) {
  if (copies < 2) {
    throw InputError("augmentation needs at least 2 copies per subject");
  }
  const Eigen::Index n = subjects.rows();
  AugmentedDataset out;
  Eigen::MatrixXd rows(n * copies, subjects.cols());
  out.labels = Eigen::MatrixXd::Zero(n * copies, n);
  out.provenance.reserve(static_cast<std::size_t>(n * copies));
  for (Eigen::Index i = 0; i < n; ++i) {
    for (int u = 0; u < copies; ++u) {
      const Eigen::Index r = i * copies + u;
      if (u == 0) {
        rows.row(r) = subjects.values.row(i);
      } else {
        Rng rng(split_seed(seed, static_cast<std::uint64_t>(i),
                           static_cast<std::uint64_t>(u)));
        rows.row(r) =
            augmenter(subjects.values.row(i).transpose(), rng).transpose();
      }
      out.labels(r, i) = 1.0;
      out.provenance.emplace_back(static_cast<int>(i), u);
    }
  }
  out.x = DataMatrix(std::move(rows));
  return out;
}

TrainResult train_unsupervised(const DataMatrix& subjects,
                               const Augmenter& augmenter, int copies,
                               const TrainConfig& cfg) {
  if (subjects.rows() < 2) {
    throw InputError(
        "instance discrimination needs at least 2 subjects; with one "
        "subject there is no contrast");
  }
  const AugmentedDataset aug =
      augment_and_label(subjects, augmenter, copies, cfg.seed);
  return train_on_outcomes(aug.x, aug.labels, cfg);
}

}  // namespace causalrep::rep
