// Copyright 2026 The causalrep Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//   http://www.apache.org/licenses/LICENSE-2.0

#include "causalrep/rep_function.hpp"

#include <cmath>

namespace causalrep::rep {

RepFunction::RepFunction(RepClass cls, Eigen::MatrixXd logits,
                         double temperature)
    : class_(cls), logits_(std::move(logits)), temperature_(temperature) {
  if (logits_.rows() < 1 || logits_.cols() < 1) {
    throw InputError("representation needs at least one input and output "
                     "dimension");
  }
  if (!(temperature_ > 0.0)) {
    throw InputError("temperature must be positive");
  }
  if (!logits_.allFinite()) throw InputError("logits must be finite");
}

RepFunction RepFunction::selection_of_columns(
    int input_dim, const std::vector<int>& columns) {
  if (columns.empty()) throw InputError("no columns selected");
  Eigen::MatrixXd logits = Eigen::MatrixXd::Zero(
      input_dim, static_cast<Eigen::Index>(columns.size()));
  for (std::size_t j = 0; j < columns.size(); ++j) {
    if (columns[j] < 0 || columns[j] >= input_dim) {
      throw InputError("selected column out of range");
    }
    logits(columns[j], static_cast<Eigen::Index>(j)) = 1.0;
  }
  RepFunction f(RepClass::kSelection, std::move(logits), 1.0);
  f.set_hard(true);
  return f;
}

void RepFunction::set_temperature(double t) {
  if (!(t > 0.0)) throw InputError("temperature must be positive");
  temperature_ = t;
}

void RepFunction::set_logits(Eigen::MatrixXd logits) {
  if (logits.rows() != logits_.rows() || logits.cols() != logits_.cols()) {
    throw InputError("logits shape cannot change");
  }
  if (!logits.allFinite()) throw InputError("logits must be finite");
  logits_ = std::move(logits);
}

Eigen::MatrixXd softmax_columns(const Eigen::MatrixXd& logits,
                                double temperature) {
  Eigen::MatrixXd w(logits.rows(), logits.cols());
  for (Eigen::Index j = 0; j < logits.cols(); ++j) {
    const double top = logits.col(j).maxCoeff();
    double denom = 0;
    for (Eigen::Index l = 0; l < logits.rows(); ++l) {
      w(l, j) = std::exp((logits(l, j) - top) / temperature);
      denom += w(l, j);
    }
    w.col(j) /= denom;
  }
  return w;
}

Eigen::MatrixXd RepFunction::soft_weights() const {
  const double t =
      class_ == RepClass::kSelection ? temperature_ : 1.0;
  return softmax_columns(logits_, t);
}

Eigen::MatrixXd RepFunction::hardened_weights() const {
  Eigen::MatrixXd w = Eigen::MatrixXd::Zero(logits_.rows(), logits_.cols());
  for (Eigen::Index j = 0; j < logits_.cols(); ++j) {
    Eigen::Index argmax = 0;
    logits_.col(j).maxCoeff(&argmax);
    w(argmax, j) = 1.0;
  }
  return w;
}

Eigen::MatrixXd RepFunction::weights() const {
  return hard_ ? hardened_weights() : soft_weights();
}

Eigen::VectorXd RepFunction::column_weight_magnitudes() const {
  return weights().cwiseAbs().rowwise().maxCoeff();
}

Eigen::MatrixXd RepFunction::apply(const DataMatrix& x) const {
  if (x.cols() != logits_.rows()) {
    throw InputError("representation input dimension mismatch");
  }
  return x.values * weights();
}

Json RepFunction::to_json() const {
  return Json{{"schema_version", 1},
              {"class", class_ == RepClass::kConvexCombination ? "convex"
                                                               : "select"},
              {"logits", matrix_to_json(logits_)},
              {"temperature", temperature_},
              {"hard", hard_},
              {"weights", matrix_to_json(weights())}};
}

RepFunction RepFunction::from_json(const Json& j) {
  if (j.value("schema_version", 0) != 1) {
    throw InputError("unsupported representation schema version");
  }
  const std::string cls = j.at("class").get<std::string>();
  RepClass rc;
  if (cls == "convex") {
    rc = RepClass::kConvexCombination;
  } else if (cls == "select") {
    rc = RepClass::kSelection;
  } else {
    throw InputError("unknown representation class '" + cls + "'");
  }
  RepFunction f(rc, matrix_from_json(j.at("logits")),
                j.value("temperature", 1.0));
  f.set_hard(j.value("hard", false));
  return f;
}

}  // namespace causalrep::rep
