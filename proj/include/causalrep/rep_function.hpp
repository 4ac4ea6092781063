// Copyright 2026 The causalrep Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//   http://www.apache.org/licenses/LICENSE-2.0

#ifndef CAUSALREP_REP_FUNCTION_HPP_
#define CAUSALREP_REP_FUNCTION_HPP_

#include <Eigen/Core>

#include "causalrep/dataset.hpp"
#include "causalrep/json_util.hpp"

namespace causalrep::rep {

enum class RepClass { kConvexCombination, kSelection };

// Representation f(X) = X * W with one simplex-constrained weight column
// per output dimension. The free parameters are logits; each weight column
// is the softmax of the corresponding logits column, so weights are
// nonnegative and sum to one by construction. The Selection class divides
// logits by a temperature and can be hardened to one-hot columns.
class RepFunction {
 public:
  RepFunction() = default;
  RepFunction(RepClass cls, Eigen::MatrixXd logits, double temperature = 1.0);

  static RepFunction selection_of_columns(int input_dim,
                                          const std::vector<int>& columns);

  RepClass rep_class() const { return class_; }
  int input_dim() const { return static_cast<int>(logits_.rows()); }
  int output_dim() const { return static_cast<int>(logits_.cols()); }
  const Eigen::MatrixXd& logits() const { return logits_; }
  double temperature() const { return temperature_; }
  bool hard() const { return hard_; }
  void set_hard(bool hard) { hard_ = hard; }
  void set_temperature(double t);
  void set_logits(Eigen::MatrixXd logits);

  // Simplex weights: softmax per column (logits / temperature for the
  // Selection class), or one-hot argmax columns in hard mode.
  Eigen::MatrixXd weights() const;
  Eigen::MatrixXd soft_weights() const;
  Eigen::MatrixXd hardened_weights() const;

  // Largest absolute weight per input column; the effective support of f.
  Eigen::VectorXd column_weight_magnitudes() const;

  Eigen::MatrixXd apply(const DataMatrix& x) const;

  Json to_json() const;
  static RepFunction from_json(const Json& j);

 private:
  RepClass class_ = RepClass::kConvexCombination;
  Eigen::MatrixXd logits_;  // m x d
  double temperature_ = 1.0;
  bool hard_ = false;
};

// Stable per-column softmax of logits / temperature.
Eigen::MatrixXd softmax_columns(const Eigen::MatrixXd& logits,
                                double temperature);

}  // namespace causalrep::rep

#endif  // CAUSALREP_REP_FUNCTION_HPP_
