// Copyright 2026 The causalrep Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//   http://www.apache.org/licenses/LICENSE-2.0

#ifndef CAUSALREP_DATASET_HPP_
#define CAUSALREP_DATASET_HPP_

#include <Eigen/Core>
#include <string>
#include <vector>

#include "causalrep/common.hpp"

namespace causalrep {

// Row-per-datapoint design matrix. Entries must be finite, n >= 2, m >= 1.
struct DataMatrix {
  Eigen::MatrixXd values;

  DataMatrix() = default;
  explicit DataMatrix(Eigen::MatrixXd v);

  Eigen::Index rows() const { return values.rows(); }
  Eigen::Index cols() const { return values.cols(); }
  Eigen::RowVectorXd column_means() const {
    return values.colwise().mean();
  }
};

struct LabeledDataset {
  DataMatrix x;
  Eigen::VectorXd y;
};

// ---------------------------------------------------------------------------
// CSV. One header row; numbers are written with shortest round-trip
// precision so identical values reproduce identical bytes.
// ---------------------------------------------------------------------------

std::string format_double(double v);

void write_csv(const std::string& path,
               const std::vector<std::string>& header,
               const Eigen::MatrixXd& values);
void write_vector_csv(const std::string& path, const std::string& name,
                      const Eigen::VectorXd& values);

struct CsvTable {
  std::vector<std::string> header;
  Eigen::MatrixXd values;
};

CsvTable read_csv(const std::string& path);

// Reads columns named x1..xm as the data matrix; a trailing `y` column, if
// present, becomes the labels.
LabeledDataset read_labeled_csv(const std::string& path);

void write_labeled_csv(const std::string& path, const LabeledDataset& data);

}  // namespace causalrep

#endif  // CAUSALREP_DATASET_HPP_
