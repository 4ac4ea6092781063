// Copyright 2026 The causalrep Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//   http://www.apache.org/licenses/LICENSE-2.0

#include "causalrep/dataset.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <system_error>

namespace causalrep {

DataMatrix::DataMatrix(Eigen::MatrixXd v) : values(std::move(v)) {
  if (values.rows() < 2 || values.cols() < 1) {
    throw InputError("DataMatrix needs at least 2 rows and 1 column");
  }
  if (!values.allFinite()) {
    throw InputError("DataMatrix entries must be finite");
  }
}

std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

static double parse_double(std::string_view token, const std::string& path) {
  double out = 0;
  const char* first = token.data();
  const char* last = token.data() + token.size();
  auto res = std::from_chars(first, last, out);
  if (res.ec != std::errc() || res.ptr != last) {
    throw InputError("bad numeric field '" + std::string(token) + "' in " +
                     path);
  }
  return out;
}

void write_csv(const std::string& path,
               const std::vector<std::string>& header,
               const Eigen::MatrixXd& values) {
  if (static_cast<Eigen::Index>(header.size()) != values.cols()) {
    throw InputError("write_csv: header/column mismatch");
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot open for writing: " + path);
  for (std::size_t j = 0; j < header.size(); ++j) {
    if (j) out << ',';
    out << header[j];
  }
  out << '\n';
  for (Eigen::Index i = 0; i < values.rows(); ++i) {
    for (Eigen::Index j = 0; j < values.cols(); ++j) {
      if (j) out << ',';
      out << format_double(values(i, j));
    }
    out << '\n';
  }
}

void write_vector_csv(const std::string& path, const std::string& name,
                      const Eigen::VectorXd& values) {
  write_csv(path, {name}, values);
}

CsvTable read_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open: " + path);
  std::string line;
  if (!std::getline(in, line)) throw InputError("empty csv: " + path);
  if (!line.empty() && line.back() == '\r') line.pop_back();

  CsvTable table;
  {
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) table.header.push_back(field);
  }
  if (table.header.empty()) throw InputError("csv has no columns: " + path);

  std::vector<double> cells;
  Eigen::Index rows = 0;
  const Eigen::Index cols = static_cast<Eigen::Index>(table.header.size());
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    Eigen::Index j = 0;
    std::size_t start = 0;
    while (true) {
      const std::size_t comma = line.find(',', start);
      const std::string_view token(line.data() + start,
                                   (comma == std::string::npos ? line.size()
                                                               : comma) -
                                       start);
      cells.push_back(parse_double(token, path));
      ++j;
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    if (j != cols) throw InputError("ragged csv row in " + path);
    ++rows;
  }
  table.values.resize(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index j = 0; j < cols; ++j) {
      table.values(i, j) = cells[static_cast<std::size_t>(i * cols + j)];
    }
  }
  return table;
}

LabeledDataset read_labeled_csv(const std::string& path) {
  CsvTable table = read_csv(path);
  LabeledDataset data;
  const bool has_y = !table.header.empty() && table.header.back() == "y";
  const Eigen::Index m = table.values.cols() - (has_y ? 1 : 0);
  if (m < 1) throw InputError("no feature columns in " + path);
  data.x = DataMatrix(table.values.leftCols(m));
  if (has_y) data.y = table.values.col(m);
  return data;
}

void write_labeled_csv(const std::string& path, const LabeledDataset& data) {
  const Eigen::Index m = data.x.cols();
  const bool has_y = data.y.size() > 0;
  std::vector<std::string> header;
  for (Eigen::Index j = 0; j < m; ++j) {
    header.push_back("x" + std::to_string(j + 1));
  }
  Eigen::MatrixXd values(data.x.rows(), m + (has_y ? 1 : 0));
  values.leftCols(m) = data.x.values;
  if (has_y) {
    if (data.y.size() != data.x.rows()) {
      throw InputError("label length does not match rows");
    }
    header.push_back("y");
    values.col(m) = data.y;
  }
  write_csv(path, header, values);
}

}  // namespace causalrep
