// Copyright 2026 The causalrep Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//   http://www.apache.org/licenses/LICENSE-2.0

#ifndef CAUSALREP_JSON_UTIL_HPP_
#define CAUSALREP_JSON_UTIL_HPP_

#include <Eigen/Core>
#include <string>

#include "json.hpp"

namespace causalrep {

using Json = nlohmann::json;

Json matrix_to_json(const Eigen::MatrixXd& m);
Eigen::MatrixXd matrix_from_json(const Json& j);
Json vector_to_json(const Eigen::VectorXd& v);
Eigen::VectorXd vector_from_json(const Json& j);

Json load_json_file(const std::string& path);
void save_json_file(const std::string& path, const Json& j);

// FNV-1a 64-bit digest of a file's bytes, as a hex string.
std::string file_digest(const std::string& path);

// Provenance record written next to every CLI output. Re-running the
// recorded command with the same seed and inputs reproduces the outputs
// bitwise.
struct RunManifest {
  std::string command_line;
  Json config;
  std::uint64_t seed = 0;
  std::string version;
  Json input_digests;   // path -> digest
  Json output_digests;  // path -> digest
  double wall_time_seconds = 0;

  Json to_json() const;
  static RunManifest from_json(const Json& j);
};

void write_manifest(const std::string& primary_output,
                    const RunManifest& manifest);

}  // namespace causalrep

#endif  // CAUSALREP_JSON_UTIL_HPP_
