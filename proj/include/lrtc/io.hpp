#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "lrtc/tensor.hpp"

namespace lrtc {

// Text tensor format: first line "M N P", then M*N*P whitespace-separated
// values in storage order (m fastest, then n, then p). Masks use the same
// layout with entries restricted to 0/1. The binary variant is an 8-byte
// magic, three little-endian uint64 dims, then the values as little-endian
// doubles. Readers sniff the magic, so either format loads through the same
// entry point. Writers round-trip doubles exactly.

Tensor3 read_tensor(const std::string& path);
void write_tensor(const std::string& path, const Tensor3& t, bool binary = false);

Mask3 read_mask(const std::string& path);
void write_mask(const std::string& path, const Mask3& mask, bool binary = false);

// Headerless CSV holding one square matrix, one row per line.
Eigen::MatrixXd read_matrix_csv(const std::string& path);
void write_matrix_csv(const std::string& path, const Eigen::MatrixXd& m);

// FNV-1a content digest, hex encoded; recorded in run manifests.
std::string file_digest(const std::string& path);

// Provenance record written beside every CLI output. key/value pairs keep the
// schema flexible across subcommands; values are stored as strings.
struct RunManifest {
  std::string command;
  std::vector<std::pair<std::string, std::string>> config;   // flag -> value
  std::vector<std::pair<std::string, std::string>> inputs;   // path -> digest
  std::vector<std::string> outputs;
  double wall_seconds = 0.0;

  void add_config(const std::string& key, const std::string& value);
  void add_input(const std::string& path);
  void write(const std::string& path) const;
};

std::string format_double(double v);  // shortest representation that round-trips

}  // namespace lrtc
