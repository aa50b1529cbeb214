// Copyright (C) 2026 The flowdistill Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "flowdistill/vec.hpp"

namespace flowdistill {

// Shortest form that round-trips a double ("%.17g").
std::string format_double(double value);

/// RFC-4180 CSV writer; fields containing a comma, quote or newline are quoted.
class CsvWriter {
 public:
  CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& header);
  void row(const std::vector<std::string>& fields);
  void row(std::initializer_list<double> values);

  static std::string quote(const std::string& field);

 private:
  std::ofstream out_;
  std::size_t columns_;
};

void write_json(const std::filesystem::path& path, const nlohmann::json& value);
nlohmann::json read_json(const std::filesystem::path& path);

/// Binary P6 (channels = 3) or P5 (channels = 1) image from channel-major
/// data in [0, 1]; values are clamped and rounded to 8 bits.
void write_ppm(const std::filesystem::path& path, ConstSpan chw, int channels, int height, int width);

// A tensor on disk is <stem>.f32 (little-endian float32) + <stem>.json.
std::filesystem::path tensor_blob_path(const std::filesystem::path& stem);
std::filesystem::path tensor_sidecar_path(const std::filesystem::path& stem);

void write_f32_blob(const std::filesystem::path& path, ConstSpan values);
Vector read_f32_blob(const std::filesystem::path& path);

// The sidecar holds {"dtype", "byte_order", "shape"} merged with `extra`.
void write_tensor(const std::filesystem::path& stem, ConstSpan values,
                  const std::vector<std::size_t>& shape, const nlohmann::json& extra = nlohmann::json::object());
Vector read_tensor(const std::filesystem::path& stem, std::vector<std::size_t>* shape = nullptr);

}  // namespace flowdistill
