// Copyright (C) 2026 The flowdistill Authors
// SPDX-License-Identifier: Apache-2.0

#include "flowdistill/io.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <functional>
#include <numeric>

#include "flowdistill/errors.hpp"

namespace flowdistill {

namespace {

std::ofstream open_out(const std::filesystem::path& path, std::ios::openmode mode = std::ios::out) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, mode);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  return out;
}

}  // namespace

std::string format_double(double value) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", value);
  return buf;
}

CsvWriter::CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& header)
    : out_(open_out(path, std::ios::out | std::ios::binary)), columns_(header.size()) {
  row(header);
}

std::string CsvWriter::quote(const std::string& field) {
  if (field.find_first_of(",\"\r\n") == std::string::npos) return field;
  std::string quoted = "\"";
  for (char c : field) {
    if (c == '"') quoted += '"';
    quoted += c;
  }
  return quoted + '"';
}

void CsvWriter::row(const std::vector<std::string>& fields) {
  if (fields.size() != columns_) throw Error("csv row has the wrong number of fields");
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) out_ << ',';
    out_ << quote(fields[i]);
  }
  out_ << "\r\n";
}

void CsvWriter::row(std::initializer_list<double> values) {
  std::vector<std::string> fields;
  fields.reserve(values.size());
  for (double v : values) fields.push_back(format_double(v));
  row(fields);
}

void write_json(const std::filesystem::path& path, const nlohmann::json& value) {
  auto out = open_out(path, std::ios::out | std::ios::binary);
  out << value.dump(2) << '\n';
}

nlohmann::json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path.string());
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("invalid JSON in " + path.string() + ": " + e.what());
  }
}

void write_ppm(const std::filesystem::path& path, ConstSpan chw, int channels, int height, int width) {
  if (channels != 1 && channels != 3) throw Error("ppm output needs 1 or 3 channels");
  const std::size_t pixels = static_cast<std::size_t>(height) * width;
  if (chw.size() != pixels * channels) throw Error("ppm data has the wrong size");
  auto out = open_out(path, std::ios::out | std::ios::binary);
  out << (channels == 3 ? "P6" : "P5") << '\n' << width << ' ' << height << "\n255\n";
  std::vector<unsigned char> bytes(pixels * channels);
  for (std::size_t p = 0; p < pixels; ++p) {
    for (int c = 0; c < channels; ++c) {
      const double v = std::clamp(chw[c * pixels + p], 0.0, 1.0);
      bytes[p * channels + c] = static_cast<unsigned char>(std::lround(v * 255.0));
    }
  }
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

std::filesystem::path tensor_blob_path(const std::filesystem::path& stem) {
  return std::filesystem::path(stem.string() + ".f32");
}

std::filesystem::path tensor_sidecar_path(const std::filesystem::path& stem) {
  return std::filesystem::path(stem.string() + ".json");
}

void write_f32_blob(const std::filesystem::path& path, ConstSpan values) {
  auto out = open_out(path, std::ios::out | std::ios::binary);
  std::vector<unsigned char> bytes(values.size() * 4);
  for (std::size_t i = 0; i < values.size(); ++i) {
    const std::uint32_t word = std::bit_cast<std::uint32_t>(static_cast<float>(values[i]));
    for (int b = 0; b < 4; ++b) bytes[4 * i + b] = static_cast<unsigned char>(word >> (8 * b));
  }
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

Vector read_f32_blob(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open " + path.string());
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (bytes.size() % 4 != 0) throw ConfigError(path.string() + " is not a float32 blob");
  Vector values(bytes.size() / 4);
  for (std::size_t i = 0; i < values.size(); ++i) {
    std::uint32_t word = 0;
    for (int b = 0; b < 4; ++b) word |= static_cast<std::uint32_t>(bytes[4 * i + b]) << (8 * b);
    values[i] = std::bit_cast<float>(word);
  }
  return values;
}

void write_tensor(const std::filesystem::path& stem, ConstSpan values,
                  const std::vector<std::size_t>& shape, const nlohmann::json& extra) {
  const std::size_t count =
      std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
  if (count != values.size()) throw Error("tensor shape does not match its data");
  nlohmann::json sidecar = extra;
  sidecar["dtype"] = "float32";
  sidecar["byte_order"] = "little";
  sidecar["shape"] = shape;
  write_f32_blob(tensor_blob_path(stem), values);
  write_json(tensor_sidecar_path(stem), sidecar);
}

Vector read_tensor(const std::filesystem::path& stem, std::vector<std::size_t>* shape) {
  const nlohmann::json sidecar = read_json(tensor_sidecar_path(stem));
  Vector values = read_f32_blob(tensor_blob_path(stem));
  std::vector<std::size_t> dims;
  try {
    dims = sidecar.at("shape").get<std::vector<std::size_t>>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(tensor_sidecar_path(stem).string() + ": " + e.what());
  }
  const std::size_t count =
      std::accumulate(dims.begin(), dims.end(), std::size_t{1}, std::multiplies<>());
  if (count != values.size()) throw ConfigError(stem.string() + ": blob size does not match sidecar shape");
  if (shape) *shape = dims;
  return values;
}

}  // namespace flowdistill
