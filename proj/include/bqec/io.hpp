// Copyright 2026 The bqec Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// CSV formatting, content hashing and run manifests.

#pragma once

#include <chrono>
#include <cstdint>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "bqec/core.hpp"

#ifndef BQEC_REVISION
#define BQEC_REVISION "unknown"
#endif

namespace bqec {

inline constexpr int kCsvDigits = 12;
inline constexpr int kExactDigits = 17;

inline std::string format_number(double v, int digits = kCsvDigits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", digits, v);
  return buf;
}

/// 64-bit FNV-1a.
inline std::uint64_t fnv1a64(const void* data, std::size_t n, std::uint64_t h = 1469598103934665603ULL) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 1099511628211ULL;
  }
  return h;
}

inline std::uint64_t fnv1a64(const std::string& s) { return fnv1a64(s.data(), s.size()); }

inline std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

/// Hash of a matrix via its 17-digit text form (platform independent).
inline std::string matrix_hash(const Matrix& m) {
  std::string s;
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      s += format_number(m(i, j).real(), kExactDigits);
      s += ',';
      s += format_number(m(i, j).imag(), kExactDigits);
      s += ';';
    }
  }
  return hex64(fnv1a64(s));
}

class CsvWriter {
 public:
  CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& header, int digits = kCsvDigits)
      : path_(path), out_(path), digits_(digits), columns_(header.size()) {
    if (!out_) throw std::runtime_error("cannot open " + path.string() + " for writing");
    write_cells(header);
  }

  void comment(const std::string& line) { out_ << "# " << line << '\n'; }

  void row(const std::vector<double>& values) {
    std::vector<std::string> cells;
    cells.reserve(values.size());
    for (double v : values) cells.push_back(format_number(v, digits_));
    write_cells(cells);
  }

  void row(const std::vector<std::string>& cells) { write_cells(cells); }

  const std::filesystem::path& path() const { return path_; }

 private:
  void write_cells(const std::vector<std::string>& cells) {
    if (cells.size() != columns_) throw std::logic_error("csv row width does not match header in " + path_.string());
    for (std::size_t i = 0; i < cells.size(); ++i) out_ << (i ? "," : "") << cells[i];
    out_ << '\n';
  }

  std::filesystem::path path_;
  std::ofstream out_;
  int digits_;
  std::size_t columns_;
};

inline std::string utc_timestamp() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

inline std::string file_hash(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return hex64(fnv1a64(ss.str()));
}

/// manifest.json with revision, seed, config hash, outputs and timestamp.
inline void write_manifest(const std::filesystem::path& dir, const std::string& command, std::uint64_t seed,
                           const std::string& config_hash, const std::vector<std::filesystem::path>& outputs,
                           const nlohmann::json& extra = nlohmann::json::object()) {
  nlohmann::json j;
  j["command"] = command;
  j["revision"] = BQEC_REVISION;
  j["seed"] = seed;
  j["config_hash"] = config_hash;
  j["timestamp"] = utc_timestamp();
  nlohmann::json files = nlohmann::json::array();
  for (const auto& p : outputs) files.push_back({{"path", p.filename().string()}, {"hash", file_hash(p)}});
  j["outputs"] = files;
  j["summary"] = extra;
  std::ofstream out(dir / "manifest.json");
  out << j.dump(2) << '\n';
}

}  // namespace bqec
