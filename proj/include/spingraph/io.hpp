#pragma once

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "spingraph/core.hpp"

namespace spingraph {

inline constexpr const char* kVersion = "1.0.0";

/// Shortest exact decimal form of a double (round-trips bit-identically).
inline std::string format_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

inline std::uint64_t fnv1a64(const void* data, std::size_t n) {
  const auto* bytes = static_cast<const unsigned char*>(data);
  std::uint64_t h = 1469598103934665603ULL;
  for (std::size_t i = 0; i < n; ++i) {
    h ^= bytes[i];
    h *= 1099511628211ULL;
  }
  return h;
}

inline std::string hash_hex(const std::string& bytes) {
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(fnv1a64(bytes.data(), bytes.size())));
  return buf;
}

inline std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::invalid_argument("cannot open file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::invalid_argument("cannot write file: " + path);
  out << content;
  if (!out) throw std::invalid_argument("write failed: " + path);
}

/// A column-named numeric table renderable as CSV (doubles in %.17g) or as a
/// {"header": [...], "rows": [[...]]} JSON document.
class OutputTable {
 public:
  explicit OutputTable(std::vector<std::string> header) : header_(std::move(header)) {}

  void add_row(std::vector<nlohmann::json> cells) {
    if (cells.size() != header_.size()) {
      throw std::invalid_argument("output table: row width != header width");
    }
    rows_.push_back(std::move(cells));
  }

  std::string to_csv() const {
    std::string out;
    for (std::size_t i = 0; i < header_.size(); ++i) {
      if (i) out += ',';
      out += header_[i];
    }
    out += '\n';
    for (const auto& row : rows_) {
      for (std::size_t i = 0; i < row.size(); ++i) {
        if (i) out += ',';
        out += cell_text(row[i]);
      }
      out += '\n';
    }
    return out;
  }

  std::string to_json() const {
    nlohmann::json j;
    j["header"] = header_;
    j["rows"] = nlohmann::json::array();
    for (const auto& row : rows_) j["rows"].push_back(row);
    return j.dump(2) + "\n";
  }

  /// Writes <stem>.csv or <stem>.json and returns the written path.
  std::string write(const std::string& stem, const std::string& format) const {
    if (format == "csv") {
      const std::string path = stem + ".csv";
      write_text_file(path, to_csv());
      return path;
    }
    if (format == "json") {
      const std::string path = stem + ".json";
      write_text_file(path, to_json());
      return path;
    }
    throw std::invalid_argument("unknown output format: " + format);
  }

  std::size_t row_count() const { return rows_.size(); }

 private:
  static std::string cell_text(const nlohmann::json& cell) {
    if (cell.is_number_float()) return format_double(cell.get<double>());
    if (cell.is_number_integer()) return std::to_string(cell.get<long long>());
    if (cell.is_number_unsigned()) return std::to_string(cell.get<unsigned long long>());
    if (cell.is_string()) return cell.get<std::string>();
    throw std::invalid_argument("output table: unsupported cell type");
  }

  std::vector<std::string> header_;
  std::vector<std::vector<nlohmann::json>> rows_;
};

/// Run-record sidecar: every data file is written together with exactly one
/// manifest describing the command, inputs, parameters, and environment that
/// produced it.
struct RunManifest {
  std::string command;
  nlohmann::json inputs = nlohmann::json::object();   // path -> content hash
  nlohmann::json operator_spec;                       // embedded spec or null
  nlohmann::json tolerances = nlohmann::json::object();
  nlohmann::json outputs = nlohmann::json::object();  // path -> content hash
  std::optional<std::uint64_t> seed;
  std::string version = kVersion;
  double wall_time_seconds = 0.0;
  nlohmann::json summary = nlohmann::json::object();  // command-specific results

  nlohmann::json to_json() const {
    nlohmann::json j;
    j["command"] = command;
    j["inputs"] = inputs;
    j["operator_spec"] = operator_spec.is_null() ? nlohmann::json() : operator_spec;
    j["tolerances"] = tolerances;
    j["outputs"] = outputs;
    if (seed) {
      j["seed"] = *seed;
    } else {
      j["seed"] = nullptr;
    }
    j["version"] = version;
    j["wall_time_seconds"] = wall_time_seconds;
    j["summary"] = summary;
    return j;
  }
};

inline void write_manifest(const std::string& path, const RunManifest& manifest) {
  write_text_file(path, manifest.to_json().dump(2) + "\n");
}

}  // namespace spingraph
