#pragma once

#include <charconv>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "cdfuse/csv.hpp"
#include "cdfuse/subspace.hpp"

namespace cdfuse {

using Json = nlohmann::ordered_json;

// Round-trips a double through the fixed 12-significant-digit formatting
// so JSON and CSV report the same value.
inline double report_round(double v) {
  const std::string s = format_double(v);
  double out = v;
  std::from_chars(s.data(), s.data() + s.size(), out);
  return out;
}

inline Json to_json(const VarianceTable& table) {
  Json entries = Json::array();
  for (const auto& e : table.entries) {
    entries.push_back({{"name", e.name},
                       {"value", report_round(e.value)},
                       {"percent", report_round(e.percent)},
                       {"kind", e.kind == VarianceKind::ss ? "SS" : "ESS"}});
  }
  return Json{{"block_total", report_round(table.block_total)},
              {"order_sensitive", table.order_sensitive},
              {"entries", entries}};
}

inline Json to_json(const Vector& v) {
  Json arr = Json::array();
  for (Index i = 0; i < v.size(); ++i) arr.push_back(report_round(v(i)));
  return arr;
}

/// Collects files for one run directory and removes everything written if
/// the run aborts, so failed runs leave no partial outputs behind.
class OutputDir {
public:
  explicit OutputDir(std::string dir) : dir_(std::move(dir)) {
    std::filesystem::create_directories(dir_);
  }

  ~OutputDir() {
    if (!committed_) {
      std::error_code ec;
      for (const auto& f : written_) std::filesystem::remove(f, ec);
    }
  }

  std::string path(const std::string& name) {
    const std::string full = (std::filesystem::path(dir_) / name).string();
    written_.push_back(full);
    return full;
  }

  const std::string& dir() const { return dir_; }
  void commit() { committed_ = true; }

private:
  std::string dir_;
  std::vector<std::string> written_;
  bool committed_ = false;
};

inline void write_json(const std::string& path, const Json& j) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw input_error("cannot write '" + path + "'");
  out << j.dump(2) << "\n";
}

inline Json read_json(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw input_error("cannot open '" + path + "'");
  return Json::parse(in);
}

inline std::vector<std::string> numbered_names(const std::string& prefix,
                                               Index n) {
  std::vector<std::string> names;
  for (Index i = 1; i <= n; ++i)
    names.push_back(prefix + "." + std::to_string(i));
  return names;
}

}  // namespace cdfuse
