#pragma once

// Study reports and their CSV / JSON / PLOTDATA renderings.

#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "hlab/error.hpp"

namespace hlab {

inline constexpr int kReportSchemaVersion = 1;

/// Knobs shared by every study driver.
struct StudyOptions {
  bool record_wall_time = true;  // false writes wall_ms = 0 for byte-stable output
  unsigned threads = 0;          // 0: use thread_limit()
};

class Stopwatch {
 public:
  Stopwatch() : start_(std::chrono::steady_clock::now()) {}
  double elapsed_ms() const {
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_;
};

struct Verdict {
  std::string name;
  bool pass = false;
  std::string detail;

  bool operator==(const Verdict&) const = default;
};

struct StudyReport {
  std::string kind;
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;
  std::vector<std::string> row_errors;  // empty string for rows that ran
  std::vector<Verdict> verdicts;
  std::vector<std::pair<std::string, double>> constants;
  std::string config_hash;
  std::string version;
  std::uint64_t seed = 0;

  void add_row(std::vector<double> values, std::string error = {}) {
    values.resize(columns.size(), std::numeric_limits<double>::quiet_NaN());
    rows.push_back(std::move(values));
    row_errors.push_back(std::move(error));
  }

  std::size_t column_index(const std::string& name) const {
    for (std::size_t c = 0; c < columns.size(); ++c) {
      if (columns[c] == name) return c;
    }
    throw Error(ErrorKind::Config, "unknown report column: " + name);
  }

  std::vector<double> column(const std::string& name) const {
    const std::size_t c = column_index(name);
    std::vector<double> out;
    out.reserve(rows.size());
    for (const auto& r : rows) out.push_back(r[c]);
    return out;
  }

  bool rows_ok() const {
    for (const auto& e : row_errors) {
      if (!e.empty()) return false;
    }
    return true;
  }

  bool passed() const {
    for (const auto& v : verdicts) {
      if (!v.pass) return false;
    }
    return true;
  }

  void add_constant(const std::string& name, double value) { constants.emplace_back(name, value); }
};

/// Stable 64-bit FNV-1a digest, rendered as 16 hex digits.
inline std::string fnv1a_hex(const std::string& text) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

inline std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::string to_csv(const StudyReport& r) {
  std::ostringstream out;
  for (std::size_t c = 0; c < r.columns.size(); ++c) out << (c ? "," : "") << r.columns[c];
  out << '\n';
  for (const auto& row : r.rows) {
    for (std::size_t c = 0; c < row.size(); ++c) out << (c ? "," : "") << format_number(row[c]);
    out << '\n';
  }
  return out.str();
}

namespace detail {

inline nlohmann::json number_json(double v) {
  if (std::isfinite(v)) return v;
  if (std::isnan(v)) return nullptr;
  return v > 0 ? "inf" : "-inf";
}

inline double json_number(const nlohmann::json& j) {
  if (j.is_null()) return std::numeric_limits<double>::quiet_NaN();
  if (j.is_string()) {
    return j.get<std::string>() == "inf" ? std::numeric_limits<double>::infinity()
                                         : -std::numeric_limits<double>::infinity();
  }
  return j.get<double>();
}

}  // namespace detail

inline nlohmann::json to_json(const StudyReport& r) {
  nlohmann::json j;
  j["schema_version"] = kReportSchemaVersion;
  j["kind"] = r.kind;
  j["version"] = r.version;
  j["config_hash"] = r.config_hash;
  j["seed"] = r.seed;
  j["columns"] = r.columns;
  j["rows"] = nlohmann::json::array();
  for (std::size_t i = 0; i < r.rows.size(); ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (double v : r.rows[i]) row.push_back(detail::number_json(v));
    j["rows"].push_back({{"values", row}, {"error", r.row_errors[i]}, {"config_hash", r.config_hash}});
  }
  j["verdicts"] = nlohmann::json::array();
  for (const auto& v : r.verdicts) j["verdicts"].push_back({{"name", v.name}, {"pass", v.pass}, {"detail", v.detail}});
  j["constants"] = nlohmann::json::array();
  for (const auto& [k, v] : r.constants) j["constants"].push_back({{"name", k}, {"value", detail::number_json(v)}});
  j["pass"] = r.passed();
  return j;
}

inline StudyReport report_from_json(const nlohmann::json& j) {
  if (j.value("schema_version", 0) != kReportSchemaVersion) {
    throw Error(ErrorKind::IO, "unsupported report schema version");
  }
  StudyReport r;
  r.kind = j.at("kind").get<std::string>();
  r.version = j.at("version").get<std::string>();
  r.config_hash = j.at("config_hash").get<std::string>();
  r.seed = j.at("seed").get<std::uint64_t>();
  r.columns = j.at("columns").get<std::vector<std::string>>();
  for (const auto& row : j.at("rows")) {
    std::vector<double> values;
    for (const auto& v : row.at("values")) values.push_back(detail::json_number(v));
    r.rows.push_back(std::move(values));
    r.row_errors.push_back(row.at("error").get<std::string>());
  }
  for (const auto& v : j.at("verdicts")) {
    r.verdicts.push_back({v.at("name").get<std::string>(), v.at("pass").get<bool>(), v.at("detail").get<std::string>()});
  }
  for (const auto& c : j.at("constants")) {
    r.constants.emplace_back(c.at("name").get<std::string>(), detail::json_number(c.at("value")));
  }
  return r;
}

/// Whitespace-separated columns: the first column is the abscissa, every
/// further column one curve.
inline std::string to_plotdata(const StudyReport& r) {
  std::ostringstream out;
  out << "# kind " << r.kind << '\n';
  out << "# curves " << (r.columns.empty() ? 0 : r.columns.size() - 1) << '\n';
  out << "#";
  for (const auto& c : r.columns) out << ' ' << c;
  out << '\n';
  for (const auto& row : r.rows) {
    for (std::size_t c = 0; c < row.size(); ++c) out << (c ? " " : "") << format_number(row[c]);
    out << '\n';
  }
  return out.str();
}

/// Writes through a temporary file and renames it into place.
inline void write_file_atomic(const std::filesystem::path& path, const std::string& content) {
  std::error_code ec;
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
  const auto tmp = std::filesystem::path(path.string() + ".tmp");
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw Error(ErrorKind::IO, "cannot open " + tmp.string());
    f << content;
    f.flush();
    if (!f) throw Error(ErrorKind::IO, "write failed: " + tmp.string());
  }
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw Error(ErrorKind::IO, "cannot rename into " + path.string());
  }
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorKind::IO, "cannot read " + path.string());
  std::ostringstream s;
  s << f.rdbuf();
  return s.str();
}

enum class ReportFormat { Csv, Json, PlotData };

inline std::string render(const StudyReport& r, ReportFormat f) {
  switch (f) {
    case ReportFormat::Csv: return to_csv(r);
    case ReportFormat::Json: return to_json(r).dump(2) + "\n";
    case ReportFormat::PlotData: return to_plotdata(r);
  }
  return {};
}

inline const char* extension(ReportFormat f) {
  switch (f) {
    case ReportFormat::Csv: return ".csv";
    case ReportFormat::Json: return ".json";
    case ReportFormat::PlotData: return ".dat";
  }
  return "";
}

/// Writes `<dir>/<stem><ext>` atomically and returns the path.
inline std::filesystem::path emit_report(const StudyReport& r, ReportFormat f, const std::filesystem::path& dir,
                                         const std::string& stem = "report") {
  const auto path = dir / (stem + extension(f));
  write_file_atomic(path, render(r, f));
  return path;
}

}  // namespace hlab
