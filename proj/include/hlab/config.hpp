#pragma once

// Flat key=value study configuration. One key per line, '#' starts a comment,
// numbers may be written as fractions ("1/3").

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "hlab/correctors.hpp"
#include "hlab/error.hpp"
#include "hlab/report.hpp"

namespace hlab {

enum class StudyKind { Corrector, HeatObstacle, Eigen, Pme };

inline const char* to_string(StudyKind k) {
  switch (k) {
    case StudyKind::Corrector: return "CORRECTOR";
    case StudyKind::HeatObstacle: return "HEAT_OBSTACLE";
    case StudyKind::Eigen: return "EIGEN";
    case StudyKind::Pme: return "PME";
  }
  return "?";
}

struct StudyConfig {
  StudyKind kind = StudyKind::Corrector;
  int n = 3;
  double alpha = 3.0;
  double c0 = 1.0;
  std::vector<double> eps_list;

  // Grid spacing: fixed h when h > 0, else h_factor * eps^h_power when
  // h_factor > 0, else the corrector rule (cells_per_radius, h_multiple).
  double h = 0.0;
  double h_factor = 0.0;
  double h_power = 1.0;
  double cells_per_radius = 4.0;
  int h_multiple = 8;

  std::optional<double> k;  // corrector constant; empty = auto (capacity of B_c0)
  double tol = 1e-8;

  double T = 0.05;
  double dt = 0.0;
  double cfl_safety = 0.9;
  int snapshot_every = 200;
  std::string solver = "projected";  // projected | penalized (heat)
  double delta = 1e-3;               // penalty width
  double amplitude = 0.5;            // obstacle / initial-data amplitude
  std::string initial = "obstacle";  // obstacle | zero (heat)

  double p = 0.5;  // eigen exponent
  double m = 2.0;  // PME exponent

  unsigned threads = 0;
  bool record_wall_time = false;
  std::uint64_t seed = 0;
  std::string output;
  std::vector<std::string> formats{"csv", "json"};

  double spacing(double eps, double a) const {
    if (h > 0.0) return h;
    if (h_factor > 0.0) return h_factor * std::pow(eps, h_power);
    return HRule{cells_per_radius, h_multiple}(eps, a);
  }
};

namespace detail {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  return s;
}

inline double parse_plain(const std::string& s, const std::string& key) {
  double v = 0.0;
  const auto* end = s.data() + s.size();
  const auto r = std::from_chars(s.data(), end, v);
  if (r.ec != std::errc() || r.ptr != end) throw Error(ErrorKind::Config, key + ": not a number: '" + s + "'");
  return v;
}

}  // namespace detail

/// Parses "x" or "a/b".
inline double parse_number(const std::string& text, const std::string& key = "value") {
  const std::string s = detail::trim(text);
  const auto slash = s.find('/');
  if (slash == std::string::npos) return detail::parse_plain(s, key);
  const double den = detail::parse_plain(detail::trim(s.substr(slash + 1)), key);
  if (den == 0.0) throw Error(ErrorKind::Config, key + ": zero denominator");
  return detail::parse_plain(detail::trim(s.substr(0, slash)), key) / den;
}

inline std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(s);
  while (std::getline(in, item, ',')) {
    item = detail::trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

inline StudyKind parse_kind(const std::string& s) {
  const std::string u = detail::lower(s);
  if (u == "corrector") return StudyKind::Corrector;
  if (u == "heat_obstacle" || u == "heat") return StudyKind::HeatObstacle;
  if (u == "eigen") return StudyKind::Eigen;
  if (u == "pme") return StudyKind::Pme;
  throw Error(ErrorKind::Config, "unknown study kind '" + s + "'");
}

/// Defaults that depend on the kind; applied before the file's keys.
inline StudyConfig default_config(StudyKind kind) {
  StudyConfig c;
  c.kind = kind;
  switch (kind) {
    case StudyKind::Corrector: break;
    case StudyKind::HeatObstacle:
      c.h = 1.0 / 96;
      break;
    case StudyKind::Eigen:
      c.h_factor = 0.25;
      c.h_power = 2.0;
      c.tol = 1e-6;
      break;
    case StudyKind::Pme:
      c.h_factor = 0.25;
      c.h_power = 2.0;
      c.snapshot_every = 20;
      break;
  }
  return c;
}

inline void validate(const StudyConfig& c) {
  if (c.n < 1 || c.n > 4) throw Error(ErrorKind::InvalidDimension, "n must lie in 1..4");
  check_eps_list(c.eps_list);
  for (double e : c.eps_list) {
    if (!(e > 0.0)) throw Error(ErrorKind::Config, "eps must be positive");
  }
  if (!(c.alpha > 0.0) || !(c.c0 > 0.0)) throw Error(ErrorKind::Config, "alpha and c0 must be positive");
  if (!(c.tol > 0.0)) throw Error(ErrorKind::Config, "tol must be positive");
  if (!(c.T > 0.0)) throw Error(ErrorKind::Config, "T must be positive");
  if (c.snapshot_every < 1) throw Error(ErrorKind::Config, "snapshot_every must be at least 1");
  if (c.solver != "projected" && c.solver != "penalized") throw Error(ErrorKind::Config, "solver must be projected or penalized");
  if (c.initial != "obstacle" && c.initial != "zero") throw Error(ErrorKind::Config, "initial must be obstacle or zero");
  if (!(c.delta > 0.0)) throw Error(ErrorKind::Config, "delta must be positive");
  if (!(c.p > 0.0 && c.p < 1.0)) throw Error(ErrorKind::Config, "p must lie in (0, 1)");
  if (!(c.m > 1.0)) throw Error(ErrorKind::Config, "m must exceed 1");
  for (const auto& f : c.formats) {
    if (f != "csv" && f != "json" && f != "plot") throw Error(ErrorKind::Config, "unknown format '" + f + "'");
  }
}

inline StudyConfig parse_config(const std::string& text) {
  std::map<std::string, std::string> kv;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw Error(ErrorKind::Config, "line " + std::to_string(lineno) + ": expected key = value");
    const std::string key = detail::lower(detail::trim(line.substr(0, eq)));
    const std::string value = detail::trim(line.substr(eq + 1));
    if (key.empty()) throw Error(ErrorKind::Config, "line " + std::to_string(lineno) + ": empty key");
    if (!kv.emplace(key, value).second) throw Error(ErrorKind::Config, "duplicate key '" + key + "'");
  }
  if (!kv.count("kind")) throw Error(ErrorKind::Config, "missing key 'kind'");
  StudyConfig c = default_config(parse_kind(kv["kind"]));
  for (const auto& [key, value] : kv) {
    const auto num = [&] { return parse_number(value, key); };
    const auto integer = [&] {
      const double v = num();
      if (v != std::floor(v)) throw Error(ErrorKind::Config, key + " must be an integer");
      return static_cast<long>(v);
    };
    const auto boolean = [&] {
      const std::string v = detail::lower(value);
      if (v == "true" || v == "1" || v == "yes") return true;
      if (v == "false" || v == "0" || v == "no") return false;
      throw Error(ErrorKind::Config, key + " must be true or false");
    };
    if (key == "kind") continue;
    else if (key == "n") c.n = static_cast<int>(integer());
    else if (key == "alpha") c.alpha = num();
    else if (key == "c0" || key == "r0") c.c0 = num();
    else if (key == "eps") {
      c.eps_list.clear();
      for (const auto& s : split_list(value)) c.eps_list.push_back(parse_number(s, key));
    }
    else if (key == "h") c.h = num();
    else if (key == "h_factor") c.h_factor = num();
    else if (key == "h_power") c.h_power = num();
    else if (key == "cells_per_radius") c.cells_per_radius = num();
    else if (key == "h_multiple") c.h_multiple = static_cast<int>(integer());
    else if (key == "k") {
      if (detail::lower(value) == "auto") c.k.reset();
      else c.k = num();
    }
    else if (key == "tol") c.tol = num();
    else if (key == "t" || key == "final_time") c.T = num();
    else if (key == "dt") c.dt = num();
    else if (key == "cfl_safety") c.cfl_safety = num();
    else if (key == "snapshot_every") c.snapshot_every = static_cast<int>(integer());
    else if (key == "solver") c.solver = detail::lower(value);
    else if (key == "delta") c.delta = num();
    else if (key == "amplitude") c.amplitude = num();
    else if (key == "initial") c.initial = detail::lower(value);
    else if (key == "p") c.p = num();
    else if (key == "m") c.m = num();
    else if (key == "threads") c.threads = static_cast<unsigned>(std::max(0L, integer()));
    else if (key == "record_wall_time") c.record_wall_time = boolean();
    else if (key == "seed") c.seed = static_cast<std::uint64_t>(std::max(0L, integer()));
    else if (key == "output") c.output = value;
    else if (key == "formats") c.formats = split_list(detail::lower(value));
    else throw Error(ErrorKind::Config, "unknown key '" + key + "'");
  }
  validate(c);
  return c;
}

inline StudyConfig load_config(const std::filesystem::path& path) {
  std::string text;
  try {
    text = read_file(path);
  } catch (const Error& e) {
    throw Error(ErrorKind::Config, "cannot read config " + path.string());
  }
  return parse_config(text);
}

/// Canonical text of every field that affects results (output location,
/// formats and thread count excluded).
inline std::string canonical_text(const StudyConfig& c) {
  std::ostringstream s;
  s << "kind=" << to_string(c.kind) << "\nn=" << c.n << "\nalpha=" << format_number(c.alpha)
    << "\nc0=" << format_number(c.c0) << "\neps=";
  for (std::size_t i = 0; i < c.eps_list.size(); ++i) s << (i ? "," : "") << format_number(c.eps_list[i]);
  s << "\nh=" << format_number(c.h) << "\nh_factor=" << format_number(c.h_factor)
    << "\nh_power=" << format_number(c.h_power) << "\ncells_per_radius=" << format_number(c.cells_per_radius)
    << "\nh_multiple=" << c.h_multiple << "\nk=" << (c.k ? format_number(*c.k) : "auto")
    << "\ntol=" << format_number(c.tol) << "\nT=" << format_number(c.T) << "\ndt=" << format_number(c.dt)
    << "\ncfl_safety=" << format_number(c.cfl_safety) << "\nsnapshot_every=" << c.snapshot_every
    << "\nsolver=" << c.solver << "\ndelta=" << format_number(c.delta) << "\namplitude=" << format_number(c.amplitude)
    << "\ninitial=" << c.initial << "\np=" << format_number(c.p) << "\nm=" << format_number(c.m)
    << "\nrecord_wall_time=" << c.record_wall_time << "\nseed=" << c.seed << "\n";
  return s.str();
}

inline std::string config_hash(const StudyConfig& c) { return fnv1a_hex(canonical_text(c)); }

}  // namespace hlab
