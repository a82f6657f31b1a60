#pragma once

// Grid descriptor (JSON) and mask export: one byte per node, row-major with
// the last axis fastest, 0 = fluid, 1 = hole, 2 = outer boundary.

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"

#include "hlab/grid.hpp"
#include "hlab/report.hpp"

namespace hlab {

inline nlohmann::json grid_descriptor(const PerforatedGrid& g) {
  nlohmann::json j;
  j["dimension"] = g.dim();
  nlohmann::json box = nlohmann::json::array();
  for (int a = 0; a < g.dim(); ++a) box.push_back({g.box().lo[a], g.box().hi[a]});
  j["box"] = box;
  j["eps"] = g.eps();
  j["hole_radius"] = g.hole_radius();
  j["h"] = g.h();
  std::vector<int> extents;
  for (int a = 0; a < g.dim(); ++a) extents.push_back(g.lattice().extent(a));
  j["extents"] = extents;
  j["flags"] = {{"periodic_cell", g.periodic()},
                {"perforated", g.perforated()},
                {"unresolved_hole", g.unresolved_hole()}};
  j["counts"] = {{"fluid", g.count(NodeTag::Fluid)},
                 {"hole", g.count(NodeTag::Hole)},
                 {"outer_boundary", g.count(NodeTag::OuterBoundary)}};
  return j;
}

/// Rebuilds a grid from its descriptor.
inline GridPtr grid_from_descriptor(const nlohmann::json& j) {
  try {
    const int n = j.at("dimension").get<int>();
    const double eps = j.at("eps").get<double>();
    const double a = j.at("hole_radius").get<double>();
    const double h = j.at("h").get<double>();
    const auto& flags = j.at("flags");
    if (flags.at("periodic_cell").get<bool>()) return build_periodic_cell(n, eps, a, h);
    Box box;
    box.n = n;
    for (int ax = 0; ax < n; ++ax) {
      box.lo[ax] = j.at("box").at(ax).at(0).get<double>();
      box.hi[ax] = j.at("box").at(ax).at(1).get<double>();
    }
    if (!flags.at("perforated").get<bool>()) return build_box_grid(n, box, h, eps);
    return build_perforated_grid(n, box, eps, a, h);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::Config, std::string("malformed grid descriptor: ") + e.what());
  }
}

inline std::string mask_bytes(const PerforatedGrid& g) {
  std::string out(g.size(), '\0');
  for (std::size_t i = 0; i < g.size(); ++i) out[i] = static_cast<char>(g.tag(i));
  return out;
}

/// Writes `<stem>.json` and `<stem>.mask` atomically.
inline void export_grid(const PerforatedGrid& g, const std::filesystem::path& stem) {
  write_file_atomic(stem.string() + ".json", grid_descriptor(g).dump(2) + "\n");
  write_file_atomic(stem.string() + ".mask", mask_bytes(g));
}

inline std::vector<NodeTag> read_mask(const std::filesystem::path& path, std::size_t expected) {
  const std::string bytes = read_file(path);
  if (bytes.size() != expected) throw Error(ErrorKind::IO, "mask size mismatch in " + path.string());
  std::vector<NodeTag> out(bytes.size());
  for (std::size_t i = 0; i < bytes.size(); ++i) {
    const auto b = static_cast<std::uint8_t>(bytes[i]);
    if (b > 2) throw Error(ErrorKind::IO, "invalid tag byte in " + path.string());
    out[i] = static_cast<NodeTag>(b);
  }
  return out;
}

}  // namespace hlab
