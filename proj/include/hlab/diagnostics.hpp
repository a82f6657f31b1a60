#pragma once

// Diagnostic functionals measured on fields and trajectories.

#include <algorithm>
#include <cmath>
#include <limits>
#include <unordered_map>
#include <vector>

#include "hlab/grid.hpp"

namespace hlab {

/// Multilinear interpolation of a box-grid field at x (clamped to the box).
inline double interpolate(const Field& f, const Point& x) {
  const auto& g = *f.grid;
  const auto& lat = g.lattice();
  const int n = g.dim();
  std::array<int, kMaxDim> i0{};
  std::array<double, kMaxDim> t{};
  for (int a = 0; a < n; ++a) {
    const double s = x[a] / g.h() - static_cast<double>(g.node_coord(a, 0));
    const double c = std::clamp(s, 0.0, static_cast<double>(lat.extent(a) - 1));
    int i = static_cast<int>(std::floor(c));
    if (i >= lat.extent(a) - 1) i = std::max(0, lat.extent(a) - 2);
    i0[a] = i;
    t[a] = lat.extent(a) > 1 ? c - i : 0.0;
  }
  double v = 0.0;
  for (int corner = 0; corner < (1 << n); ++corner) {
    MultiIndex mi{};
    double w = 1.0;
    for (int a = 0; a < n; ++a) {
      const int bit = (corner >> a) & 1;
      mi[a] = std::min(i0[a] + bit, lat.extent(a) - 1);
      w *= bit ? t[a] : 1.0 - t[a];
    }
    if (w != 0.0) v += w * f[lat.flatten(mi)];
  }
  return v;
}

/// Samples `src` onto the nodes of `dst` (direct copy when the lattices coincide).
inline Field resample(const Field& src, const GridPtr& dst) {
  const auto& s = *src.grid;
  bool same = s.dim() == dst->dim() && std::abs(s.h() - dst->h()) <= 1e-14 * s.h() && s.size() == dst->size();
  for (int a = 0; same && a < s.dim(); ++a) {
    same = s.node_coord(a, 0) == dst->node_coord(a, 0) && s.lattice().extent(a) == dst->lattice().extent(a);
  }
  if (same) return Field(dst, src.values);
  Field out(dst);
  dst->lattice().for_each_node([&](std::size_t i, const MultiIndex& mi) { out[i] = interpolate(src, dst->position(mi)); });
  return out;
}

struct LayerError {
  double error = 0.0;
  double skew = 0.0;  // largest time mismatch of the matched snapshots
};

/// max over snapshots and over nodes farther than layer_radius from every
/// lattice point of |u_eps - u_limit|, the limit interpolated onto the
/// perforated grid and matched to the nearest snapshot in time.
inline LayerError error_outside_layer(const TimeField& u_eps, const TimeField& u_limit, double layer_radius) {
  if (u_eps.snapshots.empty() || u_limit.snapshots.empty()) throw Error(ErrorKind::Resample, "empty trajectory");
  const auto& g = u_eps.snapshots.front().grid;
  if (layer_radius >= 0.5 * g->eps()) throw Error(ErrorKind::EmptySet, "layer radius swallows every cell");
  const double T1 = u_eps.time(u_eps.size() - 1);
  const double T2 = u_limit.time(u_limit.size() - 1);
  if (std::abs(T1 - T2) > 1e-9 * std::max(1.0, std::abs(T1))) {
    throw Error(ErrorKind::Resample, "trajectories end at different times");
  }
  std::vector<std::size_t> nodes;
  g->lattice().for_each_node([&](std::size_t i, const MultiIndex& mi) {
    if (g->tag(i) != NodeTag::OuterBoundary && g->distance_to_lattice(mi) > layer_radius) nodes.push_back(i);
  });
  if (nodes.empty()) throw Error(ErrorKind::EmptySet, "no nodes outside the layer");
  LayerError out;
  for (std::size_t k = 0; k < u_eps.size(); ++k) {
    const double t = u_eps.time(k);
    const double pos = u_limit.dt > 0.0 ? t / u_limit.dt : 0.0;
    const auto j = static_cast<std::size_t>(std::clamp(std::round(pos), 0.0, static_cast<double>(u_limit.size() - 1)));
    out.skew = std::max(out.skew, std::abs(u_limit.time(j) - t));
    const Field lim = resample(u_limit.snapshots[j], g);
    const Field& ue = u_eps.snapshots[k];
    for (std::size_t i : nodes) out.error = std::max(out.error, std::abs(ue[i] - lim[i]));
  }
  return out;
}

/// max over nodes and directions +-e_a of |f(x + eps e) - f(x)| / eps, with f
/// extended by zero outside the box. interior_only skips pairs leaving the box.
inline double difference_quotient_norm(const Field& f, double eps, bool interior_only = false) {
  const auto& g = *f.grid;
  long K = 0;
  if (!detail::integer_ratio(eps, g.h(), K) || K < 1) throw Error(ErrorKind::Alignment, "eps is not a multiple of h");
  const auto& lat = g.lattice();
  double best = 0.0;
  lat.for_each_node([&](std::size_t i, const MultiIndex& mi) {
    for (int a = 0; a < g.dim(); ++a) {
      for (int dir : {-1, 1}) {
        long j = mi[a] + dir * K;
        double other = 0.0;
        if (j < 0 || j >= lat.extent(a)) {
          if (lat.periodic()) {
            j = ((j % lat.extent(a)) + lat.extent(a)) % lat.extent(a);
          } else if (interior_only) {
            continue;
          } else {
            best = std::max(best, std::abs(f[i]) / eps);
            continue;
          }
        }
        MultiIndex nb = mi;
        nb[a] = static_cast<int>(j);
        other = f[lat.flatten(nb)];
        best = std::max(best, std::abs(other - f[i]) / eps);
      }
    }
  });
  return best;
}

inline double difference_quotient_norm(const TimeField& u, double eps, bool interior_only = false) {
  double best = 0.0;
  for (const auto& s : u.snapshots) best = std::max(best, difference_quotient_norm(s, eps, interior_only));
  return best;
}

/// max over hole cells of (max - min) of f over nodes whose distance to the
/// cell's lattice point lies in [r_in, r_out].
inline double layer_oscillation(const Field& f, double r_in, double r_out) {
  const auto& g = *f.grid;
  struct Range {
    double lo = INFINITY, hi = -INFINITY;
  };
  std::unordered_map<long long, Range> cells;
  const double h = g.h();
  g.lattice().for_each_node([&](std::size_t i, const MultiIndex& mi) {
    if (g.tag(i) == NodeTag::OuterBoundary) return;
    MultiIndex c{}, o{};
    if (!g.nearest_lattice_point(mi, c, o)) return;
    double s = 0.0;
    for (int a = 0; a < g.dim(); ++a) s += static_cast<double>(o[a]) * o[a];
    const double d = std::sqrt(s) * h;
    if (d < r_in - 1e-12 * h || d > r_out + 1e-12 * h) return;
    long long key = 0;
    for (int a = 0; a < g.dim(); ++a) key = key * 100003LL + c[a];
    auto& r = cells[key];
    r.lo = std::min(r.lo, f[i]);
    r.hi = std::max(r.hi, f[i]);
  });
  if (cells.empty()) throw Error(ErrorKind::EmptySet, "oscillation band contains no nodes");
  double osc = 0.0;
  for (const auto& [k, r] : cells) osc = std::max(osc, r.hi - r.lo);
  return osc;
}

/// max over consecutive snapshots of |u^{k+1} - u^k| / dt.
inline double time_derivative_norm(const TimeField& u) {
  if (u.size() < 2) throw Error(ErrorKind::Config, "time derivative needs two snapshots");
  double best = 0.0;
  for (std::size_t k = 0; k + 1 < u.size(); ++k) {
    const auto& a = u.snapshots[k].values;
    const auto& b = u.snapshots[k + 1].values;
    for (std::size_t i = 0; i < a.size(); ++i) best = std::max(best, std::abs(b[i] - a[i]));
  }
  return best / u.dt;
}

/// max of the one-step difference |f(x + h e) - f(x)| / h over pairs with an
/// endpoint within `reach` of a hole center.
inline double hole_gradient_norm(const Field& f, double reach) {
  const auto& g = *f.grid;
  const auto& lat = g.lattice();
  double best = 0.0;
  lat.for_each_node([&](std::size_t i, const MultiIndex& mi) {
    if (g.distance_to_hole_center(mi) > reach) return;
    for (int a = 0; a < g.dim(); ++a) {
      for (int dir : {-1, 1}) {
        std::size_t j = 0;
        if (lat.neighbor(mi, a, dir, j)) best = std::max(best, std::abs(f[j] - f[i]) / g.h());
      }
    }
  });
  return best;
}

inline double hole_gradient_norm(const TimeField& u, double reach) {
  double best = 0.0;
  for (const auto& s : u.snapshots) best = std::max(best, hole_gradient_norm(s, reach));
  return best;
}

}  // namespace hlab
