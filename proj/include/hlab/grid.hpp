#pragma once

// Perforated grids: a uniform node lattice over a box (or one periodic cell)
// with an eps-periodic array of closed balls removed.
//
// Hole membership is decided per node: a node is HOLE when its distance to
// the nearest interior lattice point is at most the hole radius. All lattice
// arithmetic is done in integer units of h, so classification is exact.

#include <cmath>
#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "hlab/error.hpp"
#include "hlab/lattice.hpp"

namespace hlab {

enum class NodeTag : std::uint8_t { Fluid = 0, Hole = 1, OuterBoundary = 2 };

enum class Topology { Box, PeriodicCell };

struct Box {
  int n = 1;
  Point lo{};
  Point hi{};

  static Box unit(int n) {
    Box b;
    b.n = n;
    for (int a = 0; a < n; ++a) b.hi[a] = 1.0;
    return b;
  }

  static Box cube(int n, double lo, double hi) {
    Box b;
    b.n = n;
    for (int a = 0; a < n; ++a) {
      b.lo[a] = lo;
      b.hi[a] = hi;
    }
    return b;
  }
};

namespace detail {

// Rounds x/unit to an integer, or returns false if it is not (close to) one.
inline bool integer_ratio(double x, double unit, long& out) {
  const double r = x / unit;
  const double k = std::round(r);
  if (std::abs(r - k) > 1e-9 * std::max(1.0, std::abs(r))) return false;
  out = static_cast<long>(k);
  return true;
}

inline long floor_div(long a, long b) {
  long q = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
  return q;
}

}  // namespace detail

class PerforatedGrid {
 public:
  int dim() const noexcept { return lattice_.dim(); }
  const Box& box() const noexcept { return box_; }
  double eps() const noexcept { return eps_; }
  double hole_radius() const noexcept { return a_; }
  double h() const noexcept { return h_; }
  Topology topology() const noexcept { return topology_; }
  bool periodic() const noexcept { return topology_ == Topology::PeriodicCell; }
  bool perforated() const noexcept { return perforated_; }
  bool unresolved_hole() const noexcept { return unresolved_; }
  const NodeLattice& lattice() const noexcept { return lattice_; }
  std::size_t size() const noexcept { return lattice_.size(); }
  const std::vector<NodeTag>& mask() const noexcept { return mask_; }
  NodeTag tag(std::size_t idx) const noexcept { return mask_[idx]; }
  bool is_fluid(std::size_t idx) const noexcept { return mask_[idx] == NodeTag::Fluid; }

  /// Lattice period in units of h (0 for unperforated grids without a period).
  long cell_nodes() const noexcept { return k_; }

  /// Number of hole centers (interior lattice points, or 1 for a cell).
  std::size_t hole_count() const noexcept { return hole_count_; }

  std::size_t count(NodeTag t) const noexcept {
    std::size_t c = 0;
    for (auto m : mask_) c += (m == t);
    return c;
  }

  /// Integer node coordinate along `axis` measured from the origin, in units of h.
  long node_coord(int axis, int i) const noexcept { return origin_[axis] + i; }

  Point position(const MultiIndex& mi) const noexcept {
    Point x{};
    for (int a = 0; a < dim(); ++a) x[a] = static_cast<double>(node_coord(a, mi[a])) * h_;
    return x;
  }

  Point position(std::size_t idx) const noexcept { return position(lattice_.unflatten(idx)); }

  /// Nearest lattice point of a node. `center` receives the lattice point in
  /// units of eps, `offset` the node offset from it in units of h. Returns
  /// true when that lattice point carries a hole. Requires a period.
  bool nearest_lattice_point(const MultiIndex& mi, MultiIndex& center, MultiIndex& offset) const noexcept {
    center = {};
    offset = {};
    if (k_ == 0) return false;
    bool interior = true;
    for (int a = 0; a < dim(); ++a) {
      const long g = node_coord(a, mi[a]);
      const long q = detail::floor_div(2 * g + k_, 2 * k_);
      center[a] = static_cast<int>(q);
      offset[a] = static_cast<int>(g - q * k_);
      if (topology_ == Topology::Box) {
        const long c = q * k_;
        if (c <= box_lo_[a] || c >= box_hi_[a]) interior = false;
      }
    }
    return perforated_ && interior;
  }

  /// Euclidean distance from a node to the nearest lattice point.
  double distance_to_lattice(const MultiIndex& mi) const noexcept {
    MultiIndex c{}, o{};
    nearest_lattice_point(mi, c, o);
    long s = 0;
    for (int a = 0; a < dim(); ++a) s += static_cast<long>(o[a]) * o[a];
    return std::sqrt(static_cast<double>(s)) * h_;
  }

  double distance_to_lattice(std::size_t idx) const noexcept { return distance_to_lattice(lattice_.unflatten(idx)); }

  /// Distance from a node to the nearest hole center; infinity if there is none.
  double distance_to_hole_center(const MultiIndex& mi) const noexcept {
    MultiIndex c{}, o{};
    if (!nearest_lattice_point(mi, c, o)) return INFINITY;
    long s = 0;
    for (int a = 0; a < dim(); ++a) s += static_cast<long>(o[a]) * o[a];
    return std::sqrt(static_cast<double>(s)) * h_;
  }

  /// Volume element h^n.
  double cell_volume() const noexcept { return std::pow(h_, dim()); }

 private:
  friend std::shared_ptr<const PerforatedGrid> build_perforated_grid(int, const Box&, double, double, double);
  friend std::shared_ptr<const PerforatedGrid> build_box_grid(int, const Box&, double, double);
  friend std::shared_ptr<const PerforatedGrid> build_periodic_cell(int, double, double, double);

  void classify();

  Box box_;
  double eps_ = 0.0;
  double a_ = 0.0;
  double h_ = 1.0;
  long k_ = 0;
  Topology topology_ = Topology::Box;
  bool perforated_ = false;
  bool unresolved_ = false;
  NodeLattice lattice_;
  std::array<long, kMaxDim> origin_{};
  std::array<long, kMaxDim> box_lo_{};
  std::array<long, kMaxDim> box_hi_{};
  std::vector<NodeTag> mask_;
  std::size_t hole_count_ = 0;
};

using GridPtr = std::shared_ptr<const PerforatedGrid>;

inline void PerforatedGrid::classify() {
  mask_.assign(lattice_.size(), NodeTag::Fluid);
  const double r2 = (a_ / h_) * (a_ / h_) * (1.0 + 1e-12);
  lattice_.for_each_node([&](std::size_t idx, const MultiIndex& mi) {
    if (lattice_.on_box_boundary(mi)) {
      mask_[idx] = NodeTag::OuterBoundary;
      return;
    }
    if (!perforated_) return;
    MultiIndex c{}, o{};
    if (!nearest_lattice_point(mi, c, o)) return;
    double s = 0.0;
    for (int a = 0; a < dim(); ++a) s += static_cast<double>(o[a]) * o[a];
    if (s <= r2) mask_[idx] = NodeTag::Hole;
  });
}

namespace detail {

inline void check_common(int n, double eps, double a, double h) {
  if (n < 1 || n > kMaxDim) throw Error(ErrorKind::InvalidDimension, "grid dimension must be in [1, 4]");
  if (!(h > 0.0)) throw Error(ErrorKind::Config, "grid spacing must be positive");
  if (!(eps > 0.0)) throw Error(ErrorKind::Config, "lattice period must be positive");
  if (!(a > 0.0)) throw Error(ErrorKind::Config, "hole radius must be positive");
  if (!(2.0 * a < eps)) throw Error(ErrorKind::Geometry, "holes touch: 2*hole_radius >= eps");
}

}  // namespace detail

/// Perforated box grid. Box faces must lie on the lattice and h must divide eps.
inline GridPtr build_perforated_grid(int n, const Box& box, double eps, double hole_radius, double h) {
  detail::check_common(n, eps, hole_radius, h);
  auto g = std::shared_ptr<PerforatedGrid>(new PerforatedGrid());
  long k = 0;
  if (!detail::integer_ratio(eps, h, k) || k < 1) throw Error(ErrorKind::Alignment, "h does not divide eps");
  MultiIndex dims{};
  long holes = 1;
  for (int a = 0; a < n; ++a) {
    if (!(box.hi[a] > box.lo[a])) throw Error(ErrorKind::Config, "box extents must be positive");
    long lo = 0, hi = 0;
    if (!detail::integer_ratio(box.lo[a], eps, lo) || !detail::integer_ratio(box.hi[a], eps, hi)) {
      throw Error(ErrorKind::Alignment, "box faces must be multiples of eps");
    }
    g->box_lo_[a] = lo * k;
    g->box_hi_[a] = hi * k;
    g->origin_[a] = lo * k;
    dims[a] = static_cast<int>((hi - lo) * k + 1);
    holes *= std::max(0L, hi - lo - 1);
  }
  g->box_ = box;
  g->box_.n = n;
  g->eps_ = eps;
  g->a_ = hole_radius;
  g->h_ = h;
  g->k_ = k;
  g->topology_ = Topology::Box;
  g->perforated_ = true;
  g->unresolved_ = hole_radius < h;
  g->lattice_ = NodeLattice(n, dims, false);
  g->hole_count_ = static_cast<std::size_t>(holes);
  g->classify();
  return g;
}

/// Unperforated box grid. A positive eps is kept for difference quotients only.
inline GridPtr build_box_grid(int n, const Box& box, double h, double eps = 0.0) {
  if (n < 1 || n > kMaxDim) throw Error(ErrorKind::InvalidDimension, "grid dimension must be in [1, 4]");
  if (!(h > 0.0)) throw Error(ErrorKind::Config, "grid spacing must be positive");
  auto g = std::shared_ptr<PerforatedGrid>(new PerforatedGrid());
  long k = 0;
  if (eps > 0.0) {
    if (!detail::integer_ratio(eps, h, k) || k < 1) throw Error(ErrorKind::Alignment, "h does not divide eps");
  }
  MultiIndex dims{};
  for (int a = 0; a < n; ++a) {
    if (!(box.hi[a] > box.lo[a])) throw Error(ErrorKind::Config, "box extents must be positive");
    long lo = 0, hi = 0;
    if (!detail::integer_ratio(box.lo[a], h, lo) || !detail::integer_ratio(box.hi[a], h, hi)) {
      throw Error(ErrorKind::Alignment, "box faces must be multiples of h");
    }
    g->box_lo_[a] = lo;
    g->box_hi_[a] = hi;
    g->origin_[a] = lo;
    dims[a] = static_cast<int>(hi - lo + 1);
  }
  g->box_ = box;
  g->box_.n = n;
  g->eps_ = eps;
  g->h_ = h;
  g->k_ = k;
  g->topology_ = Topology::Box;
  g->lattice_ = NodeLattice(n, dims, false);
  g->classify();
  return g;
}

/// One periodic cell [-eps/2, eps/2)^n with the hole centered at the origin.
/// Node i sits at (i - K/2) h with K = eps/h.
inline GridPtr build_periodic_cell(int n, double eps, double hole_radius, double h) {
  detail::check_common(n, eps, hole_radius, h);
  auto g = std::shared_ptr<PerforatedGrid>(new PerforatedGrid());
  long k = 0;
  if (!detail::integer_ratio(eps, h, k) || k < 2) throw Error(ErrorKind::Alignment, "h does not divide eps");
  MultiIndex dims{};
  for (int a = 0; a < n; ++a) {
    dims[a] = static_cast<int>(k);
    g->origin_[a] = -(k / 2);
    g->box_.lo[a] = -0.5 * eps;
    g->box_.hi[a] = 0.5 * eps;
  }
  g->box_.n = n;
  g->eps_ = eps;
  g->a_ = hole_radius;
  g->h_ = h;
  g->k_ = k;
  g->topology_ = Topology::PeriodicCell;
  g->perforated_ = true;
  g->unresolved_ = hole_radius < h;
  g->lattice_ = NodeLattice(n, dims, true);
  g->hole_count_ = 1;
  g->classify();
  return g;
}

struct Field {
  GridPtr grid;
  std::vector<double> values;

  Field() = default;
  explicit Field(GridPtr g, double fill = 0.0) : grid(std::move(g)), values(grid->size(), fill) {}
  Field(GridPtr g, std::vector<double> v) : grid(std::move(g)), values(std::move(v)) {
    if (values.size() != grid->size()) throw Error(ErrorKind::Config, "field size does not match grid");
  }

  std::size_t size() const noexcept { return values.size(); }
  double& operator[](std::size_t i) noexcept { return values[i]; }
  double operator[](std::size_t i) const noexcept { return values[i]; }
};

struct TimeField {
  double dt = 0.0;  // spacing between stored snapshots
  std::vector<Field> snapshots;
  double step_dt = 0.0;  // integrator step
  std::size_t steps = 0;

  double time(std::size_t k) const noexcept { return dt * static_cast<double>(k); }
  const Field& back() const { return snapshots.back(); }
  std::size_t size() const noexcept { return snapshots.size(); }
};

using SpaceFn = std::function<double(const Point&)>;
using SpaceTimeFn = std::function<double(const Point&, double)>;

inline Field sample_field(const SpaceFn& f, const GridPtr& grid) {
  Field out(grid);
  grid->lattice().for_each_node([&](std::size_t idx, const MultiIndex& mi) { out[idx] = f(grid->position(mi)); });
  return out;
}

/// phi restricted to the holes, zero elsewhere.
inline Field oscillating_obstacle(const SpaceTimeFn& phi, const GridPtr& grid, double t) {
  Field out(grid);
  grid->lattice().for_each_node([&](std::size_t idx, const MultiIndex& mi) {
    if (grid->tag(idx) == NodeTag::Hole) out[idx] = phi(grid->position(mi), t);
  });
  return out;
}

/// a* = eps^{n/(n-2)} for n >= 3, exp(-1/eps^2) for n = 2.
inline double critical_radius(double eps, int n) {
  if (n < 2) throw Error(ErrorKind::InvalidDimension, "critical radius needs n >= 2");
  if (!(eps > 0.0)) throw Error(ErrorKind::Config, "eps must be positive");
  if (n == 2) return std::exp(-1.0 / (eps * eps));
  return std::pow(eps, static_cast<double>(n) / (n - 2));
}

}  // namespace hlab
