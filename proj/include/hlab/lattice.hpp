#pragma once

// Index arithmetic for uniform node lattices in 1 to 4 dimensions.
//
// Nodes are stored row-major: the last axis varies fastest. A lattice is
// either a closed box (boundary nodes included, no wrap) or a periodic
// torus (node N-1 neighbours node 0 along every axis).

#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numbers>

#include "hlab/error.hpp"

namespace hlab {

inline constexpr int kMaxDim = 4;

using Point = std::array<double, kMaxDim>;
using MultiIndex = std::array<int, kMaxDim>;

/// Surface measure of the unit sphere S^{n-1} in R^n.
inline double unit_sphere_area(int n) {
  return 2.0 * std::pow(std::numbers::pi, 0.5 * n) / std::tgamma(0.5 * n);
}

/// Volume of the unit ball in R^n.
inline double unit_ball_volume(int n) { return unit_sphere_area(n) / n; }

/// One line of nodes along the last axis, as seen by stencil kernels.
struct LineInfo {
  std::size_t base = 0;   // flat index of the first node on the line
  MultiIndex index{};     // multi-index of that node (last entry 0)
  int parity = 0;         // parity of the sum of the outer indices
  bool on_boundary = false;  // some outer index sits on a box face
  // Offsets to the -/+ neighbours along each outer axis, valid when the
  // line is not on the boundary (or the lattice is periodic).
  std::array<std::ptrdiff_t, 2 * (kMaxDim - 1)> offsets{};
};

class NodeLattice {
 public:
  NodeLattice() = default;

  NodeLattice(int n, const MultiIndex& dims, bool periodic) : n_(n), dims_(dims), periodic_(periodic) {
    if (n < 1 || n > kMaxDim) {
      throw Error(ErrorKind::InvalidDimension, "lattice dimension must be in [1, 4]");
    }
    size_ = 1;
    for (int a = n_ - 1; a >= 0; --a) {
      if (dims_[a] < 1) throw Error(ErrorKind::Config, "lattice extent must be positive");
      strides_[a] = size_;
      size_ *= static_cast<std::size_t>(dims_[a]);
    }
    for (int a = n_; a < kMaxDim; ++a) {
      dims_[a] = 1;
      strides_[a] = 0;
    }
  }

  int dim() const noexcept { return n_; }
  const MultiIndex& dims() const noexcept { return dims_; }
  int extent(int axis) const noexcept { return dims_[axis]; }
  std::size_t stride(int axis) const noexcept { return strides_[axis]; }
  std::size_t size() const noexcept { return size_; }
  bool periodic() const noexcept { return periodic_; }

  MultiIndex unflatten(std::size_t idx) const noexcept {
    MultiIndex mi{};
    for (int a = 0; a < n_; ++a) {
      mi[a] = static_cast<int>(idx / strides_[a]);
      idx -= static_cast<std::size_t>(mi[a]) * strides_[a];
    }
    return mi;
  }

  std::size_t flatten(const MultiIndex& mi) const noexcept {
    std::size_t idx = 0;
    for (int a = 0; a < n_; ++a) idx += static_cast<std::size_t>(mi[a]) * strides_[a];
    return idx;
  }

  bool on_box_boundary(const MultiIndex& mi) const noexcept {
    if (periodic_) return false;
    for (int a = 0; a < n_; ++a) {
      if (mi[a] == 0 || mi[a] == dims_[a] - 1) return true;
    }
    return false;
  }

  /// Neighbour of `mi` along `axis` in direction `dir` (+1 or -1).
  /// Returns false when the neighbour falls outside a non-periodic lattice.
  bool neighbor(const MultiIndex& mi, int axis, int dir, std::size_t& out) const noexcept {
    int j = mi[axis] + dir;
    if (j < 0 || j >= dims_[axis]) {
      if (!periodic_) return false;
      j = (j + dims_[axis]) % dims_[axis];
    }
    MultiIndex nb = mi;
    nb[axis] = j;
    out = flatten(nb);
    return true;
  }

  /// Visits every line along the last axis.
  template <class Fn>
  void for_each_line(Fn&& fn) const {
    const int outer = n_ - 1;
    const std::size_t lines = size_ / static_cast<std::size_t>(dims_[n_ - 1]);
    LineInfo info;
    MultiIndex mi{};
    for (std::size_t line = 0; line < lines; ++line) {
      info.index = mi;
      info.base = flatten(mi);
      int parity = 0;
      bool boundary = false;
      for (int a = 0; a < outer; ++a) {
        parity += mi[a];
        const auto s = static_cast<std::ptrdiff_t>(strides_[a]);
        const auto span = static_cast<std::ptrdiff_t>(dims_[a] - 1) * s;
        if (mi[a] == 0) {
          boundary = boundary || !periodic_;
          info.offsets[2 * a] = span;
        } else {
          info.offsets[2 * a] = -s;
        }
        if (mi[a] == dims_[a] - 1) {
          boundary = boundary || !periodic_;
          info.offsets[2 * a + 1] = -span;
        } else {
          info.offsets[2 * a + 1] = s;
        }
      }
      info.parity = parity & 1;
      info.on_boundary = boundary;
      fn(static_cast<const LineInfo&>(info));
      for (int a = outer - 1; a >= 0; --a) {
        if (++mi[a] < dims_[a]) break;
        mi[a] = 0;
      }
    }
  }

  /// Visits every node with its multi-index (not for hot loops).
  template <class Fn>
  void for_each_node(Fn&& fn) const {
    MultiIndex mi{};
    for (std::size_t idx = 0; idx < size_; ++idx) {
      fn(idx, static_cast<const MultiIndex&>(mi));
      for (int a = n_ - 1; a >= 0; --a) {
        if (++mi[a] < dims_[a]) break;
        mi[a] = 0;
      }
    }
  }

 private:
  int n_ = 1;
  MultiIndex dims_{1, 1, 1, 1};
  std::array<std::size_t, kMaxDim> strides_{};
  std::size_t size_ = 1;
  bool periodic_ = false;
};

}  // namespace hlab
