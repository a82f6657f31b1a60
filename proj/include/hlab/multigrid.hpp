#pragma once

// Conjugate gradients for (-Delta_h + sigma) x = b on the active nodes of a
// masked lattice, optionally preconditioned by one geometric multigrid
// V-cycle (red-black Gauss-Seidel smoothing, full weighting, multilinear
// prolongation, rediscretized coarse operators, dense coarsest solve).

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <memory>
#include <vector>

#include "hlab/error.hpp"
#include "hlab/stencil.hpp"

namespace hlab {

struct SolverOptions {
  double tol = 1e-8;     // max-norm residual target
  int max_iter = 1000;
  bool multigrid = true;  // false: unpreconditioned CG
};

struct SolveStats {
  int iterations = 0;
  double residual = 0.0;
};

namespace detail {

inline bool coarsenable(const NodeLattice& lat) {
  for (int a = 0; a < lat.dim(); ++a) {
    const int m = lat.periodic() ? lat.extent(a) : lat.extent(a) - 1;
    if (m % 2 != 0 || m < 4) return false;
  }
  return true;
}

inline StencilLevel coarsen(const StencilLevel& fine) {
  const NodeLattice& fl = fine.lattice;
  const int n = fl.dim();
  const bool periodic = fl.periodic();
  MultiIndex cd{};
  for (int a = 0; a < n; ++a) cd[a] = periodic ? fl.extent(a) / 2 : (fl.extent(a) - 1) / 2 + 1;
  StencilLevel coarse{NodeLattice(n, cd, periodic), 2.0 * fine.h, {}};
  coarse.active.assign(coarse.lattice.size(), 1);
  int stencil = 1;
  for (int a = 0; a < n; ++a) stencil *= 3;
  coarse.lattice.for_each_node([&](std::size_t ci, const MultiIndex& cm) {
    if (coarse.lattice.on_box_boundary(cm)) {
      coarse.active[ci] = 0;
      return;
    }
    for (int s = 0; s < stencil; ++s) {
      MultiIndex fm{};
      int code = s;
      bool inside = true;
      for (int a = 0; a < n; ++a) {
        int f = 2 * cm[a] + (code % 3) - 1;
        code /= 3;
        if (f < 0 || f >= fl.extent(a)) {
          if (!periodic) {
            inside = false;
            break;
          }
          f = (f + fl.extent(a)) % fl.extent(a);
        }
        fm[a] = f;
      }
      if (inside && !fine.active[fl.flatten(fm)]) {
        coarse.active[ci] = 0;
        return;
      }
    }
  });
  return coarse;
}

// Coarse-node neighbourhood walk shared by restriction and prolongation:
// fn(coarse_index, fine_index, weight) for every fine node within one fine
// spacing of the coarse node's fine counterpart.
template <class Fn>
inline void for_each_transfer_pair(const StencilLevel& fine, const StencilLevel& coarse, Fn&& fn) {
  const NodeLattice& fl = fine.lattice;
  const int n = fl.dim();
  const bool periodic = fl.periodic();
  int stencil = 1;
  for (int a = 0; a < n; ++a) stencil *= 3;
  coarse.lattice.for_each_node([&](std::size_t ci, const MultiIndex& cm) {
    if (!coarse.active[ci]) return;
    for (int s = 0; s < stencil; ++s) {
      MultiIndex fm{};
      int code = s;
      double w = 1.0;
      bool inside = true;
      for (int a = 0; a < n; ++a) {
        const int o = (code % 3) - 1;
        code /= 3;
        int f = 2 * cm[a] + o;
        if (f < 0 || f >= fl.extent(a)) {
          if (!periodic) {
            inside = false;
            break;
          }
          f = (f + fl.extent(a)) % fl.extent(a);
        }
        fm[a] = f;
        if (o != 0) w *= 0.5;
      }
      if (!inside) continue;
      const std::size_t fi = fl.flatten(fm);
      if (fine.active[fi]) fn(ci, fi, w);
    }
  });
}

}  // namespace detail

class ScreenedPoissonSolver {
 public:
  /// Coarsening stops once a level has at most this many unknowns.
  static constexpr std::size_t kCoarseTarget = 512;
  static constexpr std::size_t kDenseLimit = 3000;

  ScreenedPoissonSolver(StencilLevel level, double sigma) : sigma_(sigma) {
    levels_.push_back(std::move(level));
    while (levels_.back().active_count() > kCoarseTarget && detail::coarsenable(levels_.back().lattice)) {
      StencilLevel c = detail::coarsen(levels_.back());
      if (c.active_count() == 0) break;
      levels_.push_back(std::move(c));
    }
    factor_coarsest();
  }

  /// Builds the operator on a grid: FLUID nodes are unknowns.
  static ScreenedPoissonSolver on_fluid(const PerforatedGrid& g, double sigma) {
    StencilLevel lv{g.lattice(), g.h(), std::vector<std::uint8_t>(g.size())};
    for (std::size_t i = 0; i < g.size(); ++i) lv.active[i] = g.is_fluid(i) ? 1 : 0;
    return ScreenedPoissonSolver(std::move(lv), sigma);
  }

  const StencilLevel& level(std::size_t l = 0) const { return levels_.at(l); }
  std::size_t level_count() const noexcept { return levels_.size(); }
  double sigma() const noexcept { return sigma_; }

  /// Solves in place. Inactive entries of x hold Dirichlet data on entry and
  /// are left untouched; active entries are the initial guess.
  SolveStats solve(std::vector<double>& x, const std::vector<double>& b, const SolverOptions& opt) const {
    const StencilLevel& lv = levels_.front();
    const std::size_t N = lv.size();
    if (x.size() != N || b.size() != N) throw Error(ErrorKind::Config, "solver vector size mismatch");
    std::vector<double> r(N), z(N), p(N), q(N);
    residual(lv, sigma_, x.data(), b.data(), r.data());
    SolveStats st;
    st.residual = max_abs(r);
    if (st.residual <= opt.tol) return st;
    Scratch scratch = make_scratch();
    auto precondition = [&](const std::vector<double>& rr, std::vector<double>& zz) {
      if (opt.multigrid) {
        std::copy(rr.begin(), rr.end(), scratch.b[0].begin());
        std::fill(scratch.x[0].begin(), scratch.x[0].end(), 0.0);
        vcycle(0, scratch);
        zz = scratch.x[0];
      } else {
        zz = rr;
      }
    };
    precondition(r, z);
    p = z;
    double rz = dot(r, z);
    for (int it = 1; it <= opt.max_iter; ++it) {
      apply_operator(lv, sigma_, p.data(), q.data());
      const double pq = dot(p, q);
      if (!(pq > 0.0)) throw IterationLimitError("conjugate gradients broke down", it, st.residual);
      const double alpha = rz / pq;
      for (std::size_t i = 0; i < N; ++i) {
        if (!lv.active[i]) continue;
        x[i] += alpha * p[i];
        r[i] -= alpha * q[i];
      }
      st.iterations = it;
      st.residual = max_abs(r);
      bool restart = false;
      if (st.residual <= opt.tol) {
        residual(lv, sigma_, x.data(), b.data(), r.data());
        st.residual = max_abs(r);
        if (st.residual <= opt.tol) return st;
        // The recursive residual drifted; restart from the true one.
        restart = true;
      }
      precondition(r, z);
      const double rz_new = dot(r, z);
      const double beta = restart ? 0.0 : rz_new / rz;
      rz = rz_new;
      for (std::size_t i = 0; i < N; ++i) p[i] = z[i] + beta * p[i];
    }
    throw IterationLimitError("linear solve did not converge", opt.max_iter, st.residual);
  }

 private:
  struct Scratch {
    std::vector<std::vector<double>> x, b, r;
  };

  Scratch make_scratch() const {
    Scratch s;
    for (const auto& lv : levels_) {
      s.x.emplace_back(lv.size(), 0.0);
      s.b.emplace_back(lv.size(), 0.0);
      s.r.emplace_back(lv.size(), 0.0);
    }
    return s;
  }

  void smooth(const StencilLevel& lv, std::vector<double>& x, const std::vector<double>& b, bool forward) const {
    for (int sweep = 0; sweep < 2; ++sweep) {
      gauss_seidel_colour(lv, sigma_, x.data(), b.data(), forward ? 0 : 1);
      gauss_seidel_colour(lv, sigma_, x.data(), b.data(), forward ? 1 : 0);
    }
  }

  void vcycle(std::size_t l, Scratch& s) const {
    const StencilLevel& lv = levels_[l];
    if (l + 1 == levels_.size()) {
      solve_coarsest(s.x[l], s.b[l]);
      return;
    }
    smooth(lv, s.x[l], s.b[l], true);
    residual(lv, sigma_, s.x[l].data(), s.b[l].data(), s.r[l].data());
    const StencilLevel& cv = levels_[l + 1];
    auto& bc = s.b[l + 1];
    std::fill(bc.begin(), bc.end(), 0.0);
    const double scale = std::pow(0.5, lv.lattice.dim());
    const auto& rf = s.r[l];
    detail::for_each_transfer_pair(lv, cv, [&](std::size_t ci, std::size_t fi, double w) { bc[ci] += scale * w * rf[fi]; });
    std::fill(s.x[l + 1].begin(), s.x[l + 1].end(), 0.0);
    vcycle(l + 1, s);
    auto& xf = s.x[l];
    const auto& xc = s.x[l + 1];
    detail::for_each_transfer_pair(lv, cv, [&](std::size_t ci, std::size_t fi, double w) { xf[fi] += w * xc[ci]; });
    smooth(lv, s.x[l], s.b[l], false);
  }

  void factor_coarsest() {
    const StencilLevel& lv = levels_.back();
    coarse_index_.assign(lv.size(), -1);
    coarse_nodes_.clear();
    for (std::size_t i = 0; i < lv.size(); ++i) {
      if (lv.active[i]) {
        coarse_index_[i] = static_cast<long>(coarse_nodes_.size());
        coarse_nodes_.push_back(i);
      }
    }
    const auto m = static_cast<Eigen::Index>(coarse_nodes_.size());
    if (m == 0 || coarse_nodes_.size() > kDenseLimit) return;
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(m, m);
    std::vector<double> e(lv.size(), 0.0), col(lv.size(), 0.0);
    for (Eigen::Index j = 0; j < m; ++j) {
      e[coarse_nodes_[j]] = 1.0;
      apply_operator(lv, sigma_, e.data(), col.data());
      e[coarse_nodes_[j]] = 0.0;
      for (Eigen::Index i = 0; i < m; ++i) A(i, j) = col[coarse_nodes_[i]];
    }
    llt_ = std::make_shared<Eigen::LLT<Eigen::MatrixXd>>(A);
    if (llt_->info() != Eigen::Success) throw Error(ErrorKind::Config, "coarse operator is singular");
  }

  void solve_coarsest(std::vector<double>& x, const std::vector<double>& b) const {
    const StencilLevel& lv = levels_.back();
    if (llt_) {
      Eigen::VectorXd rhs(static_cast<Eigen::Index>(coarse_nodes_.size()));
      for (std::size_t k = 0; k < coarse_nodes_.size(); ++k) rhs[static_cast<Eigen::Index>(k)] = b[coarse_nodes_[k]];
      Eigen::VectorXd sol = llt_->solve(rhs);
      for (std::size_t k = 0; k < coarse_nodes_.size(); ++k) x[coarse_nodes_[k]] = sol[static_cast<Eigen::Index>(k)];
      return;
    }
    // Too large to factor: relax hard instead.
    for (int sweep = 0; sweep < 200; ++sweep) {
      gauss_seidel_colour(lv, sigma_, x.data(), b.data(), 0);
      gauss_seidel_colour(lv, sigma_, x.data(), b.data(), 1);
    }
    for (int sweep = 0; sweep < 200; ++sweep) {
      gauss_seidel_colour(lv, sigma_, x.data(), b.data(), 1);
      gauss_seidel_colour(lv, sigma_, x.data(), b.data(), 0);
    }
  }

  double sigma_;
  std::vector<StencilLevel> levels_;
  std::vector<long> coarse_index_;
  std::vector<std::size_t> coarse_nodes_;
  std::shared_ptr<Eigen::LLT<Eigen::MatrixXd>> llt_;
};

}  // namespace hlab
