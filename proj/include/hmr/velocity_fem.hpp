#pragma once

// P1 finite elements on the velocity interval (-1, 1).

#include <array>
#include <cmath>
#include <functional>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

#include "hmr/tridiagonal.hpp"

namespace hmr {

/// Uniform mesh of (-1, 1) with `n_cells` cells and `n_cells + 1` nodes.
class VelocityGrid {
 public:
  VelocityGrid() = default;
  explicit VelocityGrid(int n_cells) : n_cells_(n_cells) {
    if (n_cells < 2) throw std::invalid_argument("VelocityGrid: need at least 2 cells");
  }

  int n_cells() const { return n_cells_; }
  int n_nodes() const { return n_cells_ + 1; }
  double h() const { return 2.0 / n_cells_; }

  /// Node i, computed so that both endpoints are exact.
  double node(int i) const {
    if (i == n_cells_) return 1.0;
    return -1.0 + 2.0 * static_cast<double>(i) / n_cells_;
  }

  Eigen::VectorXd nodes() const {
    Eigen::VectorXd v(n_nodes());
    for (int i = 0; i < n_nodes(); ++i) v[i] = node(i);
    return v;
  }

  bool operator==(const VelocityGrid&) const = default;

 private:
  int n_cells_ = 2;
};

inline VelocityGrid make_grid(int n_cells) { return VelocityGrid(n_cells); }

/// Continuous piecewise-linear function given by its nodal values.
struct NodalFunction {
  VelocityGrid grid;
  Eigen::VectorXd values;

  NodalFunction() = default;
  NodalFunction(VelocityGrid g, Eigen::VectorXd v) : grid(g), values(std::move(v)) {
    if (values.size() != grid.n_nodes())
      throw std::invalid_argument("NodalFunction: value count does not match grid");
    if (!values.allFinite()) throw std::invalid_argument("NodalFunction: non-finite value");
  }

  static NodalFunction constant(const VelocityGrid& g, double c) {
    return {g, Eigen::VectorXd::Constant(g.n_nodes(), c)};
  }
};

/// Tridiagonal FEM matrices on the hat-function basis.
struct FemOperators {
  VelocityGrid grid;
  Tridiagonal mass;          // (phi_i, phi_j)
  Tridiagonal transport;     // (v phi_i, phi_j)
  Tridiagonal stiffness_lb;  // ((1 - v^2) phi_i', phi_j')
};

namespace detail {

// 3-point Gauss-Legendre on [0, 1]; exact up to degree 5.
inline constexpr std::array<double, 3> kGaussPts = {0.11270166537925831, 0.5, 0.88729833462074169};
inline constexpr std::array<double, 3> kGaussWts = {5.0 / 18.0, 8.0 / 18.0, 5.0 / 18.0};

}  // namespace detail

inline FemOperators assemble_operators(const VelocityGrid& grid) {
  const int n = grid.n_nodes();
  const double h = grid.h();
  FemOperators ops{grid, Tridiagonal(n), Tridiagonal(n), Tridiagonal(n)};

  for (int c = 0; c < grid.n_cells(); ++c) {
    const double v0 = grid.node(c);
    // local element matrices, index 0 = left node, 1 = right node
    double me[2][2] = {}, te[2][2] = {}, se[2][2] = {};
    for (int q = 0; q < 3; ++q) {
      const double s = detail::kGaussPts[q];
      const double w = detail::kGaussWts[q] * h;
      const double v = v0 + s * h;
      const double phi[2] = {1.0 - s, s};
      const double dphi[2] = {-1.0 / h, 1.0 / h};
      for (int a = 0; a < 2; ++a)
        for (int b = 0; b < 2; ++b) {
          me[a][b] += w * phi[a] * phi[b];
          te[a][b] += w * v * phi[a] * phi[b];
          se[a][b] += w * (1.0 - v * v) * dphi[a] * dphi[b];
        }
    }
    auto scatter = [c](Tridiagonal& t, const double (&e)[2][2]) {
      t.diag[c] += e[0][0];
      t.diag[c + 1] += e[1][1];
      t.upper[c] += e[0][1];
      t.lower[c] += e[1][0];
    };
    scatter(ops.mass, me);
    scatter(ops.transport, te);
    scatter(ops.stiffness_lb, se);
  }
  return ops;
}

inline void check_same_grid(const VelocityGrid& a, const VelocityGrid& b, const char* where) {
  if (!(a == b)) throw std::invalid_argument(std::string(where) + ": velocity grid mismatch");
}

/// L2(-1,1) inner product of two P1 functions.
inline double l2_inner(const NodalFunction& f, const NodalFunction& g, const FemOperators& fem) {
  check_same_grid(f.grid, g.grid, "l2_inner");
  check_same_grid(f.grid, fem.grid, "l2_inner");
  return f.values.dot(fem.mass.apply(g.values));
}

inline double l2_norm(const NodalFunction& f, const FemOperators& fem) {
  return std::sqrt(std::max(0.0, l2_inner(f, f, fem)));
}

inline NodalFunction interpolate(const std::function<double(double)>& f, const VelocityGrid& grid) {
  Eigen::VectorXd values(grid.n_nodes());
  for (int i = 0; i < grid.n_nodes(); ++i) {
    values[i] = f(grid.node(i));
    if (!std::isfinite(values[i]))
      throw std::domain_error("interpolate: non-finite value at v = " + std::to_string(grid.node(i)));
  }
  return {grid, std::move(values)};
}

}  // namespace hmr
