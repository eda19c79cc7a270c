#pragma once

// First-order upwind finite volumes for the reduced moment system
//   p_t + A p_x + (sigma I + T/2 M^{-1} S) p = M^{-1} q
// with forward Euler in time and the reaction/source terms evaluated
// unsplit in the same step.

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "hmr/basis.hpp"
#include "hmr/problem.hpp"
#include "hmr/velocity_fem.hpp"

namespace hmr {

/// Cell-average moments, one m x n_cells block per stored time.
struct MomentField {
  SpaceGrid grid;
  std::vector<double> times;
  std::vector<Eigen::MatrixXd> data;
};

/// Spatial density int psi dv per cell and stored time.
struct DensityField {
  SpaceGrid grid;
  std::vector<double> times;
  std::vector<Eigen::VectorXd> values;

  /// Index of the stored time equal to t (up to 1e-9), or -1.
  int find_time(double t) const {
    for (std::size_t i = 0; i < times.size(); ++i)
      if (std::abs(times[i] - t) <= 1e-9 * std::max(1.0, std::abs(t))) return static_cast<int>(i);
    return -1;
  }
};

class SolverDiverged : public std::runtime_error {
 public:
  SolverDiverged(const std::string& what, double t) : std::runtime_error(what), time(t) {}
  double time;
};

/// Godunov flux of the linear system: A+ p_left + A- p_right.
inline Eigen::VectorXd upwind_flux(const Eigen::VectorXd& p_left, const Eigen::VectorXd& p_right,
                                   const ReducedOperators& ops) {
  return ops.A_plus * p_left + ops.A_minus * p_right;
}

/// Largest spectral radius of sigma I + T/2 M^{-1} S over the cell centers.
inline double reaction_radius(const ReducedOperators& ops, const KineticProblem& problem,
                              const SpaceGrid& grid, double t) {
  double rho = 0.0;
  for (int j = 0; j < grid.n_cells; ++j) {
    const auto [sigma, T] = evaluate_coefficients(problem, t, grid.center(j));
    rho = std::max(rho, std::abs(sigma) + 0.5 * T * ops.s_max);
  }
  return rho;
}

/// Forward-Euler step size for the upwind scheme with unsplit reaction:
///   dt = cfl / (max|lambda(A)| / h_x + rho_max / 2).
/// Reduces to cfl h_x / max|lambda| without reaction and to
/// 2 cfl / rho_max without advection. Infinite when both vanish.
inline double stable_dt(const ReducedOperators& ops, const KineticProblem& problem,
                        const SpaceGrid& grid, double cfl, double t = 0.0) {
  if (!(cfl > 0.0 && cfl <= 1.0)) throw std::invalid_argument("stable_dt: cfl must be in (0, 1]");
  const double rate = ops.max_speed() / grid.h() + 0.5 * reaction_radius(ops, problem, grid, t);
  if (rate == 0.0) return std::numeric_limits<double>::infinity();
  return cfl / rate;
}

inline void check_output_times(const std::vector<double>& times, double t_end) {
  for (std::size_t i = 0; i < times.size(); ++i) {
    if (times[i] < 0.0 || times[i] > t_end * (1.0 + 1e-12))
      throw std::invalid_argument("output time " + std::to_string(times[i]) + " outside [0, t_end]");
    if (i > 0 && !(times[i] > times[i - 1]))
      throw std::invalid_argument("output times must increase strictly");
  }
}

namespace detail {

struct CellBlock {
  int begin;
  int count;
  double sigma;
  double transport;
};

inline std::vector<CellBlock> coefficient_blocks(const KineticProblem& problem,
                                                 const SpaceGrid& grid, double t) {
  std::vector<CellBlock> blocks;
  for (int j = 0; j < grid.n_cells; ++j) {
    const auto [sigma, T] = evaluate_coefficients(problem, t, grid.center(j));
    if (!blocks.empty() && blocks.back().sigma == sigma && blocks.back().transport == T)
      ++blocks.back().count;
    else
      blocks.push_back({j, 1, sigma, T});
  }
  return blocks;
}

}  // namespace detail

/// Time integration of the moment system on `grid`, storing the moments at
/// each of `output_times`. One ghost cell per side carries the projected
/// incoming boundary function.
inline MomentField solve_moment_system(const KineticProblem& problem, const VelocityBasis& basis,
                                       const ReducedOperators& ops, const FemOperators& fem,
                                       const SpaceGrid& grid,
                                       const std::vector<double>& output_times, double cfl) {
  check_output_times(output_times, problem.t_end);
  const int m = basis.size();
  const int n = grid.n_cells;
  const double h = grid.h();
  const Eigen::MatrixXd phi_t_mass = fem.mass.apply(basis.functions).transpose();
  const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(m, m);
  const VelocityGrid& vgrid = basis.grid;

  // State with ghost columns 0 and n + 1.
  Eigen::MatrixXd p(m, n + 2), next(m, n + 2);
  for (int j = 0; j < n; ++j) {
    const double x = grid.center(j);
    auto psi0 = interpolate([&](double v) { return problem.initial(x, v); }, vgrid);
    p.col(j + 1) = ops.M_inv * (phi_t_mass * psi0.values);
  }

  Eigen::MatrixXd source(m, n);
  std::vector<detail::CellBlock> blocks;
  auto refresh_data = [&](double t) {
    blocks = detail::coefficient_blocks(problem, grid, t);
    if (problem.isotropic_source) {
      const Eigen::VectorXd unit = ops.M_inv * ops.integrals;
      for (int j = 0; j < n; ++j) source.col(j) = problem.source(t, grid.center(j), 0.0) * unit;
    } else {
      for (int j = 0; j < n; ++j) {
        const double x = grid.center(j);
        auto q = interpolate([&](double v) { return problem.source(t, x, v); }, vgrid);
        source.col(j) = ops.M_inv * (phi_t_mass * q.values);
      }
    }
    p.col(0) = ops.M_inv * (phi_t_mass * incoming_boundary_function(problem, vgrid, t, Side::left).values);
    p.col(n + 1) =
        ops.M_inv * (phi_t_mass * incoming_boundary_function(problem, vgrid, t, Side::right).values);
  };

  MomentField field;
  field.grid = grid;
  double t = 0.0;
  refresh_data(t);
  double dt_max = stable_dt(ops, problem, grid, cfl, t);

  Eigen::MatrixXd left_op, right_op;
  std::vector<Eigen::MatrixXd> center_ops;
  double prepared_dt = -1.0;
  auto prepare = [&](double dt) {
    const double r = dt / h;
    left_op = r * ops.A_plus;
    right_op = -r * ops.A_minus;
    center_ops.clear();
    const Eigen::MatrixXd flux_center = I - r * (ops.A_plus - ops.A_minus);
    for (const auto& b : blocks)
      center_ops.push_back(flux_center - dt * (b.sigma * I + 0.5 * b.transport * ops.M_inv_S));
    prepared_dt = dt;
  };

  for (double t_out : output_times) {
    const double span = t_out - t;
    if (span > 0.0) {
      const long steps = std::isfinite(dt_max)
                             ? std::max(1L, static_cast<long>(std::ceil(span / dt_max * (1.0 - 1e-12))))
                             : 1L;
      const double dt = span / static_cast<double>(steps);
      if (dt != prepared_dt) prepare(dt);
      for (long s = 0; s < steps; ++s) {
        if (!problem.time_independent && s > 0) {
          refresh_data(t);
          prepare(dt);
        }
        next.col(0) = p.col(0);
        next.col(n + 1) = p.col(n + 1);
        for (std::size_t k = 0; k < blocks.size(); ++k) {
          const auto& b = blocks[k];
          auto out = next.middleCols(b.begin + 1, b.count);
          out.noalias() = center_ops[k] * p.middleCols(b.begin + 1, b.count);
          out.noalias() += left_op * p.middleCols(b.begin, b.count);
          out.noalias() += right_op * p.middleCols(b.begin + 2, b.count);
          out.noalias() += dt * source.middleCols(b.begin, b.count);
        }
        p.swap(next);
        t = (s + 1 == steps) ? t_out : t + dt;
        if ((s & 15) == 15 || s + 1 == steps) {
          if (!p.allFinite() || p.cwiseAbs().maxCoeff() > 1e200)
            throw SolverDiverged("moment solver diverged at t = " + std::to_string(t), t);
        }
      }
      if (!problem.time_independent) {
        refresh_data(t);
        dt_max = stable_dt(ops, problem, grid, cfl, t);
        prepared_dt = -1.0;
      }
    }
    field.times.push_back(t_out);
    field.data.push_back(p.middleCols(1, n));
  }
  return field;
}

/// psi^(0)(t, x_j) = sum_i p_i(t, x_j) (phi_i, 1)_v.
inline DensityField spatial_density(const MomentField& field, const ReducedOperators& ops) {
  DensityField d;
  d.grid = field.grid;
  d.times = field.times;
  for (const auto& block : field.data) d.values.push_back(block.transpose() * ops.integrals);
  return d;
}

}  // namespace hmr
