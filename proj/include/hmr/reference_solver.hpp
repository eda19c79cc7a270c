#pragma once

// Full phase-space solver for the kinetic equation, used as the reference
// and as the source of truth-snapshots.
//
// Cell averages in x, nodal values in v. Each step is IMEX Euler:
//   explicit: upwind transport per velocity node plus the source,
//   implicit: absorption and the conservative velocity diffusion
//             d_v((1 - v^2) d_v psi), one tridiagonal solve per cell.
// The velocity control volumes are the trapezoid weights, so the discrete
// diffusion conserves the trapezoid integral over v exactly.

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "hmr/moment_solver.hpp"
#include "hmr/problem.hpp"
#include "hmr/velocity_fem.hpp"

namespace hmr {

struct FullSolution {
  SpaceGrid space_grid;
  VelocityGrid velocity_grid;
  std::vector<double> times;
  std::vector<Eigen::MatrixXd> data;  // n_x x n_nodes per stored time
  std::vector<std::string> warnings;
};

namespace detail {

/// Prefactored tridiagonal system (diagonally dominant, no pivoting needed).
struct ThomasFactor {
  Eigen::VectorXd sub, inv_pivot, sup_scaled;

  ThomasFactor(const Eigen::VectorXd& sub_, const Eigen::VectorXd& diag,
               const Eigen::VectorXd& sup) {
    const Eigen::Index n = diag.size();
    sub = sub_;
    inv_pivot.resize(n);
    sup_scaled.resize(n > 0 ? n - 1 : 0);
    double pivot = diag[0];
    for (Eigen::Index i = 0; i < n; ++i) {
      if (i > 0) pivot = diag[i] - sub[i - 1] * sup_scaled[i - 1];
      inv_pivot[i] = 1.0 / pivot;
      if (i + 1 < n) sup_scaled[i] = sup[i] * inv_pivot[i];
    }
  }

  template <class Vec>
  void solve_in_place(Vec&& b) const {
    const Eigen::Index n = inv_pivot.size();
    b[0] *= inv_pivot[0];
    for (Eigen::Index i = 1; i < n; ++i) b[i] = (b[i] - sub[i - 1] * b[i - 1]) * inv_pivot[i];
    for (Eigen::Index i = n - 2; i >= 0; --i) b[i] -= sup_scaled[i] * b[i + 1];
  }
};

using StoreCallback = std::function<void(double t, const Eigen::MatrixXd& psi_vx)>;

/// Runs the scheme; `store` receives psi as an (n_nodes x n_x) matrix at
/// every output time.
inline void run_reference(const KineticProblem& problem, int n_x, int n_v,
                          const std::vector<double>& output_times, double cfl,
                          const StoreCallback& store, std::vector<std::string>* warnings) {
  problem.validate();
  if (!(cfl > 0.0 && cfl <= 1.0)) throw std::invalid_argument("solve_reference: cfl must be in (0, 1]");
  check_output_times(output_times, problem.t_end);
  const SpaceGrid sg = make_space_grid(problem, n_x);
  const VelocityGrid vg(n_v);
  const int nv = vg.n_nodes();
  const double hx = sg.h();
  const double hv = vg.h();

  Eigen::VectorXd vel = vg.nodes();
  Eigen::VectorXd weight = Eigen::VectorXd::Constant(nv, hv);
  weight[0] = weight[nv - 1] = 0.5 * hv;
  // face coefficients (1 - v^2) / h_v at cell midpoints
  Eigen::VectorXd face(nv - 1);
  for (int k = 0; k < nv - 1; ++k) {
    const double vm = 0.5 * (vel[k] + vel[k + 1]);
    face[k] = (1.0 - vm * vm) / hv;
  }

  Eigen::MatrixXd psi(nv, n_x), next(nv, n_x);
  for (int j = 0; j < n_x; ++j)
    for (int k = 0; k < nv; ++k) psi(k, j) = problem.initial(sg.center(j), vel[k]);

  Eigen::VectorXd ghost_left(nv), ghost_right(nv);
  Eigen::MatrixXd source(nv, n_x);
  std::vector<double> sigma(n_x), transport(n_x);
  std::map<std::pair<double, double>, ThomasFactor> factors;
  double factor_dt = -1.0;

  auto refresh = [&](double t) {
    ghost_left.setZero();
    ghost_right.setZero();
    for (int k = 0; k < nv; ++k) {
      if (vel[k] > 0.0 && !problem.left_delta_amplitude) ghost_left[k] = problem.inflow_left(t, vel[k]);
      if (vel[k] < 0.0) ghost_right[k] = problem.inflow_right(t, vel[k]);
    }
    if (problem.left_delta_amplitude) ghost_left[nv - 1] = *problem.left_delta_amplitude * 2.0 / hv;
    for (int j = 0; j < n_x; ++j) {
      const auto [s, T] = evaluate_coefficients(problem, t, sg.center(j));
      sigma[j] = s;
      transport[j] = T;
      for (int k = 0; k < nv; ++k) source(k, j) = problem.source(t, sg.center(j), vel[k]);
    }
    factors.clear();
  };

  auto factor_for = [&](double s, double T, double dt) -> const ThomasFactor& {
    auto key = std::make_pair(s, T);
    auto it = factors.find(key);
    if (it != factors.end()) return it->second;
    // (1 + dt s) psi_k + dt T/2 (K psi)_k / w_k
    const double c = 0.5 * dt * T;
    Eigen::VectorXd diag(nv), sub(nv - 1), sup(nv - 1);
    for (int k = 0; k < nv; ++k) {
      double kd = 0.0;
      if (k > 0) kd += face[k - 1];
      if (k + 1 < nv) kd += face[k];
      diag[k] = 1.0 + dt * s + c * kd / weight[k];
      if (k + 1 < nv) sup[k] = -c * face[k] / weight[k];
      if (k > 0) sub[k - 1] = -c * face[k - 1] / weight[k];
    }
    return factors.emplace(key, ThomasFactor(sub, diag, sup)).first->second;
  };

  double t = 0.0;
  refresh(t);
  const double vmax = vel.cwiseAbs().maxCoeff();
  const double dt_max = cfl * hx / vmax;
  double min_seen = psi.minCoeff(), max_seen = psi.maxCoeff();

  for (double t_out : output_times) {
    const double span = t_out - t;
    if (span > 0.0) {
      const long steps = std::max(1L, static_cast<long>(std::ceil(span / dt_max * (1.0 - 1e-12))));
      const double dt = span / static_cast<double>(steps);
      if (dt != factor_dt) {
        factors.clear();
        factor_dt = dt;
      }
      for (long s = 0; s < steps; ++s) {
        if (!problem.time_independent && s > 0) refresh(t);
        const double r = dt / hx;
        for (int j = 0; j < n_x; ++j) {
          const double* left = j > 0 ? psi.col(j - 1).data() : ghost_left.data();
          const double* right = j + 1 < n_x ? psi.col(j + 1).data() : ghost_right.data();
          for (int k = 0; k < nv; ++k) {
            const double v = vel[k];
            double val = psi(k, j);
            if (v > 0.0)
              val -= r * v * (psi(k, j) - left[k]);
            else if (v < 0.0)
              val -= r * v * (right[k] - psi(k, j));
            next(k, j) = val + dt * source(k, j);
          }
          factor_for(sigma[j], transport[j], dt).solve_in_place(next.col(j));
        }
        psi.swap(next);
        t = (s + 1 == steps) ? t_out : t + dt;
        if ((s & 15) == 15 || s + 1 == steps) {
          if (!psi.allFinite()) throw SolverDiverged("reference solver diverged at t = " + std::to_string(t), t);
        }
      }
      if (!problem.time_independent) {
        refresh(t);
        factor_dt = -1.0;
      }
    }
    min_seen = std::min(min_seen, psi.minCoeff());
    max_seen = std::max(max_seen, psi.maxCoeff());
    store(t_out, psi);
  }
  if (warnings && min_seen < -1e-6 * std::max(1.0, max_seen))
    warnings->push_back("reference solver: negative density " + std::to_string(min_seen));
}

}  // namespace detail

inline FullSolution solve_reference(const KineticProblem& problem, int n_x, int n_v,
                                    const std::vector<double>& output_times, double cfl) {
  FullSolution sol;
  sol.space_grid = make_space_grid(problem, n_x);
  sol.velocity_grid = VelocityGrid(n_v);
  detail::run_reference(
      problem, n_x, n_v, output_times, cfl,
      [&](double t, const Eigen::MatrixXd& psi) {
        sol.times.push_back(t);
        sol.data.push_back(psi.transpose());
      },
      &sol.warnings);
  return sol;
}

/// Trapezoid weights on the velocity nodes.
inline Eigen::VectorXd trapezoid_weights(const VelocityGrid& g) {
  Eigen::VectorXd w = Eigen::VectorXd::Constant(g.n_nodes(), g.h());
  w[0] = w[g.n_cells()] = 0.5 * g.h();
  return w;
}

inline DensityField density_of_full(const FullSolution& sol) {
  DensityField d;
  d.grid = sol.space_grid;
  d.times = sol.times;
  const Eigen::VectorXd w = trapezoid_weights(sol.velocity_grid);
  for (const auto& psi : sol.data) d.values.push_back(psi * w);
  return d;
}

/// Density of the reference solution without keeping the phase-space fields.
inline DensityField reference_density(const KineticProblem& problem, int n_x, int n_v,
                                      const std::vector<double>& output_times, double cfl,
                                      std::vector<std::string>* warnings = nullptr) {
  DensityField d;
  d.grid = make_space_grid(problem, n_x);
  const Eigen::VectorXd w = trapezoid_weights(VelocityGrid(n_v));
  detail::run_reference(
      problem, n_x, n_v, output_times, cfl,
      [&](double t, const Eigen::MatrixXd& psi) {
        d.times.push_back(t);
        d.values.push_back(psi.transpose() * w);
      },
      warnings);
  return d;
}

/// Uniform time grid t_j = j t_end / n, j = 1..n.
inline std::vector<double> uniform_times(double t_end, int n) {
  std::vector<double> t;
  for (int j = 1; j <= n; ++j) t.push_back(t_end * j / n);
  return t;
}

/// Velocity slices psi(t_i, x_i, .) on a tensor grid of n_x_points cell
/// centers of a uniform partition of (a, b) and n_t_points uniform times.
/// Each x_i is sampled in the fine cell that contains it (a point on a
/// cell face goes to the right-hand cell). Ordered x-major.
inline std::vector<NodalFunction> truth_snapshots(const FullSolution& sol, int n_x_points,
                                                  int n_t_points, double t_end) {
  if (n_x_points < 1 || n_t_points < 1)
    throw std::invalid_argument("truth_snapshots: need positive point counts");
  const SpaceGrid coarse(sol.space_grid.a, sol.space_grid.b, n_x_points);
  const auto times = uniform_times(t_end, n_t_points);
  std::vector<int> time_index;
  for (double t : times) {
    int found = -1;
    for (std::size_t i = 0; i < sol.times.size(); ++i)
      if (std::abs(sol.times[i] - t) <= 1e-9 * std::max(1.0, t)) found = static_cast<int>(i);
    if (found < 0) throw std::invalid_argument("truth_snapshots: time " + std::to_string(t) + " not stored");
    time_index.push_back(found);
  }
  std::vector<NodalFunction> out;
  for (int i = 0; i < n_x_points; ++i) {
    const double x = coarse.center(i);
    const int cell = std::clamp(static_cast<int>(std::floor((x - sol.space_grid.a) / sol.space_grid.h())),
                                0, sol.space_grid.n_cells - 1);
    for (int ti : time_index)
      out.emplace_back(sol.velocity_grid, Eigen::VectorXd(sol.data[ti].row(cell).transpose()));
  }
  return out;
}

}  // namespace hmr
