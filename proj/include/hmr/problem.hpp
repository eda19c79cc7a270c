#pragma once

#include <cmath>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "hmr/velocity_fem.hpp"

namespace hmr {

/// Piecewise-constant function of x.
///
/// `values.size() == breakpoints.size() + 1`. By default a breakpoint
/// belongs to the piece on its left (the "x <= c" convention); set the
/// matching entry of `right_closed` to attach it to the right piece.
struct PiecewiseConstant {
  std::vector<double> breakpoints;
  std::vector<double> values;
  std::vector<bool> right_closed;

  static PiecewiseConstant constant(double c) { return {{}, {c}, {}}; }

  void validate(const std::string& name) const {
    if (values.size() != breakpoints.size() + 1)
      throw std::invalid_argument(name + ": need exactly one more value than breakpoints");
    if (!right_closed.empty() && right_closed.size() != breakpoints.size())
      throw std::invalid_argument(name + ": right_closed must match breakpoints");
    for (std::size_t i = 1; i < breakpoints.size(); ++i)
      if (!(breakpoints[i - 1] < breakpoints[i]))
        throw std::invalid_argument(name + ": breakpoints must increase strictly");
  }

  double operator()(double x) const {
    std::size_t k = 0;
    while (k < breakpoints.size()) {
      const bool rc = !right_closed.empty() && right_closed[k];
      if (rc ? x < breakpoints[k] : x <= breakpoints[k]) break;
      ++k;
    }
    return values[k];
  }
};

using FieldTX = std::function<double(double t, double x)>;
using FieldTXV = std::function<double(double t, double x, double v)>;
using FieldXV = std::function<double(double x, double v)>;
using FieldTV = std::function<double(double t, double v)>;

/// Data of the 1D Fokker-Planck problem
///   psi_t + v psi_x + sigma_a psi = T/2 d_v((1 - v^2) d_v psi) + Q
/// on (x_min, x_max) x (-1, 1) for t in [0, t_end].
struct KineticProblem {
  std::string name = "custom";
  double x_min = 0.0;
  double x_max = 1.0;
  double t_end = 1.0;
  FieldTX sigma_a;
  FieldTX transport;  // T(t, x) >= 0
  FieldTXV source;
  FieldXV initial;
  FieldTV inflow_left;   // used for v > 0 at x_min
  FieldTV inflow_right;  // used for v <= 0 at x_max
  /// When set, the left inflow is amplitude * delta(v - 1) and `inflow_left` is ignored.
  std::optional<double> left_delta_amplitude;
  /// Coefficients, source and inflow do not depend on t.
  bool time_independent = true;
  /// Source does not depend on v.
  bool isotropic_source = true;

  void validate() const {
    if (!(x_min < x_max)) throw std::invalid_argument("KineticProblem: need x_min < x_max");
    if (!(t_end > 0.0)) throw std::invalid_argument("KineticProblem: need t_end > 0");
    if (!sigma_a || !transport || !source || !initial || !inflow_right ||
        (!inflow_left && !left_delta_amplitude))
      throw std::invalid_argument("KineticProblem: missing field");
  }
};

/// Uniform finite-volume partition of (a, b).
struct SpaceGrid {
  double a = 0.0;
  double b = 1.0;
  int n_cells = 1;

  SpaceGrid() = default;
  SpaceGrid(double a_, double b_, int n) : a(a_), b(b_), n_cells(n) {
    if (n < 1) throw std::invalid_argument("SpaceGrid: need at least one cell");
    if (!(a < b)) throw std::invalid_argument("SpaceGrid: need a < b");
  }
  double h() const { return (b - a) / n_cells; }
  double center(int j) const { return a + (j + 0.5) * h(); }
  bool operator==(const SpaceGrid&) const = default;
};

inline SpaceGrid make_space_grid(const KineticProblem& p, int n_cells) {
  return {p.x_min, p.x_max, n_cells};
}

struct Coefficients {
  double sigma;
  double transport;
};

inline Coefficients evaluate_coefficients(const KineticProblem& p, double t, double x) {
  const double eps = 1e-12 * (1.0 + std::abs(p.x_max - p.x_min) + p.t_end);
  if (t < -eps || t > p.t_end + eps || x < p.x_min - eps || x > p.x_max + eps)
    throw std::out_of_range("evaluate_coefficients: (t, x) = (" + std::to_string(t) + ", " +
                            std::to_string(x) + ") outside the domain");
  return {p.sigma_a(t, x), p.transport(t, x)};
}

/// Unit-mass approximation of delta(v - 1): the endpoint hat scaled by 2/h.
inline NodalFunction discrete_delta(const VelocityGrid& grid) {
  Eigen::VectorXd v = Eigen::VectorXd::Zero(grid.n_nodes());
  v[grid.n_cells()] = 2.0 / grid.h();
  return {grid, std::move(v)};
}

/// Builds a problem from piecewise-constant coefficients with an isotropic,
/// time-independent source and constant initial/boundary values.
struct PiecewiseProblemSpec {
  std::string name = "custom";
  double x_min = 0.0;
  double x_max = 1.0;
  double t_end = 1.0;
  PiecewiseConstant sigma_a = PiecewiseConstant::constant(0.0);
  PiecewiseConstant transport = PiecewiseConstant::constant(0.0);
  PiecewiseConstant source = PiecewiseConstant::constant(0.0);
  double initial = 0.0;
  std::optional<double> left_delta;  // delta amplitude, replaces left_value
  double left_value = 0.0;
  double right_value = 0.0;
};

inline KineticProblem make_piecewise_problem(const PiecewiseProblemSpec& s) {
  s.sigma_a.validate("sigma_a");
  s.transport.validate("transport");
  s.source.validate("source");
  for (double t : s.transport.values)
    if (t < 0.0) throw std::invalid_argument("transport coefficient must be nonnegative");
  KineticProblem p;
  p.name = s.name;
  p.x_min = s.x_min;
  p.x_max = s.x_max;
  p.t_end = s.t_end;
  p.sigma_a = [f = s.sigma_a](double, double x) { return f(x); };
  p.transport = [f = s.transport](double, double x) { return f(x); };
  p.source = [f = s.source](double, double x, double) { return f(x); };
  p.initial = [c = s.initial](double, double) { return c; };
  p.inflow_left = [c = s.left_value](double, double) { return c; };
  p.inflow_right = [c = s.right_value](double, double) { return c; };
  p.left_delta_amplitude = s.left_delta;
  p.time_independent = true;
  p.isotropic_source = true;
  p.validate();
  return p;
}

inline PiecewiseProblemSpec sourcebeam_spec() {
  PiecewiseProblemSpec s;
  s.name = "sourcebeam";
  s.x_min = 0.0;
  s.x_max = 3.0;
  s.t_end = 4.0;
  s.sigma_a = {{2.0}, {1.0, 0.0}, {}};
  s.transport = {{1.0, 2.0}, {0.0, 2.0, 10.0}, {}};
  // Q = 1 on the closed interval [1, 1.5]
  s.source = {{1.0, 1.5}, {0.0, 1.0, 0.0}, {true, false}};
  s.initial = 1e-4;
  s.left_delta = 1.0;
  s.right_value = 1e-4;
  return s;
}

/// Beam entering at x = 0, interior source on [1, 1.5], piecewise
/// absorption and scattering.
inline KineticProblem sourcebeam() { return make_piecewise_problem(sourcebeam_spec()); }

}  // namespace hmr
