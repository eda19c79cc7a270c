#pragma once

// Parametrized elliptic problem in the velocity variable and its snapshots.
//
// For a separable guess psi ~ P(t,x) phi(v), testing the kinetic equation
// with P(t,x) w(v) and replacing the (t,x) integrals by a quadrature rule
// gives, for phi - phi_b in H^1_0(-1,1),
//
//   a ((1-v^2) phi', w') + b (v phi, w) + c (phi, w) = (q_hat, w)
//
// with a = sum w_q T_q/2 P_q^2, b = sum w_q dxP_q P_q,
// c = sum w_q (dtP_q P_q + sigma_q P_q^2), q_hat = sum w_q P_q Q_q(v).

#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "hmr/parallel.hpp"
#include "hmr/problem.hpp"
#include "hmr/tridiagonal.hpp"
#include "hmr/velocity_fem.hpp"

namespace hmr {

struct QuadraturePoint {
  double t = 0.0;
  double x = 0.0;
  double weight = 1.0;
  double P = 0.0;
  double dxP = 0.0;
  double dtP = 0.0;
};

/// One parameter value mu: quadrature data plus Dirichlet values.
struct ParameterPoint {
  std::vector<QuadraturePoint> quad;
  double phi_l = 0.0;
  double phi_r = 0.0;

  std::string describe() const {
    std::ostringstream os;
    os.precision(17);
    os << "mu{";
    for (const auto& q : quad)
      os << "(t=" << q.t << ", x=" << q.x << ", w=" << q.weight << ", P=" << q.P
         << ", dxP=" << q.dxP << ", dtP=" << q.dtP << ") ";
    os << "phi_l=" << phi_l << ", phi_r=" << phi_r << "}";
    return os.str();
  }
};

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
  double width() const { return hi - lo; }
};

/// Admissible parameter ranges; each quadrature point draws t, x, P, dxP,
/// dtP from the same intervals.
struct ParameterBox {
  Interval t{0.0, 4.0};
  Interval x{1.0, 3.0};
  Interval P{0.01, 1.2};
  Interval dxP{-5.4, 0.9};
  Interval dtP{0.0, 5.0};
  Interval boundary{0.0, 1.0};
  int n_quad = 1;

  /// Ranges used for the beam benchmark.
  static ParameterBox sourcebeam_default() { return {}; }

  void validate(const KineticProblem& problem) const {
    for (const Interval* iv : {&t, &x, &P, &dxP, &dtP, &boundary})
      if (!(iv->lo <= iv->hi)) throw std::invalid_argument("ParameterBox: empty interval");
    if (n_quad < 1) throw std::invalid_argument("ParameterBox: need at least one quadrature point");
    if (t.lo < 0.0 || t.hi > problem.t_end || x.lo < problem.x_min || x.hi > problem.x_max)
      throw std::invalid_argument("ParameterBox: box leaves the space-time domain");
  }
};

struct PdeCoefficients {
  double a = 0.0;
  double b = 0.0;
  double c = 0.0;
  NodalFunction q_hat;
};

inline PdeCoefficients coefficients(const ParameterPoint& mu, const KineticProblem& problem,
                                    const VelocityGrid& grid) {
  PdeCoefficients k;
  k.q_hat = NodalFunction::constant(grid, 0.0);
  for (const auto& q : mu.quad) {
    const auto [sigma, T] = evaluate_coefficients(problem, q.t, q.x);
    k.a += q.weight * 0.5 * T * q.P * q.P;
    k.b += q.weight * q.dxP * q.P;
    k.c += q.weight * (q.dtP * q.P + sigma * q.P * q.P);
    for (int i = 0; i < grid.n_nodes(); ++i)
      k.q_hat.values[i] += q.weight * q.P * problem.source(q.t, q.x, grid.node(i));
  }
  return k;
}

class DegenerateDiffusion : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// P1 Galerkin solve with the linear lifting of the Dirichlet data.
inline NodalFunction solve_snapshot(const PdeCoefficients& k, double phi_l, double phi_r,
                                    const VelocityGrid& grid, const FemOperators& fem) {
  if (!(k.a > 0.0)) throw DegenerateDiffusion("solve_snapshot: degenerate diffusion (a <= 0)");
  check_same_grid(grid, fem.grid, "solve_snapshot");
  check_same_grid(grid, k.q_hat.grid, "solve_snapshot");

  const int n = grid.n_nodes();
  const Tridiagonal op =
      fem.stiffness_lb.combine(k.a, fem.transport, k.b).combine(1.0, fem.mass, k.c);

  Eigen::VectorXd lift(n);
  for (int i = 0; i < n; ++i) {
    const double v = grid.node(i);
    lift[i] = phi_l * (1.0 - v) / 2.0 + phi_r * (1.0 + v) / 2.0;
  }
  const Eigen::VectorXd rhs_full = fem.mass.apply(k.q_hat.values) - op.apply(lift);

  const int ni = n - 2;
  Tridiagonal inner(ni);
  inner.diag = op.diag.segment(1, ni);
  inner.lower = op.lower.segment(1, ni - 1);
  inner.upper = op.upper.segment(1, ni - 1);
  const Eigen::VectorXd x = solve_tridiagonal(inner, rhs_full.segment(1, ni));

  Eigen::VectorXd phi = lift;
  phi.segment(1, ni) += x;
  phi[0] = phi_l;
  phi[n - 1] = phi_r;
  if (!phi.allFinite()) throw SingularSystem("solve_snapshot: non-finite solution");
  return {grid, std::move(phi)};
}

/// Snapshot for a parameter point. The equation is homogeneous in the
/// weights, so they are normalized to sum one before assembly; with a single
/// point any rescaling of its weight then gives the same bits.
inline NodalFunction solve_snapshot(const ParameterPoint& mu, const KineticProblem& problem,
                                    const VelocityGrid& grid, const FemOperators& fem) {
  double total = 0.0;
  for (const auto& q : mu.quad) total += q.weight;
  if (!(total > 0.0)) throw std::invalid_argument("solve_snapshot: weights must have a positive sum");
  auto unit = mu;
  for (auto& q : unit.quad) q.weight /= total;
  return solve_snapshot(coefficients(unit, problem, grid), mu.phi_l, mu.phi_r, grid, fem);
}

/// Uniform double in [0, 1) from the top 53 bits of a 64-bit draw, so the
/// stream is identical on every standard library.
inline double uniform01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline double draw(std::mt19937_64& rng, const Interval& iv) {
  return iv.lo + iv.width() * uniform01(rng);
}

inline constexpr int kMaxRedraws = 1000;

/// Seeded i.i.d. uniform draws from the box (mt19937_64). Per point the
/// draw order is t, x, P, dxP, dtP for each quadrature point, then
/// phi_l, phi_r. Points with a(mu) <= 1e-12 are redrawn.
inline std::vector<ParameterPoint> sample_parameters(const ParameterBox& box, int n,
                                                     std::uint64_t seed,
                                                     const KineticProblem& problem) {
  if (n < 1) throw std::invalid_argument("sample_parameters: n must be positive");
  box.validate(problem);
  std::mt19937_64 rng(seed);
  std::vector<ParameterPoint> out;
  out.reserve(n);
  for (int k = 0; k < n; ++k) {
    for (int attempt = 0;; ++attempt) {
      if (attempt == kMaxRedraws)
        throw std::runtime_error("sample_parameters: box yields a(mu) = 0 repeatedly");
      ParameterPoint mu;
      double a = 0.0;
      for (int q = 0; q < box.n_quad; ++q) {
        QuadraturePoint qp;
        qp.t = draw(rng, box.t);
        qp.x = draw(rng, box.x);
        qp.P = draw(rng, box.P);
        qp.dxP = draw(rng, box.dxP);
        qp.dtP = draw(rng, box.dtP);
        a += qp.weight * 0.5 * problem.transport(qp.t, qp.x) * qp.P * qp.P;
        mu.quad.push_back(qp);
      }
      mu.phi_l = draw(rng, box.boundary);
      mu.phi_r = draw(rng, box.boundary);
      if (a > 1e-12) {
        out.push_back(std::move(mu));
        break;
      }
    }
  }
  return out;
}

struct SnapshotSet {
  std::vector<NodalFunction> snapshots;
  std::vector<ParameterPoint> parameters;  // aligned with snapshots
  std::vector<std::string> failures;       // dropped parameters with reasons
};

inline SnapshotSet generate_snapshot_set(const ParameterBox& box, int n, std::uint64_t seed,
                                         const KineticProblem& problem, const VelocityGrid& grid,
                                         const FemOperators& fem, unsigned threads = 0) {
  const auto params = sample_parameters(box, n, seed, problem);
  std::vector<std::optional<NodalFunction>> solved(params.size());
  std::vector<std::string> reasons(params.size());
  parallel_for(
      params.size(),
      [&](std::size_t i) {
        try {
          solved[i] = solve_snapshot(params[i], problem, grid, fem);
        } catch (const std::exception& e) {
          reasons[i] = std::string(e.what()) + " at " + params[i].describe();
        }
      },
      threads);

  SnapshotSet set;
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (solved[i]) {
      set.snapshots.push_back(std::move(*solved[i]));
      set.parameters.push_back(params[i]);
    } else {
      set.failures.push_back(reasons[i]);
    }
  }
  if (set.failures.size() * 100 > params.size())
    throw std::runtime_error("generate_snapshot_set: " + std::to_string(set.failures.size()) +
                             " of " + std::to_string(params.size()) + " snapshot solves failed");
  return set;
}

}  // namespace hmr
