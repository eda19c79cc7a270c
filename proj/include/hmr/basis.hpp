#pragma once

// Orthonormal velocity bases and the reduced (moment) operators built on them.

#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include "hmr/problem.hpp"
#include "hmr/velocity_fem.hpp"

namespace hmr {

inline constexpr double kDefaultGramSchmidtTol = 1e-10;

/// Ordered set of L2-orthonormal P1 functions, stored column-wise.
struct VelocityBasis {
  VelocityGrid grid;
  Eigen::MatrixXd functions;  // n_nodes x m

  VelocityBasis() = default;
  explicit VelocityBasis(const VelocityGrid& g) : grid(g), functions(g.n_nodes(), 0) {}
  VelocityBasis(const VelocityGrid& g, Eigen::MatrixXd f) : grid(g), functions(std::move(f)) {
    if (functions.rows() != grid.n_nodes())
      throw std::invalid_argument("VelocityBasis: row count does not match grid");
  }

  int size() const { return static_cast<int>(functions.cols()); }
  bool empty() const { return functions.cols() == 0; }
  NodalFunction function(int i) const { return {grid, functions.col(i)}; }

  /// First k functions.
  VelocityBasis prefix(int k) const { return {grid, functions.leftCols(k)}; }
};

/// Appends the normalized part of `candidate` orthogonal to `basis`.
///
/// Modified Gram-Schmidt with one reorthogonalization pass. Returns
/// nullopt when the residual norm is at most `tol` times the candidate
/// norm, i.e. the span would not grow.
inline std::optional<VelocityBasis> gram_schmidt_extend(const VelocityBasis& basis,
                                                        const NodalFunction& candidate,
                                                        const FemOperators& fem,
                                                        double tol = kDefaultGramSchmidtTol) {
  check_same_grid(basis.grid, candidate.grid, "gram_schmidt_extend");
  check_same_grid(basis.grid, fem.grid, "gram_schmidt_extend");
  if (!(tol > 0.0)) throw std::invalid_argument("gram_schmidt_extend: tol must be positive");

  const Eigen::VectorXd& c = candidate.values;
  const double c_norm = std::sqrt(std::max(0.0, c.dot(fem.mass.apply(c))));
  if (c_norm == 0.0) return std::nullopt;

  Eigen::VectorXd r = c;
  for (int pass = 0; pass < 2; ++pass) {
    for (int i = 0; i < basis.size(); ++i) {
      const auto phi = basis.functions.col(i);
      r -= phi.dot(fem.mass.apply(r)) * phi;
    }
  }
  const double r_norm = std::sqrt(std::max(0.0, r.dot(fem.mass.apply(r))));
  if (r_norm <= tol * c_norm) return std::nullopt;

  Eigen::MatrixXd f(basis.grid.n_nodes(), basis.size() + 1);
  f.leftCols(basis.size()) = basis.functions;
  f.col(basis.size()) = r / r_norm;
  return VelocityBasis(basis.grid, std::move(f));
}

/// Legendre polynomial P_n(x) by the three-term recurrence.
inline double legendre_p(int n, double x) {
  if (n == 0) return 1.0;
  double p0 = 1.0, p1 = x;
  for (int k = 1; k < n; ++k) {
    const double p2 = ((2 * k + 1) * x * p1 - k * p0) / (k + 1);
    p0 = p1;
    p1 = p2;
  }
  return p1;
}

/// Interpolated normalized Legendre polynomials, re-orthonormalized discretely.
inline VelocityBasis legendre_basis(int m, const VelocityGrid& grid, const FemOperators& fem) {
  if (m < 1) throw std::invalid_argument("legendre_basis: m must be positive");
  VelocityBasis basis(grid);
  for (int i = 0; i < m; ++i) {
    const double scale = std::sqrt((2.0 * i + 1.0) / 2.0);
    auto cand = interpolate([i, scale](double v) { return scale * legendre_p(i, v); }, grid);
    auto next = gram_schmidt_extend(basis, cand, fem);
    if (!next)
      throw std::invalid_argument("legendre_basis: P_" + std::to_string(i) +
                                  " is not resolved on a grid with " +
                                  std::to_string(grid.n_cells()) + " cells");
    basis = std::move(*next);
  }
  return basis;
}

/// Galerkin moment matrices and the characteristic split of the flux matrix.
struct ReducedOperators {
  Eigen::MatrixXd M, D, S;
  Eigen::MatrixXd A;             // M^{-1} D
  Eigen::MatrixXd eig_R;         // right eigenvectors of A (columns)
  Eigen::MatrixXd eig_L;         // eig_R^{-1}
  Eigen::VectorXd eig_vals;      // ascending
  Eigen::MatrixXd A_plus, A_minus;
  Eigen::MatrixXd M_inv;
  Eigen::MatrixXd M_inv_S;
  double s_max = 0.0;            // largest eigenvalue of S x = s M x
  Eigen::VectorXd integrals;     // (phi_i, 1)_v

  int size() const { return static_cast<int>(M.rows()); }
  double max_speed() const {
    return eig_vals.size() ? eig_vals.cwiseAbs().maxCoeff() : 0.0;
  }
};

class DegenerateBasis : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline ReducedOperators reduced_operators(const VelocityBasis& basis, const FemOperators& fem) {
  if (basis.empty()) throw std::invalid_argument("reduced_operators: empty basis");
  check_same_grid(basis.grid, fem.grid, "reduced_operators");
  const Eigen::MatrixXd& phi = basis.functions;
  auto galerkin = [&phi](const Tridiagonal& op) {
    Eigen::MatrixXd g = phi.transpose() * op.apply(phi);
    return Eigen::MatrixXd(0.5 * (g + g.transpose()));
  };

  ReducedOperators r;
  r.M = galerkin(fem.mass);
  r.D = galerkin(fem.transport);
  r.S = galerkin(fem.stiffness_lb);

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> mass_eig(r.M, Eigen::EigenvaluesOnly);
  const double lo = mass_eig.eigenvalues().minCoeff();
  const double hi = mass_eig.eigenvalues().maxCoeff();
  if (!(lo > 0.0) || hi / lo > 1e12)
    throw DegenerateBasis("reduced_operators: mass matrix is numerically singular");

  Eigen::LLT<Eigen::MatrixXd> llt(r.M);
  const int m = basis.size();
  r.M_inv = llt.solve(Eigen::MatrixXd::Identity(m, m));
  r.A = r.M_inv * r.D;
  r.M_inv_S = r.M_inv * r.S;

  // D x = lambda M x has a real spectrum with M-orthonormal eigenvectors X,
  // so A = X diag(lambda) X^T M.
  Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> gen(r.D, r.M);
  r.eig_vals = gen.eigenvalues();
  r.eig_R = gen.eigenvectors();
  r.eig_L = r.eig_R.transpose() * r.M;
  const Eigen::VectorXd pos = r.eig_vals.cwiseMax(0.0);
  const Eigen::VectorXd neg = r.eig_vals.cwiseMin(0.0);
  r.A_plus = r.eig_R * pos.asDiagonal() * r.eig_L;
  r.A_minus = r.eig_R * neg.asDiagonal() * r.eig_L;

  Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> stiff(r.S, r.M, Eigen::EigenvaluesOnly);
  r.s_max = std::max(0.0, stiff.eigenvalues().maxCoeff());

  r.integrals = phi.transpose() * fem.mass.apply(Eigen::VectorXd(Eigen::VectorXd::Ones(phi.rows())));
  return r;
}

/// Moment vector M^{-1} ((f, phi_i)_v)_i.
inline Eigen::VectorXd project_function(const NodalFunction& f, const VelocityBasis& basis,
                                        const ReducedOperators& ops, const FemOperators& fem) {
  check_same_grid(f.grid, basis.grid, "project_function");
  return ops.M_inv * (basis.functions.transpose() * fem.mass.apply(f.values));
}

enum class Side { left, right };

/// Nodal incoming boundary function: inflow data on the incoming half of
/// the velocity interval, zero on the outgoing half. The node v = 0 goes
/// with the v <= 0 branch on both sides.
inline NodalFunction incoming_boundary_function(const KineticProblem& problem,
                                                const VelocityGrid& grid, double t, Side side) {
  if (side == Side::left && problem.left_delta_amplitude) {
    NodalFunction d = discrete_delta(grid);
    d.values *= *problem.left_delta_amplitude;
    return d;
  }
  Eigen::VectorXd v = Eigen::VectorXd::Zero(grid.n_nodes());
  for (int i = 0; i < grid.n_nodes(); ++i) {
    const double vel = grid.node(i);
    if (side == Side::left && vel > 0.0) v[i] = problem.inflow_left(t, vel);
    if (side == Side::right && vel <= 0.0) v[i] = problem.inflow_right(t, vel);
  }
  return {grid, std::move(v)};
}

inline Eigen::VectorXd incoming_boundary_moments(const KineticProblem& problem,
                                                 const VelocityBasis& basis,
                                                 const ReducedOperators& ops,
                                                 const FemOperators& fem, double t, Side side) {
  return project_function(incoming_boundary_function(problem, basis.grid, t, side), basis, ops,
                          fem);
}

}  // namespace hmr
