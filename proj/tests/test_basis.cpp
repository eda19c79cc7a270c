#include <catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "hmr/basis.hpp"
#include "oracles.hpp"

using namespace hmr;
using Catch::Approx;

namespace {

double orthonormality_defect(const VelocityBasis& b, const FemOperators& fem) {
  const Eigen::MatrixXd G = b.functions.transpose() * fem.mass.apply(b.functions);
  return (G - Eigen::MatrixXd::Identity(b.size(), b.size())).cwiseAbs().maxCoeff();
}

/// Basis from m random smooth-ish candidates (random coefficients on hat functions,
/// lightly smoothed so the basis looks like a snapshot basis).
VelocityBasis random_basis(int m, const VelocityGrid& g, const FemOperators& fem, std::mt19937_64& rng) {
  std::normal_distribution<double> nd;
  VelocityBasis b(g);
  while (b.size() < m) {
    Eigen::VectorXd c(g.n_nodes());
    for (auto& x : c) x = nd(rng);
    for (int pass = 0; pass < 3; ++pass)
      for (int i = 1; i + 1 < c.size(); ++i) c[i] = 0.25 * c[i - 1] + 0.5 * c[i] + 0.25 * c[i + 1];
    if (auto next = gram_schmidt_extend(b, {g, c}, fem)) b = std::move(*next);
  }
  return b;
}

}  // namespace

TEST_CASE("Gram-Schmidt: second member from v") {
  const auto g = make_grid(512);
  const auto fem = assemble_operators(g);
  const auto b1 = gram_schmidt_extend(VelocityBasis(g), NodalFunction::constant(g, 1.0), fem);
  REQUIRE(b1);
  CHECK(b1->functions.col(0).cwiseAbs().maxCoeff() == Approx(1.0 / std::sqrt(2.0)).epsilon(1e-13));
  const auto b2 = gram_schmidt_extend(*b1, interpolate([](double v) { return v; }, g), fem);
  REQUIRE(b2);
  for (int i = 0; i < g.n_nodes(); ++i)
    CHECK(b2->functions(i, 1) == Approx(std::sqrt(1.5) * g.node(i)).margin(1e-12));
}

TEST_CASE("Gram-Schmidt rejects dependent and zero candidates") {
  const auto g = make_grid(16);
  const auto fem = assemble_operators(g);
  const auto b = *gram_schmidt_extend(VelocityBasis(g), NodalFunction::constant(g, 1.0), fem);
  CHECK_FALSE(gram_schmidt_extend(b, NodalFunction::constant(g, -3.0), fem));
  CHECK_FALSE(gram_schmidt_extend(b, NodalFunction::constant(g, 0.0), fem));
  CHECK_THROWS_AS(gram_schmidt_extend(b, NodalFunction::constant(make_grid(8), 1.0), fem),
                  std::invalid_argument);
}

TEST_CASE("Gram-Schmidt output stays orthonormal over random sequences") {
  std::mt19937_64 rng(5);
  for (int n : {8, 64, 256}) {
    const auto g = make_grid(n);
    const auto fem = assemble_operators(g);
    for (int trial = 0; trial < 10; ++trial) {
      const auto b = random_basis(std::min(n + 1, 12), g, fem, rng);
      CHECK(orthonormality_defect(b, fem) <= 1e-10);
    }
  }
}

TEST_CASE("Legendre bases") {
  const auto g = make_grid(512);
  const auto fem = assemble_operators(g);
  const auto b1 = legendre_basis(1, g, fem);
  CHECK(b1.size() == 1);
  CHECK(b1.functions.col(0).isApproxToConstant(1.0 / std::sqrt(2.0), 1e-14));
  const auto b2 = legendre_basis(2, g, fem);
  CHECK(b2.functions.col(1).maxCoeff() == Approx(1.2247).epsilon(1e-4));

  const auto g2 = make_grid(2);
  const auto fem2 = assemble_operators(g2);
  const auto b3 = legendre_basis(3, g2, fem2);
  CHECK(b3.size() == 3);
  CHECK(orthonormality_defect(b3, fem2) <= 1e-12);
  CHECK_THROWS_AS(legendre_basis(4, g2, fem2), std::invalid_argument);
  CHECK_THROWS_AS(legendre_basis(0, g2, fem2), std::invalid_argument);

  // the recurrence against the closed forms
  for (int k = 0; k <= 6; ++k)
    for (double x : {-1.0, -0.3, 0.0, 0.71, 1.0})
      CHECK(std::sqrt((2.0 * k + 1) / 2) * legendre_p(k, x) ==
            Approx(oracle::legendre_closed(k, x)).margin(1e-13));
}

TEST_CASE("reduced operators of Legendre bases match analytic values") {
  const auto g = make_grid(512);
  const auto fem = assemble_operators(g);
  const auto ops3 = reduced_operators(legendre_basis(3, g, fem), fem);
  const Eigen::Vector3d sdiag(0, 2, 6);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) CHECK(ops3.S(i, j) == Approx(i == j ? sdiag[i] : 0.0).margin(5e-3));
  const auto ops2 = reduced_operators(legendre_basis(2, g, fem), fem);
  CHECK(ops2.D(0, 0) == Approx(0.0).margin(5e-3));
  CHECK(ops2.D(0, 1) == Approx(1.0 / std::sqrt(3.0)).margin(5e-3));
  CHECK(ops2.D(1, 0) == Approx(1.0 / std::sqrt(3.0)).margin(5e-3));
  CHECK(ops2.D(1, 1) == Approx(0.0).margin(5e-3));
}

TEST_CASE("reduced operators of orthonormal bases") {
  std::mt19937_64 rng(17);
  for (int n : {16, 128}) {
    const auto g = make_grid(n);
    const auto fem = assemble_operators(g);
    for (int trial = 0; trial < 10; ++trial) {
      const auto b = random_basis(1 + trial % 9, g, fem, rng);
      const auto ops = reduced_operators(b, fem);
      CHECK((ops.M - Eigen::MatrixXd::Identity(b.size(), b.size())).cwiseAbs().maxCoeff() <= 1e-9);
      CHECK((ops.A_plus + ops.A_minus - ops.A).cwiseAbs().maxCoeff() <= 1e-9);
      // A+ - A- = R |Lambda| R^-1
      Eigen::EigenSolver<Eigen::MatrixXd> es(ops.A_plus - ops.A_minus);
      Eigen::VectorXd got = es.eigenvalues().real();
      std::sort(got.data(), got.data() + got.size());
      Eigen::VectorXd want = ops.eig_vals.cwiseAbs();
      std::sort(want.data(), want.data() + want.size());
      CHECK((got - want).cwiseAbs().maxCoeff() <= 1e-9);
      CHECK(std::is_sorted(ops.eig_vals.data(), ops.eig_vals.data() + ops.eig_vals.size()));
      CHECK(ops.max_speed() < 1.0);
    }
  }
}

TEST_CASE("eigenvalues of M^-1 D stay inside (-1, 1) for random bases") {
  std::mt19937_64 rng(2024);
  const auto g = make_grid(64);
  const auto fem = assemble_operators(g);
  for (int trial = 0; trial < 100; ++trial) {
    const auto b = random_basis(1 + trial % 13, g, fem, rng);
    const auto ops = reduced_operators(b, fem);
    // independent check with a general eigensolver on A
    Eigen::EigenSolver<Eigen::MatrixXd> es(ops.A);
    CHECK(es.eigenvalues().cwiseAbs().maxCoeff() < 1.0);
    CHECK(es.eigenvalues().imag().cwiseAbs().maxCoeff() <= 1e-9);
  }
}

TEST_CASE("degenerate bases are detected") {
  const auto g = make_grid(8);
  const auto fem = assemble_operators(g);
  Eigen::MatrixXd f(g.n_nodes(), 2);
  f.col(0).setOnes();
  f.col(1).setOnes();
  CHECK_THROWS_AS(reduced_operators(VelocityBasis(g, f), fem), DegenerateBasis);
  CHECK_THROWS_AS(reduced_operators(VelocityBasis(g), fem), std::invalid_argument);
}

TEST_CASE("projection of constants and of the discrete delta") {
  const auto g = make_grid(256);
  const auto fem = assemble_operators(g);
  const auto b = legendre_basis(4, g, fem);
  const auto ops = reduced_operators(b, fem);
  const auto p = project_function(NodalFunction::constant(g, 1e-4), b, ops, fem);
  CHECK(p[0] == Approx(1e-4 * std::sqrt(2.0)).epsilon(1e-12));
  for (int i = 1; i < 4; ++i) CHECK(p[i] == Approx(0.0).margin(1e-15));

  double prev = 1e300;
  for (int n : {32, 128, 512}) {
    const auto gn = make_grid(n);
    const auto fn = assemble_operators(gn);
    const auto bn = legendre_basis(4, gn, fn);
    const auto on = reduced_operators(bn, fn);
    const auto d = project_function(discrete_delta(gn), bn, on, fn);
    double err = 0.0;
    for (int i = 0; i < 4; ++i) err = std::max(err, std::abs(d[i] - std::sqrt((2.0 * i + 1) / 2)));
    CHECK(err < prev);
    prev = err;
  }
  CHECK(prev < 0.05);
}

TEST_CASE("incoming boundary moments") {
  const auto p = sourcebeam();
  for (int n : {64, 256}) {
    const auto g = make_grid(n);
    const auto fem = assemble_operators(g);
    const auto b = legendre_basis(3, g, fem);
    const auto ops = reduced_operators(b, fem);
    const auto f = incoming_boundary_function(p, g, 0.0, Side::right);
    for (int i = 0; i < g.n_nodes(); ++i) CHECK(f.values[i] == (g.node(i) <= 0.0 ? 1e-4 : 0.0));
    const Eigen::VectorXd raw = b.functions.transpose() * fem.mass.apply(f.values);
    CHECK(raw[0] == Approx(1e-4 / std::sqrt(2.0)).margin(1e-4 * g.h()));
    const auto left = incoming_boundary_moments(p, b, ops, fem, 0.0, Side::left);
    CHECK(left[0] == Approx(1.0 / std::sqrt(2.0)).epsilon(1e-12));
  }
  const auto zero = oracle::constant_problem(0, 0, 0, 0, 0, 0);
  const auto g = make_grid(16);
  const auto fem = assemble_operators(g);
  const auto b = legendre_basis(3, g, fem);
  const auto ops = reduced_operators(b, fem);
  CHECK(incoming_boundary_moments(zero, b, ops, fem, 0.0, Side::left).isZero());
  CHECK(incoming_boundary_moments(zero, b, ops, fem, 0.0, Side::right).isZero());
}
