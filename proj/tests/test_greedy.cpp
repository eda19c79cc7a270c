#include <catch_amalgamated.hpp>

#include <cmath>
#include <limits>

#include "hmr/study.hpp"
#include "oracles.hpp"

using namespace hmr;
using Catch::Approx;

namespace {

DensityField constant_density(const SpaceGrid& g, const std::vector<double>& times, double value) {
  DensityField d;
  d.grid = g;
  d.times = times;
  for (std::size_t k = 0; k < times.size(); ++k) d.values.push_back(Eigen::VectorXd::Constant(g.n_cells, value));
  return d;
}

}  // namespace

TEST_CASE("relative L1 error closed forms") {
  const SpaceGrid g(0, 3, 12);
  const std::vector<double> t = {0.5, 1.0};
  const auto ref = constant_density(g, t, 2.0);
  CHECK(relative_l1_error(ref, ref, t) == 0.0);
  const auto off = constant_density(g, t, 2.5);
  CHECK(relative_l1_error(off, ref, t) == Approx(0.25).epsilon(1e-14));

  // the reference may be finer; it is averaged onto the test cells
  const SpaceGrid fine(0, 3, 48);
  auto fref = constant_density(fine, t, 0.0);
  for (auto& v : fref.values)
    for (int j = 0; j < 48; ++j) v[j] = (j % 4 < 2) ? 1.0 : 3.0;
  CHECK(relative_l1_error(ref, fref, t) == Approx(0.0).margin(1e-15));

  CHECK_THROWS_AS(relative_l1_error(ref, constant_density(SpaceGrid(0, 3, 18), t, 1.0), t), std::invalid_argument);
  CHECK_THROWS_AS(relative_l1_error(ref, ref, {0.7}), std::invalid_argument);
  CHECK_THROWS_AS(relative_l1_error(ref, constant_density(g, t, 0.0), t), std::invalid_argument);
}

TEST_CASE("relative L1 error: scale invariance and triangle bound") {
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> u(0.1, 2.0);
  const SpaceGrid g(0, 1, 20);
  const std::vector<double> t = {1.0};
  auto rnd = [&] {
    auto d = constant_density(g, t, 0.0);
    for (auto& x : d.values[0]) x = u(rng);
    return d;
  };
  for (int trial = 0; trial < 20; ++trial) {
    auto a = rnd(), b = rnd(), c = rnd();
    auto a2 = a, c2 = c;
    a2.values[0] *= 7.5;
    c2.values[0] *= 7.5;
    CHECK(relative_l1_error(a2, c2, t) == Approx(relative_l1_error(a, c, t)).epsilon(1e-13));
    const double nc = c.values[0].cwiseAbs().sum();
    const double bound = ((a.values[0] - b.values[0]).cwiseAbs().sum() +
                          (b.values[0] - c.values[0]).cwiseAbs().sum()) / nc;
    CHECK(relative_l1_error(a, c, t) <= bound + 1e-14);
  }
}

TEST_CASE("greedy recovers the velocity profile of a separable solution") {
  // psi(t, x, v) = g(v) with g supported on v > 0 and equal inflow at x = 0:
  // the state is stationary, and the one-function model spanned by g keeps it
  // exactly, so its density error vanishes against the discrete density of g.
  auto gfun = [](double v) { return v > 0.0 ? v * v : 0.0; };
  auto p = oracle::constant_problem(0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0);
  p.initial = [&](double, double v) { return gfun(v); };
  p.inflow_left = [&](double, double v) { return gfun(v); };
  const auto vg = make_grid(32);
  const auto fem = assemble_operators(vg);
  const SpaceGrid sg(0, 1, 16);
  const std::vector<double> times = {0.5, 1.0};
  const Eigen::VectorXd gn = interpolate(gfun, vg).values;
  const double mass = oracle::fem_integral(gn, Eigen::VectorXd::Ones(vg.n_nodes()),
                                           [](double, double a, double b) { return a * b; });
  const auto ref = constant_density(sg, times, mass);

  std::vector<NodalFunction> snaps = {interpolate([](double v) { return v; }, vg),
                                      interpolate([](double v) { return 1 - v * v; }, vg),
                                      interpolate([&](double v) { return 3.0 * gfun(v); }, vg),
                                      NodalFunction::constant(vg, 1.0)};
  GreedyOptions opt;
  opt.comparison_times = times;
  const auto rep = greedy_basis_generation(snaps, p, fem, sg, 1, ref, opt);
  REQUIRE(rep.chosen_indices.size() == 1);
  CHECK(rep.chosen_indices[0] == 2);
  CHECK(rep.error_table[0] <= 1e-12);
  const Eigen::VectorXd b = rep.bases[0].functions.col(0);
  CHECK((b / b.dot(fem.mass.apply(gn)) * gn.dot(fem.mass.apply(gn)) - gn).cwiseAbs().maxCoeff() <= 1e-10);
}

TEST_CASE("greedy bookkeeping on the beam problem") {
  const auto p = sourcebeam();
  const int e = 3;
  const auto level = mesh_level(p, e);
  const auto vg = make_grid(level.n_v);
  const auto fem = assemble_operators(vg);
  const auto sg = make_space_grid(p, level.n_x);
  const auto times = uniform_times(4.0, 16);
  const auto ref = reference_density(p, 2 * level.n_x, 2 * level.n_v, times, 0.9);
  const auto sol = solve_reference(p, level.n_x, level.n_v, times, 0.9);
  const auto snaps = truth_snapshots(sol, 12, 16, 4.0);
  GreedyOptions opt;
  opt.threads = 2;
  const auto rep = greedy_basis_generation(snaps, p, fem, sg, 4, ref, opt);
  REQUIRE(rep.error_table.size() == 4);
  for (std::size_t m = 0; m < 4; ++m) {
    CHECK(rep.bases[m].size() == static_cast<int>(m + 1));
    const auto ops = reduced_operators(rep.bases[m], fem);
    CHECK((ops.M - Eigen::MatrixXd::Identity(m + 1, m + 1)).cwiseAbs().maxCoeff() <= 1e-10);
    // argmin with lowest-index ties
    const auto& cand = rep.candidate_errors[m];
    const int chosen = rep.chosen_indices[m];
    REQUIRE(cand[chosen]);
    CHECK(*cand[chosen] == rep.error_table[m]);
    for (std::size_t n = 0; n < cand.size(); ++n) {
      if (!cand[n]) continue;
      CHECK(rep.error_table[m] <= *cand[n]);
      if (static_cast<int>(n) < chosen) CHECK(rep.error_table[m] < *cand[n]);
    }
    // previously chosen snapshots are rejected by Gram-Schmidt
    for (std::size_t k = 0; k < m; ++k) CHECK_FALSE(cand[rep.chosen_indices[k]]);
  }
  // hierarchical: each basis extends the previous one
  for (std::size_t m = 1; m < 4; ++m)
    CHECK((rep.bases[m].functions.leftCols(m) - rep.bases[m - 1].functions).isZero(0.0));

  opt.threads = 1;
  const auto again = greedy_basis_generation(snaps, p, fem, sg, 4, ref, opt);
  CHECK(again.chosen_indices == rep.chosen_indices);
  CHECK(again.error_table == rep.error_table);
}

TEST_CASE("greedy stops when the snapshot span is exhausted") {
  const auto p = oracle::constant_problem(0.5, 1.0, 0.0, 1.0, 1.0, 1.0);
  const auto vg = make_grid(8);
  const auto fem = assemble_operators(vg);
  const SpaceGrid sg(0, 1, 8);
  const std::vector<double> times = {1.0};
  const auto ref = reference_density(p, 16, 16, times, 0.9);
  std::vector<NodalFunction> snaps = {NodalFunction::constant(vg, 1.0), NodalFunction::constant(vg, 2.0)};
  GreedyOptions opt;
  opt.comparison_times = times;
  const auto rep = greedy_basis_generation(snaps, p, fem, sg, 3, ref, opt);
  CHECK(rep.bases.size() == 1);
  CHECK(rep.stopped_early);
  CHECK_THROWS_AS(greedy_basis_generation({}, p, fem, sg, 3, ref, opt), std::invalid_argument);
  CHECK_THROWS_AS(greedy_basis_generation(snaps, p, fem, sg, 0, ref, opt), std::invalid_argument);
}

TEST_CASE("any basis of the full velocity space gives the same error") {
  // with the whole P1 space in the basis the moment model is the velocity
  // discretization itself; only the spatial discretization error remains
  const auto p = sourcebeam();
  const auto vg = make_grid(4);
  const auto fem = assemble_operators(vg);
  const SpaceGrid sg(0, 3, 24);
  const auto times = uniform_times(4.0, 16);
  const auto ref = reference_density(p, 96, 64, times, 0.9);
  VelocityBasis full(vg);
  for (int i = 0; i < vg.n_nodes(); ++i)
    full = *gram_schmidt_extend(full, NodalFunction(vg, Eigen::VectorXd::Unit(vg.n_nodes(), i)), fem);
  const double e_full = moment_model_error(p, full, fem, sg, ref, times, 0.9);
  const double e_leg = moment_model_error(p, legendre_basis(5, vg, fem), fem, sg, ref, times, 0.9);
  CHECK(std::isfinite(e_full));
  CHECK(e_full == Approx(e_leg).epsilon(1e-8));
}

TEST_CASE("legendre study with one model order") {
  StudyConfig c;
  c.problem = sourcebeam();
  c.exponents = {3};
  c.m_max = 1;
  const auto times = uniform_times(4.0, 16);
  const auto ref = reference_density(c.problem, 48, 32, times, 0.9);
  const auto r = run_error_study(Method::legendre, c, ref);
  REQUIRE(r.report.rows.size() == 1);
  CHECK(r.report.rows[0].method == "legendre");
  CHECK(r.report.rows[0].m == 1);
  CHECK(r.report.rows[0].h == 0.125);

  StudyConfig self = c;
  self.exponents = {4};
  const auto full = run_error_study(Method::full, self, ref);
  CHECK(full.report.rows[0].error == 0.0);
  CHECK_THROWS_AS(mesh_level(c.problem, 0), std::invalid_argument);
  auto odd = oracle::constant_problem(0, 0, 0, 0, 0, 0, 1.0, 0.0, 1.1);
  CHECK_THROWS_AS(mesh_level(odd, 3), std::invalid_argument);
}
