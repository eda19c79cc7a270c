#pragma once

// Error studies over mesh sizes h = 2^-n: Legendre moment models, greedy
// bases from truth-snapshots or from parametrized-PDE snapshots, and the
// discretization error of the full solver itself.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "hmr/greedy.hpp"
#include "hmr/snapshot_pde.hpp"

namespace hmr {

enum class Method { legendre, greedy_truth, greedy_pde, full };

inline std::string method_name(Method m) {
  switch (m) {
    case Method::legendre: return "legendre";
    case Method::greedy_truth: return "greedy_truth";
    case Method::greedy_pde: return "greedy_pde";
    case Method::full: return "full";
  }
  return "unknown";
}

struct ErrorRow {
  std::string method;
  double h = 0.0;
  int m = 0;  // 0 for the full solver
  double error = 0.0;
};

struct ErrorReport {
  std::vector<ErrorRow> rows;
};

/// Discretization for mesh exponent n: h_x = h_v = 2^-n.
struct MeshLevel {
  int exponent;
  double h;
  int n_x;
  int n_v;
};

inline MeshLevel mesh_level(const KineticProblem& problem, int exponent) {
  if (exponent < 1 || exponent > 20) throw std::invalid_argument("mesh exponent out of range");
  const double h = std::ldexp(1.0, -exponent);
  const double cells = (problem.x_max - problem.x_min) / h;
  const int n_x = static_cast<int>(std::lround(cells));
  if (std::abs(cells - n_x) > 1e-9 * cells)
    throw std::invalid_argument("domain length is not a multiple of h = 2^-" + std::to_string(exponent));
  return {exponent, h, n_x, 2 << exponent};
}

struct StudyConfig {
  KineticProblem problem;
  std::vector<int> exponents;
  int m_max = 13;
  double cfl = 0.9;
  std::vector<double> comparison_times;  // empty: 16 uniform times
  int n_sample = 5000;
  std::uint64_t seed = 1;
  ParameterBox box;
  double gs_tol = kDefaultGramSchmidtTol;
  unsigned threads = 0;
  int truth_x_points = 12;
  int truth_t_points = 16;
  std::function<void(const std::string&)> log;
};

struct StudyResult {
  ErrorReport report;
  /// Greedy runs per mesh exponent (greedy methods only).
  std::vector<std::pair<int, GreedyReport>> greedy;
};

namespace detail {
inline void log(const StudyConfig& c, const std::string& msg) {
  if (c.log) c.log(msg);
}
}  // namespace detail

/// Sorted union of two time lists.
inline std::vector<double> merged_times(const std::vector<double>& a, const std::vector<double>& b) {
  std::vector<double> t = a;
  for (double x : b) {
    bool present = false;
    for (double y : t) present = present || std::abs(x - y) <= 1e-12 * std::max(1.0, x);
    if (!present) t.push_back(x);
  }
  std::sort(t.begin(), t.end());
  return t;
}

/// Snapshot set used by a greedy method at one mesh level.
inline std::vector<NodalFunction> study_snapshots(Method method, const StudyConfig& c,
                                                  const MeshLevel& level, const FemOperators& fem) {
  if (method == Method::greedy_truth) {
    const auto truth_times = uniform_times(c.problem.t_end, c.truth_t_points);
    const auto sol = solve_reference(c.problem, level.n_x, level.n_v, truth_times, c.cfl);
    return truth_snapshots(sol, c.truth_x_points, c.truth_t_points, c.problem.t_end);
  }
  auto set = generate_snapshot_set(c.box, c.n_sample, c.seed, c.problem, fem.grid, fem, c.threads);
  for (const auto& f : set.failures) detail::log(c, "dropped snapshot: " + f);
  return std::move(set.snapshots);
}

inline StudyResult run_error_study(Method method, const StudyConfig& c,
                                   const DensityField& reference) {
  if (c.m_max < 1) throw std::invalid_argument("run_error_study: m_max must be positive");
  const auto times = comparison_times_or_default(c.comparison_times, c.problem);
  StudyResult result;
  for (int e : c.exponents) {
    const MeshLevel level = mesh_level(c.problem, e);
    const VelocityGrid vg(level.n_v);
    const FemOperators fem = assemble_operators(vg);
    const SpaceGrid sg = make_space_grid(c.problem, level.n_x);

    if (method == Method::full) {
      const auto d = reference_density(c.problem, level.n_x, level.n_v, times, c.cfl);
      result.report.rows.push_back({"full", level.h, 0, relative_l1_error(d, reference, times)});
      detail::log(c, "full h=2^-" + std::to_string(e) + " error " +
                         std::to_string(result.report.rows.back().error));
      continue;
    }

    if (method == Method::legendre) {
      for (int m = 1; m <= c.m_max; ++m) {
        const auto basis = legendre_basis(m, vg, fem);
        const double err = moment_model_error(c.problem, basis, fem, sg, reference, times, c.cfl);
        result.report.rows.push_back({"legendre", level.h, m, err});
        detail::log(c, "legendre h=2^-" + std::to_string(e) + " m=" + std::to_string(m) +
                           " error " + std::to_string(err));
      }
      continue;
    }

    const auto snapshots = study_snapshots(method, c, level, fem);
    detail::log(c, method_name(method) + " h=2^-" + std::to_string(e) + ": " +
                       std::to_string(snapshots.size()) + " snapshots");
    GreedyOptions opt;
    opt.gs_tol = c.gs_tol;
    opt.cfl = c.cfl;
    opt.comparison_times = times;
    opt.threads = c.threads;
    opt.on_level = [&](int m, int chosen, double err) {
      detail::log(c, method_name(method) + " h=2^-" + std::to_string(e) + " m=" +
                         std::to_string(m) + " chosen " + std::to_string(chosen) + " error " +
                         std::to_string(err));
    };
    auto report = greedy_basis_generation(snapshots, c.problem, fem, sg, c.m_max, reference, opt);
    for (std::size_t k = 0; k < report.error_table.size(); ++k)
      result.report.rows.push_back(
          {method_name(method), level.h, static_cast<int>(k) + 1, report.error_table[k]});
    result.greedy.emplace_back(e, std::move(report));
  }
  return result;
}

}  // namespace hmr
