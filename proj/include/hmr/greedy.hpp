#pragma once

// Greedy selection of a velocity basis from a snapshot set, scored by the
// true density error of the resulting moment model against a reference.

#include <chrono>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "hmr/basis.hpp"
#include "hmr/moment_solver.hpp"
#include "hmr/parallel.hpp"
#include "hmr/problem.hpp"
#include "hmr/reference_solver.hpp"
#include "hmr/velocity_fem.hpp"

namespace hmr {

/// Reference density averaged onto the cells of `coarse`.
inline Eigen::VectorXd aggregate_to(const Eigen::VectorXd& fine, const SpaceGrid& fine_grid,
                                    const SpaceGrid& coarse) {
  if (fine_grid.a != coarse.a || fine_grid.b != coarse.b)
    throw std::invalid_argument("relative_l1_error: spatial domains differ");
  if (fine_grid.n_cells % coarse.n_cells != 0)
    throw std::invalid_argument("relative_l1_error: reference grid (" +
                                std::to_string(fine_grid.n_cells) +
                                " cells) does not refine the test grid (" +
                                std::to_string(coarse.n_cells) + " cells)");
  const int r = fine_grid.n_cells / coarse.n_cells;
  Eigen::VectorXd out(coarse.n_cells);
  for (int j = 0; j < coarse.n_cells; ++j) out[j] = fine.segment(j * r, r).mean();
  return out;
}

/// Space-time relative L1 error of the density over `times`:
///   sum_t sum_j |rho - rho_ref| h / sum_t sum_j |rho_ref| h
/// with the reference averaged onto the test grid.
inline double relative_l1_error(const DensityField& test, const DensityField& reference,
                                const std::vector<double>& times) {
  if (times.empty()) throw std::invalid_argument("relative_l1_error: no comparison times");
  double num = 0.0, den = 0.0;
  const double h = test.grid.h();
  for (double t : times) {
    const int it = test.find_time(t);
    const int ir = reference.find_time(t);
    if (it < 0 || ir < 0)
      throw std::invalid_argument("relative_l1_error: comparison time " + std::to_string(t) +
                                  " missing");
    const Eigen::VectorXd ref = aggregate_to(reference.values[ir], reference.grid, test.grid);
    num += (test.values[it] - ref).cwiseAbs().sum() * h;
    den += ref.cwiseAbs().sum() * h;
  }
  if (den == 0.0) throw std::invalid_argument("relative_l1_error: reference density vanishes");
  return num / den;
}

struct GreedyOptions {
  double gs_tol = kDefaultGramSchmidtTol;
  double cfl = 0.9;
  std::vector<double> comparison_times;  // empty: 16 uniform times on (0, t_end]
  unsigned threads = 0;
  std::function<void(int m, int chosen, double error)> on_level;  // progress hook
};

struct GreedyReport {
  std::vector<VelocityBasis> bases;  // bases[m - 1] has m functions
  std::vector<int> chosen_indices;
  std::vector<double> error_table;
  /// Per level, the error of every candidate; nullopt where Gram-Schmidt rejected it.
  std::vector<std::vector<std::optional<double>>> candidate_errors;
  std::vector<double> level_seconds;
  bool stopped_early = false;
};

inline std::vector<double> comparison_times_or_default(const std::vector<double>& times,
                                                       const KineticProblem& problem) {
  return times.empty() ? uniform_times(problem.t_end, 16) : times;
}

/// Density error of the moment model with `basis`; +inf when the basis is
/// degenerate or the explicit scheme blows up.
inline double moment_model_error(const KineticProblem& problem, const VelocityBasis& basis,
                                 const FemOperators& fem, const SpaceGrid& space_grid,
                                 const DensityField& reference, const std::vector<double>& times,
                                 double cfl) {
  try {
    const auto ops = reduced_operators(basis, fem);
    const auto field = solve_moment_system(problem, basis, ops, fem, space_grid, times, cfl);
    return relative_l1_error(spatial_density(field, ops), reference, times);
  } catch (const DegenerateBasis&) {
    return std::numeric_limits<double>::infinity();
  } catch (const SolverDiverged&) {
    return std::numeric_limits<double>::infinity();
  }
}

inline GreedyReport greedy_basis_generation(const std::vector<NodalFunction>& snapshots,
                                            const KineticProblem& problem,
                                            const FemOperators& fem, const SpaceGrid& space_grid,
                                            int m_max, const DensityField& reference,
                                            const GreedyOptions& opt = {}) {
  if (m_max < 1) throw std::invalid_argument("greedy_basis_generation: m_max must be positive");
  if (snapshots.empty()) throw std::invalid_argument("greedy_basis_generation: no snapshots");
  for (const auto& s : snapshots) check_same_grid(s.grid, fem.grid, "greedy_basis_generation");
  const auto times = comparison_times_or_default(opt.comparison_times, problem);

  GreedyReport report;
  VelocityBasis current(fem.grid);
  for (int m = 1; m <= m_max; ++m) {
    const auto start = std::chrono::steady_clock::now();
    std::vector<std::optional<VelocityBasis>> extended(snapshots.size());
    std::vector<std::optional<double>> errors(snapshots.size());
    parallel_for(
        snapshots.size(),
        [&](std::size_t n) {
          extended[n] = gram_schmidt_extend(current, snapshots[n], fem, opt.gs_tol);
          if (extended[n])
            errors[n] = moment_model_error(problem, *extended[n], fem, space_grid, reference,
                                           times, opt.cfl);
        },
        opt.threads);

    int best = -1;
    bool any_accepted = false;
    for (std::size_t n = 0; n < snapshots.size(); ++n) {
      if (!errors[n]) continue;
      any_accepted = true;
      if (std::isfinite(*errors[n]) && (best < 0 || *errors[n] < *errors[best]))
        best = static_cast<int>(n);
    }
    if (!any_accepted) {
      report.stopped_early = true;
      break;
    }
    if (best < 0)
      throw std::runtime_error("greedy_basis_generation: every candidate diverged at m = " +
                               std::to_string(m));

    current = std::move(*extended[best]);
    report.bases.push_back(current);
    report.chosen_indices.push_back(best);
    report.error_table.push_back(*errors[best]);
    report.candidate_errors.push_back(std::move(errors));
    report.level_seconds.push_back(
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count());
    if (opt.on_level) opt.on_level(m, best, report.error_table.back());
  }
  return report;
}

}  // namespace hmr
