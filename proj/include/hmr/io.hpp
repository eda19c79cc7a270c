#pragma once

// Plain-text artifacts: function matrices (bases, snapshot sets, phase-space
// dumps), density/moment CSVs and error tables.
//
// Function matrix format:
//   n_cells m
//   <n_cells + 1 nodal values of function 1>
//   ...
//   <n_cells + 1 nodal values of function m>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "hmr/basis.hpp"
#include "hmr/greedy.hpp"
#include "hmr/moment_solver.hpp"
#include "hmr/study.hpp"

namespace hmr::io {

/// Shortest round-trip decimal form ("%.17g").
inline std::string fmt(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

inline std::ofstream open_out(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  return out;
}

inline std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  return in;
}

inline void write_functions(const std::filesystem::path& path, const VelocityGrid& grid,
                            const Eigen::MatrixXd& columns) {
  auto out = open_out(path);
  out << grid.n_cells() << ' ' << columns.cols() << '\n';
  for (Eigen::Index c = 0; c < columns.cols(); ++c) {
    for (Eigen::Index i = 0; i < columns.rows(); ++i) out << (i ? " " : "") << fmt(columns(i, c));
    out << '\n';
  }
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

inline VelocityBasis read_functions(const std::filesystem::path& path) {
  auto in = open_in(path);
  int n_cells = 0, m = 0;
  if (!(in >> n_cells >> m) || n_cells < 2 || m < 0)
    throw std::runtime_error(path.string() + ": bad header");
  VelocityGrid grid(n_cells);
  Eigen::MatrixXd f(grid.n_nodes(), m);
  for (int c = 0; c < m; ++c)
    for (int i = 0; i < grid.n_nodes(); ++i)
      if (!(in >> f(i, c))) throw std::runtime_error(path.string() + ": truncated data");
  return {grid, std::move(f)};
}

inline void write_basis(const std::filesystem::path& path, const VelocityBasis& b) {
  write_functions(path, b.grid, b.functions);
}

inline VelocityBasis read_basis(const std::filesystem::path& path) { return read_functions(path); }

inline void write_snapshots(const std::filesystem::path& path,
                            const std::vector<NodalFunction>& snaps) {
  if (snaps.empty()) throw std::invalid_argument("write_snapshots: empty set");
  Eigen::MatrixXd cols(snaps.front().grid.n_nodes(), static_cast<Eigen::Index>(snaps.size()));
  for (std::size_t i = 0; i < snaps.size(); ++i) cols.col(i) = snaps[i].values;
  write_functions(path, snaps.front().grid, cols);
}

inline void write_density_csv(const std::filesystem::path& path, const DensityField& d) {
  auto out = open_out(path);
  out << "t,x,value\n";
  for (std::size_t k = 0; k < d.times.size(); ++k)
    for (int j = 0; j < d.grid.n_cells; ++j)
      out << fmt(d.times[k]) << ',' << fmt(d.grid.center(j)) << ',' << fmt(d.values[k][j]) << '\n';
}

/// Reads a density CSV written on `grid`; cell centers are checked.
inline DensityField read_density_csv(const std::filesystem::path& path, const SpaceGrid& grid) {
  auto in = open_in(path);
  std::string line;
  std::getline(in, line);
  if (line != "t,x,value") throw std::runtime_error(path.string() + ": unexpected header");
  DensityField d;
  d.grid = grid;
  int j = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    double t, x, v;
    if (std::sscanf(line.c_str(), "%lf,%lf,%lf", &t, &x, &v) != 3)
      throw std::runtime_error(path.string() + ": bad row '" + line + "'");
    if (j == 0) {
      d.times.push_back(t);
      d.values.emplace_back(grid.n_cells);
    }
    if (std::abs(x - grid.center(j)) > 1e-9 * (1.0 + std::abs(x)))
      throw std::runtime_error(path.string() + ": grid does not match");
    d.values.back()[j] = v;
    j = (j + 1) % grid.n_cells;
  }
  if (j != 0 || d.times.empty()) throw std::runtime_error(path.string() + ": incomplete field");
  return d;
}

inline void write_moment_csv(const std::filesystem::path& path, const MomentField& f) {
  auto out = open_out(path);
  const Eigen::Index m = f.data.empty() ? 0 : f.data.front().rows();
  out << "t,x";
  for (Eigen::Index i = 1; i <= m; ++i) out << ",p_" << i;
  out << '\n';
  for (std::size_t k = 0; k < f.times.size(); ++k)
    for (int j = 0; j < f.grid.n_cells; ++j) {
      out << fmt(f.times[k]) << ',' << fmt(f.grid.center(j));
      for (Eigen::Index i = 0; i < m; ++i) out << ',' << fmt(f.data[k](i, j));
      out << '\n';
    }
}

inline void write_error_csv(const std::filesystem::path& path, const ErrorReport& r) {
  auto out = open_out(path);
  out << "method,h,m,error\n";
  for (const auto& row : r.rows)
    out << row.method << ',' << fmt(row.h) << ',' << row.m << ',' << fmt(row.error) << '\n';
}

inline ErrorReport read_error_csv(const std::filesystem::path& path) {
  auto in = open_in(path);
  std::string line;
  std::getline(in, line);
  if (line != "method,h,m,error") throw std::runtime_error(path.string() + ": unexpected header");
  ErrorReport r;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    ErrorRow row;
    std::string h, m, e;
    if (!std::getline(ss, row.method, ',') || !std::getline(ss, h, ',') ||
        !std::getline(ss, m, ',') || !std::getline(ss, e))
      throw std::runtime_error(path.string() + ": bad row '" + line + "'");
    row.h = std::stod(h);
    row.m = std::stoi(m);
    row.error = std::stod(e);
    r.rows.push_back(row);
  }
  return r;
}

inline void write_greedy_csv(const std::filesystem::path& path, const GreedyReport& g) {
  auto out = open_out(path);
  out << "m,chosen_index,error\n";
  for (std::size_t k = 0; k < g.chosen_indices.size(); ++k)
    out << k + 1 << ',' << g.chosen_indices[k] << ',' << fmt(g.error_table[k]) << '\n';
}

}  // namespace hmr::io
