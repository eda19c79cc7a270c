// hmr_fp: error studies for reduced velocity models of the 1D Fokker-Planck
// equation.
//
//   hmr_fp reference --h-exponents 3..7 --ref-exponent 9
//   hmr_fp legendre  --h-exponents 3..5 --m-max 13
//   hmr_fp greedy    --source truth --h-exponents 4
//   hmr_fp greedy    --source pde --n-sample 500 --seed 1
//   hmr_fp report
//
// Every command reads an optional INI file (--config); flags override it.
// Results go to --out (default ./results).

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "hmr/config.hpp"
#include "hmr/io.hpp"
#include "hmr/study.hpp"

namespace fs = std::filesystem;
using namespace hmr;

namespace {

struct Overrides {
  std::string config_path;
  std::optional<std::string> scenario, h_exponents, source, out;
  std::optional<int> ref_exponent, m_max, n_sample, n_compare;
  std::optional<std::uint64_t> seed;
  std::optional<double> cfl;
  unsigned threads = 0;
  bool dump_full = false;
};

void add_common(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--config", o.config_path, "INI file with [run], [box] and [problem] sections");
  cmd->add_option("--scenario", o.scenario, "sourcebeam or custom");
  cmd->add_option("--h-exponents", o.h_exponents, "mesh exponents n (h = 2^-n), e.g. 3..7 or 3,4");
  cmd->add_option("--ref-exponent", o.ref_exponent, "reference mesh exponent");
  cmd->add_option("--m-max", o.m_max, "largest model order");
  cmd->add_option("--cfl", o.cfl, "CFL number in (0, 1]");
  cmd->add_option("--n-compare", o.n_compare, "number of comparison times");
  cmd->add_option("--out", o.out, "output directory");
  cmd->add_option("--threads", o.threads, "worker threads (0: hardware concurrency)");
}

RunConfig resolve(const Overrides& o) {
  RunConfig c = o.config_path.empty() ? RunConfig{} : load_config(o.config_path);
  if (o.scenario) c.scenario = *o.scenario;
  if (o.h_exponents) c.h_exponents = config_detail::parse_exponents(*o.h_exponents);
  if (o.ref_exponent) c.ref_exponent = *o.ref_exponent;
  if (o.m_max) c.m_max = *o.m_max;
  if (o.source) c.source = *o.source;
  if (o.n_sample) c.n_sample = *o.n_sample;
  if (o.seed) c.seed = *o.seed;
  if (o.cfl) c.cfl = *o.cfl;
  if (o.n_compare) c.n_compare = *o.n_compare;
  if (o.out) c.out = *o.out;
  c.validate();
  return c;
}

void log(const std::string& msg) { std::cerr << msg << std::endl; }

StudyConfig study_config(const RunConfig& c, unsigned threads) {
  StudyConfig s;
  s.problem = c.make_problem();
  s.exponents = c.h_exponents;
  s.m_max = c.m_max;
  s.cfl = c.cfl;
  s.comparison_times = uniform_times(s.problem.t_end, c.n_compare);
  s.n_sample = c.n_sample;
  s.seed = c.seed;
  s.box = c.box;
  s.threads = threads;
  s.log = log;
  return s;
}

/// Reference density at the reference exponent, computed once per content hash.
DensityField reference(const RunConfig& c, const KineticProblem& problem, bool dump_full) {
  const MeshLevel level = mesh_level(problem, c.ref_exponent);
  const auto times = uniform_times(problem.t_end, c.n_compare);
  const fs::path cache = fs::path(c.out) / "cache" /
                         ("reference_e" + std::to_string(level.exponent) + "_" +
                          reference_key(c, level.exponent) + ".csv");
  const SpaceGrid sg = make_space_grid(problem, level.n_x);
  if (fs::exists(cache) && !dump_full) {
    log("reference: cached " + cache.string());
    return io::read_density_csv(cache, sg);
  }
  log("reference: solving at h = 2^-" + std::to_string(level.exponent) + " (" +
      std::to_string(level.n_x) + " x " + std::to_string(level.n_v + 1) + ")");
  DensityField d;
  if (dump_full) {
    const auto sol = solve_reference(problem, level.n_x, level.n_v, times, c.cfl);
    for (const auto& w : sol.warnings) log(w);
    for (std::size_t k = 0; k < sol.times.size(); ++k) {
      char name[64];
      std::snprintf(name, sizeof name, "psi_e%d_t%.4f.txt", level.exponent, sol.times[k]);
      io::write_functions(fs::path(c.out) / "full" / name, sol.velocity_grid,
                          sol.data[k].transpose());
    }
    d = density_of_full(sol);
  } else {
    std::vector<std::string> warnings;
    d = reference_density(problem, level.n_x, level.n_v, times, c.cfl, &warnings);
    for (const auto& w : warnings) log(w);
  }
  io::write_density_csv(cache, d);
  return d;
}

void write_effective_config(const RunConfig& c, const std::string& name) {
  auto out = io::open_out(fs::path(c.out) / (name + ".ini"));
  out << serialize_config(c);
}

int cmd_reference(const RunConfig& c, const Overrides& o) {
  const auto problem = c.make_problem();
  const auto ref = reference(c, problem, o.dump_full);
  io::write_density_csv(fs::path(c.out) / "reference_density.csv", ref);
  const auto result = run_error_study(Method::full, study_config(c, o.threads), ref);
  io::write_error_csv(fs::path(c.out) / "discretization.csv", result.report);
  write_effective_config(c, "reference");
  return 0;
}

int cmd_legendre(const RunConfig& c, const Overrides& o) {
  const auto problem = c.make_problem();
  const auto ref = reference(c, problem, false);
  const auto result = run_error_study(Method::legendre, study_config(c, o.threads), ref);
  io::write_error_csv(fs::path(c.out) / "legendre.csv", result.report);
  write_effective_config(c, "legendre");
  return 0;
}

int cmd_greedy(const RunConfig& c, const Overrides& o) {
  const auto problem = c.make_problem();
  const auto ref = reference(c, problem, false);
  const Method method = c.source == "truth" ? Method::greedy_truth : Method::greedy_pde;
  const auto result = run_error_study(method, study_config(c, o.threads), ref);
  const std::string name = method_name(method);
  io::write_error_csv(fs::path(c.out) / (name + ".csv"), result.report);
  for (const auto& [e, g] : result.greedy) {
    const std::string stem = name + "_e" + std::to_string(e) + "_" + greedy_key(c, e);
    if (!g.bases.empty()) io::write_basis(fs::path(c.out) / "bases" / (stem + ".txt"), g.bases.back());
    io::write_greedy_csv(fs::path(c.out) / "bases" / (stem + "_chosen.csv"), g);
    if (g.stopped_early) log(name + " h=2^-" + std::to_string(e) + ": snapshot set exhausted");
  }
  write_effective_config(c, name);
  return 0;
}

int cmd_report(const RunConfig& c) {
  const std::vector<std::string> methods = {"legendre", "greedy_truth", "greedy_pde"};
  std::map<std::string, ErrorReport> found;
  std::vector<std::string> missing;
  for (const auto& m : methods) {
    const fs::path p = fs::path(c.out) / (m + ".csv");
    if (fs::exists(p))
      found[m] = io::read_error_csv(p);
    else
      missing.push_back(p.filename().string());
  }
  std::map<double, double> disc;  // h -> discretization error
  const fs::path dp = fs::path(c.out) / "discretization.csv";
  if (fs::exists(dp))
    for (const auto& r : io::read_error_csv(dp).rows) disc[r.h] = r.error;
  else
    missing.push_back(dp.filename().string());
  if (found.empty() && disc.empty())
    throw std::runtime_error("nothing to report in " + c.out);
  for (const auto& m : missing) log("report: missing " + m);

  // (h descending, m ascending) -> method -> error
  struct Order {
    bool operator()(const std::pair<double, int>& a, const std::pair<double, int>& b) const {
      return a.first != b.first ? a.first > b.first : a.second < b.second;
    }
  };
  std::map<std::pair<double, int>, std::map<std::string, double>, Order> table;
  for (const auto& [name, rep] : found)
    for (const auto& r : rep.rows) table[{r.h, r.m}][name] = r.error;

  auto cell = [](const std::map<std::string, double>& row, const std::string& key) {
    auto it = row.find(key);
    char buf[32];
    if (it == row.end())
      std::snprintf(buf, sizeof buf, "%14s", "-");
    else
      std::snprintf(buf, sizeof buf, "%14.6e", it->second);
    return std::string(buf);
  };
  std::printf("%10s %4s", "h", "m");
  for (const auto& m : methods) std::printf(" %14s", m.c_str());
  std::printf(" %14s\n", "full");
  for (const auto& [key, row] : table) {
    std::printf("%10.3e %4d", key.first, key.second);
    for (const auto& m : methods) std::printf(" %s", cell(row, m).c_str());
    auto d = disc.find(key.first);
    if (d == disc.end())
      std::printf(" %14s\n", "-");
    else
      std::printf(" %14.6e\n", d->second);
  }
  if (table.empty())
    for (const auto& [h, e] : disc) std::printf("%10.3e %4d %14s %14s %14s %14.6e\n", h, 0, "-", "-", "-", e);

  std::set<double> hs;
  for (const auto& [key, row] : table) hs.insert(key.first);
  for (const auto& [h, e] : disc) hs.insert(h);
  for (double h : hs) {
    const int n = static_cast<int>(std::lround(-std::log2(h)));
    auto out = io::open_out(fs::path(c.out) / ("plot_e" + std::to_string(n) + ".dat"));
    out << "# m legendre greedy_truth greedy_pde discretization\n";
    const auto d = disc.find(h);
    const std::string dcol = d == disc.end() ? "nan" : io::fmt(d->second);
    for (const auto& [key, row] : table) {
      if (key.first != h) continue;
      out << key.second;
      for (const auto& m : methods) {
        auto it = row.find(m);
        out << ' ' << (it == row.end() ? std::string("nan") : io::fmt(it->second));
      }
      out << ' ' << dcol << '\n';
    }
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Reduced velocity models for the 1D Fokker-Planck equation"};
  app.require_subcommand(1);
  Overrides o;

  auto* ref = app.add_subcommand("reference", "full solver: reference density and discretization errors");
  add_common(ref, o);
  ref->add_flag("--dump-full", o.dump_full, "also write phase-space fields at the comparison times");

  auto* leg = app.add_subcommand("legendre", "Legendre moment models for m = 1..m_max");
  add_common(leg, o);

  auto* gr = app.add_subcommand("greedy", "greedy basis from truth- or PDE-snapshots");
  add_common(gr, o);
  gr->add_option("--source", o.source, "snapshot source")->check(CLI::IsMember({"truth", "pde"}));
  gr->add_option("--n-sample", o.n_sample, "number of PDE snapshots");
  gr->add_option("--seed", o.seed, "sampling seed");

  auto* rep = app.add_subcommand("report", "merge error tables and write plot data");
  add_common(rep, o);

  CLI11_PARSE(app, argc, argv);

  try {
    const RunConfig c = resolve(o);
    if (*ref) return cmd_reference(c, o);
    if (*leg) return cmd_legendre(c, o);
    if (*gr) return cmd_greedy(c, o);
    return cmd_report(c);
  } catch (const std::exception& e) {
    std::cerr << "hmr_fp: " << e.what() << '\n';
    return 1;
  }
}
