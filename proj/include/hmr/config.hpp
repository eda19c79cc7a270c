#pragma once

// Experiment configuration: an INI file with sections [run], [box] and,
// for scenario = custom, [problem]. Command-line flags override the file.
//
//   [run]
//   scenario = sourcebeam          ; or custom
//   h_exponents = 3,4,5            ; h = 2^-n, also accepts 3..7
//   ref_exponent = 9
//   m_max = 13
//   source = truth                 ; truth | pde
//   n_sample = 5000
//   seed = 1
//   cfl = 0.9
//   out = results
//   n_compare = 16                 ; comparison times t_end*j/n_compare
//
//   [box]                          ; lo,hi per coordinate
//   t = 0,4
//   x = 1,3
//   P = 0.01,1.2
//   dxP = -5.4,0.9
//   dtP = 0,5
//   boundary = 0,1
//
//   [problem]                      ; piecewise constants: n breakpoints, n+1 values;
//                                  ; a field listed here replaces its default whole
//   x_min = 0
//   x_max = 3
//   t_end = 4
//   sigma_a_breakpoints = 2
//   sigma_a_values = 1,0
//   transport_breakpoints = 1,2
//   transport_values = 0,2,10
//   source_breakpoints = 1,1.5
//   source_values = 0,1,0
//   source_right_closed = 1,0      ; optional, 1 attaches the breakpoint to the right piece
//   initial = 1e-4
//   left_delta = 1                 ; optional delta(v-1) amplitude, else left_value
//   left_value = 0
//   right_value = 1e-4

#include <cstdint>
#include <filesystem>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "hmr/io.hpp"
#include "hmr/problem.hpp"
#include "hmr/snapshot_pde.hpp"

namespace hmr {

struct RunConfig {
  std::string scenario = "sourcebeam";
  std::vector<int> h_exponents = {3, 4, 5, 6, 7};
  int ref_exponent = 9;
  int m_max = 13;
  std::string source = "truth";
  int n_sample = 5000;
  std::uint64_t seed = 1;
  double cfl = 0.9;
  std::string out = "results";
  int n_compare = 16;
  ParameterBox box = ParameterBox::sourcebeam_default();
  PiecewiseProblemSpec problem = sourcebeam_spec();

  void validate() const {
    if (scenario != "sourcebeam" && scenario != "custom")
      throw std::invalid_argument("unknown scenario '" + scenario + "'");
    if (h_exponents.empty()) throw std::invalid_argument("h_exponents is empty");
    for (int e : h_exponents)
      if (e > ref_exponent)
        throw std::invalid_argument("ref_exponent must be at least every study exponent");
    if (m_max < 1) throw std::invalid_argument("m_max must be positive");
    if (source != "truth" && source != "pde")
      throw std::invalid_argument("source must be 'truth' or 'pde'");
    if (source == "pde" && n_sample < 1) throw std::invalid_argument("n_sample must be positive");
    if (!(cfl > 0.0 && cfl <= 1.0)) throw std::invalid_argument("cfl must be in (0, 1]");
    if (n_compare < 1) throw std::invalid_argument("n_compare must be positive");
  }

  KineticProblem make_problem() const {
    return scenario == "sourcebeam" ? sourcebeam() : make_piecewise_problem(problem);
  }
};

namespace config_detail {

template <class T>
std::vector<T> parse_list(const std::string& text, const std::string& key) {
  std::vector<T> out;
  std::string item;
  std::stringstream ss(text);
  while (std::getline(ss, item, ',')) {
    const auto b = item.find_first_not_of(" \t");
    if (b == std::string::npos) continue;
    std::stringstream is(item.substr(b));
    T v;
    if (!(is >> v)) throw std::invalid_argument("bad list entry for " + key + ": '" + item + "'");
    out.push_back(v);
  }
  return out;
}

template <class T>
std::string join(const std::vector<T>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) s += ',';
    if constexpr (std::is_floating_point_v<T>)
      s += io::fmt(v[i]);
    else
      s += std::to_string(v[i]);
  }
  return s;
}

inline Interval parse_interval(const std::string& text, const std::string& key) {
  const auto v = parse_list<double>(text, key);
  if (v.size() != 2) throw std::invalid_argument(key + " needs 'lo,hi'");
  return {v[0], v[1]};
}

inline std::string interval_text(const Interval& iv) { return io::fmt(iv.lo) + "," + io::fmt(iv.hi); }

inline PiecewiseConstant parse_piecewise(const boost::property_tree::ptree& sec,
                                         const std::string& name, const PiecewiseConstant& def) {
  // a field given in the file replaces the default as a whole
  const bool given = sec.get_optional<std::string>(name + "_breakpoints") ||
                     sec.get_optional<std::string>(name + "_values");
  if (!given) return def;
  PiecewiseConstant p;
  if (auto b = sec.get_optional<std::string>(name + "_breakpoints"))
    p.breakpoints = parse_list<double>(*b, name + "_breakpoints");
  if (auto v = sec.get_optional<std::string>(name + "_values"))
    p.values = parse_list<double>(*v, name + "_values");
  if (auto r = sec.get_optional<std::string>(name + "_right_closed")) {
    p.right_closed.clear();
    for (int f : parse_list<int>(*r, name + "_right_closed")) p.right_closed.push_back(f != 0);
  }
  p.validate(name);
  return p;
}

inline void put_piecewise(boost::property_tree::ptree& sec, const std::string& name,
                          const PiecewiseConstant& p) {
  sec.put(name + "_breakpoints", join(p.breakpoints));
  sec.put(name + "_values", join(p.values));
  if (!p.right_closed.empty()) {
    std::vector<int> flags;
    for (bool b : p.right_closed) flags.push_back(b ? 1 : 0);
    sec.put(name + "_right_closed", join(flags));
  }
}

/// Accepts "3,4,5" or "3..7".
inline std::vector<int> parse_exponents(const std::string& text) {
  const auto dots = text.find("..");
  if (dots != std::string::npos) {
    const int lo = std::stoi(text.substr(0, dots));
    const int hi = std::stoi(text.substr(dots + 2));
    if (hi < lo) throw std::invalid_argument("empty exponent range '" + text + "'");
    std::vector<int> v;
    for (int e = lo; e <= hi; ++e) v.push_back(e);
    return v;
  }
  return parse_list<int>(text, "h_exponents");
}

}  // namespace config_detail

inline RunConfig config_from_ptree(const boost::property_tree::ptree& pt) {
  using namespace config_detail;
  RunConfig c;
  if (auto run = pt.get_child_optional("run")) {
    c.scenario = run->get("scenario", c.scenario);
    if (auto e = run->get_optional<std::string>("h_exponents")) c.h_exponents = parse_exponents(*e);
    c.ref_exponent = run->get("ref_exponent", c.ref_exponent);
    c.m_max = run->get("m_max", c.m_max);
    c.source = run->get("source", c.source);
    c.n_sample = run->get("n_sample", c.n_sample);
    c.seed = run->get("seed", c.seed);
    c.cfl = run->get("cfl", c.cfl);
    c.out = run->get("out", c.out);
    c.n_compare = run->get("n_compare", c.n_compare);
  }
  if (auto box = pt.get_child_optional("box")) {
    auto iv = [&](const char* key, Interval& dst) {
      if (auto s = box->get_optional<std::string>(key)) dst = parse_interval(*s, key);
    };
    iv("t", c.box.t);
    iv("x", c.box.x);
    iv("P", c.box.P);
    iv("dxP", c.box.dxP);
    iv("dtP", c.box.dtP);
    iv("boundary", c.box.boundary);
    c.box.n_quad = box->get("n_quad", c.box.n_quad);
  }
  if (auto prob = pt.get_child_optional("problem")) {
    auto& p = c.problem;
    p.name = "custom";
    p.x_min = prob->get("x_min", p.x_min);
    p.x_max = prob->get("x_max", p.x_max);
    p.t_end = prob->get("t_end", p.t_end);
    p.sigma_a = parse_piecewise(*prob, "sigma_a", p.sigma_a);
    p.transport = parse_piecewise(*prob, "transport", p.transport);
    p.source = parse_piecewise(*prob, "source", p.source);
    p.initial = prob->get("initial", p.initial);
    if (auto d = prob->get_optional<double>("left_delta"))
      p.left_delta = *d;
    else if (prob->get_optional<std::string>("left_value"))
      p.left_delta.reset();
    p.left_value = prob->get("left_value", p.left_value);
    p.right_value = prob->get("right_value", p.right_value);
  }
  return c;
}

inline boost::property_tree::ptree config_to_ptree(const RunConfig& c) {
  using namespace config_detail;
  boost::property_tree::ptree pt, run, box, prob;
  run.put("scenario", c.scenario);
  run.put("h_exponents", join(c.h_exponents));
  run.put("ref_exponent", c.ref_exponent);
  run.put("m_max", c.m_max);
  run.put("source", c.source);
  run.put("n_sample", c.n_sample);
  run.put("seed", c.seed);
  run.put("cfl", io::fmt(c.cfl));
  run.put("out", c.out);
  run.put("n_compare", c.n_compare);
  pt.add_child("run", run);

  box.put("t", interval_text(c.box.t));
  box.put("x", interval_text(c.box.x));
  box.put("P", interval_text(c.box.P));
  box.put("dxP", interval_text(c.box.dxP));
  box.put("dtP", interval_text(c.box.dtP));
  box.put("boundary", interval_text(c.box.boundary));
  box.put("n_quad", c.box.n_quad);
  pt.add_child("box", box);

  if (c.scenario == "custom") {
    const auto& p = c.problem;
    prob.put("x_min", io::fmt(p.x_min));
    prob.put("x_max", io::fmt(p.x_max));
    prob.put("t_end", io::fmt(p.t_end));
    put_piecewise(prob, "sigma_a", p.sigma_a);
    put_piecewise(prob, "transport", p.transport);
    put_piecewise(prob, "source", p.source);
    prob.put("initial", io::fmt(p.initial));
    if (p.left_delta) prob.put("left_delta", io::fmt(*p.left_delta));
    prob.put("left_value", io::fmt(p.left_value));
    prob.put("right_value", io::fmt(p.right_value));
    pt.add_child("problem", prob);
  }
  return pt;
}

inline RunConfig parse_config(const std::string& text) {
  std::istringstream in(text);
  boost::property_tree::ptree pt;
  try {
    boost::property_tree::read_ini(in, pt);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw std::invalid_argument(std::string("config: ") + e.what());
  }
  return config_from_ptree(pt);
}

inline RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

inline std::string serialize_config(const RunConfig& c) {
  std::ostringstream out;
  boost::property_tree::write_ini(out, config_to_ptree(c));
  return out.str();
}

/// 64-bit FNV-1a, rendered as 16 hex digits.
inline std::string fnv1a_hex(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 0x100000001b3ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

/// Key for cached reference densities: problem data, mesh, cfl and
/// comparison times.
inline std::string reference_key(const RunConfig& c, int exponent) {
  RunConfig k;
  k.scenario = c.scenario;
  k.problem = c.problem;
  k.cfl = c.cfl;
  k.n_compare = c.n_compare;
  k.h_exponents = {exponent};
  k.ref_exponent = exponent;
  return fnv1a_hex(serialize_config(k));
}

/// Key for greedy artifacts: everything that influences the selected bases.
inline std::string greedy_key(const RunConfig& c, int exponent) {
  RunConfig k = c;
  k.h_exponents = {exponent};
  k.out.clear();
  if (k.source == "truth") {
    k.n_sample = 0;
    k.seed = 0;
    k.box = ParameterBox{};
  }
  return fnv1a_hex(serialize_config(k));
}

}  // namespace hmr
