#pragma once

// Experiment front end: JSON run configuration, the five commands and their
// CSV/JSON reports. The executable in tools/ is a thin CLI11 wrapper.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "dqw/channels.hpp"
#include "dqw/limits.hpp"
#include "dqw/simulate.hpp"
#include "dqw/superoperator.hpp"
#include "dqw/walk.hpp"

namespace dqw::cli {

using json = nlohmann::ordered_json;

inline constexpr int kSchemaVersion = 1;

enum ExitCode : int {
  kExitOk = 0,
  kExitInvariantFailure = 1,
  kExitHypothesisViolation = 2,
  kExitConfigError = 3,
};

inline const std::set<std::string>& known_commands() {
  static const std::set<std::string> c{"simulate", "spectrum", "limit", "verify", "sweep"};
  return c;
}

// ---------------------------------------------------------------------------
// Complex matrices travel as nested arrays of [re, im] pairs.

inline json complex_to_json(cplx z) { return json::array({z.real(), z.imag()}); }

inline cplx complex_from_json(const json& j, const std::string& where) {
  if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number())
    throw ConfigurationError(where + ": expected a [re, im] pair");
  return {j[0].get<double>(), j[1].get<double>()};
}

inline json matrix_to_json(const CMatrix& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index k = 0; k < m.cols(); ++k) row.push_back(complex_to_json(m(i, k)));
    rows.push_back(std::move(row));
  }
  return rows;
}

inline CMatrix matrix_from_json(const json& j, Eigen::Index dim, const std::string& where) {
  if (!j.is_array() || static_cast<Eigen::Index>(j.size()) != dim)
    throw ConfigurationError(where + ": expected " + std::to_string(dim) + " rows");
  CMatrix m(dim, dim);
  for (Eigen::Index i = 0; i < dim; ++i) {
    const auto& row = j[i];
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != dim)
      throw ConfigurationError(where + ": row " + std::to_string(i) + " must have " +
                               std::to_string(dim) + " entries");
    for (Eigen::Index k = 0; k < dim; ++k)
      m(i, k) = complex_from_json(row[k], where + "[" + std::to_string(i) + "][" + std::to_string(k) + "]");
  }
  return m;
}

inline std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// ---------------------------------------------------------------------------

struct RunConfig {
  std::optional<std::string> command;
  json coin = "hadamard4";
  json channel = json{{"label", "measurement"}, {"p", 0.5}};
  json phi0;  // null means the symmetric Hadamard state
  std::optional<json> factored;
  int lattice_n = 8;
  int steps = 6;
  bool infinite_lattice = false;
  std::vector<std::string> pipelines{"direct", "fourier"};
  int quad_n = kDefaultQuadratureNodes;
  int grid_n = kDefaultMixtureGrid;
  std::vector<int> t_list{25, 50, 100, 200};
  std::vector<double> q_grid;  // empty means 61 points on [-3, 3]
  std::vector<int> ks_t_list{8, 16, 24};
  std::vector<double> p_list{0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9};
  std::vector<int> sweep_t_list{16, 20, 24, 28, 32};
  int verify_samples = 100;
  std::uint64_t seed = 0;

  // Resolved domain objects.
  CoinOperator coin_op() const;
  KrausChannel channel_op() const;
  ChiralityState phi0_state() const;
  std::optional<FactoredWalk> factored_walk() const;
  WalkConfig walk() const { return {coin_op(), channel_op(), phi0_state(), lattice_n, steps, infinite_lattice}; }
  std::vector<double> resolved_q_grid() const;

  json to_json() const;
};

namespace detail {

template <class T>
T get_checked(const json& j, const std::string& key) {
  try {
    return j.get<T>();
  } catch (const json::exception&) {
    throw ConfigurationError("config key '" + key + "' has the wrong type");
  }
}

inline void require(bool ok, const std::string& message) {
  if (!ok) throw ConfigurationError(message);
}

inline std::vector<Mat2> kraus2_from_json(const json& j, const std::string& where) {
  require(j.is_array() && !j.empty(), where + ": expected a non-empty list of 2x2 matrices");
  std::vector<Mat2> out;
  for (std::size_t i = 0; i < j.size(); ++i)
    out.push_back(matrix_from_json(j[i], 2, where + "[" + std::to_string(i) + "]"));
  return out;
}

}  // namespace detail

inline CoinOperator RunConfig::coin_op() const {
  if (coin.is_string()) return coin_by_label(coin.get<std::string>());
  detail::require(coin.is_object() && coin.contains("matrix"),
                  "coin must be a label or an object with a 'matrix' field");
  const std::string label = coin.value("label", std::string("custom"));
  try {
    return {matrix_from_json(coin["matrix"], 4, "coin.matrix"), label};
  } catch (const ValidationError& e) {
    throw ConfigurationError(e.what());
  }
}

inline KrausChannel RunConfig::channel_op() const {
  detail::require(channel.is_object(), "channel must be an object");
  for (const auto& [key, _] : channel.items())
    detail::require(key == "label" || key == "p" || key == "kraus", "unknown channel key '" + key + "'");
  const std::string label = channel.value("label", std::string("custom"));
  try {
    if (channel.contains("kraus")) {
      const auto& list = channel["kraus"];
      detail::require(list.is_array() && !list.empty(), "channel.kraus must be a non-empty list");
      std::vector<Mat4> ops;
      for (std::size_t i = 0; i < list.size(); ++i)
        ops.push_back(matrix_from_json(list[i], 4, "channel.kraus[" + std::to_string(i) + "]"));
      return {std::move(ops), label};
    }
    const double p = channel.contains("p") ? detail::get_checked<double>(channel["p"], "channel.p") : 0.0;
    return channel_by_label(label, p);
  } catch (const ValidationError& e) {
    throw ConfigurationError(e.what());
  } catch (const RangeError& e) {
    throw ConfigurationError(e.what());
  }
}

inline ChiralityState RunConfig::phi0_state() const {
  if (phi0.is_null()) return symmetric_hadamard_state();
  detail::require(phi0.is_array() && phi0.size() == 4, "phi0 must list 4 [re, im] amplitudes");
  Vec4 a;
  for (int i = 0; i < 4; ++i) a(i) = complex_from_json(phi0[i], "phi0[" + std::to_string(i) + "]");
  try {
    return ChiralityState(a);
  } catch (const ValidationError& e) {
    throw ConfigurationError(e.what());
  }
}

inline std::optional<FactoredWalk> RunConfig::factored_walk() const {
  if (!factored) return std::nullopt;
  const auto& f = *factored;
  for (const auto& [key, _] : f.items())
    detail::require(key == "coin_a" || key == "coin_b" || key == "kraus_a" || key == "kraus_b",
                    "unknown factored key '" + key + "'");
  detail::require(f.contains("coin_a") && f.contains("coin_b") && f.contains("kraus_a") &&
                      f.contains("kraus_b"),
                  "factored needs coin_a, coin_b, kraus_a and kraus_b");
  return FactoredWalk{matrix_from_json(f["coin_a"], 2, "factored.coin_a"),
                      matrix_from_json(f["coin_b"], 2, "factored.coin_b"),
                      detail::kraus2_from_json(f["kraus_a"], "factored.kraus_a"),
                      detail::kraus2_from_json(f["kraus_b"], "factored.kraus_b")};
}

inline std::vector<double> RunConfig::resolved_q_grid() const {
  if (!q_grid.empty()) return q_grid;
  std::vector<double> q(61);
  for (int i = 0; i < 61; ++i) q[i] = -3.0 + 0.1 * i;
  return q;
}

inline json RunConfig::to_json() const {
  json j;
  j["schema_version"] = kSchemaVersion;
  if (command) j["command"] = *command;
  j["coin"] = coin;
  j["channel"] = channel;
  if (!phi0.is_null()) j["phi0"] = phi0;
  if (factored) j["factored"] = *factored;
  j["lattice_n"] = lattice_n;
  j["steps"] = steps;
  j["infinite_lattice"] = infinite_lattice;
  j["pipelines"] = pipelines;
  j["quad_n"] = quad_n;
  j["grid_n"] = grid_n;
  j["t_list"] = t_list;
  j["q_grid"] = resolved_q_grid();
  j["ks_t_list"] = ks_t_list;
  j["p_list"] = p_list;
  j["sweep_t_list"] = sweep_t_list;
  j["verify_samples"] = verify_samples;
  j["seed"] = seed;
  return j;
}

/// Parses and range-checks a configuration document; unknown keys are errors.
inline RunConfig parse_config(const json& j) {
  using detail::get_checked;
  using detail::require;
  require(j.is_object(), "configuration must be a JSON object");
  static const std::set<std::string> keys{
      "schema_version", "command", "coin",       "channel",     "phi0",     "factored",
      "lattice_n",      "steps",   "infinite_lattice", "pipelines", "quad_n", "grid_n",
      "t_list",         "q_grid",  "ks_t_list",  "p_list",      "sweep_t_list", "verify_samples",
      "seed"};
  for (const auto& [key, _] : j.items()) require(keys.count(key) > 0, "unknown config key '" + key + "'");

  RunConfig c;
  if (j.contains("schema_version"))
    require(get_checked<int>(j["schema_version"], "schema_version") == kSchemaVersion,
            "unsupported schema_version (expected 1)");
  if (j.contains("command")) {
    c.command = get_checked<std::string>(j["command"], "command");
    require(known_commands().count(*c.command) > 0, "unknown command '" + *c.command + "'");
  }
  if (j.contains("coin")) c.coin = j["coin"];
  if (j.contains("channel")) c.channel = j["channel"];
  if (j.contains("phi0")) c.phi0 = j["phi0"];
  if (j.contains("factored")) c.factored = j["factored"];
  if (j.contains("lattice_n")) c.lattice_n = get_checked<int>(j["lattice_n"], "lattice_n");
  if (j.contains("steps")) c.steps = get_checked<int>(j["steps"], "steps");
  if (j.contains("infinite_lattice")) c.infinite_lattice = get_checked<bool>(j["infinite_lattice"], "infinite_lattice");
  if (j.contains("pipelines")) c.pipelines = get_checked<std::vector<std::string>>(j["pipelines"], "pipelines");
  if (j.contains("quad_n")) c.quad_n = get_checked<int>(j["quad_n"], "quad_n");
  if (j.contains("grid_n")) c.grid_n = get_checked<int>(j["grid_n"], "grid_n");
  if (j.contains("t_list")) c.t_list = get_checked<std::vector<int>>(j["t_list"], "t_list");
  if (j.contains("q_grid")) c.q_grid = get_checked<std::vector<double>>(j["q_grid"], "q_grid");
  if (j.contains("ks_t_list")) c.ks_t_list = get_checked<std::vector<int>>(j["ks_t_list"], "ks_t_list");
  if (j.contains("p_list")) c.p_list = get_checked<std::vector<double>>(j["p_list"], "p_list");
  if (j.contains("sweep_t_list")) c.sweep_t_list = get_checked<std::vector<int>>(j["sweep_t_list"], "sweep_t_list");
  if (j.contains("verify_samples")) c.verify_samples = get_checked<int>(j["verify_samples"], "verify_samples");
  if (j.contains("seed")) c.seed = get_checked<std::uint64_t>(j["seed"], "seed");

  require(c.lattice_n >= 2 && c.lattice_n % 2 == 0 && c.lattice_n <= 256, "lattice_n must be even in [2, 256]");
  require(c.steps >= 0 && c.steps <= 10000, "steps must be in [0, 10000]");
  require(!c.pipelines.empty(), "pipelines must name at least one of direct, fourier");
  for (const auto& p : c.pipelines)
    require(p == "direct" || p == "fourier", "unknown pipeline '" + p + "'");
  require(c.quad_n >= 2 && c.quad_n <= 1024, "quad_n must be in [2, 1024]");
  require(c.grid_n >= 2 && c.grid_n <= 256, "grid_n must be in [2, 256]");
  for (std::size_t i = 0; i < c.t_list.size(); ++i) {
    require(c.t_list[i] >= 1, "t_list entries must be >= 1");
    require(i == 0 || c.t_list[i] > c.t_list[i - 1], "t_list must be strictly ascending");
  }
  for (int t : c.ks_t_list) require(t >= 1 && t <= 200, "ks_t_list entries must be in [1, 200]");
  for (double p : c.p_list) require(p >= 0.0 && p <= 1.0, "p_list entries must be in [0, 1]");
  require(c.sweep_t_list.size() >= 4, "sweep_t_list needs at least 4 points");
  for (std::size_t i = 0; i < c.sweep_t_list.size(); ++i)
    require(c.sweep_t_list[i] >= 0 && (i == 0 || c.sweep_t_list[i] > c.sweep_t_list[i - 1]),
            "sweep_t_list must be strictly ascending and non-negative");
  require(c.verify_samples >= 1 && c.verify_samples <= 100000, "verify_samples must be in [1, 100000]");

  // Resolve once so malformed coins/channels/states fail at parse time.
  c.coin_op();
  c.channel_op();
  c.phi0_state();
  c.factored_walk();
  return c;
}

inline RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigurationError("cannot open config file " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigurationError("config file " + path.string() + " is not valid JSON: " + e.what());
  }
  return parse_config(j);
}

// ---------------------------------------------------------------------------

struct Output {
  std::filesystem::path dir;

  void write(const std::string& name, const std::string& content) const {
    std::filesystem::create_directories(dir);
    std::ofstream out(dir / name, std::ios::binary);
    if (!out) throw ConfigurationError("cannot write " + (dir / name).string());
    out << content;
  }
  void write_json(const std::string& name, const json& j) const { write(name, j.dump(2) + "\n"); }
};

inline json report_header(const RunConfig& cfg, const std::string& command) {
  json j;
  j["schema_version"] = kSchemaVersion;
  j["command"] = command;
  RunConfig resolved = cfg;
  resolved.command = command;
  j["config"] = resolved.to_json();
  return j;
}

inline json moments_to_json(const Moments& m) {
  return {{"mean_x", m.mean_x}, {"mean_y", m.mean_y}, {"var_x", m.var_x},
          {"var_y", m.var_y},   {"cov_xy", m.cov_xy}, {"var_diag", m.var_diag}};
}

inline constexpr double kCsvProbabilityFloor = 1e-12;

inline std::string distribution_csv(const PositionDistribution& d) {
  std::ostringstream out;
  out << "x,y,p\n";
  for (int ix = 0; ix < d.n; ++ix)
    for (int iy = 0; iy < d.n; ++iy) {
      const double p = d.probs[ix * d.n + iy];
      if (p <= kCsvProbabilityFloor) continue;
      out << PositionDistribution::coord(ix, d.n) << ',' << PositionDistribution::coord(iy, d.n) << ','
          << fmt17(p) << '\n';
    }
  return out.str();
}

// simulate: distribution.csv, simulate.json
inline int cmd_simulate(const RunConfig& cfg, const Output& out) {
  const WalkConfig walk = cfg.walk();
  std::optional<PositionDistribution> direct, fourier;
  for (const auto& p : cfg.pipelines) {
    if (p == "direct") direct = simulate_direct(walk).back();
    if (p == "fourier") fourier = simulate_fourier(walk);
  }
  const PositionDistribution& primary = cfg.pipelines.front() == "direct" ? *direct : *fourier;

  json rep = report_header(cfg, "simulate");
  rep["t"] = walk.steps;
  rep["lattice_n"] = walk.lattice_n;
  rep["total_probability"] = primary.total();
  rep["min_probability"] = primary.min();
  rep["moments"] = moments_to_json(moments(primary));
  if (direct && fourier) rep["max_discrepancy"] = max_abs_diff(*direct, *fourier);
  out.write("distribution.csv", distribution_csv(primary));
  out.write_json("simulate.json", rep);
  return kExitOk;
}

// spectrum: spectrum.csv (one row per grid momentum), spectrum.json
inline int cmd_spectrum(const RunConfig& cfg, const Output& out) {
  const auto coin = cfg.coin_op();
  const auto ch = cfg.channel_op();
  const int n = cfg.grid_n;
  const auto reps = parallel_map<SpectralReport>(static_cast<std::size_t>(n) * n, [&](std::size_t idx) {
    const double kx = grid_momentum(static_cast<int>(idx) / n, n), ky = grid_momentum(static_cast<int>(idx) % n, n);
    return spectrum(build_supermatrix(coin, ch, Momenta::equal(kx, ky)));
  });

  std::ostringstream csv;
  csv << "kx,ky,spectral_radius,gap,one_is_simple";
  for (int i = 0; i < 16; ++i) csv << ",modulus_" << i;
  csv << '\n';
  double min_gap = 1.0, max_radius = 0.0;
  std::size_t simple = 0;
  json failures = json::array();
  for (std::size_t idx = 0; idx < reps.size(); ++idx) {
    const double kx = grid_momentum(static_cast<int>(idx) / n, n), ky = grid_momentum(static_cast<int>(idx) % n, n);
    const auto& r = reps[idx];
    csv << fmt17(kx) << ',' << fmt17(ky) << ',' << fmt17(r.spectral_radius) << ',' << fmt17(r.gap) << ','
        << (r.one_is_simple ? 1 : 0);
    for (const auto& ev : r.eigenvalues) csv << ',' << fmt17(std::abs(ev));
    csv << '\n';
    min_gap = std::min(min_gap, r.gap);
    max_radius = std::max(max_radius, r.spectral_radius);
    if (r.one_is_simple)
      ++simple;
    else
      failures.push_back({{"kx", kx}, {"ky", ky}, {"gap", r.gap}});
  }
  json rep = report_header(cfg, "spectrum");
  rep["grid_n"] = n;
  rep["min_gap"] = min_gap;
  rep["max_spectral_radius"] = max_radius;
  rep["hypothesis_satisfied_fraction"] = static_cast<double>(simple) / reps.size();
  rep["non_simple_points"] = std::move(failures);
  out.write("spectrum.csv", csv.str());
  out.write_json("spectrum.json", rep);
  return kExitOk;
}

// limit: profile.csv, convergence.csv, limit.json
inline int cmd_limit(const RunConfig& cfg, const Output& out) {
  const auto walk = cfg.walk();
  const auto prof = limit_profile(walk.coin, walk.channel, cfg.grid_n);

  std::ostringstream pcsv;
  pcsv << "kx,ky,gap,one_is_simple,d1_re,d1_im,d2_re,d2_im,fd_residual\n";
  for (const auto& p : prof.points)
    pcsv << fmt17(p.kx) << ',' << fmt17(p.ky) << ',' << fmt17(p.gap) << ',' << (p.one_is_simple ? 1 : 0) << ','
         << fmt17(p.z0_first_deriv.real()) << ',' << fmt17(p.z0_first_deriv.imag()) << ','
         << fmt17(p.z0_second_deriv.real()) << ',' << fmt17(p.z0_second_deriv.imag()) << ','
         << fmt17(p.fd_residual) << '\n';
  out.write("profile.csv", pcsv.str());

  json rep = report_header(cfg, "limit");
  rep["grid_n"] = prof.grid_n;
  rep["excluded_fraction"] = prof.excluded_fraction();
  rep["limit_exponent"] = kLimitExponent;
  try {
    require_hypothesis(prof);
  } catch (const HypothesisViolation& e) {
    rep["status"] = "hypothesis_violation";
    rep["message"] = e.what();
    json pts = json::array();
    for (const auto& p : prof.points)
      if (!p.one_is_simple) pts.push_back({{"kx", p.kx}, {"ky", p.ky}, {"gap", p.gap}});
    rep["non_simple_points"] = std::move(pts);
    out.write_json("limit.json", rep);
    return kExitHypothesisViolation;
  }

  const auto q_grid = cfg.resolved_q_grid();
  const auto conv = convergence_diagnostic(walk, prof, cfg.t_list, q_grid, cfg.ks_t_list, cfg.quad_n);
  std::ostringstream ccsv;
  ccsv << "t,q,gap\n";
  for (std::size_t ti = 0; ti < conv.t_list.size(); ++ti)
    for (std::size_t qi = 0; qi < q_grid.size(); ++qi)
      ccsv << conv.t_list[ti] << ',' << fmt17(q_grid[qi]) << ',' << fmt17(conv.gaps[ti][qi]) << '\n';
  out.write("convergence.csv", ccsv.str());

  rep["status"] = "ok";
  json limit_values = json::array();
  for (double q : q_grid) limit_values.push_back({{"q", q}, {"r_inf", limit_char_fn(prof, q)}});
  rep["limit_char_fn"] = std::move(limit_values);
  json sup = json::array();
  for (std::size_t ti = 0; ti < conv.t_list.size(); ++ti)
    sup.push_back({{"t", conv.t_list[ti]}, {"sup_gap", conv.sup_gaps[ti]}});
  rep["sup_gaps"] = std::move(sup);
  json ks = json::array();
  for (const auto& k : conv.ks) ks.push_back({{"t", k.t}, {"ks_distance", k.distance}});
  rep["ks"] = std::move(ks);
  out.write_json("limit.json", rep);
  return kExitOk;
}

// ---------------------------------------------------------------------------
// verify: invariant battery for the configured walk.

struct CheckResult {
  std::string name;
  bool passed = false;
  double value = 0.0;
  double tolerance = 0.0;
  std::string note;
};

inline std::vector<CheckResult> run_invariant_battery(const RunConfig& cfg) {
  const WalkConfig walk = cfg.walk();
  const auto& coin = walk.coin;
  const auto& ch = walk.channel;
  Rng rng(cfg.seed);
  std::uniform_real_distribution<double> angle(0.0, 2.0 * kPi);
  std::vector<CheckResult> out;
  auto check = [&](std::string name, double value, double tol, std::string note = {}) {
    out.push_back({std::move(name), value <= tol, value, tol, std::move(note)});
  };

  const auto v = validate(ch);
  check("channel_trace_preserving", v.trace_preserving_err, 1e-12);
  check("channel_unital", v.unital_err, 1e-12);

  double radius = 0.0, first_col = 0.0, action = 0.0;
  for (int s = 0; s < cfg.verify_samples; ++s) {
    const double kx = angle(rng), ky = angle(rng), q = angle(rng);
    const auto sm = build_supermatrix(coin, ch, Momenta::diagonal_shift(kx, ky, q));
    radius = std::max(radius, spectrum(sm).spectral_radius);
    first_col = std::max(first_col, check_first_column(sm, coin));
    const Mat4 x = random_hermitian(4, rng);
    action = std::max(action, max_abs(pauli_to_op(sm.m * op_to_pauli(x)) -
                                      apply_super(coin, ch, sm.momenta, x)));
  }
  check("spectral_radius_at_most_one", radius - 1.0, 1e-10);
  check("first_column_law", first_col, 1e-12);
  check("matrix_action_consistency", action, 1e-12);

  {
    WalkConfig small = walk;
    small.lattice_n = 8;
    small.steps = 6;
    small.infinite_lattice = false;
    check("pipeline_equivalence_n8_t6",
          max_abs_diff(simulate_direct(small).back(), simulate_fourier(small)), 1e-9);
  }

  double norm_err = 0.0;
  for (int t = 0; t <= 10; ++t) norm_err = std::max(norm_err, std::abs(char_fn_diagonal(walk, 0.0, t, 16) - 1.0));
  check("char_fn_normalization", norm_err, 1e-12);
  check("generating_fn_trace_row", std::abs(generating_fn(walk, 0.5, 0.0, 16) - 2.0), 1e-11);

  const auto prof = limit_profile(coin, ch, 8);
  if (prof.excluded_fraction() > kMaxExcludedFraction) {
    out.push_back({"limit_hypothesis", true, prof.excluded_fraction(), kMaxExcludedFraction,
                   "eigenvalue 1 not simple on part of the grid; root checks skipped"});
  } else {
    double d1 = 0.0, residue = 0.0;
    for (const auto& p : prof.points) {
      if (!p.one_is_simple) continue;
      d1 = std::max(d1, std::abs(p.z0_first_deriv));
      residue = std::max(residue, std::abs(residue_constant(coin, ch, p.kx, p.ky, walk.phi0.density()) - 1.0));
    }
    check("root_first_derivative_zero", d1, 1e-6);
    check("residue_constant_one", residue, 1e-10);
  }
  return out;
}

inline int cmd_verify(const RunConfig& cfg, const Output& out) {
  const auto results = run_invariant_battery(cfg);
  json rep = report_header(cfg, "verify");
  json checks = json::array();
  bool all = true;
  for (const auto& r : results) {
    json c{{"name", r.name}, {"passed", r.passed}, {"value", r.value}, {"tolerance", r.tolerance}};
    if (!r.note.empty()) c["note"] = r.note;
    checks.push_back(std::move(c));
    all = all && r.passed;
  }
  rep["checks"] = std::move(checks);
  rep["passed"] = all;
  out.write_json("verify.json", rep);
  return all ? kExitOk : kExitInvariantFailure;
}

// sweep: diffusion slope of Var(x + y) against t for each p.
inline int cmd_sweep(const RunConfig& cfg, const Output& out) {
  const std::string label = cfg.channel.value("label", std::string("measurement"));
  std::ostringstream csv;
  csv << "p,slope,intercept,r2\n";
  json rows = json::array();
  for (double p : cfg.p_list) {
    WalkConfig walk = cfg.walk();
    walk.channel = channel_by_label(label == "custom" ? "measurement" : label, p);
    const auto fit = diffusion_fit(walk, cfg.sweep_t_list);
    csv << fmt17(p) << ',' << fmt17(fit.diffusive.slope) << ',' << fmt17(fit.diffusive.intercept) << ','
        << fmt17(fit.diffusive.r2) << '\n';
    rows.push_back({{"p", p}, {"slope", fit.diffusive.slope}, {"r2", fit.diffusive.r2}});
  }
  json rep = report_header(cfg, "sweep");
  rep["channel_label"] = label;
  rep["rows"] = std::move(rows);
  out.write("sweep.csv", csv.str());
  out.write_json("sweep.json", rep);
  return kExitOk;
}

/// Dispatches a command; library errors become exit codes with a JSON error
/// record next to the normal outputs.
inline int run_command(const std::string& command, const RunConfig& cfg, const Output& out,
                       std::string* message = nullptr) {
  auto fail = [&](int code, const std::string& what) {
    if (message) *message = what;
    json rep = report_header(cfg, command);
    rep["status"] = code == kExitHypothesisViolation ? "hypothesis_violation" : "error";
    rep["message"] = what;
    out.write_json("error.json", rep);
    return code;
  };
  if (cfg.command && *cfg.command != command)
    return fail(kExitConfigError, "config declares command '" + *cfg.command + "' but '" + command + "' was requested");
  try {
    if (command == "simulate") return cmd_simulate(cfg, out);
    if (command == "spectrum") return cmd_spectrum(cfg, out);
    if (command == "limit") {
      const int rc = cmd_limit(cfg, out);
      if (rc != kExitOk && message) *message = "simplicity hypothesis violated, see limit.json";
      return rc;
    }
    if (command == "verify") {
      const int rc = cmd_verify(cfg, out);
      if (rc != kExitOk && message) *message = "invariant failures, see verify.json";
      return rc;
    }
    if (command == "sweep") return cmd_sweep(cfg, out);
    return fail(kExitConfigError, "unknown command '" + command + "'");
  } catch (const HypothesisViolation& e) {
    return fail(kExitHypothesisViolation, e.what());
  } catch (const ConfigurationError& e) {
    return fail(kExitConfigError, e.what());
  } catch (const CapacityError& e) {
    return fail(kExitConfigError, e.what());
  } catch (const WraparoundError& e) {
    return fail(kExitConfigError, e.what());
  } catch (const Error& e) {
    return fail(kExitInvariantFailure, e.what());
  }
}

}  // namespace dqw::cli
