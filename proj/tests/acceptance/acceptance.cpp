// Acceptance battery. One PASS/FAIL line per criterion; pass a criterion id
// (1 .. 13, 4a, 4b) to run just that one. Exit status is nonzero if any
// selected criterion fails.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "dqw/cli.hpp"
#include "dqw/limits.hpp"

using namespace dqw;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double a) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

void info(const std::string& s) { std::printf("       %s\n", s.c_str()); }

WalkConfig walk(const CoinOperator& coin, const KrausChannel& ch, int n = 8, int t = 0) {
  return {coin, ch, symmetric_hadamard_state(), n, t, false};
}

std::vector<CoinOperator> coins() { return {coin_hadamard4(), coin_grover4(), coin_dft4()}; }

std::vector<KrausChannel> unital_channels() {
  return {identity_channel(),     coin_measurement(0.3), coin_measurement(1.0), coin_dephasing(0.4),
          coin_dephasing(1.0),    coin_depolarizing(0.2), coin_depolarizing(1.0)};
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

// ---------------------------------------------------------------------------

Outcome pipeline_equivalence() {
  double worst = 0.0;
  for (const auto& coin : coins())
    for (const auto& ch : {identity_channel(), coin_measurement(0.3), coin_dephasing(0.4)}) {
      const auto cfg = walk(coin, ch, 8, 6);
      worst = std::max(worst, max_abs_diff(simulate_direct(cfg).back(), simulate_fourier(cfg)));
    }
  return {worst <= 1e-9, fmt("max |P_direct - P_fourier| = %.3g over 9 coin/channel pairs (tol 1e-9)", worst)};
}

Outcome spectral_radius_bound() {
  Rng rng(20240101);
  std::uniform_real_distribution<double> angle(-kPi, kPi), unit(0.0, 1.0);
  double worst = 0.0;
  int exceptions = 0;
  for (int trial = 0; trial < 200; ++trial) {
    try {
      const CoinOperator coin(random_unitary(4, rng), "random");
      std::vector<Mat4> ops;
      const int rank = 1 + trial % 4;
      std::vector<double> w(rank);
      double total = 0.0;
      for (auto& x : w) total += (x = unit(rng) + 0.05);
      for (int i = 0; i < rank; ++i) ops.push_back(std::sqrt(w[i] / total) * Mat4(random_unitary(4, rng)));
      const KrausChannel ch(std::move(ops), "random-unitary-mixture");
      const auto sm = build_supermatrix(coin, ch, Momenta::diagonal_shift(angle(rng), angle(rng), angle(rng)));
      worst = std::max(worst, spectrum(sm).spectral_radius);
    } catch (const std::exception&) {
      ++exceptions;
    }
  }
  return {worst <= 1.0 + 1e-10 && exceptions == 0,
          fmt("max spectral radius = %.15f over 200 draws", worst) + ", exceptions = " + std::to_string(exceptions)};
}

Outcome normalization() {
  double worst = 0.0;
  int configs = 0;
  for (const auto& coin : coins())
    for (const auto& ch : unital_channels()) {
      ++configs;
      const auto cfg = walk(coin, ch);
      for (int t = 0; t <= 10; ++t) worst = std::max(worst, std::abs(char_fn_diagonal(cfg, 0.0, t) - 1.0));
    }
  return {worst <= 1e-12, fmt("max |R(0,t) - 1| = %.3g", worst) + " over t = 0..10 and " + std::to_string(configs) +
                              " configurations (tol 1e-12)"};
}

Outcome first_column_law() {
  Rng rng(7);
  std::uniform_real_distribution<double> angle(-kPi, kPi);
  double worst = 0.0;
  for (const auto& coin : coins())
    for (const auto& ch : unital_channels())
      for (int i = 0; i < 100; ++i) {
        const Momenta k{angle(rng), angle(rng), angle(rng), angle(rng)};
        worst = std::max(worst, check_first_column(build_supermatrix(coin, ch, k), coin));
      }
  return {worst <= 1e-12, fmt("max first-column deviation from Pauli(M_k M_k'^dag) = %.3g at 100 random momenta per pair (tol 1e-12)", worst)};
}

// Squared-trig closed form for column 0 at diagonal shift q, checked literally.
Outcome first_column_pattern() {
  const std::array<int, 4> rows{0, 3, 12, 15};
  double worst = 0.0;
  for (double q : {0.3, kPi / 2}) {
    const double c = std::cos(q), s = std::sin(q);
    const std::array<cplx, 4> stated{c * c, kI * s * c, -kI * s * c, s * s};
    for (const auto& coin : coins())
      for (const auto& ch : unital_channels()) {
        const auto sm = build_supermatrix(coin, ch, Momenta::diagonal_shift(0.37, -1.21, q));
        for (int r = 0; r < 16; ++r) {
          cplx expected = 0.0;
          for (int i = 0; i < 4; ++i)
            if (rows[i] == r) expected = stated[i];
          worst = std::max(worst, std::abs(sm.m(r, 0) - expected));
        }
      }
    const auto sm = build_supermatrix(coin_hadamard4(), coin_measurement(0.3), Momenta::diagonal_shift(0.37, -1.21, q));
    char buf[256];
    std::snprintf(buf, sizeof buf,
                  "q=%.4f computed rows {0,3,12,15}: (%.4f%+.4fi, %.4f%+.4fi, %.4f%+.4fi, %.4f%+.4fi); "
                  "closed form (%.4f, %+.4fi, %+.4fi, %.4f)",
                  q, sm.m(0, 0).real(), sm.m(0, 0).imag(), sm.m(3, 0).real(), sm.m(3, 0).imag(), sm.m(12, 0).real(),
                  sm.m(12, 0).imag(), sm.m(15, 0).real(), sm.m(15, 0).imag(), c * c, s * c, -s * c, s * s);
    info(buf);
  }
  info("Pauli expansion of diag(e^{-iq}, e^{iq}, e^{iq}, e^{-iq}) is (cos q, 0, 0, -i sin q)");
  return {worst <= 1e-12, fmt("max deviation from the closed form (cos^2 q, i sin q cos q, -i sin q cos q, sin^2 q) column = %.3g (tol 1e-12)", worst)};
}

Outcome tensor_decomposition() {
  Rng rng(5);
  std::uniform_real_distribution<double> angle(-kPi, kPi);
  const auto fw = separable_hadamard_walk(one_dim_dephasing(0.3), one_dim_dephasing(0.6));
  double diff = 0.0, residual = 0.0, grover = 0.0;
  for (int i = 0; i < 20; ++i) {
    const double kx = angle(rng), ky = angle(rng), q = angle(rng);
    const auto rep = check_tensor_decomposition(fw, kx, ky, q);
    diff = std::max(diff, *rep.factored_max_diff);
    residual = std::max(residual, rep.kron_residual);
    grover = std::max(grover, check_tensor_decomposition(coin_grover4(), identity_channel(), kx, ky, q).kron_residual);
  }
  info(fmt("grover4 (identity channel) nearest-Kronecker residual, max over draws: %.4f (reported only)", grover));
  info(fmt("hadamard4 in (L,R,U,D) labelling, identity channel: residual %.4f (reported only)",
           check_tensor_decomposition(coin_hadamard4(), identity_channel(), 0.7, -1.3, 0.4).kron_residual));
  return {diff <= 1e-10 && residual <= 1e-10,
          fmt("|L16 - L_a(k1,k1+q) (x) L_b(k2,k2)|_max = %.3g", diff) + fmt(", Kronecker residual = %.3g (tol 1e-10)", residual)};
}

Outcome generating_function() {
  const auto cfg = walk(coin_hadamard4(), coin_measurement(0.5));
  double worst = 0.0;
  for (double z : {0.3, 0.5, 0.8}) worst = std::max(worst, std::abs(generating_fn(cfg, z, 0.0) - 1.0 / (1.0 - z)));
  cplx series = 0.0;
  for (int t = 0; t <= 80; ++t) series += std::pow(0.4, t) * char_fn_diagonal(cfg, 0.7, t);
  const double gap = std::abs(generating_fn(cfg, 0.4, 0.7) - series);
  return {worst <= 1e-11 && gap <= 1e-10,
          fmt("max |G(z,0) - 1/(1-z)| = %.3g (tol 1e-11)", worst) + fmt(", |G(0.4,0.7) - series| = %.3g (tol 1e-10)", gap)};
}

Outcome first_derivative() {
  double worst = 0.0;
  std::size_t excluded = 0;
  for (double p : {0.3, 0.5, 0.7}) {
    const auto prof = limit_profile(coin_hadamard4(), coin_measurement(p), 16);
    for (const auto& pt : prof.points) {
      if (!pt.one_is_simple) {
        ++excluded;
        continue;
      }
      worst = std::max(worst, std::abs(pt.z0_first_deriv));
    }
  }
  return {worst <= 1e-6 && excluded == 0,
          fmt("max |z0'(0)| = %.3g on 16x16 grids for p in {0.3,0.5,0.7} (tol 1e-6)", worst) +
              ", non-simple points = " + std::to_string(excluded)};
}

Outcome residue() {
  Rng rng(99);
  double unit = 0.0, indep = 0.0, power = 0.0;
  for (const auto& ch : {coin_measurement(0.7), coin_measurement(0.5)})
    for (auto [kx, ky] : std::vector<std::pair<double, double>>{{0.3, 1.1}, {2.0, -0.4}, {-2.9, 0.05}}) {
      const CMatrix r1 = random_density(4, rng), r2 = random_density(4, rng);
      const cplx a = residue_constant(coin_hadamard4(), ch, kx, ky, r1);
      const cplx b = residue_constant(coin_hadamard4(), ch, kx, ky, r2);
      unit = std::max({unit, std::abs(a - 1.0), std::abs(b - 1.0)});
      indep = std::max(indep, std::abs(a - b));
      const SuperoperatorKernel kernel(coin_hadamard4(), ch);
      power = std::max(power, std::abs(kernel.trace_evolved(Momenta::equal(kx, ky), 200, r1) - a));
    }
  return {unit <= 1e-10 && indep <= 1e-10 && power <= 1e-8,
          fmt("max |c - 1| = %.3g", unit) + fmt(", rho0 dependence = %.3g (tol 1e-10)", indep) +
              fmt(", |Tr L^200 rho0 - c| = %.3g (tol 1e-8)", power)};
}

Outcome eigenvalue_product_structure() {
  double worst = 0.0;
  int missing = 0;
  for (double p : {0.3, 0.5})
    for (double kx : {0.7, 2.1}) {
      // ky = 0 makes k1 = k2, so both one-dimensional factors coincide
      const auto rep = eigenvalue_products(separable_hadamard_walk(one_dim_dephasing(p), one_dim_dephasing(p)), kx, 0.0);
      worst = std::max(worst, rep.matching_distance);
      for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) {
          if (i == j) continue;
          const cplx prod = rep.factor_a[i] * rep.factor_b[j];
          const auto count = std::count_if(rep.block_spectrum.begin(), rep.block_spectrum.end(),
                                           [&](cplx x) { return std::abs(x - prod) <= 1e-9; });
          if (count < 2) ++missing;
        }
    }
  const auto generic = eigenvalue_products(separable_hadamard_walk(one_dim_dephasing(0.3), one_dim_dephasing(0.6)), 0.7, 0.9);
  info(fmt("unequal factors (p = 0.3 / 0.6, ky = 0.9): matching distance %.3g, products then distinct", generic.matching_distance));
  return {worst <= 1e-9 && missing == 0,
          fmt("9x9 block vs product multiset matching distance = %.3g (tol 1e-9)", worst) +
              ", off-diagonal products lacking multiplicity 2: " + std::to_string(missing)};
}

Outcome classical_limit() {
  const auto cfg = walk(coin_hadamard4(), coin_measurement(1.0));
  double cf = 0.0;
  for (int t : {1, 7, 20, 50})
    for (double q : {0.1, 0.8, 1.6, 2.7}) cf = std::max(cf, std::abs(char_fn_diagonal(cfg, q, t) - std::pow(std::cos(q), t)));
  double var = 0.0;
  for (const auto& m : diagonal_moment_series(cfg, 40)) var = std::max(var, std::abs(m.variance - m.t));
  for (int t : {3, 6}) {
    WalkConfig torus = cfg;
    torus.lattice_n = 16;
    torus.steps = t;
    torus.infinite_lattice = true;
    var = std::max(var, std::abs(moments(simulate_fourier(torus)).var_diag - t));
  }
  // The p = 1 integrand does not depend on k, so a small momentum grid is exact.
  const int t = 400;
  const auto p = diagonal_marginal(cfg, t, 6);
  const auto p2 = diagonal_marginal(cfg, t, 2);
  double grid_dep = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) grid_dep = std::max(grid_dep, std::abs(p[i] - p2[i]));
  std::vector<double> at(p.size());
  for (int s = -t; s <= t; ++s) at[s + t] = s / std::sqrt(static_cast<double>(t));
  const double ks = ks_distance(at, p, normal_cdf);
  info(fmt("marginal change between 6x6 and 2x2 momentum grids: %.3g", grid_dep));
  return {cf <= 1e-10 && var <= 1e-9 && ks <= 0.03,
          fmt("max |R - cos^t q| = %.3g (tol 1e-10)", cf) + fmt(", max |Var(x+y) - t| = %.3g (tol 1e-9)", var) +
              fmt(", KS at t=400 = %.4f (tol 0.03)", ks)};
}

Outcome main_theorem() {
  const auto cfg = walk(coin_hadamard4(), coin_measurement(0.5));
  const auto prof = limit_profile(cfg.coin, cfg.channel, kDefaultMixtureGrid);
  std::vector<double> q;
  for (int i = 0; i <= 60; ++i) q.push_back(-3.0 + 0.1 * i);
  const auto rep = convergence_diagnostic(cfg, prof, {25, 50, 100, 200}, q);
  bool decreasing = true;
  std::string gaps;
  for (std::size_t i = 0; i < rep.sup_gaps.size(); ++i) {
    if (i > 0 && !(rep.sup_gaps[i] < rep.sup_gaps[i - 1])) decreasing = false;
    gaps += (i ? ", " : "") + std::string("t=") + std::to_string(rep.t_list[i]) + ": " + fmt("%.5f", rep.sup_gaps[i]);
  }
  info("sup_q |R(q/sqrt t, t) - R_inf(q)|: " + gaps);

  // exponent discrimination in the classical configuration
  const auto classical = walk(coin_hadamard4(), coin_measurement(1.0));
  const double qq = 1.5, t = 200.0;
  const double r = char_fn_diagonal(classical, qq / std::sqrt(t), 200).real();
  const double half = std::abs(r - std::exp(-qq * qq / 2)), one = std::abs(r - std::exp(-qq * qq));
  info(fmt("classical q=1.5, t=200: R = %.5f", r) + fmt(", |R - e^{-q^2/2}| = %.2g", half) + fmt(", |R - e^{-q^2}| = %.4f", one));

  const bool pass = decreasing && rep.sup_gaps.back() <= 0.05 && one >= 0.1 && half < one;
  return {pass, std::string(decreasing ? "strictly decreasing" : "NOT decreasing") +
                    fmt(", sup-gap at t=200 = %.5f (tol 0.05)", rep.sup_gaps.back()) +
                    fmt(", c=1 rejection margin = %.4f (need >= 0.1)", one)};
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("dqw_acceptance_" + name);
  fs::remove_all(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Outcome hypothesis_detector() {
  const auto prof = limit_profile(coin_hadamard4(), identity_channel(), kDefaultMixtureGrid);
  std::size_t simple = prof.simple_count();
  auto j = cli::json::parse(R"({"coin": "hadamard4", "channel": {"label": "identity"}, "grid_n": 16})");
  const auto dir = scratch("hypothesis");
  const int rc = cli::run_command("limit", cli::parse_config(j), {dir});
  const auto rep = cli::json::parse(slurp(dir / "limit.json"));
  const bool structured = rep.value("status", "") == "hypothesis_violation" && rep.contains("non_simple_points") &&
                          rep["non_simple_points"].size() == 256 && rep.contains("config");
  return {simple == 0 && rc == cli::kExitHypothesisViolation && structured,
          "simple points = " + std::to_string(simple) + " of " + std::to_string(prof.points.size()) +
              ", cmd_limit exit = " + std::to_string(rc) + ", structured report = " + (structured ? "yes" : "no")};
}

Outcome determinism() {
  auto j = cli::json::parse(R"({
    "coin": "grover4", "channel": {"label": "dephasing", "p": 0.4},
    "lattice_n": 8, "steps": 5, "grid_n": 8, "quad_n": 16,
    "t_list": [10, 20], "q_grid": [0.0, 1.0, 2.0], "ks_t_list": [4],
    "p_list": [0.3, 0.6], "sweep_t_list": [4, 6, 8, 10], "verify_samples": 20, "seed": 42})");
  const auto cfg = cli::parse_config(j);
  int files = 0, mismatches = 0;
  for (const std::string cmd : {"simulate", "spectrum", "limit", "verify", "sweep"}) {
    const auto a = scratch("det_a_" + cmd), b = scratch("det_b_" + cmd);
    set_default_threads(1);
    cli::run_command(cmd, cfg, {a});
    set_default_threads(4);
    cli::run_command(cmd, cfg, {b});
    set_default_threads(0);
    for (const auto& e : fs::directory_iterator(a)) {
      ++files;
      if (slurp(e.path()) != slurp(b / e.path().filename())) ++mismatches;
    }
  }
  return {files > 0 && mismatches == 0,
          std::to_string(files) + " output files compared across two seeded runs (1 vs 4 threads), mismatches = " +
              std::to_string(mismatches)};
}

struct Criterion {
  std::string id;
  std::string name;
  std::function<Outcome()> run;
};

}  // namespace

int main(int argc, char** argv) {
  const std::vector<Criterion> all{
      {"1", "pipeline equivalence", pipeline_equivalence},
      {"2", "spectral radius bound", spectral_radius_bound},
      {"3", "characteristic-function normalization", normalization},
      {"4a", "first-column law", first_column_law},
      {"4b", "diagonal-shift first-column pattern", first_column_pattern},
      {"5", "tensor decomposition", tensor_decomposition},
      {"6", "generating function", generating_function},
      {"7", "z0'(0) = 0", first_derivative},
      {"8", "residue constant", residue},
      {"9", "eigenvalue products", eigenvalue_product_structure},
      {"10", "classical limit", classical_limit},
      {"11", "Gaussian-mixture limit (headline)", main_theorem},
      {"12", "hypothesis detector", hypothesis_detector},
      {"13", "determinism", determinism},
  };
  const std::string only = argc > 1 ? argv[1] : "";
  int failed = 0, ran = 0;
  for (const auto& c : all) {
    if (!only.empty() && c.id != only) continue;
    ++ran;
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    std::printf("[%s] %-3s %s: %s\n", o.pass ? "PASS" : "FAIL", c.id.c_str(), c.name.c_str(), o.detail.c_str());
    std::fflush(stdout);
    if (!o.pass) ++failed;
  }
  if (ran == 0) {
    std::fprintf(stderr, "unknown criterion '%s'\n", only.c_str());
    return 2;
  }
  std::printf("%d/%d criteria passed\n", ran - failed, ran);
  return failed == 0 ? 0 : 1;
}
