#pragma once

// Two independent evolution pipelines on the n x n torus:
//
//   simulate_direct   dense position (x) coin density operator, stepped with
//                     the Kraus channel, the coin and the chirality shift;
//   simulate_fourier  momentum-space superoperator powers followed by an
//                     inverse two-dimensional DFT.
//
// plus characteristic/generating functions and moment diagnostics.

#include <algorithm>
#include <cmath>
#include <complex>
#include <string>
#include <utility>
#include <vector>

#include "dqw/channels.hpp"
#include "dqw/linalg.hpp"
#include "dqw/parallel.hpp"
#include "dqw/superoperator.hpp"
#include "dqw/walk.hpp"

namespace dqw {

inline constexpr int kDenseMaxLattice = 16;
inline constexpr int kDefaultQuadratureNodes = 64;

struct WalkConfig {
  CoinOperator coin = coin_hadamard4();
  KrausChannel channel = identity_channel();
  ChiralityState phi0 = symmetric_hadamard_state();
  int lattice_n = 8;
  int steps = 0;
  bool infinite_lattice = false;  // forbid wraparound instead of wrapping

  void validate() const {
    if (lattice_n < 2 || lattice_n % 2 != 0)
      throw ConfigurationError("lattice_n must be even and >= 2, got " + std::to_string(lattice_n));
    if (steps < 0) throw ConfigurationError("steps must be >= 0");
    if (infinite_lattice && 2 * steps >= lattice_n)
      throw WraparoundError("infinite-lattice mode needs lattice_n > 2t (n = " +
                            std::to_string(lattice_n) + ", t = " + std::to_string(steps) +
                            "); enlarge the lattice or accept torus semantics");
  }
};

/// P(x, y, t) on the torus with x, y in {-n/2, ..., n/2 - 1}.
struct PositionDistribution {
  int n = 0;
  int t = 0;
  std::vector<double> probs;  // index (x + n/2) * n + (y + n/2)

  static int wrap(int x, int n) {
    int r = (x + n / 2) % n;
    if (r < 0) r += n;
    return r;
  }
  static int coord(int index, int n) { return index - n / 2; }

  double at(int x, int y) const { return probs[wrap(x, n) * n + wrap(y, n)]; }
  double& at(int x, int y) { return probs[wrap(x, n) * n + wrap(y, n)]; }

  double total() const {
    double s = 0.0;
    for (double p : probs) s += p;
    return s;
  }
  double min() const { return *std::min_element(probs.begin(), probs.end()); }
};

inline double max_abs_diff(const PositionDistribution& a, const PositionDistribution& b) {
  if (a.n != b.n) throw DimensionError("distributions live on different lattices");
  double m = 0.0;
  for (std::size_t i = 0; i < a.probs.size(); ++i) m = std::max(m, std::abs(a.probs[i] - b.probs[i]));
  return m;
}

// ---------------------------------------------------------------------------

/// Dense evolution of the full density operator. Returns P for t = 0..steps.
inline std::vector<PositionDistribution> simulate_direct(const WalkConfig& cfg) {
  cfg.validate();
  const int n = cfg.lattice_n;
  if (n > kDenseMaxLattice)
    throw CapacityError("simulate_direct: dense density operator limited to n <= 16 (" +
                        std::to_string(n * n * 4) +
                        "-dimensional requested); use the momentum pipeline for larger lattices");
  const int sites = n * n;
  const SuperoperatorKernel kernel(cfg.coin, cfg.channel);

  // rho as sites x sites coin blocks, each stored as a row-major vec.
  std::vector<Vec16> rho(static_cast<std::size_t>(sites) * sites, Vec16::Zero());
  std::vector<char> live(rho.size(), 0);
  const int origin = PositionDistribution::wrap(0, n) * n + PositionDistribution::wrap(0, n);
  rho[origin * sites + origin] = SuperoperatorKernel::vec(cfg.phi0.density());
  live[origin * sites + origin] = 1;

  auto shifted = [n](int site, int c) {
    const int x = site / n, y = site % n;
    const auto d = kChiralityShift[c];
    return ((x + d.dx + n) % n) * n + (y + d.dy + n) % n;
  };

  auto distribution = [&](int t) {
    PositionDistribution p{n, t, std::vector<double>(sites, 0.0)};
    for (int s = 0; s < sites; ++s) {
      if (!live[s * sites + s]) continue;
      const auto& v = rho[s * sites + s];
      p.probs[s] = (v(0) + v(5) + v(10) + v(15)).real();
    }
    return p;
  };

  std::vector<PositionDistribution> out;
  out.reserve(cfg.steps + 1);
  out.push_back(distribution(0));

  std::vector<Vec16> next(rho.size());
  std::vector<char> next_live(rho.size());
  for (int t = 1; t <= cfg.steps; ++t) {
    std::fill(next.begin(), next.end(), Vec16::Zero());
    std::fill(next_live.begin(), next_live.end(), 0);
    for (int r = 0; r < sites; ++r) {
      for (int r2 = 0; r2 < sites; ++r2) {
        const std::size_t idx = static_cast<std::size_t>(r) * sites + r2;
        if (!live[idx]) continue;
        // Kraus channel then coin, as one map on the block.
        const Vec16 v = kernel.base() * rho[idx];
        for (int c = 0; c < 4; ++c) {
          const int rs = shifted(r, c);
          for (int c2 = 0; c2 < 4; ++c2) {
            const std::size_t to = static_cast<std::size_t>(rs) * sites + shifted(r2, c2);
            next[to](4 * c + c2) += v(4 * c + c2);
            next_live[to] = 1;
          }
        }
      }
    }
    rho.swap(next);
    live.swap(next_live);
    out.push_back(distribution(t));
  }
  return out;
}

// ---------------------------------------------------------------------------

/// Integer momentum grid node j -> 2 pi j / n.
inline double grid_momentum(int j, int n) { return 2.0 * kPi * j / n; }

/// (1/n_k^2) sum_k Tr{ L^t_{kx,kx+qx;ky,ky+qy} rho0 } with a uniform n_k x n_k
/// trapezoidal rule; exact whenever n_k > 2t.
inline cplx char_fn_2d(const SuperoperatorKernel& kernel, const Mat4& rho0, double qx, double qy,
                       int t, int n_k) {
  cplx acc = 0.0;
  for (int i = 0; i < n_k; ++i) {
    cplx row = 0.0;
    for (int j = 0; j < n_k; ++j) {
      const double kx = grid_momentum(i, n_k), ky = grid_momentum(j, n_k);
      row += kernel.trace_evolved({kx, kx + qx, ky, ky + qy}, t, rho0);
    }
    acc += row;
  }
  return acc / static_cast<double>(n_k * n_k);
}

inline PositionDistribution simulate_fourier(const WalkConfig& cfg) {
  cfg.validate();
  const int n = cfg.lattice_n;
  const int t = cfg.steps;
  const SuperoperatorKernel kernel(cfg.coin, cfg.channel);
  const Mat4 rho0 = cfg.phi0.density();

  // R2 at every DFT frequency, index (mx, my).
  const auto r2 = parallel_map<cplx>(static_cast<std::size_t>(n) * n, [&](std::size_t idx) {
    const int mx = static_cast<int>(idx) / n, my = static_cast<int>(idx) % n;
    return char_fn_2d(kernel, rho0, grid_momentum(mx, n), grid_momentum(my, n), t, n);
  });

  // P(x, y) = (1/n^2) sum_q e^{-i (qx x + qy y)} R2(q), done separably.
  std::vector<cplx> half(static_cast<std::size_t>(n) * n, 0.0);  // (x index, my)
  for (int ix = 0; ix < n; ++ix) {
    const int x = PositionDistribution::coord(ix, n);
    for (int my = 0; my < n; ++my) {
      cplx s = 0.0;
      for (int mx = 0; mx < n; ++mx)
        s += std::polar(1.0, -grid_momentum(mx, n) * x) * r2[mx * n + my];
      half[ix * n + my] = s;
    }
  }
  PositionDistribution p{n, t, std::vector<double>(static_cast<std::size_t>(n) * n, 0.0)};
  double worst_imag = 0.0;
  for (int ix = 0; ix < n; ++ix) {
    for (int iy = 0; iy < n; ++iy) {
      const int y = PositionDistribution::coord(iy, n);
      cplx s = 0.0;
      for (int my = 0; my < n; ++my) s += std::polar(1.0, -grid_momentum(my, n) * y) * half[ix * n + my];
      s /= static_cast<double>(n * n);
      worst_imag = std::max(worst_imag, std::abs(s.imag()));
      p.probs[ix * n + iy] = s.real();
    }
  }
  if (worst_imag > 1e-8)
    throw ConsistencyError("simulate_fourier: imaginary residue " + std::to_string(worst_imag) +
                           " exceeds 1e-8");
  return p;
}

// ---------------------------------------------------------------------------

/// R(q, t) = <e^{i q (x + y)}>_t by momentum quadrature (q need not be a grid
/// frequency).
inline cplx char_fn_diagonal(const WalkConfig& cfg, double q, int t,
                             int n_k = kDefaultQuadratureNodes) {
  const SuperoperatorKernel kernel(cfg.coin, cfg.channel);
  return char_fn_2d(kernel, cfg.phi0.density(), q, q, t, n_k);
}

/// Same quantity for many q at once, parallel over q.
inline std::vector<cplx> char_fn_diagonal(const WalkConfig& cfg, const std::vector<double>& qs,
                                          int t, int n_k = kDefaultQuadratureNodes) {
  const SuperoperatorKernel kernel(cfg.coin, cfg.channel);
  const Mat4 rho0 = cfg.phi0.density();
  return parallel_map<cplx>(qs.size(), [&](std::size_t i) {
    return char_fn_2d(kernel, rho0, qs[i], qs[i], t, n_k);
  });
}

inline constexpr double kGeneratingMaxModulus = 0.95;

/// G(z, q) = sum_t z^t R(q, t) via the resolvent trace under the same
/// quadrature.
inline cplx generating_fn(const WalkConfig& cfg, cplx z, double q,
                          int n_k = kDefaultQuadratureNodes) {
  if (std::abs(z) > kGeneratingMaxModulus)
    throw RangeError("generating_fn: |z| = " + std::to_string(std::abs(z)) + " exceeds 0.95");
  const Mat4 rho0 = cfg.phi0.density();
  const auto rows = parallel_map<cplx>(n_k, [&](std::size_t i) {
    cplx row = 0.0;
    for (int j = 0; j < n_k; ++j) {
      const double kx = grid_momentum(static_cast<int>(i), n_k), ky = grid_momentum(j, n_k);
      row += resolvent_trace(cfg.coin, cfg.channel, Momenta::diagonal_shift(kx, ky, q), z, rho0);
    }
    return row;
  });
  cplx acc = 0.0;
  for (const auto& r : rows) acc += r;
  return acc / static_cast<double>(n_k * n_k);
}

// ---------------------------------------------------------------------------

struct Moments {
  double mean_x = 0.0;
  double mean_y = 0.0;
  double var_x = 0.0;
  double var_y = 0.0;
  double cov_xy = 0.0;
  double var_diag = 0.0;  // Var(x + y)
};

inline Moments moments(const PositionDistribution& d) {
  Moments m;
  double sx = 0, sy = 0, sxx = 0, syy = 0, sxy = 0, total = 0;
  for (int ix = 0; ix < d.n; ++ix)
    for (int iy = 0; iy < d.n; ++iy) {
      const double p = d.probs[ix * d.n + iy];
      const double x = PositionDistribution::coord(ix, d.n), y = PositionDistribution::coord(iy, d.n);
      total += p;
      sx += p * x;
      sy += p * y;
      sxx += p * x * x;
      syy += p * y * y;
      sxy += p * x * y;
    }
  m.mean_x = sx / total;
  m.mean_y = sy / total;
  m.var_x = sxx / total - m.mean_x * m.mean_x;
  m.var_y = syy / total - m.mean_y * m.mean_y;
  m.cov_xy = sxy / total - m.mean_x * m.mean_y;
  m.var_diag = m.var_x + m.var_y + 2.0 * m.cov_xy;
  return m;
}

struct DiagonalMoments {
  int t = 0;
  double mean = 0.0;
  double variance = 0.0;
};

/// Exact mean and variance of s = x + y for t = 0..t_max on the infinite
/// lattice, from q-derivatives of R(q, t) propagated alongside L^t.
/// Quadrature is exact for n_k > 2 t_max; pass n_k = 0 to pick that.
inline std::vector<DiagonalMoments> diagonal_moment_series(const WalkConfig& cfg, int t_max,
                                                           int n_k = 0) {
  if (t_max < 0) throw RangeError("diagonal_moment_series: t_max must be >= 0");
  if (n_k <= 0) n_k = 2 * t_max + 2;
  const SuperoperatorKernel kernel(cfg.coin, cfg.channel);
  const Vec16 v0 = SuperoperatorKernel::vec(cfg.phi0.density());

  // d/dq of the right phase conj(d_b(k + q)) is -i sigma_b, sigma = -(diagonal step).
  Vec16 g;
  for (int a = 0; a < 4; ++a)
    for (int b = 0; b < 4; ++b) g(4 * a + b) = -kI * static_cast<double>(-kDiagonalStep[b]);

  using Series = std::vector<std::pair<cplx, cplx>>;  // (R'(0), R''(0)) per t
  const auto rows = parallel_map<Series>(n_k, [&](std::size_t i) {
    Series acc(t_max + 1, {0.0, 0.0});
    for (int j = 0; j < n_k; ++j) {
      const double kx = grid_momentum(static_cast<int>(i), n_k), ky = grid_momentum(j, n_k);
      const Vec16 ph = SuperoperatorKernel::phases(Momenta::equal(kx, ky));
      const Vec16 ph1 = ph.cwiseProduct(g);
      const Vec16 ph2 = ph1.cwiseProduct(g);
      Vec16 v = v0, v1 = Vec16::Zero(), v2 = Vec16::Zero();
      for (int t = 1; t <= t_max; ++t) {
        const Vec16 bv = kernel.base() * v;
        const Vec16 bv1 = kernel.base() * v1;
        const Vec16 bv2 = kernel.base() * v2;
        v2 = ph2.cwiseProduct(bv) + 2.0 * ph1.cwiseProduct(bv1) + ph.cwiseProduct(bv2);
        v1 = ph1.cwiseProduct(bv) + ph.cwiseProduct(bv1);
        v = ph.cwiseProduct(bv);
        acc[t].first += SuperoperatorKernel::trace(v1);
        acc[t].second += SuperoperatorKernel::trace(v2);
      }
    }
    return acc;
  });

  std::vector<DiagonalMoments> out(t_max + 1);
  const double norm = static_cast<double>(n_k) * n_k;
  for (int t = 0; t <= t_max; ++t) {
    cplx d1 = 0.0, d2 = 0.0;
    for (const auto& row : rows) {
      d1 += row[t].first;
      d2 += row[t].second;
    }
    d1 /= norm;
    d2 /= norm;
    // R' = i E[s], R'' = -E[s^2]
    const double mean = d1.imag();
    const double second = -d2.real();
    out[t] = {t, mean, second - mean * mean};
  }
  return out;
}

/// Law of s = x + y at time t on the infinite lattice, index s + t for
/// s in [-t, t], by inverse DFT of R(q, t) over 2t + 2 frequencies.
/// Exact when n_k > 2t (or whenever the quadrature integrand is k-independent).
inline std::vector<double> diagonal_marginal(const WalkConfig& cfg, int t,
                                             int n_k = kDefaultQuadratureNodes) {
  if (t < 0) throw RangeError("diagonal_marginal: t must be >= 0");
  const int nq = 2 * t + 2;
  std::vector<double> qs(nq / 2 + 1);
  for (int m = 0; m <= nq / 2; ++m) qs[m] = grid_momentum(m, nq);
  const auto half = char_fn_diagonal(cfg, qs, t, n_k);
  std::vector<cplx> r(nq);
  for (int m = 0; m < nq; ++m) r[m] = m <= nq / 2 ? half[m] : std::conj(half[nq - m]);

  std::vector<double> p(2 * t + 1);
  for (int s = -t; s <= t; ++s) {
    cplx acc = 0.0;
    for (int m = 0; m < nq; ++m) acc += std::polar(1.0, -grid_momentum(m, nq) * s) * r[m];
    p[s + t] = acc.real() / nq;
  }
  return p;
}

// ---------------------------------------------------------------------------

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
};

inline LinearFit least_squares(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  double sx = 0, sy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
  }
  const double mx = sx / n, my = sy / n;
  double sxx = 0, sxy = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  LinearFit f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  double ss_res = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double e = y[i] - (f.intercept + f.slope * x[i]);
    ss_res += e * e;
  }
  f.r2 = syy > 0 ? 1.0 - ss_res / syy : 1.0;
  return f;
}

struct DiffusionFit {
  std::vector<int> t_list;
  std::vector<double> var_diag;
  LinearFit diffusive;  // Var(x+y) against t
  LinearFit ballistic;  // Var(x+y) against t^2
};

inline DiffusionFit diffusion_fit(const WalkConfig& cfg, const std::vector<int>& t_list, int n_k = 0) {
  if (t_list.size() < 4) throw RangeError("diffusion_fit: need at least 4 time points");
  for (std::size_t i = 1; i < t_list.size(); ++i)
    if (t_list[i] <= t_list[i - 1]) throw RangeError("diffusion_fit: t_list must be ascending");
  const auto series = diagonal_moment_series(cfg, t_list.back(), n_k);
  DiffusionFit fit;
  fit.t_list = t_list;
  std::vector<double> ts, ts2;
  for (int t : t_list) {
    fit.var_diag.push_back(series[t].variance);
    ts.push_back(t);
    ts2.push_back(static_cast<double>(t) * t);
  }
  fit.diffusive = least_squares(ts, fit.var_diag);
  fit.ballistic = least_squares(ts2, fit.var_diag);
  return fit;
}

}  // namespace dqw
