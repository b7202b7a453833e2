#pragma once

// Dominant-root analysis of the diagonal-shift superoperator and the Gaussian
// mixture that (x + y)/sqrt(t) converges to when 1 is a simple, isolated
// eigenvalue at q = 0.
//
// With lambda(q) the eigenvalue of L_{kx,kx+q;ky,ky+q} continuously connected
// to 1 and z0 = 1/lambda, z0(0) = 1 and z0'(0) = 0 give
//
//   Tr{L^t rho0} at q/sqrt(t)  ->  exp(-z0''(0) q^2 / 2)
//
// per momentum, and the limit characteristic function is the momentum average.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "dqw/linalg.hpp"
#include "dqw/parallel.hpp"
#include "dqw/simulate.hpp"
#include "dqw/superoperator.hpp"

namespace dqw {

inline constexpr double kIsolationTol = 1e-8;
inline constexpr double kContinuationStep = 0.01;

enum class RootSelection { max_modulus, continuation };

namespace detail {

inline std::string momenta_text(double kx, double ky, double q) {
  return "(kx=" + std::to_string(kx) + ", ky=" + std::to_string(ky) + ", q=" + std::to_string(q) + ")";
}

inline cplx top_eigenvalue(const CoinOperator& coin, const KrausChannel& ch, double kx, double ky,
                           double q) {
  const auto ev = eig(CMatrix(build_supermatrix(coin, ch, Momenta::diagonal_shift(kx, ky, q)).m));
  std::vector<double> mod(ev.size());
  std::transform(ev.begin(), ev.end(), mod.begin(), [](cplx z) { return std::abs(z); });
  std::vector<std::size_t> order(ev.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](auto a, auto b) { return mod[a] > mod[b]; });
  if (mod[order[0]] - mod[order[1]] <= kIsolationTol * mod[order[0]])
    throw NonSimpleSpectrumError(
        "dominant_root: no isolated eigenvalue of maximal modulus at " + momenta_text(kx, ky, q), kx,
        ky, q);
  return ev[order[0]];
}

inline cplx continued_eigenvalue(const CoinOperator& coin, const KrausChannel& ch, double kx,
                                 double ky, double q) {
  auto pairs = eig_pairs(CMatrix(build_supermatrix(coin, ch, Momenta::equal(kx, ky)).m));
  Eigen::Index start = 0;
  (pairs.values.array() - cplx(1.0)).abs().minCoeff(&start);
  const auto rep = spectrum(CMatrix(build_supermatrix(coin, ch, Momenta::equal(kx, ky)).m));
  if (!rep.one_is_simple)
    throw NonSimpleSpectrumError(
        "dominant_root: eigenvalue 1 is not simple at " + momenta_text(kx, ky, 0.0), kx, ky, 0.0);
  CVector v = pairs.vectors.col(start);
  cplx lambda = pairs.values(start);
  const int steps = std::max(1, static_cast<int>(std::ceil(std::abs(q) / kContinuationStep)));
  for (int s = 1; s <= steps; ++s) {
    const double qs = q * s / steps;
    pairs = eig_pairs(CMatrix(build_supermatrix(coin, ch, Momenta::diagonal_shift(kx, ky, qs)).m));
    Eigen::Index best = 0;
    (pairs.vectors.adjoint() * v).cwiseAbs().maxCoeff(&best);
    v = pairs.vectors.col(best);
    lambda = pairs.values(best);
  }
  return lambda;
}

}  // namespace detail

/// z0(q) = 1 / lambda(q).
inline cplx dominant_root(const CoinOperator& coin, const KrausChannel& ch, double kx, double ky,
                          double q, RootSelection how = RootSelection::max_modulus) {
  const cplx lambda = how == RootSelection::max_modulus
                          ? detail::top_eigenvalue(coin, ch, kx, ky, q)
                          : detail::continued_eigenvalue(coin, ch, kx, ky, q);
  return 1.0 / lambda;
}

struct RootDerivatives {
  cplx d1;                   // z0'(0)
  cplx d2;                   // z0''(0)
  double fd_residual = 0.0;  // Richardson consistency of d2
};

inline constexpr double kDefaultFdStep = 1e-2;

/// Central differences at h, h/2, h/4 with one Richardson level. d2 is the
/// extrapolation from (h/2, h/4); fd_residual compares it with the (h, h/2)
/// extrapolation, relative to max(1, |d2|).
inline RootDerivatives root_derivatives(const CoinOperator& coin, const KrausChannel& ch, double kx,
                                        double ky, double h = kDefaultFdStep) {
  const cplx z0 = dominant_root(coin, ch, kx, ky, 0.0);
  std::array<cplx, 3> first{}, second{};
  for (int level = 0; level < 3; ++level) {
    const double step = h / (1 << level);
    const cplx zp = dominant_root(coin, ch, kx, ky, step);
    const cplx zm = dominant_root(coin, ch, kx, ky, -step);
    first[level] = (zp - zm) / (2.0 * step);
    second[level] = (zp - 2.0 * z0 + zm) / (step * step);
  }
  auto richardson = [](cplx coarse, cplx fine) { return (4.0 * fine - coarse) / 3.0; };
  RootDerivatives out;
  out.d1 = richardson(first[1], first[2]);
  out.d2 = richardson(second[1], second[2]);
  const cplx d2_coarse = richardson(second[0], second[1]);
  out.fd_residual = std::abs(out.d2 - d2_coarse) / std::max(1.0, std::abs(out.d2));
  return out;
}

/// lim_t Tr{L^t_{k,k} rho0} from the rank-one spectral projector onto the
/// eigenvalue-1 eigenspace.
inline cplx residue_constant(const CoinOperator& coin, const KrausChannel& ch, double kx, double ky,
                             const CMatrix& rho0) {
  const Mat16 l = build_supermatrix(coin, ch, Momenta::equal(kx, ky)).m;
  if (!spectrum(CMatrix(l)).one_is_simple)
    throw NonSimpleSpectrumError(
        "residue_constant: eigenvalue 1 is not simple at " + detail::momenta_text(kx, ky, 0.0), kx,
        ky, 0.0);
  const auto right = eig_pairs(CMatrix(l));
  const auto left = eig_pairs(CMatrix(l.adjoint()));
  Eigen::Index ir = 0, il = 0;
  (right.values.array() - cplx(1.0)).abs().minCoeff(&ir);
  (left.values.array() - cplx(1.0)).abs().minCoeff(&il);
  const CVector v = right.vectors.col(ir);
  const CVector u = left.vectors.col(il);
  const CVector r = op_to_pauli(rho0);
  const CVector projected = v * (u.dot(r) / u.dot(v));
  return 4.0 * projected(0);
}

// ---------------------------------------------------------------------------

struct EigenvalueProductReport {
  std::vector<cplx> factor_a;       // eigenvalues of the 3x3 block of the first 1D superoperator
  std::vector<cplx> factor_b;
  std::vector<cplx> products;       // all factor_a[i] * factor_b[j]
  std::vector<cplx> block_spectrum; // eigenvalues of the 9x9 block of the 16x16 superoperator
  double matching_distance = 0.0;   // bottleneck distance between the two multisets
};

namespace detail {

inline double bottleneck_distance(const std::vector<cplx>& a, const std::vector<cplx>& b) {
  const std::size_t n = a.size();
  std::vector<char> used(n, 0);
  double best = std::numeric_limits<double>::infinity();
  // Depth-first over assignments with pruning; n is 9 here.
  auto search = [&](auto&& self, std::size_t i, double worst) -> void {
    if (worst >= best) return;
    if (i == n) {
      best = worst;
      return;
    }
    for (std::size_t j = 0; j < n; ++j) {
      if (used[j]) continue;
      used[j] = 1;
      self(self, i + 1, std::max(worst, std::abs(a[i] - b[j])));
      used[j] = 0;
    }
  };
  search(search, 0, 0.0);
  return best;
}

inline std::vector<cplx> lower_block_eigenvalues(const Mat4& l) {
  return eig(CMatrix(l.bottomRightCorner<3, 3>()));
}

}  // namespace detail

/// At q = 0 each one-dimensional superoperator is diag(1, M_a) in the Pauli
/// basis, so the two-dimensional one carries M_a (x) M_b on the indices
/// {4a+b : a, b >= 1}; its spectrum must be the pairwise products.
inline EigenvalueProductReport eigenvalue_products(const FactoredWalk& fw, double kx, double ky) {
  const double k1 = (kx + ky) / 2.0, k2 = (kx - ky) / 2.0;
  EigenvalueProductReport rep;
  rep.factor_a = detail::lower_block_eigenvalues(one_dim_supermatrix(fw.coin_a, fw.kraus_a, k1, k1));
  rep.factor_b = detail::lower_block_eigenvalues(one_dim_supermatrix(fw.coin_b, fw.kraus_b, k2, k2));
  for (const auto& a : rep.factor_a)
    for (const auto& b : rep.factor_b) rep.products.push_back(a * b);

  const Mat16 lt = tensor_frame_supermatrix(fw.coin(), fw.channel(), kx, ky, 0.0);
  CMatrix block(9, 9);
  for (int i = 0; i < 9; ++i)
    for (int j = 0; j < 9; ++j) block(i, j) = lt(4 * (i / 3 + 1) + i % 3 + 1, 4 * (j / 3 + 1) + j % 3 + 1);
  rep.block_spectrum = eig(block);
  rep.matching_distance = detail::bottleneck_distance(rep.products, rep.block_spectrum);
  return rep;
}

// ---------------------------------------------------------------------------

struct LimitPoint {
  double kx = 0.0;
  double ky = 0.0;
  double gap = 0.0;
  bool one_is_simple = false;
  cplx z0_first_deriv;
  cplx z0_second_deriv;
  double fd_residual = 0.0;
};

struct LimitProfile {
  int grid_n = 0;
  std::vector<LimitPoint> points;

  std::size_t simple_count() const {
    return static_cast<std::size_t>(
        std::count_if(points.begin(), points.end(), [](const auto& p) { return p.one_is_simple; }));
  }
  double excluded_fraction() const {
    return points.empty() ? 1.0 : 1.0 - static_cast<double>(simple_count()) / points.size();
  }
};

inline constexpr int kDefaultMixtureGrid = 32;
inline constexpr double kMaxExcludedFraction = 0.01;
inline constexpr double kLimitExponent = 0.5;

/// Spectral data on a uniform grid_n x grid_n momentum grid.
inline LimitProfile limit_profile(const CoinOperator& coin, const KrausChannel& ch,
                                  int grid_n = kDefaultMixtureGrid, double h = kDefaultFdStep) {
  LimitProfile prof;
  prof.grid_n = grid_n;
  prof.points = parallel_map<LimitPoint>(static_cast<std::size_t>(grid_n) * grid_n, [&](std::size_t idx) {
    LimitPoint pt;
    pt.kx = grid_momentum(static_cast<int>(idx) / grid_n, grid_n);
    pt.ky = grid_momentum(static_cast<int>(idx) % grid_n, grid_n);
    const auto rep = spectrum(build_supermatrix(coin, ch, Momenta::equal(pt.kx, pt.ky)));
    pt.gap = rep.gap;
    pt.one_is_simple = rep.one_is_simple;
    if (pt.one_is_simple) {
      try {
        const auto d = root_derivatives(coin, ch, pt.kx, pt.ky, h);
        pt.z0_first_deriv = d.d1;
        pt.z0_second_deriv = d.d2;
        pt.fd_residual = d.fd_residual;
      } catch (const NonSimpleSpectrumError&) {
        pt.one_is_simple = false;
      }
    }
    return pt;
  });
  return prof;
}

inline void require_hypothesis(const LimitProfile& prof) {
  const double excluded = prof.excluded_fraction();
  if (excluded > kMaxExcludedFraction)
    throw HypothesisViolation("eigenvalue 1 is not simple and isolated on " +
                                  std::to_string(100.0 * excluded) +
                                  "% of the momentum grid (limit theorem hypothesis fails)",
                              excluded);
}

/// R_inf(q) = mean over simple grid points of exp(-c z0''(0) q^2).
inline double limit_char_fn(const LimitProfile& prof, double q, double c = kLimitExponent) {
  require_hypothesis(prof);
  double acc = 0.0;
  std::size_t count = 0;
  for (const auto& p : prof.points) {
    if (!p.one_is_simple) continue;
    acc += std::exp(-c * p.z0_second_deriv.real() * q * q);
    ++count;
  }
  return acc / static_cast<double>(count);
}

inline double limit_char_fn(const CoinOperator& coin, const KrausChannel& ch, double q,
                            int grid_n = kDefaultMixtureGrid) {
  return limit_char_fn(limit_profile(coin, ch, grid_n), q);
}

// ---------------------------------------------------------------------------

/// Density and CDF of the limit law of (x + y)/sqrt(t), by direct Fourier
/// inversion of R_inf on q in [-q_max, q_max].
struct MixtureLaw {
  std::vector<double> s;
  std::vector<double> pdf;
  std::vector<double> cdf;

  double cdf_at(double x) const {
    if (x <= s.front()) return 0.0;
    if (x >= s.back()) return 1.0;
    const auto it = std::upper_bound(s.begin(), s.end(), x);
    const std::size_t i = static_cast<std::size_t>(it - s.begin());
    const double w = (x - s[i - 1]) / (s[i] - s[i - 1]);
    return cdf[i - 1] + w * (cdf[i] - cdf[i - 1]);
  }
};

inline MixtureLaw invert_limit_law(const LimitProfile& prof, double q_max = 20.0, int q_nodes = 4001,
                                   int s_nodes = 4001) {
  require_hypothesis(prof);
  double max_var = 0.0;
  for (const auto& p : prof.points)
    if (p.one_is_simple) max_var = std::max(max_var, p.z0_second_deriv.real());
  const double s_max = 10.0 * std::sqrt(std::max(max_var, 1e-6));

  const double dq = 2.0 * q_max / (q_nodes - 1);
  std::vector<double> rq(q_nodes);
  for (int i = 0; i < q_nodes; ++i) rq[i] = limit_char_fn(prof, -q_max + i * dq);

  MixtureLaw law;
  law.s.resize(s_nodes);
  law.pdf.resize(s_nodes);
  law.cdf.resize(s_nodes);
  const double ds = 2.0 * s_max / (s_nodes - 1);
  for (int j = 0; j < s_nodes; ++j) {
    const double s = -s_max + j * ds;
    double acc = 0.0;
    for (int i = 0; i < q_nodes; ++i) {
      const double w = (i == 0 || i == q_nodes - 1) ? 0.5 : 1.0;
      acc += w * std::cos((-q_max + i * dq) * s) * rq[i];
    }
    law.s[j] = s;
    law.pdf[j] = acc * dq / (2.0 * kPi);
  }
  law.cdf[0] = 0.0;
  for (int j = 1; j < s_nodes; ++j) law.cdf[j] = law.cdf[j - 1] + 0.5 * ds * (law.pdf[j] + law.pdf[j - 1]);
  return law;
}

/// Kolmogorov distance between a lattice law (atoms at s/sqrt(t)) and a
/// continuous CDF, checked on both sides of every jump.
template <class Cdf>
double ks_distance(const std::vector<double>& atoms_at, const std::vector<double>& mass, Cdf&& cdf) {
  double below = 0.0, worst = 0.0;
  for (std::size_t i = 0; i < atoms_at.size(); ++i) {
    const double f = cdf(atoms_at[i]);
    worst = std::max(worst, std::abs(below - f));
    below += mass[i];
    worst = std::max(worst, std::abs(below - f));
  }
  return worst;
}

// ---------------------------------------------------------------------------

struct KsEntry {
  int t = 0;
  double distance = 0.0;
};

struct ConvergenceReport {
  std::vector<int> t_list;
  std::vector<double> q_grid;
  std::vector<std::vector<double>> gaps;  // [t index][q index] |R(q/sqrt t, t) - R_inf(q)|
  std::vector<double> sup_gaps;
  std::vector<KsEntry> ks;
};

/// Characteristic-function gaps for each t in t_list, plus KS distances of the
/// exact rescaled law of x + y for each t in ks_t_list (momentum quadrature
/// with 2t + 2 nodes, so those t should stay moderate).
inline ConvergenceReport convergence_diagnostic(const WalkConfig& cfg, const LimitProfile& prof,
                                                const std::vector<int>& t_list,
                                                const std::vector<double>& q_grid,
                                                const std::vector<int>& ks_t_list = {},
                                                int n_k = kDefaultQuadratureNodes) {
  for (std::size_t i = 1; i < t_list.size(); ++i)
    if (t_list[i] <= t_list[i - 1]) throw RangeError("convergence_diagnostic: t_list must be ascending");
  require_hypothesis(prof);

  ConvergenceReport rep;
  rep.t_list = t_list;
  rep.q_grid = q_grid;
  std::vector<double> limit(q_grid.size());
  for (std::size_t i = 0; i < q_grid.size(); ++i) limit[i] = limit_char_fn(prof, q_grid[i]);

  for (int t : t_list) {
    std::vector<double> scaled(q_grid.size());
    const double root_t = std::sqrt(static_cast<double>(t));
    for (std::size_t i = 0; i < q_grid.size(); ++i) scaled[i] = q_grid[i] / root_t;
    const auto r = char_fn_diagonal(cfg, scaled, t, n_k);
    std::vector<double> row(q_grid.size());
    for (std::size_t i = 0; i < q_grid.size(); ++i) row[i] = std::abs(r[i] - limit[i]);
    rep.sup_gaps.push_back(row.empty() ? 0.0 : *std::max_element(row.begin(), row.end()));
    rep.gaps.push_back(std::move(row));
  }

  if (!ks_t_list.empty()) {
    const auto law = invert_limit_law(prof);
    for (int t : ks_t_list) {
      const auto p = diagonal_marginal(cfg, t, 2 * t + 2);
      std::vector<double> at(p.size());
      for (int s = -t; s <= t; ++s) at[s + t] = s / std::sqrt(static_cast<double>(t));
      rep.ks.push_back({t, ks_distance(at, p, [&](double x) { return law.cdf_at(x); })});
    }
  }
  return rep;
}

}  // namespace dqw
