#pragma once

// The momentum-space superoperator
//
//   L_{kx,kx';ky,ky'} X = sum_n M_{kx,ky} A_n X A_n^dag M_{kx',ky'}^dag
//
// as a direct action, as a 16x16 matrix in the Pauli (x) Pauli basis, and as
// a fast kernel in the matrix-unit basis used by the evolution pipelines.

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "dqw/channels.hpp"
#include "dqw/linalg.hpp"
#include "dqw/walk.hpp"

namespace dqw {

/// Left momenta (kx, ky) and right momenta (kx2, ky2) of a superoperator.
struct Momenta {
  double kx = 0.0;
  double kx2 = 0.0;
  double ky = 0.0;
  double ky2 = 0.0;

  static Momenta equal(double kx, double ky) { return {kx, kx, ky, ky}; }
  static Momenta diagonal_shift(double kx, double ky, double q) { return {kx, kx + q, ky, ky + q}; }
};

inline Mat4 apply_super(const CoinOperator& coin, const KrausChannel& ch, const Momenta& k,
                        const CMatrix& x) {
  require_shape(x, 4, 4, "apply_super");
  const Mat4 left = momentum_coin(coin, k.kx, k.ky);
  const Mat4 right = momentum_coin(coin, k.kx2, k.ky2).adjoint();
  const Mat4 xin = x;
  Mat4 out = Mat4::Zero();
  for (const auto& a : ch.ops()) out.noalias() += left * a * xin * a.adjoint() * right;
  return out;
}

struct SuperMatrix {
  Mat16 m;
  Momenta momenta;

  PauliVector apply(const PauliVector& r) const { return m * r; }
};

/// Column j is the Pauli expansion of L(B_j), so that
/// op_to_pauli(L X) = m * op_to_pauli(X).
inline SuperMatrix build_supermatrix(const CoinOperator& coin, const KrausChannel& ch,
                                     const Momenta& k) {
  const Mat4 left = momentum_coin(coin, k.kx, k.ky);
  const Mat4 right = momentum_coin(coin, k.kx2, k.ky2).adjoint();
  std::vector<Mat4> lk, rk;
  lk.reserve(ch.ops().size());
  rk.reserve(ch.ops().size());
  for (const auto& a : ch.ops()) {
    lk.push_back(left * a);
    rk.push_back(a.adjoint() * right);
  }
  const auto& basis = pauli_basis16();
  SuperMatrix sm{Mat16::Zero(), k};
  for (int j = 0; j < 16; ++j) {
    Mat4 out = Mat4::Zero();
    for (std::size_t n = 0; n < lk.size(); ++n) out.noalias() += lk[n] * basis[j] * rk[n];
    sm.m.col(j) = op_to_pauli(out);
  }
  return sm;
}

inline constexpr double kSimpleTol = 1e-8;

struct SpectralReport {
  std::vector<cplx> eigenvalues;  // sorted by decreasing modulus
  double spectral_radius = 0.0;
  bool one_is_simple = false;
  double gap = 0.0;  // 1 - second-largest modulus
};

inline SpectralReport spectrum(const CMatrix& m) {
  SpectralReport rep;
  rep.eigenvalues = eig(m);
  std::stable_sort(rep.eigenvalues.begin(), rep.eigenvalues.end(),
                   [](cplx a, cplx b) { return std::abs(a) > std::abs(b); });
  rep.spectral_radius = std::abs(rep.eigenvalues.front());
  rep.gap = rep.eigenvalues.size() > 1 ? 1.0 - std::abs(rep.eigenvalues[1]) : 1.0;

  int near_one = 0;
  bool others_inside = true;
  for (const auto& ev : rep.eigenvalues) {
    if (std::abs(ev - 1.0) <= kSimpleTol)
      ++near_one;
    else if (std::abs(ev) > 1.0 - kSimpleTol)
      others_inside = false;
  }
  rep.one_is_simple = near_one == 1 && others_inside;
  return rep;
}

inline SpectralReport spectrum(const SuperMatrix& sm) { return spectrum(CMatrix(sm.m)); }

/// Deviation of column 0 from the Pauli expansion of M_{k} M_{k'}^dag. For a
/// unital channel L(I) = M_k M_{k'}^dag and B_0 = I, so this should vanish.
inline double check_first_column(const SuperMatrix& sm, const CoinOperator& coin) {
  const auto& k = sm.momenta;
  const Mat4 mm = momentum_coin(coin, k.kx, k.ky) * momentum_coin(coin, k.kx2, k.ky2).adjoint();
  return (sm.m.col(0) - op_to_pauli(mm)).cwiseAbs().maxCoeff();
}

// ---------------------------------------------------------------------------
// Factored (two one-dimensional walks) inputs.
//
// In rotated coordinates u = x + y, w = x - y every chirality moves both u and
// w by one unit, so a coin C_a (x) C_b acting on |a b> with a steering u and b
// steering w is a pair of independent one-dimensional walks. The tensor label
// |ab> maps onto chirality as 00 -> L, 01 -> D, 10 -> U, 11 -> R, which makes
// D(kx, ky) = d(k1) (x) d(k2) with k1 = (kx+ky)/2, k2 = (kx-ky)/2 and
// d(k) = diag(e^{ik}, e^{-ik}).

inline constexpr std::array<int, 4> kTensorToChirality{kLeft, kDown, kUp, kRight};

inline Mat4 tensor_frame_permutation() {
  Mat4 p = Mat4::Zero();
  for (int j = 0; j < 4; ++j) p(kTensorToChirality[j], j) = 1.0;
  return p;
}

inline Mat4 tensor_to_chirality(const Mat4& x) {
  const Mat4 p = tensor_frame_permutation();
  return p * x * p.transpose();
}

/// Change of Pauli coordinates from the chirality frame to the tensor frame.
inline Mat16 chirality_to_tensor_pauli() {
  const Mat4 p = tensor_frame_permutation();
  const auto& basis = pauli_basis16();
  Mat16 s;
  for (int j = 0; j < 16; ++j) s.col(j) = op_to_pauli(p.transpose() * basis[j] * p);
  return s;
}

struct FactoredWalk {
  Mat2 coin_a;
  Mat2 coin_b;
  std::vector<Mat2> kraus_a;
  std::vector<Mat2> kraus_b;

  CoinOperator coin() const {
    return {tensor_to_chirality(kron(coin_a, coin_b)), "factored"};
  }

  KrausChannel channel() const {
    if (kraus_a.empty() || kraus_b.empty())
      throw ConfigurationError("factored walk needs at least one Kraus operator per factor");
    std::vector<Mat4> ops;
    for (const auto& a : kraus_a)
      for (const auto& b : kraus_b) ops.push_back(tensor_to_chirality(kron(a, b)));
    return {std::move(ops), "factored"};
  }
};

inline std::vector<Mat2> one_dim_dephasing(double p) {
  detail::require_probability(p, "one_dim_dephasing");
  return {std::sqrt(1.0 - p) * Mat2::Identity(), std::sqrt(p) * pauli2()[3]};
}

inline FactoredWalk separable_hadamard_walk(std::vector<Mat2> kraus_a, std::vector<Mat2> kraus_b) {
  return {hadamard2(), hadamard2(), std::move(kraus_a), std::move(kraus_b)};
}

/// One-dimensional superoperator L_{k,k'} X = sum_n m_k a_n X a_n^dag m_{k'}^dag
/// with m_k = diag(e^{ik}, e^{-ik}) C, as a 4x4 matrix in the Pauli basis
/// (r_i = Tr(sigma_i X)/2).
inline Mat4 one_dim_supermatrix(const Mat2& coin, const std::vector<Mat2>& kraus, double k,
                                double k2) {
  Mat2 dk = Mat2::Zero(), dk2 = Mat2::Zero();
  dk(0, 0) = std::polar(1.0, k);
  dk(1, 1) = std::polar(1.0, -k);
  dk2(0, 0) = std::polar(1.0, k2);
  dk2(1, 1) = std::polar(1.0, -k2);
  const Mat2 left = dk * coin;
  const Mat2 right = (dk2 * coin).adjoint();
  Mat4 out;
  for (int j = 0; j < 4; ++j) {
    Mat2 y = Mat2::Zero();
    for (const auto& a : kraus) y += left * a * pauli2()[j] * a.adjoint() * right;
    out.col(j) = op_to_pauli2(y);
  }
  return out;
}

struct TensorDecompositionReport {
  double kron_residual = 0.0;               // nearest-Kronecker residual in the tensor frame
  std::optional<double> factored_max_diff;  // |L16 - L_a (x) L_b|_max for factored inputs
};

enum class TensorCheck { kronecker_only, explicit_factors };

/// Supermatrix at diagonal-shift momenta rewritten in the tensor frame.
inline Mat16 tensor_frame_supermatrix(const CoinOperator& coin, const KrausChannel& ch, double kx,
                                      double ky, double q) {
  const Mat16 s = chirality_to_tensor_pauli();
  const Mat16 l16 = build_supermatrix(coin, ch, Momenta::diagonal_shift(kx, ky, q)).m;
  return s * l16 * s.inverse();
}

inline TensorDecompositionReport check_tensor_decomposition(const CoinOperator& coin,
                                                            const KrausChannel& ch, double kx,
                                                            double ky, double q) {
  return {nearest_kron_factor(tensor_frame_supermatrix(coin, ch, kx, ky, q)).residual, {}};
}

inline TensorDecompositionReport check_tensor_decomposition(const FactoredWalk& fw, double kx,
                                                            double ky, double q) {
  const Mat16 lt = tensor_frame_supermatrix(fw.coin(), fw.channel(), kx, ky, q);
  const double k1 = (kx + ky) / 2.0;
  const double k2 = (kx - ky) / 2.0;
  const Mat4 la = one_dim_supermatrix(fw.coin_a, fw.kraus_a, k1, k1 + q);
  const Mat4 lb = one_dim_supermatrix(fw.coin_b, fw.kraus_b, k2, k2);
  TensorDecompositionReport rep;
  rep.kron_residual = nearest_kron_factor(lt).residual;
  rep.factored_max_diff = max_abs(lt - kron(la, lb));
  return rep;
}

/// Dispatch used by front ends that only sometimes carry factored inputs.
inline TensorDecompositionReport check_tensor_decomposition(const CoinOperator& coin,
                                                            const KrausChannel& ch,
                                                            const std::optional<FactoredWalk>& fw,
                                                            double kx, double ky, double q,
                                                            TensorCheck mode) {
  if (mode == TensorCheck::explicit_factors) {
    if (!fw)
      throw ConfigurationError(
          "explicit factor comparison requested but no factored coin/channel was supplied");
    return check_tensor_decomposition(*fw, kx, ky, q);
  }
  return check_tensor_decomposition(coin, ch, kx, ky, q);
}

// ---------------------------------------------------------------------------

inline constexpr double kSingularRcond = 1e-12;

/// Tr{ (I - z L)^{-1} rho0 }: solves (I - z m) w = op_to_pauli(rho0) and
/// returns 4 w_0.
inline cplx resolvent_trace(const SuperMatrix& sm, cplx z, const CMatrix& rho0) {
  const Mat16 a = Mat16::Identity() - z * sm.m;
  Eigen::PartialPivLU<Mat16> lu(a);
  const double rc = lu.rcond();
  if (!(rc > kSingularRcond))
    throw NearSingularError("resolvent_trace: I - zL is numerically singular (rcond " +
                                std::to_string(rc) + ")",
                            rc > 0 ? 1.0 / rc : std::numeric_limits<double>::infinity());
  const PauliVector w = lu.solve(op_to_pauli(rho0));
  return 4.0 * w(0);
}

inline cplx resolvent_trace(const CoinOperator& coin, const KrausChannel& ch, const Momenta& k,
                            cplx z, const CMatrix& rho0) {
  return resolvent_trace(build_supermatrix(coin, ch, k), z, rho0);
}

// ---------------------------------------------------------------------------
// Matrix-unit kernel. With K_n = M A_n the momentum-free map
// X -> sum_n K_n X K_n^dag has the 16x16 matrix base_{(ab),(cd)} =
// sum_n K_n(a,c) conj(K_n(b,d)); momenta only rescale entry (a,b) of the
// output by d_a(k) conj(d_b(k')). Row-major vec: index 4a+b.

using Vec16 = Eigen::Matrix<cplx, 16, 1>;

class SuperoperatorKernel {
 public:
  SuperoperatorKernel(const CoinOperator& coin, const KrausChannel& ch) : base_(Mat16::Zero()) {
    for (const auto& a : ch.ops()) {
      const Mat4 k = coin.u() * a;
      for (int ia = 0; ia < 4; ++ia)
        for (int ib = 0; ib < 4; ++ib)
          for (int ic = 0; ic < 4; ++ic)
            for (int id = 0; id < 4; ++id)
              base_(4 * ia + ib, 4 * ic + id) += k(ia, ic) * std::conj(k(ib, id));
    }
  }

  const Mat16& base() const { return base_; }

  static Vec16 phases(const Momenta& k) {
    const Vec4 dl = momentum_phases(k.kx, k.ky);
    const Vec4 dr = momentum_phases(k.kx2, k.ky2);
    Vec16 ph;
    for (int a = 0; a < 4; ++a)
      for (int b = 0; b < 4; ++b) ph(4 * a + b) = dl(a) * std::conj(dr(b));
    return ph;
  }

  static Vec16 vec(const Mat4& x) {
    Vec16 v;
    for (int a = 0; a < 4; ++a)
      for (int b = 0; b < 4; ++b) v(4 * a + b) = x(a, b);
    return v;
  }

  static cplx trace(const Vec16& v) { return v(0) + v(5) + v(10) + v(15); }

  Mat16 matrix(const Momenta& k) const { return phases(k).asDiagonal() * base_; }

  /// Tr{ L^t rho0 }
  cplx trace_evolved(const Momenta& k, int t, const Mat4& rho0) const {
    const Vec16 ph = phases(k);
    Vec16 v = vec(rho0);
    for (int s = 0; s < t; ++s) v = ph.cwiseProduct(base_ * v);
    return trace(v);
  }

 private:
  Mat16 base_;
};

}  // namespace dqw
