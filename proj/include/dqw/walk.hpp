#pragma once

// Chirality-space conventions and coin operators.
//
// The coin space is ordered (|L>, |R>, |U>, |D>). A step with momentum
// (kx, ky) multiplies the coin by
//
//   D(kx, ky) = diag(e^{i kx}, e^{-i kx}, e^{-i ky}, e^{i ky})
//
// which is the Fourier dual of the position shifts L: x-1, R: x+1,
// U: y+1, D: y-1 under the kernel e^{i (kx x + ky y)}.

#include <array>
#include <cmath>
#include <string>
#include <utility>

#include "dqw/linalg.hpp"

namespace dqw {

enum Chirality : int { kLeft = 0, kRight = 1, kUp = 2, kDown = 3 };

struct Displacement {
  int dx;
  int dy;
};

/// Lattice step taken by each chirality.
inline constexpr std::array<Displacement, 4> kChiralityShift{{{-1, 0}, {1, 0}, {0, 1}, {0, -1}}};

/// Sign with which a chirality moves the diagonal coordinate s = x + y.
inline constexpr std::array<int, 4> kDiagonalStep{-1, 1, 1, -1};

inline constexpr double kUnitarityTol = 1e-12;

class CoinOperator {
 public:
  CoinOperator(const Mat4& u, std::string label) : u_(u), label_(std::move(label)) {
    if (!u_.allFinite()) throw ValidationError("coin '" + label_ + "' has non-finite entries");
    const double err = max_abs(u_.adjoint() * u_ - Mat4::Identity());
    if (err > kUnitarityTol)
      throw ValidationError("coin '" + label_ + "' is not unitary (max |U^dag U - I| = " +
                            std::to_string(err) + ")");
  }

  const Mat4& u() const { return u_; }
  const std::string& label() const { return label_; }

 private:
  Mat4 u_;
  std::string label_;
};

class ChiralityState {
 public:
  explicit ChiralityState(const Vec4& amplitudes) : amp_(amplitudes) {
    if (!amp_.allFinite()) throw ValidationError("chirality state has non-finite amplitudes");
    const double norm2 = amp_.squaredNorm();
    if (std::abs(norm2 - 1.0) > 1e-12)
      throw ValidationError("chirality state is not normalized (|phi|^2 = " +
                            std::to_string(norm2) + ")");
  }

  const Vec4& amplitudes() const { return amp_; }
  Mat4 density() const { return amp_ * amp_.adjoint(); }

 private:
  Vec4 amp_;
};

/// (|LL> + i|LR> + i|RL> - |RR>)/2 in two-qubit labelling, i.e. amplitudes
/// (1, i, i, -1)/2 over (L, R, U, D): the symmetric start used for the
/// two-dimensional Hadamard walk in optical-lattice proposals.
inline ChiralityState symmetric_hadamard_state() {
  Vec4 a;
  a << 0.5, 0.5 * kI, 0.5 * kI, -0.5;
  return ChiralityState(a);
}

inline std::array<Mat4, 4> projectors() {
  std::array<Mat4, 4> p;
  for (int c = 0; c < 4; ++c) {
    p[c] = Mat4::Zero();
    p[c](c, c) = 1.0;
  }
  return p;
}

inline Vec4 momentum_phases(double kx, double ky) {
  Vec4 d;
  d << std::polar(1.0, kx), std::polar(1.0, -kx), std::polar(1.0, -ky), std::polar(1.0, ky);
  return d;
}

/// M_{kx,ky} = D(kx,ky) M.
inline Mat4 momentum_coin(const CoinOperator& m, double kx, double ky) {
  return momentum_phases(kx, ky).asDiagonal() * m.u();
}

inline Mat2 hadamard2() {
  Mat2 h;
  h << 1, 1, 1, -1;
  return h / std::sqrt(2.0);
}

inline CoinOperator coin_hadamard4() { return {kron(hadamard2(), hadamard2()), "hadamard4"}; }

inline CoinOperator coin_grover4() {
  Mat4 g = Mat4::Constant(0.5);
  g.diagonal().setConstant(-0.5);
  return {g, "grover4"};
}

inline CoinOperator coin_dft4() {
  Mat4 f;
  const std::array<cplx, 4> powers{1.0, kI, -1.0, -kI};
  for (int j = 0; j < 4; ++j)
    for (int k = 0; k < 4; ++k) f(j, k) = powers[(j * k) % 4] / 2.0;
  return {f, "dft4"};
}

/// Removes the global determinant phase: det m = e^{i gamma} gives
/// e^{-i gamma / 4} m, whose determinant is 1. The induced superoperator is
/// unchanged because the phase cancels in X -> M X M^dag.
inline CoinOperator normalize_coin(const CMatrix& m, const std::string& label = "normalized") {
  require_shape(m, 4, 4, "normalize_coin");
  const Mat4 u = m;
  const double err = max_abs(u.adjoint() * u - Mat4::Identity());
  if (err > kUnitarityTol)
    throw ValidationError("normalize_coin: input is not unitary (max |U^dag U - I| = " +
                          std::to_string(err) + ")");
  const double gamma = std::arg(u.determinant());
  return {std::polar(1.0, -gamma / 4.0) * u, label};
}

inline CoinOperator coin_by_label(const std::string& label) {
  if (label == "hadamard4") return coin_hadamard4();
  if (label == "grover4") return coin_grover4();
  if (label == "dft4") return coin_dft4();
  throw ConfigurationError("unknown coin label '" + label + "' (expected hadamard4, grover4 or dft4)");
}

}  // namespace dqw
