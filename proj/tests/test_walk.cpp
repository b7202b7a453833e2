#include <gtest/gtest.h>

#include "dqw/channels.hpp"
#include "dqw/superoperator.hpp"
#include "dqw/walk.hpp"

using namespace dqw;

TEST(Projectors, Resolution) {
  const auto p = projectors();
  EXPECT_LE(max_abs(p[kLeft] + p[kRight] + p[kUp] + p[kDown] - Mat4::Identity()), 0.0);
  EXPECT_LE(max_abs(p[kLeft] * p[kRight]), 0.0);
  EXPECT_LE(max_abs(p[kUp] * p[kUp] - p[kUp]), 0.0);
}

TEST(Shifts, DirectionMap) {
  EXPECT_EQ(kChiralityShift[kLeft].dx, -1);
  EXPECT_EQ(kChiralityShift[kRight].dx, 1);
  EXPECT_EQ(kChiralityShift[kUp].dy, 1);
  EXPECT_EQ(kChiralityShift[kDown].dy, -1);
  for (int c = 0; c < 4; ++c) EXPECT_EQ(kChiralityShift[c].dx + kChiralityShift[c].dy, kDiagonalStep[c]);
}

TEST(MomentumCoin, IdentityCoin) {
  const CoinOperator id(Mat4::Identity(), "id");
  EXPECT_LE(max_abs(momentum_coin(id, 0.0, 0.0) - Mat4::Identity()), 0.0);
  Mat4 expected = Mat4::Zero();
  expected.diagonal() << -1, -1, 1, 1;
  EXPECT_LE(max_abs(momentum_coin(id, kPi, 0.0) - expected), 1e-15);
}

TEST(MomentumCoin, UnitaryForAllBuiltIns) {
  Rng rng(1);
  std::uniform_real_distribution<double> angle(0.0, 2.0 * kPi);
  for (const auto& label : {"hadamard4", "grover4", "dft4"}) {
    const auto coin = coin_by_label(label);
    for (int i = 0; i < 20; ++i) {
      const Mat4 m = momentum_coin(coin, angle(rng), angle(rng));
      EXPECT_LE(max_abs(m.adjoint() * m - Mat4::Identity()), 1e-14) << label;
    }
  }
}

TEST(BuiltInCoins, Structure) {
  const auto h = coin_hadamard4().u();
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) EXPECT_NEAR(std::abs(h(i, j)), 0.5, 1e-15);
  const auto g = coin_grover4().u();
  for (int i = 0; i < 4; ++i) EXPECT_NEAR(std::abs(g.row(i).sum() - 1.0), 0.0, 1e-15);
  const auto f = coin_dft4().u();
  EXPECT_NEAR(std::abs(f(1, 1) - 0.5 * kI), 0.0, 1e-15);
  EXPECT_NEAR(std::abs(f(3, 3) - 0.5 * kI), 0.0, 1e-15);  // i^9 = i
}

TEST(BuiltInCoins, UnknownLabel) { EXPECT_THROW(coin_by_label("fourier8"), ConfigurationError); }

TEST(CoinOperator, RejectsNonUnitary) {
  EXPECT_THROW(CoinOperator(Mat4::Identity() * 1.01, "bad"), ValidationError);
  Mat4 nan = Mat4::Identity();
  nan(0, 0) = std::numeric_limits<double>::quiet_NaN();
  EXPECT_THROW(CoinOperator(nan, "nan"), ValidationError);
}

TEST(ChiralityState, SymmetricStateIsSeparable) {
  const auto s = symmetric_hadamard_state();
  EXPECT_NEAR(s.amplitudes().norm(), 1.0, 1e-15);
  Eigen::Vector2cd half;
  half << 1.0, kI;
  half /= std::sqrt(2.0);
  EXPECT_LE(max_abs(CMatrix(kron(half, half)) - CMatrix(s.amplitudes())), 1e-15);
  EXPECT_NEAR(std::abs(s.density().trace() - 1.0), 0.0, 1e-15);
}

TEST(ChiralityState, RejectsUnnormalized) {
  EXPECT_THROW(ChiralityState(Vec4::Constant(1.0)), ValidationError);
}

TEST(NormalizeCoin, Identity) {
  EXPECT_LE(max_abs(normalize_coin(Mat4::Identity()).u() - Mat4::Identity()), 1e-15);
}

TEST(NormalizeCoin, GlobalPhaseRemovedUpToFourthRoot) {
  const Mat4 m = std::polar(1.0, kPi / 3.0) * Mat4::Identity();
  const Mat4 u = normalize_coin(m).u();
  EXPECT_NEAR(std::abs(u.determinant() - 1.0), 0.0, 1e-13);
  const cplx c = u(0, 0);
  EXPECT_NEAR(std::abs(std::pow(c, 4) - 1.0), 0.0, 1e-13);
  EXPECT_LE(max_abs(u - c * Mat4::Identity()), 1e-15);
}

TEST(NormalizeCoin, DeterminantOneProperty) {
  Rng rng(4);
  for (int i = 0; i < 20; ++i) {
    const CMatrix u = random_unitary(4, rng);
    EXPECT_NEAR(std::abs(normalize_coin(u).u().determinant() - 1.0), 0.0, 1e-12);
  }
}

TEST(NormalizeCoin, SupermatrixUnchanged) {
  Rng rng(2);
  const auto ch = coin_measurement(0.4);
  for (int i = 0; i < 10; ++i) {
    const CMatrix u = random_unitary(4, rng);
    const CoinOperator raw(u, "raw");
    const Momenta k{0.3, 0.9, -1.2, 2.0};
    EXPECT_LE(max_abs(build_supermatrix(raw, ch, k).m - build_supermatrix(normalize_coin(u), ch, k).m), 1e-13);
  }
}

TEST(NormalizeCoin, RejectsNonUnitary) {
  EXPECT_THROW(normalize_coin(Mat4::Identity() * 2.0), ValidationError);
}
