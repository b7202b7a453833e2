#pragma once

// Small dense complex linear algebra shared by the rest of the library:
// Kronecker products, eigenvalues, the 16-element Pauli tensor basis and
// the nearest-Kronecker-product factorization.

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include <array>
#include <cmath>
#include <complex>
#include <random>
#include <string>
#include <vector>

#include "dqw/errors.hpp"

namespace dqw {

using cplx = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;
using Mat2 = Eigen::Matrix2cd;
using Mat4 = Eigen::Matrix4cd;
using Vec4 = Eigen::Vector4cd;
using Mat16 = Eigen::Matrix<cplx, 16, 16>;
using PauliVector = Eigen::Matrix<cplx, 16, 1>;

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr cplx kI{0.0, 1.0};

inline double max_abs(const CMatrix& m) {
  return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff();
}

inline bool all_finite(const CMatrix& m) { return m.allFinite(); }

inline void require_square(const CMatrix& m, const char* who) {
  if (m.rows() != m.cols())
    throw DimensionError(std::string(who) + ": expected a square matrix, got " +
                         std::to_string(m.rows()) + "x" + std::to_string(m.cols()));
}

inline void require_shape(const CMatrix& m, Eigen::Index rows, Eigen::Index cols,
                          const char* who) {
  if (m.rows() != rows || m.cols() != cols)
    throw DimensionError(std::string(who) + ": expected " + std::to_string(rows) + "x" +
                         std::to_string(cols) + ", got " + std::to_string(m.rows()) + "x" +
                         std::to_string(m.cols()));
}

inline CMatrix kron(const CMatrix& a, const CMatrix& b) {
  CMatrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

/// Eigenvalues of a square matrix (dimension <= 16), with multiplicity.
inline std::vector<cplx> eig(const CMatrix& m) {
  require_square(m, "eig");
  if (m.rows() > 16) throw DimensionError("eig: dimension above 16 is not supported");
  Eigen::ComplexEigenSolver<CMatrix> solver(m, /*computeEigenvectors=*/false);
  if (solver.info() != Eigen::Success) throw ConsistencyError("eig: QR iteration did not converge");
  const auto& ev = solver.eigenvalues();
  return {ev.data(), ev.data() + ev.size()};
}

struct EigenPairs {
  CVector values;
  CMatrix vectors;  // unit-norm right eigenvectors, one per column
};

inline EigenPairs eig_pairs(const CMatrix& m) {
  require_square(m, "eig_pairs");
  Eigen::ComplexEigenSolver<CMatrix> solver(m, true);
  if (solver.info() != Eigen::Success)
    throw ConsistencyError("eig_pairs: QR iteration did not converge");
  EigenPairs out{solver.eigenvalues(), solver.eigenvectors()};
  for (Eigen::Index j = 0; j < out.vectors.cols(); ++j) out.vectors.col(j).normalize();
  return out;
}

// Single-qubit Pauli matrices in the order (sigma_o, sigma_x, sigma_y, sigma_z).
inline const std::array<Mat2, 4>& pauli2() {
  static const std::array<Mat2, 4> basis = [] {
    std::array<Mat2, 4> s;
    s[0] << 1, 0, 0, 1;
    s[1] << 0, 1, 1, 0;
    s[2] << 0, -kI, kI, 0;
    s[3] << 1, 0, 0, -1;
    return s;
  }();
  return basis;
}

/// Element 4a+b is sigma_a (x) sigma_b.
inline const std::array<Mat4, 16>& pauli_basis16() {
  static const std::array<Mat4, 16> basis = [] {
    std::array<Mat4, 16> b;
    const auto& s = pauli2();
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < 4; ++j) b[4 * i + j] = kron(s[i], s[j]);
    return b;
  }();
  return basis;
}

// Expansion X = sum_i r_i B_i with r_i = Tr(B_i X) / 4.
inline PauliVector op_to_pauli(const CMatrix& x) {
  require_shape(x, 4, 4, "op_to_pauli");
  const auto& b = pauli_basis16();
  PauliVector r;
  for (int i = 0; i < 16; ++i) r(i) = (b[i] * x).trace() / 4.0;
  return r;
}

inline Mat4 pauli_to_op(const PauliVector& r) {
  const auto& b = pauli_basis16();
  Mat4 x = Mat4::Zero();
  for (int i = 0; i < 16; ++i) x += r(i) * b[i];
  return x;
}

// Two-dimensional analogue used for one-dimensional coin spaces:
// r_i = Tr(sigma_i X) / 2.
inline Eigen::Vector4cd op_to_pauli2(const Mat2& x) {
  const auto& s = pauli2();
  Eigen::Vector4cd r;
  for (int i = 0; i < 4; ++i) r(i) = (s[i] * x).trace() / 2.0;
  return r;
}

struct KronFactors {
  CMatrix left;
  CMatrix right;
  double residual = 0.0;
};

/// Best Frobenius-norm approximation m ~ left (x) right for a 16x16 matrix
/// viewed as a 4x4 grid of 4x4 blocks (rearrangement to a rank-one problem).
inline KronFactors nearest_kron_factor(const CMatrix& m) {
  require_shape(m, 16, 16, "nearest_kron_factor");
  // Row (i,j) of the rearrangement holds block (i,j) flattened; a Kronecker
  // product becomes the rank-one matrix vec(left) vec(right)^T.
  CMatrix rearranged(16, 16);
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j)
      for (int k = 0; k < 4; ++k)
        for (int l = 0; l < 4; ++l) rearranged(4 * i + j, 4 * k + l) = m(4 * i + k, 4 * j + l);

  Eigen::JacobiSVD<CMatrix> svd(rearranged, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const double sigma = svd.singularValues()(0);
  const CVector u = svd.matrixU().col(0) * std::sqrt(sigma);
  const CVector v = svd.matrixV().col(0).conjugate() * std::sqrt(sigma);

  KronFactors out;
  out.left.resize(4, 4);
  out.right.resize(4, 4);
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) {
      out.left(i, j) = u(4 * i + j);
      out.right(i, j) = v(4 * i + j);
    }
  out.residual = (m - kron(out.left, out.right)).norm();
  return out;
}

// ---------------------------------------------------------------------------
// Random test objects. All draws go through a caller-owned engine so a single
// seed reproduces a whole property run.

using Rng = std::mt19937_64;

inline CMatrix random_ginibre(Eigen::Index n, Rng& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  CMatrix m(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) m(i, j) = cplx(g(rng), g(rng));
  return m;
}

/// Haar-distributed unitary (QR of a Ginibre matrix with the R-phase fixed).
inline CMatrix random_unitary(Eigen::Index n, Rng& rng) {
  Eigen::HouseholderQR<CMatrix> qr(random_ginibre(n, rng));
  CMatrix q = qr.householderQ() * CMatrix::Identity(n, n);
  const CMatrix r = qr.matrixQR();
  for (Eigen::Index j = 0; j < n; ++j) {
    const double mag = std::abs(r(j, j));
    if (mag > 0) q.col(j) *= r(j, j) / mag;
  }
  return q;
}

inline CMatrix random_hermitian(Eigen::Index n, Rng& rng) {
  const CMatrix g = random_ginibre(n, rng);
  return (g + g.adjoint()) / 2.0;
}

inline CMatrix random_density(Eigen::Index n, Rng& rng) {
  const CMatrix g = random_ginibre(n, rng);
  CMatrix rho = g * g.adjoint();
  return rho / rho.trace();
}

}  // namespace dqw
