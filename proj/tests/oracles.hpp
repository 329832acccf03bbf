#pragma once

// Reference computations that avoid the library's own routines.

#include <cmath>
#include <complex>

#include <Eigen/Dense>

namespace oracle {

using Mat2 = Eigen::Matrix2cd;
using Mat4 = Eigen::Matrix4cd;

inline Mat4 kron(const Mat2& a, const Mat2& b) {
  Mat4 out;
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) out.block<2, 2>(2 * i, 2 * j) = a(i, j) * b;
  return out;
}

inline Mat2 pauli_x() { return (Mat2() << 0, 1, 1, 0).finished(); }
inline Mat2 pauli_z() { return (Mat2() << 1, 0, 0, -1).finished(); }

// Projector onto (cos(t/2), sin(t/2)).
inline Mat2 q(double t) {
  Eigen::Vector2cd v(std::cos(t / 2), std::sin(t / 2));
  return v * v.adjoint();
}

// Eigen's tridiagonal QR solver, ascending.
inline Eigen::Vector4d spectrum(const Mat4& m) { return Eigen::SelfAdjointEigenSolver<Mat4>(m).eigenvalues(); }

inline double trace_norm(const Mat4& m) { return spectrum(m).cwiseAbs().sum(); }

inline double h2(double x) {
  if (x <= 0.0 || x >= 1.0) return 0.0;
  return -x * std::log2(x) - (1 - x) * std::log2(1 - x);
}

inline Mat4 bell_phi_plus() {
  Eigen::Vector4cd v(1, 0, 0, 1);
  v /= std::sqrt(2.0);
  return v * v.adjoint();
}

inline Mat4 key_projector(double t) { return kron(q(t), Mat2::Identity()); }

inline Mat4 pinch(const Mat4& rho, const Mat4& p) {
  const Mat4 r = Mat4::Identity() - p;
  return p * rho * p + r * rho * r;
}

// CHSH = a(phi_a) x Z - Z x Z - Z x b(phi_b) - a(phi_a) x b(phi_b), with
// a(phi) = 2 Q(phi) - I, assembled from explicit Kronecker products.
inline Mat4 chsh(double pa, double pb) {
  const Mat2 i2 = Mat2::Identity();
  const Mat2 a = 2.0 * q(pa) - i2;
  const Mat2 b = 2.0 * q(pb) - i2;
  const Mat2 z = pauli_z();
  return kron(a, z) - kron(z, z) - kron(z, b) - kron(a, b);
}

}  // namespace oracle
