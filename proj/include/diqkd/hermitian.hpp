#pragma once

// Dense complex Hermitian linear algebra at dimensions 2 and 4.
//
// Everything is templated on the real scalar type and the (fixed) dimension.
// The `HermitianMatrix` and `DensityMatrix` wrappers enforce their invariants
// at construction; hot loops elsewhere in the library work on the underlying
// Eigen matrices directly and re-wrap results at API boundaries.

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <limits>
#include <sstream>
#include <string>

#include <Eigen/Core>

#include "diqkd/errors.hpp"

namespace diqkd {

template <typename Real, int N>
using ComplexMatrix = Eigen::Matrix<std::complex<Real>, N, N>;
template <typename Real, int N>
using ComplexVector = Eigen::Matrix<std::complex<Real>, N, 1>;
template <typename Real, int N>
using RealVector = Eigen::Matrix<Real, N, 1>;

using Mat2 = ComplexMatrix<double, 2>;
using Mat4 = ComplexMatrix<double, 4>;
using Vec4 = ComplexVector<double, 4>;

template <typename Real>
constexpr Real hermiticity_tolerance() {
  return std::max<Real>(Real(1e-12), Real(1e4) * std::numeric_limits<Real>::epsilon());
}

template <typename Real>
constexpr Real jacobi_tolerance() {
  return std::max<Real>(Real(1e-12), Real(1e2) * std::numeric_limits<Real>::epsilon());
}

/// Eigenvalues below this are treated as exact zeros inside entropy logs.
inline constexpr double kEntropyEigenFloor = 1e-14;
inline constexpr int kMaxJacobiSweeps = 100;

template <typename Real, int N>
class HermitianMatrix {
  static_assert(N == 2 || N == 4, "only two-qubit (4) and qubit (2) operators are supported");

 public:
  using RealScalar = Real;
  using Scalar = std::complex<Real>;
  using MatrixType = ComplexMatrix<Real, N>;
  static constexpr int dim = N;

  HermitianMatrix() : m_(MatrixType::Zero()) {}

  /// Validates finiteness and Hermiticity (componentwise, within
  /// `hermiticity_tolerance`), then stores the exactly Hermitian part.
  explicit HermitianMatrix(const MatrixType& m) {
    for (int i = 0; i < N; ++i) {
      for (int j = 0; j < N; ++j) {
        const Scalar z = m(i, j);
        if (!std::isfinite(z.real()) || !std::isfinite(z.imag())) {
          throw DomainError("HermitianMatrix: non-finite entry");
        }
        if (std::abs(z - std::conj(m(j, i))) > hermiticity_tolerance<Real>()) {
          std::ostringstream os;
          os << "HermitianMatrix: entry (" << i << "," << j << ") deviates from Hermitian by "
             << std::abs(z - std::conj(m(j, i)));
          throw DomainError(os.str());
        }
      }
    }
    m_ = symmetrized(m);
  }

  /// Wraps a matrix known to be Hermitian up to rounding; only symmetrizes.
  static HermitianMatrix from_trusted(const MatrixType& m) {
    HermitianMatrix h;
    h.m_ = symmetrized(m);
    return h;
  }

  static HermitianMatrix identity() { return from_trusted(MatrixType::Identity()); }
  static HermitianMatrix zero() { return HermitianMatrix(); }

  static HermitianMatrix diagonal(const RealVector<Real, N>& d) {
    MatrixType m = MatrixType::Zero();
    for (int i = 0; i < N; ++i) m(i, i) = d(i);
    return from_trusted(m);
  }

  const MatrixType& matrix() const noexcept { return m_; }
  Scalar operator()(int i, int j) const { return m_(i, j); }
  Real trace() const { return m_.trace().real(); }

  friend HermitianMatrix operator+(const HermitianMatrix& a, const HermitianMatrix& b) {
    return from_trusted(a.m_ + b.m_);
  }
  friend HermitianMatrix operator-(const HermitianMatrix& a, const HermitianMatrix& b) {
    return from_trusted(a.m_ - b.m_);
  }
  friend HermitianMatrix operator*(Real s, const HermitianMatrix& a) { return from_trusted(s * a.m_); }
  HermitianMatrix operator-() const { return from_trusted(-m_); }

 private:
  static MatrixType symmetrized(const MatrixType& m) {
    MatrixType out = (m + m.adjoint()) * Real(0.5);
    for (int i = 0; i < N; ++i) out(i, i) = Scalar(out(i, i).real(), Real(0));
    return out;
  }

  MatrixType m_;
};

using Herm2 = HermitianMatrix<double, 2>;
using Herm4 = HermitianMatrix<double, 4>;

/// Eigenvalues sorted descending; eigenvectors are the matching columns.
template <typename Real, int N>
struct EigenDecomposition {
  RealVector<Real, N> eigenvalues;
  ComplexMatrix<Real, N> eigenvectors;
  int sweeps = 0;

  ComplexMatrix<Real, N> reconstruct() const {
    return eigenvectors * eigenvalues.template cast<std::complex<Real>>().asDiagonal() *
           eigenvectors.adjoint();
  }
};

namespace detail {

template <typename Real, int N>
Real off_diagonal_norm(const ComplexMatrix<Real, N>& a) {
  Real s = 0;
  for (int i = 0; i < N; ++i)
    for (int j = 0; j < N; ++j)
      if (i != j) s += std::norm(a(i, j));
  return std::sqrt(s);
}

template <typename Real, int N>
void sort_descending(EigenDecomposition<Real, N>& d) {
  std::array<int, N> idx;
  for (int i = 0; i < N; ++i) idx[i] = i;
  std::stable_sort(idx.begin(), idx.end(),
                   [&](int x, int y) { return d.eigenvalues(x) > d.eigenvalues(y); });
  EigenDecomposition<Real, N> out;
  out.sweeps = d.sweeps;
  for (int i = 0; i < N; ++i) {
    out.eigenvalues(i) = d.eigenvalues(idx[i]);
    out.eigenvectors.col(i) = d.eigenvectors.col(idx[i]);
  }
  d = out;
}

/// Cyclic complex Jacobi. The input is assumed Hermitian; only that is used.
template <typename Real, int N>
EigenDecomposition<Real, N> jacobi_eig(ComplexMatrix<Real, N> a) {
  using C = std::complex<Real>;
  EigenDecomposition<Real, N> d;
  d.eigenvectors.setIdentity();
  const Real scale = std::max<Real>(Real(1), a.norm());
  const Real tol = jacobi_tolerance<Real>() * scale;
  int sweep = 0;
  for (; sweep < kMaxJacobiSweeps; ++sweep) {
    if (off_diagonal_norm<Real, N>(a) <= tol) break;
    for (int p = 0; p < N - 1; ++p) {
      for (int q = p + 1; q < N; ++q) {
        const C apq = a(p, q);
        const Real r = std::abs(apq);
        if (r == Real(0)) continue;
        const Real app = a(p, p).real();
        const Real aqq = a(q, q).real();
        if (r < std::numeric_limits<Real>::epsilon() * Real(1e-2) * (std::abs(app) + std::abs(aqq))) {
          a(p, q) = a(q, p) = C(0);
          continue;
        }
        const C phase = std::conj(apq / r);  // e^{-i arg a_pq}
        const Real theta = (aqq - app) / (Real(2) * r);
        Real t;
        if (std::abs(theta) > Real(1e150)) {
          t = Real(1) / (Real(2) * theta);
        } else {
          t = Real(1) / (std::abs(theta) + std::sqrt(theta * theta + Real(1)));
          if (theta < 0) t = -t;
        }
        const Real c = Real(1) / std::sqrt(t * t + Real(1));
        const Real s = t * c;
        // Unitary acting on the (p,q) plane: diag(1, phase) * [[c, s], [-s, c]].
        const C upp(c), upq(s), uqp = -s * phase, uqq = c * phase;
        for (int k = 0; k < N; ++k) {
          const C akp = a(k, p), akq = a(k, q);
          a(k, p) = akp * upp + akq * uqp;
          a(k, q) = akp * upq + akq * uqq;
        }
        for (int k = 0; k < N; ++k) {
          const C apk = a(p, k), aqk = a(q, k);
          a(p, k) = std::conj(upp) * apk + std::conj(uqp) * aqk;
          a(q, k) = std::conj(upq) * apk + std::conj(uqq) * aqk;
        }
        a(p, q) = a(q, p) = C(0);
        a(p, p) = C(a(p, p).real());
        a(q, q) = C(a(q, q).real());
        for (int k = 0; k < N; ++k) {
          const C vkp = d.eigenvectors(k, p), vkq = d.eigenvectors(k, q);
          d.eigenvectors(k, p) = vkp * upp + vkq * uqp;
          d.eigenvectors(k, q) = vkp * upq + vkq * uqq;
        }
      }
    }
  }
  const Real residual = off_diagonal_norm<Real, N>(a);
  if (residual > tol) {
    throw NumericalError("Jacobi eigensolver did not converge within " +
                             std::to_string(kMaxJacobiSweeps) + " sweeps",
                         static_cast<double>(residual));
  }
  for (int i = 0; i < N; ++i) d.eigenvalues(i) = a(i, i).real();
  d.sweeps = sweep;
  sort_descending(d);
  return d;
}

/// Closed-form solution of the 2x2 characteristic quadratic.
template <typename Real>
EigenDecomposition<Real, 2> closed_form_eig2(const ComplexMatrix<Real, 2>& a) {
  using C = std::complex<Real>;
  EigenDecomposition<Real, 2> d;
  const Real p = a(0, 0).real();
  const Real q = a(1, 1).real();
  const C b = a(0, 1);
  const Real mean = Real(0.5) * (p + q);
  const Real half = Real(0.5) * (p - q);
  const Real radius = std::hypot(half, std::abs(b));
  d.eigenvalues << mean + radius, mean - radius;
  if (std::abs(b) == Real(0)) {
    if (p >= q) {
      d.eigenvectors.setIdentity();
    } else {
      d.eigenvectors << C(0), C(1), C(1), C(0);
    }
    return d;
  }
  const Real top = d.eigenvalues(0);
  // Two algebraically equivalent null vectors of (A - top I); keep the better conditioned.
  ComplexVector<Real, 2> v1(b, C(top - p));
  ComplexVector<Real, 2> v2(C(top - q), std::conj(b));
  ComplexVector<Real, 2> v = v1.squaredNorm() >= v2.squaredNorm() ? v1 : v2;
  v.normalize();
  d.eigenvectors.col(0) = v;
  d.eigenvectors(0, 1) = -std::conj(v(1));
  d.eigenvectors(1, 1) = std::conj(v(0));
  return d;
}

template <typename Real, int N>
EigenDecomposition<Real, N> eig_matrix(const ComplexMatrix<Real, N>& a) {
  if constexpr (N == 2) {
    return closed_form_eig2<Real>(a);
  } else {
    return jacobi_eig<Real, N>(a);
  }
}

template <typename Real, int N>
ComplexMatrix<Real, N> psd_part(const EigenDecomposition<Real, N>& d) {
  RealVector<Real, N> clipped = d.eigenvalues.cwiseMax(Real(0));
  return d.eigenvectors * clipped.template cast<std::complex<Real>>().asDiagonal() *
         d.eigenvectors.adjoint();
}

template <typename Real, int N, typename F>
ComplexMatrix<Real, N> spectral_map(const EigenDecomposition<Real, N>& d, F&& f) {
  RealVector<Real, N> mapped;
  for (int i = 0; i < N; ++i) mapped(i) = f(d.eigenvalues(i));
  return d.eigenvectors * mapped.template cast<std::complex<Real>>().asDiagonal() *
         d.eigenvectors.adjoint();
}

template <typename Real, int M, int K>
ComplexMatrix<Real, M * K> kron_matrix(const ComplexMatrix<Real, M>& a, const ComplexMatrix<Real, K>& b) {
  ComplexMatrix<Real, M * K> out;
  for (int i = 0; i < M; ++i)
    for (int j = 0; j < M; ++j) out.template block<K, K>(i * K, j * K) = a(i, j) * b;
  return out;
}

}  // namespace detail

/// Eigendecomposition: closed form at dimension 2, cyclic Jacobi at dimension 4.
template <typename Real, int N>
EigenDecomposition<Real, N> eig(const HermitianMatrix<Real, N>& a) {
  return detail::eig_matrix<Real, N>(a.matrix());
}

/// Kronecker product. Products beyond dimension 4 are rejected at compile time.
template <typename Real, int M, int K>
HermitianMatrix<Real, M * K> kron(const HermitianMatrix<Real, M>& a, const HermitianMatrix<Real, K>& b) {
  static_assert(M * K <= 4, "kron: product dimension exceeds 4");
  return HermitianMatrix<Real, M * K>::from_trusted(detail::kron_matrix<Real, M, K>(a.matrix(), b.matrix()));
}

enum class NormKind { frobenius, trace, spectral };

template <typename Real, int N>
Real norm(const HermitianMatrix<Real, N>& a, NormKind kind) {
  if (kind == NormKind::frobenius) return a.matrix().norm();
  const auto d = eig(a);
  if (kind == NormKind::trace) return d.eigenvalues.cwiseAbs().sum();
  return d.eigenvalues.cwiseAbs().maxCoeff();
}

/// Nearest positive semidefinite matrix in Frobenius distance (eigenvalue clipping).
template <typename Real, int N>
HermitianMatrix<Real, N> psd_project(const HermitianMatrix<Real, N>& a) {
  return HermitianMatrix<Real, N>::from_trusted(detail::psd_part(eig(a)));
}

/// f(A) for a real function f applied to the spectrum.
template <typename Real, int N, typename F>
HermitianMatrix<Real, N> matrix_function(const HermitianMatrix<Real, N>& a, F&& f) {
  return HermitianMatrix<Real, N>::from_trusted(detail::spectral_map(eig(a), std::forward<F>(f)));
}

/// Binary Shannon entropy in bits, h(0) = h(1) = 0.
template <typename Real>
Real binary_entropy(Real x) {
  if (!(x >= Real(0) && x <= Real(1))) {
    throw DomainError("binary_entropy: argument " + std::to_string(static_cast<double>(x)) +
                      " outside [0, 1]");
  }
  if (x == Real(0) || x == Real(1)) return Real(0);
  return -x * std::log2(x) - (Real(1) - x) * std::log2(Real(1) - x);
}

template <typename Real, int N>
class DensityMatrix {
 public:
  using Hermitian = HermitianMatrix<Real, N>;
  using MatrixType = typename Hermitian::MatrixType;
  static constexpr Real kDefaultPsdTolerance = Real(1e-10);
  static constexpr Real kTraceTolerance = Real(1e-10);

  explicit DensityMatrix(const Hermitian& h, Real psd_tolerance = kDefaultPsdTolerance)
      : h_(h), psd_tolerance_(psd_tolerance) {
    const Real tr = h.trace();
    if (std::abs(tr - Real(1)) > kTraceTolerance) {
      throw DomainError("DensityMatrix: trace " + std::to_string(static_cast<double>(tr)) + " != 1");
    }
    const Real lmin = eig(h).eigenvalues(N - 1);
    if (lmin < -psd_tolerance) {
      throw DomainError("DensityMatrix: eigenvalue " + std::to_string(static_cast<double>(lmin)) +
                        " below -psd_tolerance");
    }
  }

  explicit DensityMatrix(const MatrixType& m, Real psd_tolerance = kDefaultPsdTolerance)
      : DensityMatrix(Hermitian(m), psd_tolerance) {}

  static DensityMatrix maximally_mixed() {
    return DensityMatrix(Hermitian::from_trusted(MatrixType::Identity() / Real(N)));
  }

  /// |psi><psi| / <psi|psi>.
  static DensityMatrix pure(const ComplexVector<Real, N>& psi) {
    const ComplexVector<Real, N> v = psi.normalized();
    return DensityMatrix(Hermitian::from_trusted(v * v.adjoint()));
  }

  const Hermitian& hermitian() const noexcept { return h_; }
  const MatrixType& matrix() const noexcept { return h_.matrix(); }
  Real psd_tolerance() const noexcept { return psd_tolerance_; }

 private:
  Hermitian h_;
  Real psd_tolerance_;
};

using DensityMatrix2 = DensityMatrix<double, 2>;
using DensityMatrix4 = DensityMatrix<double, 4>;

/// Von Neumann entropy in bits.
template <typename Real, int N>
Real von_neumann_entropy(const DensityMatrix<Real, N>& rho) {
  const auto d = eig(rho.hermitian());
  Real h = 0;
  for (int i = 0; i < N; ++i) {
    const Real x = d.eigenvalues(i);
    if (x > Real(kEntropyEigenFloor)) h -= x * std::log2(x);
  }
  return h;
}

/// D(rho || sigma) = Tr rho (log2 rho - log2 sigma), in bits.
template <typename Real, int N>
Real relative_entropy(const DensityMatrix<Real, N>& rho, const DensityMatrix<Real, N>& sigma,
                      Real support_tolerance = Real(1e-10)) {
  const auto ds = eig(sigma.hermitian());
  Real cross = 0;
  for (int k = 0; k < N; ++k) {
    const auto w = ds.eigenvectors.col(k);
    const Real overlap = (w.adjoint() * rho.matrix() * w)(0, 0).real();
    const Real mu = ds.eigenvalues(k);
    if (mu > Real(kEntropyEigenFloor)) {
      cross += overlap * std::log2(mu);
    } else if (overlap > support_tolerance) {
      std::ostringstream os;
      os << "relative_entropy: support(rho) not contained in support(sigma); overlap " << overlap
         << " with kernel eigenvector " << k << " (eigenvalue " << mu << ")";
      throw DomainError(os.str());
    }
  }
  return -von_neumann_entropy(rho) - cross;
}

}  // namespace diqkd
