#pragma once

// Two-outcome pinching channels  L[X] = Q X Q + (I-Q) X (I-Q)  and the
// entropy produced by applying them to a state.

#include <string>

#include "diqkd/chsh.hpp"
#include "diqkd/hermitian.hpp"

namespace diqkd {

inline constexpr double kProjectorTolerance = 1e-10;

namespace detail {

/// X - L[X] for the projector P: the part of X that the channel removes.
template <typename Real, int N>
ComplexMatrix<Real, N> removed_part(const ComplexMatrix<Real, N>& x, const ComplexMatrix<Real, N>& p) {
  const ComplexMatrix<Real, N> r = ComplexMatrix<Real, N>::Identity() - p;
  return p * x * r + r * x * p;
}

template <typename Real, int N>
ComplexMatrix<Real, N> pinched(const ComplexMatrix<Real, N>& x, const ComplexMatrix<Real, N>& p) {
  const ComplexMatrix<Real, N> r = ComplexMatrix<Real, N>::Identity() - p;
  return p * x * p + r * x * r;
}

template <typename Real, int N>
void require_projector(const HermitianMatrix<Real, N>& p) {
  const Real residual = (p.matrix() * p.matrix() - p.matrix()).norm();
  if (residual > Real(kProjectorTolerance)) {
    throw DomainError("pinch: operator is not a projector, idempotency residual " +
                      std::to_string(static_cast<double>(residual)));
  }
}

}  // namespace detail

/// Q(theta) (x) I on the two-qubit space: Alice's key projector.
Mat4 key_projector(double theta);

template <typename Real, int N>
HermitianMatrix<Real, N> pinch(const HermitianMatrix<Real, N>& x, const HermitianMatrix<Real, N>& p) {
  detail::require_projector(p);
  return HermitianMatrix<Real, N>::from_trusted(detail::pinched<Real, N>(x.matrix(), p.matrix()));
}

/// The trace is preserved by construction; the result is never renormalized.
template <typename Real, int N>
DensityMatrix<Real, N> pinch(const DensityMatrix<Real, N>& rho, const HermitianMatrix<Real, N>& p) {
  return DensityMatrix<Real, N>(pinch(rho.hermitian(), p), rho.psd_tolerance());
}

/// Pinching by Alice's key measurement Q(theta) (x) I. theta = 0 gives the
/// first key channel, theta = phi_a the second.
DensityMatrix4 pinch_key(const DensityMatrix4& rho, double theta);

/// Entropy production D(rho || L[rho]) in bits.
double entropy_production(const DensityMatrix4& rho, double theta);

/// The same quantity computed as H(L[rho]) - H(rho).
double entropy_production_difference(const DensityMatrix4& rho, double theta);

}  // namespace diqkd
