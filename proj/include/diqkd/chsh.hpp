#pragma once

// Angle-parameterized measurement projectors and the two-qubit CHSH operator.
//
// Alice's key observables are Q(0) and Q(phi_a); Bob's are Q(0) and Q(phi_b).
// Alice is the first tensor factor throughout.

#include <numbers>

#include "diqkd/hermitian.hpp"

namespace diqkd {

inline constexpr double kHalfPi = std::numbers::pi / 2.0;
inline constexpr double kTsirelson = 2.0 * std::numbers::sqrt2;

/// Measurement angles, both restricted to the first quadrant.
class AnglePair {
 public:
  AnglePair(double phi_a, double phi_b);

  double phi_a() const noexcept { return phi_a_; }
  double phi_b() const noexcept { return phi_b_; }

  /// Builds a pair after clamping both angles into [0, pi/2].
  static AnglePair clipped(double phi_a, double phi_b);

  friend bool operator==(const AnglePair&, const AnglePair&) = default;

 private:
  double phi_a_;
  double phi_b_;
};

struct ChshOperator {
  Herm4 matrix;
  AnglePair angles;
};

/// Rank-one projector Q(theta) onto (cos(theta/2), sin(theta/2)); theta in [0, pi].
Herm2 projector_q(double theta);

/// Same projector for any real theta, without the domain check.
Mat2 projector_q_matrix(double theta);

/// Closed-form block assembly [[A, B], [C, D]].
ChshOperator chsh_operator(const AnglePair& angles);

/// Independent construction: expands the four correlator terms as sums of
/// projector tensor products built from Q(0), Q(phi_a), Q(phi_b).
Herm4 chsh_from_projectors(const AnglePair& angles);

/// Angle from the two non-integer eigenvalues of Q(0) + Q(phi):
/// phi = 2 arccos((lambda1 - lambda2) / 2).
double recover_angle(double lambda1, double lambda2);

/// Recovers phi from the spectrum of Q(0) + Q(phi).
double recover_angle_from_sum(const Herm2& projector_sum);

/// Largest CHSH score any state attains at these angles.
double max_violation(const AnglePair& angles);

/// Smallest CHSH score any state attains at these angles.
double min_score(const AnglePair& angles);

/// Max spectral-norm change of the CHSH operator for an angle step eps:
/// Alice's angle alone, Bob's alone, and the joint interaction term
/// (mixed second difference). Perturbed angles are clipped to [0, pi/2]
/// and both step signs are tried.
double chsh_deviation(const AnglePair& angles, double eps);

/// Spectral norm of the full difference when both angles move together.
/// Diagnostic only; this is not bounded by 2 eps.
double chsh_joint_deviation(const AnglePair& angles, double eps);

/// Probability that outcomes of Q(theta_a) on Alice and Q(theta_b) on Bob disagree.
double qber(const DensityMatrix4& rho, double theta_a, double theta_b);

}  // namespace diqkd
