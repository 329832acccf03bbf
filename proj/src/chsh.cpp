#include "diqkd/chsh.hpp"

#include <array>
#include <cmath>
#include <sstream>

namespace diqkd {
namespace {

constexpr double kAngleSlack = 1e-12;

Mat2 identity2() { return Mat2::Identity(); }

double clip_quadrant(double x) { return std::clamp(x, 0.0, kHalfPi); }

double spectral(const Mat4& m) {
  return detail::eig_matrix<double, 4>(m).eigenvalues.cwiseAbs().maxCoeff();
}

Mat4 chsh_matrix(double phi_a, double phi_b) {
  const double ca = std::cos(phi_a), sa = std::sin(phi_a);
  const double cb = std::cos(phi_b), sb = std::sin(phi_b);
  const double a00 = ca - 1.0 - cb - ca * cb;
  const double a01 = -sb - ca * sb;
  const double b00 = sa - sa * cb;
  const double b01 = -sa * sb;
  Mat4 m;
  // clang-format off
  m <<  a00,  a01,  b00,  b01,
        a01, -a00,  b01, -b00,
        b00,  b01, -a00, -a01,
        b01, -b00, -a01,  a00;
  // clang-format on
  return m;
}

}  // namespace

AnglePair::AnglePair(double phi_a, double phi_b) : phi_a_(phi_a), phi_b_(phi_b) {
  for (double x : {phi_a, phi_b}) {
    if (!(x >= -kAngleSlack && x <= kHalfPi + kAngleSlack)) {
      std::ostringstream os;
      os << "AnglePair: angle " << x << " outside [0, pi/2]";
      throw DomainError(os.str());
    }
  }
  phi_a_ = clip_quadrant(phi_a);
  phi_b_ = clip_quadrant(phi_b);
}

AnglePair AnglePair::clipped(double phi_a, double phi_b) {
  return AnglePair(clip_quadrant(phi_a), clip_quadrant(phi_b));
}

Mat2 projector_q_matrix(double theta) {
  const double c = std::cos(theta / 2.0);
  const double s = std::sin(theta / 2.0);
  Mat2 q;
  q << c * c, c * s, c * s, s * s;
  return q;
}

Herm2 projector_q(double theta) {
  if (!(theta >= -kAngleSlack && theta <= std::numbers::pi + kAngleSlack)) {
    throw DomainError("projector_q: theta " + std::to_string(theta) + " outside [0, pi]");
  }
  return Herm2::from_trusted(projector_q_matrix(theta));
}

ChshOperator chsh_operator(const AnglePair& angles) {
  return {Herm4::from_trusted(chsh_matrix(angles.phi_a(), angles.phi_b())), angles};
}

Herm4 chsh_from_projectors(const AnglePair& angles) {
  const Mat2 id = identity2();
  const Mat2 a0 = projector_q_matrix(0.0);
  const Mat2 a1 = projector_q_matrix(angles.phi_a());
  const Mat2 b0 = projector_q_matrix(0.0);
  const Mat2 b1 = projector_q_matrix(angles.phi_b());
  auto k = [](const Mat2& x, const Mat2& y) { return detail::kron_matrix<double, 2, 2>(x, y); };
  // <A_x B_y> as P(equal) - P(different) for each setting pair.
  auto term = [&](const Mat2& p, const Mat2& q) {
    return Mat4(k(p, q) + k(id - p, id - q) - k(p, id - q) - k(id - p, q));
  };
  const Mat4 m = term(a1, b0) - term(a0, b0) - term(a0, b1) - term(a1, b1);
  return Herm4::from_trusted(m);
}

double recover_angle(double lambda1, double lambda2) {
  if (!(std::abs(lambda1 + lambda2 - 2.0) <= 1e-8)) {
    throw DomainError("recover_angle: eigenvalues must sum to 2, got " +
                      std::to_string(lambda1 + lambda2));
  }
  if (lambda1 < -1e-12 || lambda1 > 2.0 + 1e-12 || lambda2 < -1e-12 || lambda2 > 2.0 + 1e-12) {
    throw DomainError("recover_angle: eigenvalues must lie in [0, 2]");
  }
  if (!(lambda1 > lambda2)) {
    throw OrderingError("recover_angle: requires lambda1 > lambda2");
  }
  const double x = std::clamp((lambda1 - lambda2) / 2.0, -1.0, 1.0);
  return 2.0 * std::acos(x);
}

double recover_angle_from_sum(const Herm2& projector_sum) {
  const auto d = eig(projector_sum);
  return recover_angle(d.eigenvalues(0), d.eigenvalues(1));
}

double max_violation(const AnglePair& angles) {
  return detail::eig_matrix<double, 4>(chsh_matrix(angles.phi_a(), angles.phi_b())).eigenvalues(0);
}

double min_score(const AnglePair& angles) {
  return detail::eig_matrix<double, 4>(chsh_matrix(angles.phi_a(), angles.phi_b())).eigenvalues(3);
}

double chsh_deviation(const AnglePair& angles, double eps) {
  if (!(eps > 0.0)) throw DomainError("chsh_deviation: eps must be positive");
  const double a = angles.phi_a(), b = angles.phi_b();
  const Mat4 base = chsh_matrix(a, b);
  double worst = 0.0;
  for (double sign_a : {-1.0, 1.0}) {
    const double a2 = clip_quadrant(a + sign_a * eps);
    worst = std::max(worst, spectral(chsh_matrix(a2, b) - base));
    for (double sign_b : {-1.0, 1.0}) {
      const double b2 = clip_quadrant(b + sign_b * eps);
      if (sign_a > 0) worst = std::max(worst, spectral(chsh_matrix(a, b2) - base));
      const Mat4 mixed = chsh_matrix(a2, b2) - chsh_matrix(a2, b) - chsh_matrix(a, b2) + base;
      worst = std::max(worst, spectral(mixed));
    }
  }
  return worst;
}

double chsh_joint_deviation(const AnglePair& angles, double eps) {
  const double a = angles.phi_a(), b = angles.phi_b();
  const Mat4 base = chsh_matrix(a, b);
  double worst = 0.0;
  for (double sign_a : {-1.0, 1.0})
    for (double sign_b : {-1.0, 1.0})
      worst = std::max(worst, spectral(chsh_matrix(clip_quadrant(a + sign_a * eps),
                                                   clip_quadrant(b + sign_b * eps)) -
                                       base));
  return worst;
}

double qber(const DensityMatrix4& rho, double theta_a, double theta_b) {
  const Mat2 id = identity2();
  const Mat2 qa = projector_q_matrix(theta_a);
  const Mat2 qb = projector_q_matrix(theta_b);
  const Mat4 disagree = detail::kron_matrix<double, 2, 2>(qa, id - qb) +
                        detail::kron_matrix<double, 2, 2>(id - qa, qb);
  const double q = (rho.matrix() * disagree).trace().real();
  return std::clamp(q, 0.0, 1.0);
}

}  // namespace diqkd
