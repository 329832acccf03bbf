#include "diqkd/objective.hpp"

#include <cmath>
#include <sstream>

namespace diqkd {
namespace {

void require_kind(const ObjectiveSpec& spec, ObjectiveKind kind, const char* who) {
  spec.validate();
  if (spec.kind != kind) {
    throw ConfigError(std::string(who) + ": objective kind must be " + to_string(kind));
  }
}

double abs_eigen_sum(const Mat4& x) {
  return detail::eig_matrix<double, 4>(x).eigenvalues.cwiseAbs().sum();
}

Mat4 sign_matrix(const Mat4& x) {
  return detail::spectral_map(detail::eig_matrix<double, 4>(x), [](double v) {
    return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0);
  });
}

}  // namespace

ObjectiveSpec ObjectiveSpec::trace_norm(double lambda, double phi_a) {
  ObjectiveSpec s{ObjectiveKind::trace_norm, lambda, phi_a, 0.0};
  s.validate();
  return s;
}

ObjectiveSpec ObjectiveSpec::frobenius(double lambda, double phi_a, double mu) {
  ObjectiveSpec s{ObjectiveKind::frobenius, lambda, phi_a, mu};
  s.validate();
  return s;
}

void ObjectiveSpec::validate() const {
  if (!(lambda >= 0.0 && lambda <= 1.0)) {
    throw ConfigError("ObjectiveSpec: lambda must lie in [0, 1]");
  }
  if (!(mu >= 0.0) || !std::isfinite(mu)) throw ConfigError("ObjectiveSpec: mu must be >= 0");
  if (kind == ObjectiveKind::frobenius && mu == 0.0) {
    throw ConfigError("ObjectiveSpec: the frobenius objective requires mu > 0");
  }
  if (!std::isfinite(phi_a)) throw ConfigError("ObjectiveSpec: phi_a must be finite");
}

const char* to_string(ObjectiveKind kind) {
  return kind == ObjectiveKind::trace_norm ? "trace" : "frobenius";
}

ObjectiveKind parse_objective_kind(const std::string& text) {
  if (text == "trace" || text == "trace_norm") return ObjectiveKind::trace_norm;
  if (text == "frobenius") return ObjectiveKind::frobenius;
  throw ConfigError("unknown objective '" + text + "' (expected trace or frobenius)");
}

namespace detail {

KeyProjectors::KeyProjectors(double phi_a) : p0(key_projector(0.0)), p1(key_projector(phi_a)) {}

double trace_value(const Mat4& rho, double lambda, const KeyProjectors& keys) {
  double v = 0.0;
  if (lambda > 0.0) v += lambda * abs_eigen_sum(removed_part<double, 4>(rho, keys.p0));
  if (lambda < 1.0) v += (1.0 - lambda) * abs_eigen_sum(removed_part<double, 4>(rho, keys.p1));
  return v;
}

double frobenius_value(const Mat4& rho, const ObjectiveSpec& spec, const KeyProjectors& keys) {
  const double lam = spec.lambda;
  return lam * removed_part<double, 4>(rho, keys.p0).squaredNorm() +
         (1.0 - lam) * removed_part<double, 4>(rho, keys.p1).squaredNorm() +
         0.5 * spec.mu * rho.squaredNorm();
}

Mat4 frobenius_grad(const Mat4& rho, const ObjectiveSpec& spec, const KeyProjectors& keys) {
  const double lam = spec.lambda;
  return 2.0 * lam * removed_part<double, 4>(rho, keys.p0) +
         2.0 * (1.0 - lam) * removed_part<double, 4>(rho, keys.p1) + spec.mu * rho;
}

Mat4 trace_subgrad(const Mat4& rho, double lambda, const KeyProjectors& keys) {
  Mat4 g = Mat4::Zero();
  if (lambda > 0.0) {
    g += lambda * removed_part<double, 4>(sign_matrix(removed_part<double, 4>(rho, keys.p0)), keys.p0);
  }
  if (lambda < 1.0) {
    g += (1.0 - lambda) *
         removed_part<double, 4>(sign_matrix(removed_part<double, 4>(rho, keys.p1)), keys.p1);
  }
  return g;
}

}  // namespace detail

double trace_objective(const DensityMatrix4& rho, const ObjectiveSpec& spec) {
  require_kind(spec, ObjectiveKind::trace_norm, "trace_objective");
  return detail::trace_value(rho.matrix(), spec.lambda, detail::KeyProjectors(spec.phi_a));
}

double frobenius_objective(const DensityMatrix4& rho, const ObjectiveSpec& spec) {
  require_kind(spec, ObjectiveKind::frobenius, "frobenius_objective");
  return detail::frobenius_value(rho.matrix(), spec, detail::KeyProjectors(spec.phi_a));
}

Herm4 frobenius_gradient(const DensityMatrix4& rho, const ObjectiveSpec& spec) {
  require_kind(spec, ObjectiveKind::frobenius, "frobenius_gradient");
  return Herm4::from_trusted(detail::frobenius_grad(rho.matrix(), spec, detail::KeyProjectors(spec.phi_a)));
}

double pinsker_lift(double n) {
  const double clamped = std::clamp(n, 0.0, 1.0);
  return 1.0 - binary_entropy(0.5 * (1.0 - clamped));
}

Sensitivity angle_sensitivity(const DensityMatrix4& rho, double lambda, double phi_a, double eps,
                              double slack) {
  if (!(lambda >= 0.0 && lambda <= 1.0)) throw ConfigError("angle_sensitivity: lambda outside [0, 1]");
  if (!(eps >= 0.0)) throw DomainError("angle_sensitivity: eps must be >= 0");
  const Mat4 p = key_projector(phi_a);
  const double outside = (rho.matrix() * (Mat4::Identity() - p)).trace().real();
  if (outside > 1e-8) {
    std::ostringstream os;
    os << "angle_sensitivity: state is not supported on the range of Q(phi_a) (x) I; overlap with "
          "the complement is "
       << outside;
    throw PreconditionError(os.str());
  }
  auto weighted_term = [&](double phi) {
    return (1.0 - lambda) * detail::removed_part<double, 4>(rho.matrix(), key_projector(phi)).squaredNorm();
  };
  Sensitivity out;
  out.delta = std::abs(weighted_term(phi_a) - weighted_term(phi_a + eps));
  out.bound = (1.0 - lambda) * (4.0 * eps + slack * eps * eps);
  return out;
}

}  // namespace diqkd
