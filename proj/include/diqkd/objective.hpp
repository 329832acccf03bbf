#pragma once

// Pinching-disturbance objectives over two-qubit states.
//
//   trace-norm:  lambda ||rho - L0[rho]||_1   + (1-lambda) ||rho - L1[rho]||_1
//   frobenius:   lambda ||rho - L0[rho]||_F^2 + (1-lambda) ||rho - L1[rho]||_F^2 + mu/2 ||rho||_F^2
//
// L0 pinches with Q(0) (x) I and L1 with Q(phi_a) (x) I.

#include "diqkd/hermitian.hpp"
#include "diqkd/pinching.hpp"

namespace diqkd {

enum class ObjectiveKind { trace_norm, frobenius };

inline constexpr double kDefaultMu = 1e-6;
inline constexpr double kDefaultSensitivitySlack = 10.0;

struct ObjectiveSpec {
  ObjectiveKind kind = ObjectiveKind::trace_norm;
  double lambda = 0.5;
  double phi_a = 0.0;
  double mu = 0.0;

  static ObjectiveSpec trace_norm(double lambda, double phi_a);
  static ObjectiveSpec frobenius(double lambda, double phi_a, double mu = kDefaultMu);

  ObjectiveSpec with_phi_a(double phi) const {
    ObjectiveSpec out = *this;
    out.phi_a = phi;
    return out;
  }

  /// Throws ConfigError for lambda outside [0, 1], negative mu, or mu = 0 on
  /// the frobenius objective.
  void validate() const;
};

const char* to_string(ObjectiveKind kind);
ObjectiveKind parse_objective_kind(const std::string& text);

namespace detail {

/// Both key projectors for a given phi_a, built once per solve.
struct KeyProjectors {
  Mat4 p0;
  Mat4 p1;
  explicit KeyProjectors(double phi_a);
};

double trace_value(const Mat4& rho, double lambda, const KeyProjectors& keys);
double frobenius_value(const Mat4& rho, const ObjectiveSpec& spec, const KeyProjectors& keys);
Mat4 frobenius_grad(const Mat4& rho, const ObjectiveSpec& spec, const KeyProjectors& keys);

/// A subgradient of the trace-norm objective: sign matrices of the removed parts.
Mat4 trace_subgrad(const Mat4& rho, double lambda, const KeyProjectors& keys);

}  // namespace detail

double trace_objective(const DensityMatrix4& rho, const ObjectiveSpec& spec);
double frobenius_objective(const DensityMatrix4& rho, const ObjectiveSpec& spec);

/// 2 lambda (rho - L0 rho) + 2 (1-lambda) (rho - L1 rho) + mu rho.
Herm4 frobenius_gradient(const DensityMatrix4& rho, const ObjectiveSpec& spec);

/// Entropy bound from a trace-norm disturbance n: 1 - h((1 - n) / 2).
/// n is clamped into [0, 1].
double pinsker_lift(double n);

struct Sensitivity {
  double delta = 0.0;
  double bound = 0.0;
};

/// Change of the (1-lambda)-weighted Frobenius pinching term when phi_a moves
/// by eps, together with the bound (1-lambda)(4 eps + slack eps^2).
/// Requires supp(rho) inside the range of Q(phi_a) (x) I (tolerance 1e-8).
Sensitivity angle_sensitivity(const DensityMatrix4& rho, double lambda, double phi_a, double eps,
                              double slack = kDefaultSensitivitySlack);

}  // namespace diqkd
