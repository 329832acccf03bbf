#pragma once

// Seeded property suites over the library's invariants. Shared by the CLI
// `verify` command and the acceptance binary.

#include <cstdint>
#include <string>
#include <vector>

namespace diqkd {

struct CheckResult {
  std::string name;
  bool passed = true;
  int samples = 0;
  int violations = 0;
  /// Largest observed violation measure (check specific; <= 0 means slack).
  double worst = 0.0;
  std::string detail;
};

/// Grid search of lambda_max(CHSH) over a 181 x 181 angle grid, then pattern
/// search refinement. worst = |maximum - 2 sqrt 2|, tolerance 1e-6.
CheckResult check_tsirelson();

/// Angle recovery from the spectrum of Q(0) + Q(theta) on theta_k = k pi/(n+1).
CheckResult check_angle_roundtrip(int n = 1000);

/// Pinching channel properties on random states: idempotence, identity on
/// block-diagonal states, trace-distance contraction, diagonal preservation,
/// entropy increase, majorization, the P rho product identity and
/// self-adjointness. Tolerance 1e-10.
CheckResult check_pinching(int states, std::uint64_t seed);

/// chsh_deviation <= 2 eps + 5 eps^2 for eps in {1e-3, 1e-2, 1e-1}.
CheckResult check_chsh_deviation(int pairs, std::uint64_t seed);

/// angle_sensitivity delta <= (1-lambda)(4 eps + 10 eps^2) for supported
/// states, eps = 1e-3, lambda in {0, 1/4, 1/2}.
CheckResult check_angle_sensitivity(int states, std::uint64_t seed);

/// Frobenius gradient against central differences, relative error <= 1e-5.
CheckResult check_gradient(int samples, std::uint64_t seed);

/// Norm ordering, eigendecomposition reconstruction and orthonormality,
/// Hermiticity closure, relative entropy nonnegativity.
CheckResult check_hermitian(int samples, std::uint64_t seed);

/// Closed-form CHSH blocks against the projector expansion, within 1e-12,
/// and the spectral range [-2 sqrt 2, 2 sqrt 2].
CheckResult check_chsh_construction(int pairs, std::uint64_t seed);

/// Strong convexity of the Frobenius objective with modulus mu, within 1e-9.
CheckResult check_strong_convexity(int samples, std::uint64_t seed);

/// Monotonicity of the Pinsker lift on a 1000-point grid and its endpoints.
CheckResult check_pinsker_lift();

/// Monotone descent, feasibility at return, determinism, uniqueness under
/// strong convexity and certified gaps on random feasible problems.
CheckResult check_solver(int problems, std::uint64_t seed);

/// Net covering, refinement arithmetic and the Lipschitz estimator.
CheckResult check_epsnet();

/// Secret-fraction and key-rate identities, p <-> 1-p symmetry and the
/// convexity verifier on synthetic curves.
CheckResult check_keyrate(std::uint64_t seed);

/// SDP export block structure and text round trip at random angles.
CheckResult check_sdp(int samples, std::uint64_t seed);

/// The invariant suites of the linear algebra, CHSH, pinching and objective
/// layers at sizes that run in well under a second.
std::vector<CheckResult> run_property_suites(std::uint64_t seed);

/// run_property_suites plus the solver, net, key-rate and SDP checks.
std::vector<CheckResult> run_module_suites(std::uint64_t seed);

/// "PASS name samples=.. violations=.. worst=.. detail"; deterministic.
std::string format_check(const CheckResult& r);

}  // namespace diqkd
