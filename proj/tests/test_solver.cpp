#include <doctest.h>

#include <numbers>

#include "diqkd/checks.hpp"
#include "diqkd/sampling.hpp"
#include "diqkd/solver.hpp"
#include "oracles.hpp"

using namespace diqkd;

namespace {

// Minima from an independent interior-point SDP solve (Clarabel, gap 1e-12).
struct Reference {
  double phi_a, phi_b, s, lambda, mu, value;
};
const Reference kTraceRefs[] = {
    {kHalfPi, kHalfPi, 2.0, 1.0, 0.0, 0.4142135623761089},
    {kHalfPi, kHalfPi, 2.0, 0.5, 0.0, 0.7071067811865475},
    {1.0, 1.3, 2.4, 0.5, 0.0, 0.7686374052313854},
    {0.7, 1.5, 2.2, 0.25, 0.0, 0.5497592134280008},
    {1.2, 0.9, 2.1, 0.8, 0.0, 0.45484325104727874},
};
const Reference kFrobeniusRefs[] = {
    {1.0, 1.3, 2.4, 0.5, 0.1, 0.3007314180320845},
    {0.7, 1.5, 2.2, 0.25, 0.1, 0.16281842751741668},
    {1.0, 1.3, 2.4, 0.5, 100.0, 36.82863738087333},
};

double real_top_eig(const Mat4& c, Eigen::Vector4cd& vec) {
  Eigen::SelfAdjointEigenSolver<Mat4> es(c);
  vec = es.eigenvectors().col(3);
  return es.eigenvalues()(3);
}

}  // namespace

TEST_CASE("config validation") {
  SolverConfig c;
  c.max_iters = 0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = SolverConfig{};
  c.grad_tol = 0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = SolverConfig{};
  c.feas_tol = -1;
  CHECK_THROWS_AS(c.validate(), ConfigError);
}

TEST_CASE("project_feasible examples") {
  const ChshOperator c = chsh_operator(AnglePair(1.0, 1.3));
  SolverConfig cfg;
  const double s0 = c.matrix.trace() / 4;
  const DensityMatrix4 same = project_feasible(Herm4::from_trusted(Mat4::Identity() / 4.0), c, s0, cfg);
  CHECK((same.matrix() - Mat4::Identity() / 4.0).norm() <= cfg.feas_tol);

  Eigen::Vector4cd top;
  const double lmax = real_top_eig(c.matrix.matrix(), top);
  Rng rng(3);
  const DensityMatrix4 pure = project_feasible(random_hermitian(rng), c, lmax, cfg);
  CHECK((pure.matrix() - top * top.adjoint()).norm() <= 1e-6);
  CHECK(std::abs((pure.matrix() * c.matrix.matrix()).trace().real() - lmax) <= cfg.feas_tol);

  for (int k = 0; k < 20; ++k) {
    const double s = 2.0 + 0.6 * k / 20.0;
    const DensityMatrix4 r = project_feasible(random_hermitian(rng), c, s, cfg);
    CHECK(std::abs((r.matrix() * c.matrix.matrix()).trace().real() - s) <= cfg.feas_tol);
    CHECK(oracle::spectrum(r.matrix())(0) >= -cfg.feas_tol);
  }
  CHECK_THROWS_AS(project_feasible(Herm4::identity(), c, 2.9, cfg), InfeasibleError);
}

TEST_CASE("minimize agrees with an independent SDP solver") {
  SolverConfig cfg;
  for (const Reference& r : kTraceRefs) {
    const AnglePair ang(r.phi_a, r.phi_b);
    const OptResult res = minimize(ObjectiveSpec::trace_norm(r.lambda, r.phi_a), ang, r.s, cfg);
    CAPTURE(r.s);
    CHECK(res.status == SolveStatus::converged);
    CHECK(res.value == doctest::Approx(r.value).epsilon(1e-6));
    CHECK(res.lower_bound <= r.value + 1e-9);
    CHECK(res.value - res.lower_bound <= cfg.grad_tol);
    CHECK(res.feasibility_residual <= cfg.feas_tol);
  }
  for (const Reference& r : kFrobeniusRefs) {
    const AnglePair ang(r.phi_a, r.phi_b);
    const OptResult res = minimize(ObjectiveSpec::frobenius(r.lambda, r.phi_a, r.mu), ang, r.s, cfg);
    CAPTURE(r.mu);
    CHECK(res.status == SolveStatus::converged);
    CHECK(res.value == doctest::Approx(r.value).epsilon(1e-7));
    // The reference is itself feasible only to about 1e-8.
    CHECK(res.lower_bound <= r.value * (1.0 + 1e-7));
  }
}

TEST_CASE("zero disturbance where both key bases coincide") {
  // At phi_a = 0 the score 2 is reached by states diagonal in the key basis.
  const OptResult r = minimize(ObjectiveSpec::trace_norm(0.5, 0.0), AnglePair(0.0, 0.8), 2.0, SolverConfig{});
  CHECK(r.status == SolveStatus::converged);
  CHECK(r.value < 1e-6);
  const OptResult single = minimize(ObjectiveSpec::trace_norm(0.0, 0.0), AnglePair(0.0, 0.3), 1.5, SolverConfig{});
  CHECK(single.value < 1e-6);
  const Mat4 rho = single.minimizer->matrix();
  CHECK((rho - oracle::pinch(rho, oracle::key_projector(0))).norm() < 1e-6);
}

TEST_CASE("large mu drives the minimizer to the least pure feasible state") {
  const AnglePair ang(1.0, 1.3);
  const OptResult r = minimize(ObjectiveSpec::frobenius(0.5, 1.0, 1e4), ang, 2.4, SolverConfig{});
  const DensityMatrix4 least =
      project_feasible(Herm4::from_trusted(Mat4::Identity() / 4.0), chsh_operator(ang), 2.4, SolverConfig{});
  CHECK((r.minimizer->matrix() - least.matrix()).norm() < 1e-3);
}

TEST_CASE("infeasible scores") {
  const AnglePair ang(0.4, 0.4);
  const double top = max_violation(ang);
  SolverConfig cfg;
  cfg.restarts = 2;
  CHECK(minimize(ObjectiveSpec::trace_norm(0.5, 0.4), ang, top + 0.01, cfg).status == SolveStatus::infeasible);
  CHECK(oracle_minimize(ObjectiveSpec::trace_norm(0.5, 0.4), ang, top + 0.01, cfg).status ==
        SolveStatus::infeasible);
}

TEST_CASE("extreme score gives the pure top eigenstate value") {
  const AnglePair ang(1.1, 0.7);
  Eigen::Vector4cd top;
  const double lmax = real_top_eig(chsh_operator(ang).matrix.matrix(), top);
  const DensityMatrix4 pure = DensityMatrix4::pure(top);
  const ObjectiveSpec spec = ObjectiveSpec::trace_norm(0.5, 1.1);
  const double expected = trace_objective(pure, spec);
  SolverConfig cfg;
  CHECK(minimize(spec, ang, lmax, cfg).value == doctest::Approx(expected).epsilon(1e-6));
  cfg.restarts = 4;
  CHECK(std::abs(oracle_minimize(spec, ang, lmax, cfg).value - expected) < 1e-3);
}

TEST_CASE("oracle agreement on a few random problems") {
  Rng rng(31);
  std::uniform_real_distribution<double> u(0, 1);
  SolverConfig cfg;
  cfg.restarts = 4;
  int done = 0;
  while (done < 4) {
    const AnglePair ang = random_angles(rng);
    const double top = max_violation(ang);
    if (top < 2.05) continue;
    const double s = 2.0 + (top - 2.0) * u(rng);
    const ObjectiveSpec spec = ObjectiveSpec::frobenius(u(rng), ang.phi_a(), 1e-6);
    const double a = minimize(spec, ang, s, cfg).value;
    const OptResult o = oracle_minimize(spec, ang, s, cfg);
    CHECK(o.feasibility_residual <= 1e-6);
    CHECK(std::abs(a - o.value) <= 1e-3);
    CHECK(a <= o.value + 1e-6);
    ++done;
  }
}

TEST_CASE("frobenius descent, determinism and uniqueness") {
  const AnglePair ang(0.9, 1.2);
  SolverConfig cfg;
  cfg.record_history = true;
  const ObjectiveSpec spec = ObjectiveSpec::frobenius(0.4, 0.9, 0.1);
  const OptResult a = minimize(spec, ang, 2.3, cfg);
  REQUIRE(a.history.size() >= 2);
  for (std::size_t k = 1; k < a.history.size(); ++k) CHECK(a.history[k] <= a.history[k - 1] + 1e-12);
  CHECK(a.history.back() == doctest::Approx(a.value).epsilon(1e-12));
  CHECK(a.final_grad_norm <= cfg.grad_tol);

  const OptResult b = minimize(spec, ang, 2.3, cfg);
  CHECK(a.value == b.value);
  CHECK(a.history == b.history);
  CHECK(a.minimizer->matrix() == b.minimizer->matrix());

  Rng rng(5);
  for (int k = 0; k < 3; ++k) {
    WarmStart w;
    w.rho = random_density(rng).matrix().real();
    const OptResult c = minimize(spec, ang, 2.3, cfg, &w);
    CHECK((c.minimizer->matrix() - a.minimizer->matrix()).norm() < 1e-5);
  }

  cfg.step_rule = StepRule::fixed;
  cfg.initial_step = 0.1;
  const OptResult f = minimize(spec, ang, 2.3, cfg);
  CHECK(f.value == doctest::Approx(a.value).epsilon(1e-7));
}

TEST_CASE("subgradient method reaches the same neighbourhood") {
  const AnglePair ang(1.0, 1.3);
  SolverConfig cfg;
  cfg.trace_method = TraceNormMethod::subgradient;
  cfg.initial_step = 0.05;
  const OptResult r = minimize(ObjectiveSpec::trace_norm(0.5, 1.0), ang, 2.4, cfg);
  CHECK(r.value == doctest::Approx(0.7686374052313854).epsilon(5e-3));
  CHECK(r.lower_bound <= 0.7686374052313854 + 1e-9);
  CHECK(r.feasibility_residual <= cfg.feas_tol);
}

TEST_CASE("warm start state is reused") {
  const AnglePair ang(1.0, 1.3);
  SolverConfig cfg;
  WarmStart w;
  const OptResult cold = minimize(ObjectiveSpec::trace_norm(0.5, 1.0), ang, 2.4, cfg, &w);
  CHECK(w.rho.has_value());
  const OptResult warm = minimize(ObjectiveSpec::trace_norm(0.5, 1.0), AnglePair(1.001, 1.3), 2.4, cfg, &w);
  CHECK(warm.iterations <= cold.iterations);
}

TEST_CASE("solver property suite") {
  const CheckResult r = check_solver(6, 77);
  INFO(format_check(r));
  CHECK(r.passed);
}
