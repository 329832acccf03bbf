#include <doctest.h>

#include <numbers>

#include "diqkd/checks.hpp"
#include "diqkd/pinching.hpp"
#include "diqkd/sampling.hpp"
#include "oracles.hpp"

using namespace diqkd;

TEST_CASE("pinch examples") {
  Rng rng(1);
  const Herm4 p = Herm4::from_trusted(key_projector(0.7));
  const DensityMatrix4 sigma = random_density(rng);
  const DensityMatrix4 once = pinch(sigma, p);
  CHECK((pinch(once, p).matrix() - once.matrix()).norm() < 1e-12);
  CHECK(once.hermitian().trace() == doctest::Approx(1.0).epsilon(1e-14));

  Eigen::Vector2cd plus(1, 1);
  const DensityMatrix2 pp = DensityMatrix2::pure(plus);
  const Herm2 z0 = Herm2::diagonal(Eigen::Vector2d(1, 0));
  CHECK((pinch(pp, z0).matrix() - Mat2::Identity() / 2.0).norm() < 1e-15);

  const Herm4 not_projector = Herm4::diagonal(Eigen::Vector4d(0.5, 1, 0, 0));
  CHECK_THROWS_AS(pinch(sigma, not_projector), DomainError);
}

TEST_CASE("key pinching examples") {
  const DensityMatrix4 mixed = DensityMatrix4::maximally_mixed();
  for (double t : {0.0, 0.9, kHalfPi}) CHECK((pinch_key(mixed, t).matrix() - mixed.matrix()).norm() < 1e-15);

  const DensityMatrix4 phi(Herm4::from_trusted(oracle::bell_phi_plus()));
  Mat4 expected = Mat4::Zero();
  expected(0, 0) = expected(3, 3) = 0.5;
  CHECK((pinch_key(phi, 0.0).matrix() - expected).norm() < 1e-15);

  Rng rng(2);
  for (int k = 0; k < 200; ++k) {
    const DensityMatrix4 rho = random_density(rng);
    const double t = std::uniform_real_distribution<double>(0, kHalfPi)(rng);
    CHECK(std::abs(pinch_key(rho, t).hermitian().trace() - 1.0) < 1e-14);
    CHECK((pinch_key(rho, t).matrix() - oracle::pinch(rho.matrix(), oracle::key_projector(t))).norm() < 1e-14);
  }
}

TEST_CASE("entropy production") {
  CHECK(std::abs(entropy_production(DensityMatrix4::maximally_mixed(), 0.4)) < 1e-12);
  const DensityMatrix4 phi(Herm4::from_trusted(oracle::bell_phi_plus()));
  CHECK(entropy_production(phi, 0.0) == doctest::Approx(1.0).epsilon(1e-12));
  Rng rng(3);
  for (int k = 0; k < 200; ++k) {
    const DensityMatrix4 rho = random_density(rng);
    const double t = std::uniform_real_distribution<double>(0, kHalfPi)(rng);
    const double a = entropy_production(rho, t);
    CHECK(std::abs(a - entropy_production_difference(rho, t)) < 1e-9);
    CHECK(a >= -1e-12);
  }
}

TEST_CASE("pinched states commute with functions of themselves") {
  Rng rng(4);
  for (int k = 0; k < 100; ++k) {
    const DensityMatrix4 rho = random_density(rng);
    const Herm4 p = Herm4::from_trusted(key_projector(1.1));
    const Herm4 lr = pinch(rho, p).hermitian();
    const Herm4 sq = matrix_function(lr, [](double x) { return x * x; });
    const Herm4 lg = matrix_function(lr, [](double x) { return std::log2(x); });
    CHECK((pinch(sq, p).matrix() - sq.matrix()).norm() < 1e-12);
    CHECK((pinch(lg, p).matrix() - lg.matrix()).norm() < 1e-10);
  }
}

TEST_CASE("pinching property suite") {
  const CheckResult r = check_pinching(200, 99);
  INFO(format_check(r));
  CHECK(r.passed);
}
