#include <doctest.h>

#include <numbers>

#include "diqkd/chsh.hpp"
#include "diqkd/hermitian.hpp"
#include "diqkd/sampling.hpp"
#include "oracles.hpp"

using namespace diqkd;

namespace {

Herm2 diag2(double a, double b) { return Herm2::diagonal(Eigen::Vector2d(a, b)); }

}  // namespace

TEST_CASE("construction rejects non-Hermitian and non-finite input") {
  Mat2 m;
  m << 1, 2, 3, 4;
  CHECK_THROWS_AS(Herm2{m}, DomainError);
  m << 1, std::nan(""), std::nan(""), 1;
  CHECK_THROWS_AS(Herm2{m}, DomainError);
  m << std::complex<double>(1, 0.5), 0, 0, 1;
  CHECK_THROWS_AS(Herm2{m}, DomainError);
}

TEST_CASE("kron examples") {
  CHECK((kron(Herm2::identity(), Herm2::identity()).matrix() - Mat4::Identity()).norm() == 0.0);
  const Herm4 p = kron(diag2(1, 0), diag2(1, 0));
  Mat4 expected = Mat4::Zero();
  expected(0, 0) = 1;
  CHECK((p.matrix() - expected).norm() == 0.0);

  const Herm4 k = kron(projector_q(std::numbers::pi / 2), Herm2::identity());
  for (int bi = 0; bi < 2; ++bi)
    for (int bj = 0; bj < 2; ++bj)
      CHECK((k.matrix().block<2, 2>(2 * bi, 2 * bj) - 0.5 * Mat2::Identity()).norm() < 1e-15);
}

TEST_CASE("eig examples") {
  const auto d = eig(diag2(1, 3));
  CHECK(d.eigenvalues(0) == doctest::Approx(3.0));
  CHECK(d.eigenvalues(1) == doctest::Approx(1.0));

  const auto q = eig(projector_q(std::numbers::pi / 2));
  CHECK(q.eigenvalues(0) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(std::abs(q.eigenvalues(1)) < 1e-15);

  const Herm4 xx = Herm4::from_trusted(oracle::kron(oracle::pauli_x(), oracle::pauli_x()));
  const auto dx = eig(xx);
  // (x^2 - 1)^2 is the characteristic polynomial of X (x) X.
  const double expected[] = {1, 1, -1, -1};
  for (int i = 0; i < 4; ++i) CHECK(dx.eigenvalues(i) == doctest::Approx(expected[i]).epsilon(1e-13));
}

TEST_CASE("eig agrees with an independent solver on random matrices") {
  Rng rng(11);
  for (int k = 0; k < 200; ++k) {
    const Herm4 a = random_hermitian(rng);
    const auto d = eig(a);
    const Eigen::Vector4d ref = oracle::spectrum(a.matrix());
    for (int i = 0; i < 4; ++i) CHECK(d.eigenvalues(i) == doctest::Approx(ref(3 - i)).epsilon(1e-12));
    CHECK((a.matrix() - d.reconstruct()).norm() <= 4e-9);
    CHECK((d.eigenvectors.adjoint() * d.eigenvectors - Mat4::Identity()).norm() <= 1e-9);
  }
}

TEST_CASE("norm examples") {
  CHECK(norm(diag2(1, -1), NormKind::trace) == doctest::Approx(2.0));
  for (double t : {0.0, 0.3, 1.1, std::numbers::pi}) {
    CHECK(norm(projector_q(t), NormKind::frobenius) == doctest::Approx(1.0).epsilon(1e-14));
  }
  const Herm4 zz = Herm4::from_trusted(oracle::kron(oracle::pauli_z(), oracle::pauli_z()));
  CHECK(norm(zz, NormKind::spectral) == doctest::Approx(1.0));
}

TEST_CASE("psd_project examples") {
  const Herm2 p = psd_project(diag2(2, -1));
  CHECK((p.matrix() - diag2(2, 0).matrix()).norm() < 1e-15);
  Rng rng(3);
  const DensityMatrix4 rho = random_density(rng);
  CHECK((psd_project(rho.hermitian()).matrix() - rho.matrix()).norm() < 1e-12);
  CHECK(psd_project(-Herm4::identity()).matrix().norm() < 1e-15);
}

TEST_CASE("binary entropy") {
  CHECK(binary_entropy(0.5) == 1.0);
  CHECK(binary_entropy(0.0) == 0.0);
  CHECK(binary_entropy(1.0) == 0.0);
  const long double x = 0.11L;
  const long double ref = -x * std::log2(x) - (1 - x) * std::log2(1 - x);
  CHECK(binary_entropy(0.11) == doctest::Approx(static_cast<double>(ref)).epsilon(1e-15));
  CHECK(binary_entropy(0.11) == doctest::Approx(0.499916).epsilon(1e-6));
  CHECK_THROWS_AS(binary_entropy(-0.1), DomainError);
  CHECK_THROWS_AS(binary_entropy(1.5), DomainError);
}

TEST_CASE("entropies") {
  CHECK(von_neumann_entropy(DensityMatrix4::maximally_mixed()) == doctest::Approx(2.0));
  Rng rng(5);
  const DensityMatrix4 rho = random_density(rng);
  CHECK(std::abs(relative_entropy(rho, rho)) < 1e-12);

  // |+><+| (x) I/2 against I/4: H(I/4) - H(rho) = 2 - 1.
  Eigen::Vector2cd plus(1, 1);
  const Mat2 pp = plus * plus.adjoint() / 2.0;
  const DensityMatrix4 a(Herm4::from_trusted(oracle::kron(pp, Mat2::Identity() / 2.0)));
  CHECK(relative_entropy(a, DensityMatrix4::maximally_mixed()) == doctest::Approx(1.0).epsilon(1e-12));

  Eigen::Vector4cd e0 = Eigen::Vector4cd::Zero(), e1 = Eigen::Vector4cd::Zero();
  e0(0) = 1;
  e1(1) = 1;
  CHECK_THROWS_AS(relative_entropy(DensityMatrix4::pure(e0), DensityMatrix4::pure(e1)), DomainError);
}

TEST_CASE("density matrix invariants") {
  CHECK_THROWS_AS(DensityMatrix4(Herm4::identity()), DomainError);
  CHECK_THROWS_AS(DensityMatrix4(Herm4::diagonal(Eigen::Vector4d(1.5, -0.5, 0, 0))), DomainError);
}

TEST_CASE("hermitian property suite") {
  Rng rng(21);
  for (int k = 0; k < 500; ++k) {
    const Herm4 a = random_hermitian(rng);
    const double sp = norm(a, NormKind::spectral), fr = norm(a, NormKind::frobenius), tr = norm(a, NormKind::trace);
    CHECK(sp <= fr * (1 + 1e-12));
    CHECK(fr <= tr * (1 + 1e-12));
    CHECK(tr <= 2.0 * fr * (1 + 1e-12));
    const DensityMatrix4 r = random_density(rng), s = random_density(rng);
    CHECK(relative_entropy(r, s) >= 0.0);
  }
}
