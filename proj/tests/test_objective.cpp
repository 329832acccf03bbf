#include <doctest.h>

#include <numbers>

#include "diqkd/checks.hpp"
#include "diqkd/objective.hpp"
#include "diqkd/sampling.hpp"
#include "diqkd/sdp.hpp"
#include "diqkd/solver.hpp"
#include "oracles.hpp"

using namespace diqkd;

namespace {

// Sum of weighted trace norms, evaluated independently.
double trace_reference(const Mat4& rho, double lambda, double phi) {
  return lambda * oracle::trace_norm(rho - oracle::pinch(rho, oracle::key_projector(0))) +
         (1 - lambda) * oracle::trace_norm(rho - oracle::pinch(rho, oracle::key_projector(phi)));
}

// Dense Hermitian matrix of an SDP block at the point x.
Eigen::MatrixXcd assemble(const SdpBlock& b, const std::vector<double>& x) {
  Eigen::MatrixXcd m = Eigen::MatrixXcd::Zero(b.size, b.size);
  for (const SdpTerm& t : b.terms) {
    const double w = t.var < 0 ? 1.0 : x.at(t.var);
    for (const SdpEntry& e : t.entries) m(e.row, e.col) += w * std::complex<double>(e.re, e.im);
  }
  return m;
}

double min_eig(const Eigen::MatrixXcd& m) {
  return Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd>(m).eigenvalues().minCoeff();
}

// Coordinates of a Hermitian matrix in the export basis.
void put(std::vector<double>& x, int offset, const Mat4& h) {
  int k = 0;
  for (int i = 0; i < 4; ++i) x[offset + k++] = h(i, i).real();
  const std::pair<int, int> pairs[] = {{0, 1}, {0, 2}, {0, 3}, {1, 2}, {1, 3}, {2, 3}};
  for (auto [i, j] : pairs) x[offset + k++] = h(i, j).real();
  for (auto [i, j] : pairs) x[offset + k++] = h(i, j).imag();
}

Mat4 abs_part(const Mat4& m) {
  Eigen::SelfAdjointEigenSolver<Mat4> es(m);
  return es.eigenvectors() * es.eigenvalues().cwiseAbs().cast<std::complex<double>>().asDiagonal() *
         es.eigenvectors().adjoint();
}

}  // namespace

TEST_CASE("objective spec validation") {
  CHECK_THROWS_AS(ObjectiveSpec::trace_norm(1.5, 0).validate(), ConfigError);
  CHECK_THROWS_AS(ObjectiveSpec::frobenius(0.5, 0, 0.0).validate(), ConfigError);
  CHECK_THROWS_AS(ObjectiveSpec::frobenius(0.5, 0, -1.0).validate(), ConfigError);
  CHECK(parse_objective_kind("trace") == ObjectiveKind::trace_norm);
  CHECK_THROWS_AS(parse_objective_kind("l1"), ConfigError);
}

TEST_CASE("trace objective") {
  Eigen::Vector4cd e0 = Eigen::Vector4cd::Zero();
  e0(0) = 1;
  CHECK(trace_objective(DensityMatrix4::pure(e0), ObjectiveSpec::trace_norm(0.5, 0.0)) < 1e-15);
  CHECK(trace_objective(DensityMatrix4::maximally_mixed(), ObjectiveSpec::trace_norm(0.3, 1.0)) < 1e-15);

  const DensityMatrix4 phi(Herm4::from_trusted(oracle::bell_phi_plus()));
  for (double t : {0.0, 0.6, kHalfPi}) {
    CHECK(trace_objective(phi, ObjectiveSpec::trace_norm(1.0, t)) == doctest::Approx(1.0).epsilon(1e-12));
  }

  Rng rng(6);
  std::uniform_real_distribution<double> u(0, 1);
  for (int k = 0; k < 200; ++k) {
    const DensityMatrix4 rho = random_density(rng);
    const double lambda = u(rng), t = kHalfPi * u(rng);
    const double v = trace_objective(rho, ObjectiveSpec::trace_norm(lambda, t));
    CHECK(v >= 0.0);
    CHECK(v <= 2.0);
    CHECK(v == doctest::Approx(trace_reference(rho.matrix(), lambda, t)).epsilon(1e-10));
    // ||X||_1 >= ||X||_F.
    const Mat4 r0 = rho.matrix() - oracle::pinch(rho.matrix(), oracle::key_projector(0));
    const Mat4 r1 = rho.matrix() - oracle::pinch(rho.matrix(), oracle::key_projector(t));
    CHECK(v >= lambda * r0.norm() + (1 - lambda) * r1.norm() - 1e-12);
  }
}

TEST_CASE("frobenius objective and gradient") {
  const double mu = 0.02;
  const DensityMatrix4 mixed = DensityMatrix4::maximally_mixed();
  CHECK(frobenius_objective(mixed, ObjectiveSpec::frobenius(0.4, 0.8, mu)) == doctest::Approx(mu / 8));
  CHECK((frobenius_gradient(mixed, ObjectiveSpec::frobenius(0.4, 0.8, mu)).matrix() - mu / 4 * Mat4::Identity())
            .norm() < 1e-15);

  Rng rng(7);
  for (int k = 0; k < 100; ++k) {
    const DensityMatrix4 rho = random_density(rng);
    const Mat4 r0 = rho.matrix() - oracle::pinch(rho.matrix(), oracle::key_projector(0));
    const double single = r0.squaredNorm() + 0.5 * mu * rho.matrix().squaredNorm();
    CHECK(frobenius_objective(rho, ObjectiveSpec::frobenius(0.0, 0.0, mu)) == doctest::Approx(single).epsilon(1e-12));
    const double v = frobenius_objective(rho, ObjectiveSpec::frobenius(0.7, 1.2, mu));
    CHECK(v >= 0.5 * mu * rho.matrix().squaredNorm() - 1e-15);
    CHECK(v >= mu / 8 - 1e-15);
    const Herm4 g = frobenius_gradient(rho, ObjectiveSpec::frobenius(0.7, 1.2, mu));
    CHECK((g.matrix() - g.matrix().adjoint()).norm() < 1e-12);
  }
  const CheckResult fd = check_gradient(100, 8);
  INFO(format_check(fd));
  CHECK(fd.passed);
  CHECK(check_strong_convexity(200, 9).passed);
}

TEST_CASE("pinsker lift") {
  CHECK(pinsker_lift(0.0) == 0.0);
  CHECK(pinsker_lift(1.0) == 1.0);
  CHECK(pinsker_lift(0.5) == doctest::Approx(1.0 - oracle::h2(0.25)).epsilon(1e-15));
  CHECK(pinsker_lift(0.5) == doctest::Approx(0.18872).epsilon(1e-4));
  CHECK(pinsker_lift(1.5) == 1.0);
  CHECK(pinsker_lift(-0.2) == 0.0);
  CHECK(check_pinsker_lift().passed);
}

TEST_CASE("angle sensitivity") {
  Rng rng(10);
  const DensityMatrix4 rho = random_supported_density(rng, 0.5);
  CHECK(angle_sensitivity(rho, 0.3, 0.5, 0.0).delta == 0.0);
  const Sensitivity one = angle_sensitivity(rho, 1.0, 0.5, 1e-3);
  CHECK(one.bound == 0.0);
  CHECK(one.delta == 0.0);
  CHECK_THROWS_AS(angle_sensitivity(random_density(rng), 0.3, 0.5, 1e-3), PreconditionError);
  for (int k = 0; k < 100; ++k) {
    const DensityMatrix4 r = random_supported_density(rng, 0.9);
    CHECK(angle_sensitivity(r, 0.0, 0.9, 1e-3).delta <= 4.01e-3);
  }
  CHECK(check_angle_sensitivity(100, 11).passed);
}

TEST_CASE("self-duality of the Frobenius norm") {
  Rng rng(12);
  for (int k = 0; k < 50; ++k) {
    const Mat4 a = random_hermitian(rng).matrix();
    const Mat4 y = a / a.norm();
    CHECK((y.adjoint() * a).trace().real() == doctest::Approx(a.norm()).epsilon(1e-12));
    // Any other unit direction does no better.
    Mat4 z = random_hermitian(rng).matrix();
    z /= z.norm();
    CHECK((z.adjoint() * a).trace().real() <= a.norm() + 1e-12);
  }
}

TEST_CASE("SDP export structure") {
  const AnglePair ang(1.0, 1.3);
  const SdpProblem fro = export_sdp_standard_form(ObjectiveSpec::frobenius(0.5, 1.0, 1e-3), ang, 2.3);
  CHECK(fro.blocks.size() == 4);
  CHECK(fro.blocks[0].label == "schur_t0");
  CHECK(fro.blocks[2].label == "schur_t2");
  CHECK(fro.blocks[3].label == "psd_rho");
  CHECK(fro.equalities.size() == 2);
  CHECK(fro.variables.size() == 19);

  const SdpProblem tr = export_sdp_standard_form(ObjectiveSpec::trace_norm(0.5, 1.0), ang, 2.3);
  CHECK(tr.blocks.size() == 3);
  CHECK(tr.blocks[0].label == "schur_pq0");
  CHECK(tr.blocks[1].label == "schur_pq1");
  CHECK(tr.variables.size() == 80);

  for (const SdpProblem& p : {fro, tr}) {
    const std::string text = format_sdp(p);
    CHECK(parse_sdp(text) == p);
    CHECK(format_sdp(parse_sdp(text)) == text);
  }
  CHECK_THROWS_AS(parse_sdp("diqkd-sdp 1\nkind nonsense\n"), ConfigError);
  CHECK_THROWS_AS(parse_sdp(format_sdp(fro).substr(0, 200)), ConfigError);
}

TEST_CASE("SDP export evaluated at the solver minimizer") {
  const AnglePair ang(1.1, 1.4);
  const double s = 2.4;
  const DensityMatrix4 state = [&] {
    SolverConfig cfg;
    return *minimize(ObjectiveSpec::trace_norm(0.5, ang.phi_a()), ang, s, cfg).minimizer;
  }();
  const Mat4& rho = state.matrix();

  SUBCASE("frobenius") {
    const ObjectiveSpec spec = ObjectiveSpec::frobenius(0.3, ang.phi_a(), 1e-2);
    const SdpProblem p = export_sdp_standard_form(spec, ang, s);
    std::vector<double> x(p.variables.size(), 0.0);
    put(x, 0, rho);
    const Mat4 r0 = rho - oracle::pinch(rho, oracle::key_projector(0));
    const Mat4 r1 = rho - oracle::pinch(rho, oracle::key_projector(ang.phi_a()));
    x[16] = r0.squaredNorm();
    x[17] = r1.squaredNorm();
    x[18] = rho.squaredNorm();
    double obj = 0;
    for (const SdpCoefficient& c : p.objective) obj += c.value * x[c.var];
    CHECK(obj == doctest::Approx(frobenius_objective(state, spec)).epsilon(1e-12));
    for (const SdpBlock& b : p.blocks) CHECK(min_eig(assemble(b, x)) >= -1e-9);
    for (const SdpEquality& e : p.equalities) {
      double lhs = 0;
      for (const SdpCoefficient& c : e.coefficients) lhs += c.value * x[c.var];
      CHECK(lhs == doctest::Approx(e.rhs).epsilon(1e-7));
    }
    // Lowering any epigraph variable breaks its Schur block.
    x[16] -= 1e-3;
    CHECK(min_eig(assemble(p.blocks[0], x)) < 0.0);
  }

  SUBCASE("trace norm") {
    const ObjectiveSpec spec = ObjectiveSpec::trace_norm(0.5, ang.phi_a());
    const SdpProblem p = export_sdp_standard_form(spec, ang, s);
    std::vector<double> x(p.variables.size(), 0.0);
    put(x, 0, rho);
    const Mat4 m0 = rho - oracle::pinch(rho, oracle::key_projector(0));
    const Mat4 m1 = rho - oracle::pinch(rho, oracle::key_projector(ang.phi_a()));
    put(x, 16, abs_part(m0));
    put(x, 32, abs_part(m0));
    put(x, 48, abs_part(m1));
    put(x, 64, abs_part(m1));
    double obj = 0;
    for (const SdpCoefficient& c : p.objective) obj += c.value * x[c.var];
    CHECK(obj == doctest::Approx(trace_objective(state, spec)).epsilon(1e-10));
    for (const SdpBlock& b : p.blocks) CHECK(min_eig(assemble(b, x)) >= -1e-9);
  }
}
