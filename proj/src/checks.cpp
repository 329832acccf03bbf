#include "diqkd/checks.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "diqkd/chsh.hpp"
#include "diqkd/epsnet.hpp"
#include "diqkd/io.hpp"
#include "diqkd/keyrate.hpp"
#include "diqkd/objective.hpp"
#include "diqkd/pinching.hpp"
#include "diqkd/sampling.hpp"
#include "diqkd/sdp.hpp"
#include "diqkd/solver.hpp"

namespace diqkd {
namespace {

// Tracks one named sub-property: count of violations and the worst excess.
class Tally {
 public:
  explicit Tally(CheckResult& r) : r_(r) {}

  void sample() { ++r_.samples; }

  // Records `excess` (> 0 means violated) under `label`.
  void record(const char* label, double excess) {
    if (!std::isfinite(excess)) excess = INFINITY;
    if (excess > 0.0) {
      ++r_.violations;
      if (first_failure_.empty()) first_failure_ = label;
    }
    r_.worst = std::max(r_.worst, excess);
  }

  CheckResult& finish() {
    r_.passed = r_.violations == 0;
    if (!first_failure_.empty()) r_.detail = "first failure: " + first_failure_;
    return r_;
  }

 private:
  CheckResult& r_;
  std::string first_failure_;
};

CheckResult start(const char* name) {
  CheckResult r;
  r.name = name;
  r.worst = -INFINITY;
  return r;
}

double trace_norm(const Mat4& m) { return norm(Herm4::from_trusted(m), NormKind::trace); }

Eigen::Vector4d sorted_spectrum(const Mat4& m) {
  Eigen::Vector4d v = detail::eig_matrix<double, 4>(m).eigenvalues;
  std::sort(v.data(), v.data() + 4, std::greater<>());
  return v;
}

}  // namespace

CheckResult check_tsirelson() {
  CheckResult r = start("tsirelson");
  constexpr int kGrid = 181;
  const double h = kHalfPi / (kGrid - 1);
  double best = -INFINITY, ba = 0.0, bb = 0.0;
  for (int i = 0; i < kGrid; ++i) {
    for (int j = 0; j < kGrid; ++j) {
      const double v = max_violation(AnglePair(i * h, j * h));
      ++r.samples;
      if (v > best) {
        best = v;
        ba = i * h;
        bb = j * h;
      }
    }
  }
  // Compass search inside the quadrant.
  for (double step = h; step > 1e-12; step *= 0.5) {
    bool moved = true;
    while (moved) {
      moved = false;
      for (const auto& [da, db] : {std::pair{1, 0}, {-1, 0}, {0, 1}, {0, -1}}) {
        const AnglePair cand = AnglePair::clipped(ba + da * step, bb + db * step);
        const double v = max_violation(cand);
        ++r.samples;
        if (v > best + 1e-15) {
          best = v;
          ba = cand.phi_a();
          bb = cand.phi_b();
          moved = true;
        }
      }
    }
  }
  const double err = std::abs(best - kTsirelson);
  r.worst = err;
  r.passed = err <= 1e-6;
  r.violations = r.passed ? 0 : 1;
  r.detail = "max " + format_double(best) + " at (" + format_double(ba) + ", " + format_double(bb) + ")";
  return r;
}

CheckResult check_angle_roundtrip(int n) {
  CheckResult r = start("angle_roundtrip");
  Tally t(r);
  for (int k = 1; k <= n; ++k) {
    const double theta = k * std::numbers::pi / (n + 1);
    const Herm2 sum = projector_q(0.0) + projector_q(theta);
    t.sample();
    t.record("reconstruction", std::abs(recover_angle_from_sum(sum) - theta) - 1e-9);
  }
  return t.finish();
}

CheckResult check_pinching(int states, std::uint64_t seed) {
  CheckResult r = start("pinching");
  Tally t(r);
  Rng rng(seed);
  std::uniform_real_distribution<double> angle(0.0, std::numbers::pi);
  constexpr double tol = 1e-10;
  for (int k = 0; k < states; ++k) {
    t.sample();
    const double theta = angle(rng);
    const Mat4 p = key_projector(theta);
    const Mat4 q = Mat4::Identity() - p;
    const Herm4 ph = Herm4::from_trusted(p);
    const DensityMatrix4 rho = random_density(rng);
    const DensityMatrix4 sigma = random_density(rng);
    const DensityMatrix4 lr = pinch(rho, ph);
    const DensityMatrix4 ls = pinch(sigma, ph);

    t.record("trace", std::abs(lr.hermitian().trace() - 1.0) - tol);
    t.record("idempotent", (pinch(lr, ph).matrix() - lr.matrix()).cwiseAbs().maxCoeff() - tol);

    const Mat4 block = p * rho.matrix() * p + q * sigma.matrix() * q;
    const DensityMatrix4 b(Herm4::from_trusted(block / block.trace().real()));
    t.record("identity_on_blocks", (pinch(b, ph).matrix() - b.matrix()).cwiseAbs().maxCoeff() - tol);

    t.record("contraction",
             trace_norm(lr.matrix() - ls.matrix()) - trace_norm(rho.matrix() - sigma.matrix()) - tol);

    t.record("diagonal", std::abs((p * lr.matrix()).trace() - (p * rho.matrix()).trace()) - tol);
    t.record("diagonal", std::abs((q * lr.matrix()).trace() - (q * rho.matrix()).trace()) - tol);

    t.record("entropy", von_neumann_entropy(rho) - von_neumann_entropy(lr) - tol);

    const Eigen::Vector4d lo = sorted_spectrum(lr.matrix());
    const Eigen::Vector4d hi = sorted_spectrum(rho.matrix());
    double plo = 0.0, phi = 0.0;
    for (int i = 0; i < 4; ++i) {
      plo += lo(i);
      phi += hi(i);
      t.record("majorization", plo - phi - tol);
    }

    const Mat4& m = rho.matrix();
    const Mat4 product = 0.5 * (m * p + p * m) - 0.5 * (m * p - p * m);
    t.record("product_identity", (product - p * m).cwiseAbs().maxCoeff() - tol);

    const Herm4 a = random_hermitian(rng);
    const auto lhs = (a.matrix() * lr.matrix()).trace();
    const auto rhs = (pinch(a, ph).matrix() * m).trace();
    t.record("self_adjoint", std::abs(lhs - rhs) - tol);
  }
  return t.finish();
}

CheckResult check_chsh_deviation(int pairs, std::uint64_t seed) {
  CheckResult r = start("chsh_deviation");
  Tally t(r);
  Rng rng(seed);
  for (int k = 0; k < pairs; ++k) {
    const AnglePair ang = random_angles(rng);
    for (double eps : {1e-3, 1e-2, 1e-1}) {
      t.sample();
      t.record("bound", chsh_deviation(ang, eps) - (2.0 * eps + 5.0 * eps * eps));
    }
  }
  return t.finish();
}

CheckResult check_angle_sensitivity(int states, std::uint64_t seed) {
  CheckResult r = start("angle_sensitivity");
  Tally t(r);
  Rng rng(seed);
  std::uniform_real_distribution<double> angle(0.0, kHalfPi);
  constexpr double eps = 1e-3;
  for (double lambda : {0.0, 0.25, 0.5}) {
    for (int k = 0; k < states; ++k) {
      t.sample();
      const double phi = angle(rng);
      const DensityMatrix4 rho = random_supported_density(rng, phi);
      const Sensitivity s = angle_sensitivity(rho, lambda, phi, eps);
      t.record("bound", s.delta - (1.0 - lambda) * (4.0 * eps + 10.0 * eps * eps));
    }
  }
  return t.finish();
}

CheckResult check_gradient(int samples, std::uint64_t seed) {
  CheckResult r = start("gradient");
  Tally t(r);
  Rng rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  constexpr double h = 1e-5;
  for (int k = 0; k < samples; ++k) {
    t.sample();
    const ObjectiveSpec spec = ObjectiveSpec::frobenius(unit(rng), kHalfPi * unit(rng), 0.1);
    const detail::KeyProjectors keys(spec.phi_a);
    const DensityMatrix4 rho = random_density(rng);
    Mat4 dir = random_hermitian(rng).matrix();
    dir /= dir.norm();
    const Mat4 g = detail::frobenius_grad(rho.matrix(), spec, keys);
    const double analytic = (g * dir).trace().real();
    const double fd = (detail::frobenius_value(rho.matrix() + h * dir, spec, keys) -
                       detail::frobenius_value(rho.matrix() - h * dir, spec, keys)) /
                      (2.0 * h);
    t.record("relative_error", std::abs(fd - analytic) / std::max(std::abs(analytic), 1e-6) - 1e-5);
  }
  return t.finish();
}

CheckResult check_hermitian(int samples, std::uint64_t seed) {
  CheckResult r = start("hermitian");
  Tally t(r);
  Rng rng(seed);
  for (int k = 0; k < samples; ++k) {
    t.sample();
    const Herm4 a = random_hermitian(rng);
    const double sp = norm(a, NormKind::spectral);
    const double fr = norm(a, NormKind::frobenius);
    const double tr = norm(a, NormKind::trace);
    const double slack = 1e-12 * tr;
    t.record("norm_order", sp - fr - slack);
    t.record("norm_order", fr - tr - slack);
    t.record("norm_order", tr - 2.0 * fr - slack);

    const auto d = eig(a);
    t.record("reconstruction", (a.matrix() - d.reconstruct()).norm() - 1e-9);
    t.record("orthonormal", (d.eigenvectors.adjoint() * d.eigenvectors - Mat4::Identity()).norm() - 1e-9);
    for (int i = 0; i < 3; ++i) t.record("sorted", d.eigenvalues(i + 1) - d.eigenvalues(i));

    const Herm4 sq = matrix_function(a, [](double x) { return x * x; });
    t.record("hermiticity", (sq.matrix() - sq.matrix().adjoint()).cwiseAbs().maxCoeff() - 1e-12);

    const DensityMatrix4 rho = random_density(rng);
    const DensityMatrix4 sigma = random_density(rng);
    t.record("relative_entropy", -relative_entropy(rho, sigma) - 1e-12);
    t.record("relative_entropy_self", std::abs(relative_entropy(rho, rho)) - 1e-9);
  }
  return t.finish();
}

CheckResult check_chsh_construction(int pairs, std::uint64_t seed) {
  CheckResult r = start("chsh_construction");
  Tally t(r);
  Rng rng(seed);
  for (int k = 0; k < pairs; ++k) {
    t.sample();
    const AnglePair ang = random_angles(rng);
    const ChshOperator c = chsh_operator(ang);
    t.record("dual_construction",
             (c.matrix.matrix() - chsh_from_projectors(ang).matrix()).cwiseAbs().maxCoeff() - 1e-12);
    t.record("range", max_violation(ang) - kTsirelson - 1e-9);
    t.record("range", -kTsirelson - 1e-9 - min_score(ang));
  }
  return t.finish();
}

CheckResult check_strong_convexity(int samples, std::uint64_t seed) {
  CheckResult r = start("strong_convexity");
  Tally t(r);
  Rng rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int k = 0; k < samples; ++k) {
    t.sample();
    const ObjectiveSpec spec = ObjectiveSpec::frobenius(unit(rng), kHalfPi * unit(rng), 0.5);
    const DensityMatrix4 x = random_density(rng);
    const DensityMatrix4 y = random_density(rng);
    const double s = 0.05 + 0.9 * unit(rng);
    const DensityMatrix4 mid(Herm4::from_trusted(s * x.matrix() + (1.0 - s) * y.matrix()));
    const double lhs = frobenius_objective(mid, spec);
    const double rhs = s * frobenius_objective(x, spec) + (1.0 - s) * frobenius_objective(y, spec) -
                       0.5 * spec.mu * s * (1.0 - s) * (x.matrix() - y.matrix()).squaredNorm();
    t.record("inequality", lhs - rhs - 1e-9);
  }
  return t.finish();
}

CheckResult check_pinsker_lift() {
  CheckResult r = start("pinsker_lift");
  Tally t(r);
  double prev = pinsker_lift(0.0);
  t.record("endpoint", std::abs(prev) - 1e-15);
  t.record("endpoint", std::abs(pinsker_lift(1.0) - 1.0) - 1e-15);
  for (int k = 1; k < 1000; ++k) {
    t.sample();
    const double v = pinsker_lift(k / 999.0);
    t.record("monotone", prev - v);
    prev = v;
  }
  return t.finish();
}

CheckResult check_solver(int problems, std::uint64_t seed) {
  CheckResult r = start("solver");
  Tally t(r);
  Rng rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  int made = 0;
  while (made < problems) {
    const AnglePair ang = random_angles(rng);
    const double top = max_violation(ang);
    const double s = 2.0 + (top - 2.0) * unit(rng);
    const double lambda = unit(rng);
    if (top < 2.05) continue;
    ++made;
    t.sample();

    SolverConfig cfg;
    cfg.record_history = true;
    const ObjectiveSpec fro = ObjectiveSpec::frobenius(lambda, ang.phi_a(), 0.1);
    const OptResult a = minimize(fro, ang, s, cfg);
    for (std::size_t k = 1; k < a.history.size(); ++k) t.record("descent", a.history[k] - a.history[k - 1] - 1e-12);
    if (a.status == SolveStatus::converged) t.record("feasible", a.feasibility_residual - cfg.feas_tol);
    const OptResult b = minimize(fro, ang, s, cfg);
    t.record("deterministic", a.value == b.value && a.history == b.history ? -1.0 : 1.0);

    // A different start must reach the same minimizer.
    WarmStart warm;
    warm.rho = random_density(rng).matrix().real();
    const OptResult c = minimize(fro, ang, s, cfg, &warm);
    t.record("unique", (a.minimizer->matrix() - c.minimizer->matrix()).norm() - 1e-5);

    const ObjectiveSpec tr = ObjectiveSpec::trace_norm(lambda, ang.phi_a());
    const OptResult d = minimize(tr, ang, s, SolverConfig{});
    t.record("lower_bound", d.lower_bound - d.value - 1e-12);
    if (d.status == SolveStatus::converged) t.record("gap", d.final_grad_norm - SolverConfig{}.grad_tol);
    t.record("converged", d.status == SolveStatus::converged ? -1.0 : 1.0);
  }
  return t.finish();
}

CheckResult check_epsnet() {
  CheckResult r = start("epsnet");
  Tally t(r);
  for (double eps0 : {kHalfPi / 2.0, std::numbers::pi / 8.0, std::numbers::pi / 64.0, 0.3, 0.0491}) {
    t.sample();
    const std::vector<Segment> net = build_net(eps0);
    const int expected = static_cast<int>(std::ceil(kHalfPi / (2.0 * eps0) - 1e-12));
    t.record("count", net.size() == static_cast<std::size_t>(expected) ? -1.0 : 1.0);
    double reach = 0.0;
    for (const Segment& seg : net) {
      t.record("gap", seg.center - seg.half_width - reach - 1e-12);
      t.record("inside", -(seg.center - seg.half_width) - 1e-15);
      t.record("inside", seg.center + seg.half_width - kHalfPi - 1e-12);
      reach = seg.center + seg.half_width;
    }
    t.record("cover", kHalfPi - reach - 1e-12);
  }
  NetConfig cfg;
  t.record("levels", std::abs(final_half_width(cfg) - cfg.eps0 / std::pow(cfg.refine_factor, refinement_levels(cfg))));
  t.record("levels", final_half_width(cfg) - cfg.width_tol);

  std::vector<std::pair<double, double>> samples;
  for (int k = 0; k <= 157; ++k) samples.emplace_back(0.01 * k, std::sin(0.01 * k));
  t.record("lipschitz", std::abs(estimate_lipschitz(samples) - 1.5) - 0.01);
  samples.clear();
  for (int k = 0; k < 10; ++k) samples.emplace_back(0.1 * k, 2.0 * 0.1 * k);
  t.record("lipschitz", std::abs(estimate_lipschitz(samples) - 3.0) - 1e-9);
  t.record("delta", std::abs(pessimistic_delta(2.0, 0.01) - 0.02) - 1e-15);
  return t.finish();
}

CheckResult check_keyrate(std::uint64_t seed) {
  CheckResult r = start("keyrate");
  Tally t(r);
  Rng rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int k = 0; k < 100; ++k) {
    t.sample();
    const KeyRateParams a{unit(rng), 0.5 * unit(rng), 0.5 * unit(rng)};
    const KeyRateParams b{1.0 - a.p, a.qber0, a.qber1};
    t.record("p_symmetry", std::abs(a.p_s() - b.p_s()) - 1e-15);
    t.record("lambda_symmetry", std::abs(a.lambda() + b.lambda() - 1.0) - 1e-12);
    const double x = unit(rng) - 0.5;
    t.record("linear", std::abs(key_rate(3.0 * x, a) - 3.0 * key_rate(x, a)) - 1e-15);
    const KeyRateParams same{a.p, a.qber0, a.qber0};
    const KeyRateParams flip{1.0 - a.p, a.qber0, a.qber0};
    const double c = unit(rng);
    t.record("r_symmetry", std::abs(secret_fraction(c, same) - secret_fraction(c, flip)) - 1e-12);
  }
  t.record("example", std::abs(secret_fraction(1.0, KeyRateParams{0.5, 0.0, 0.0}) - 1.0));
  t.record("example", std::abs(key_rate(1.0, KeyRateParams{0.5, 0.0, 0.0}) - 0.5));
  t.record("example", std::abs(key_rate(-0.1, KeyRateParams{0.5, 0.0, 0.0}) + 0.05) - 1e-16);

  std::vector<BoundRow> rows(9);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    rows[i].s = 2.05 + 0.05 * static_cast<double>(i);
    rows[i].c_bar = 0.1 + std::pow(rows[i].s - 2.0, 2);
  }
  t.record("convex_passes", verify_convexity(rows).passed ? -1.0 : 1.0);
  rows[4].c_bar += 0.01;
  const ConvexityReport bump = verify_convexity(rows);
  t.record("bump_detected", !bump.passed && bump.violations.front().first == 3 ? -1.0 : 1.0);
  return t.finish();
}

CheckResult check_sdp(int samples, std::uint64_t seed) {
  CheckResult r = start("sdp_export");
  Tally t(r);
  Rng rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int k = 0; k < samples; ++k) {
    t.sample();
    const AnglePair ang = random_angles(rng);
    const double s = min_score(ang) + (max_violation(ang) - min_score(ang)) * unit(rng);
    for (const ObjectiveSpec& spec : {ObjectiveSpec::frobenius(unit(rng), ang.phi_a(), 1e-3),
                                      ObjectiveSpec::trace_norm(unit(rng), ang.phi_a())}) {
      const SdpProblem p = export_sdp_standard_form(spec, ang, s);
      const std::size_t blocks = spec.kind == ObjectiveKind::frobenius ? 4 : 3;
      t.record("blocks", p.blocks.size() == blocks ? -1.0 : 1.0);
      t.record("equalities", p.equalities.size() == 2 ? -1.0 : 1.0);
      t.record("roundtrip", parse_sdp(format_sdp(p)) == p ? -1.0 : 1.0);
    }
  }
  return t.finish();
}

std::vector<CheckResult> run_module_suites(std::uint64_t seed) {
  std::vector<CheckResult> out = run_property_suites(seed);
  out.push_back(check_solver(6, seed + 7));
  out.push_back(check_epsnet());
  out.push_back(check_keyrate(seed + 8));
  out.push_back(check_sdp(10, seed + 9));
  return out;
}

std::vector<CheckResult> run_property_suites(std::uint64_t seed) {
  return {
      check_hermitian(500, seed),
      check_chsh_construction(1000, seed + 1),
      check_angle_roundtrip(1000),
      check_chsh_deviation(100, seed + 2),
      check_pinching(200, seed + 3),
      check_angle_sensitivity(100, seed + 4),
      check_gradient(100, seed + 5),
      check_strong_convexity(200, seed + 6),
      check_pinsker_lift(),
  };
}

std::string format_check(const CheckResult& r) {
  std::ostringstream os;
  os << (r.passed ? "PASS " : "FAIL ") << r.name << " samples=" << r.samples << " violations=" << r.violations
     << " worst=" << format_double(r.worst);
  if (!r.detail.empty()) os << " " << r.detail;
  return os.str();
}

}  // namespace diqkd
