#include "diqkd/solver.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <random>
#include <sstream>

#include "diqkd/pinching.hpp"

namespace diqkd {
namespace {

using detail::RMat2;
using detail::RMat4;
using Eigen::Vector2d;
using Eigen::Vector4d;

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kProjectionTol = 1e-13;
constexpr int kNewtonMaxIters = 200;
constexpr double kOracleFeasTol = 1e-6;
// Initial tau / sigma for the primal-dual iteration.
constexpr double kPrimalDualRatio = 0.003;

using RealEig = Eigen::SelfAdjointEigenSolver<RMat4>;

double inner(const RMat4& a, const RMat4& b) { return a.cwiseProduct(b).sum(); }

// Singular values of a real 2x2 matrix, largest first.
Vector2d singular_values(const RMat2& z) {
  const double f = z.squaredNorm();
  const double d = 2.0 * std::abs(z.determinant());
  const double hi = std::sqrt(f + d);
  const double lo = std::sqrt(std::max(0.0, f - d));
  return {0.5 * (hi + lo), 0.5 * (hi - lo)};
}

double nuclear_norm(const RMat2& z) { return std::sqrt(z.squaredNorm() + 2.0 * std::abs(z.determinant())); }

// Projection onto the unit spectral-norm ball.
RMat2 clip_spectral(const RMat2& z) {
  if (singular_values(z)(0) <= 1.0) return z;
  Eigen::JacobiSVD<RMat2> svd(z, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Vector2d s = svd.singularValues().cwiseMin(1.0);
  return svd.matrixU() * s.asDiagonal() * svd.matrixV().transpose();
}

// Polar factor U V^T, with zero singular directions dropped.
RMat2 polar_factor(const RMat2& z) {
  Eigen::JacobiSVD<RMat2> svd(z, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Vector2d s = svd.singularValues();
  const double cut = 1e-14 * std::max(1.0, s(0));
  for (int i = 0; i < 2; ++i) s(i) = s(i) > cut ? 1.0 : 0.0;
  return svd.matrixU() * s.asDiagonal() * svd.matrixV().transpose();
}

// basis [[0, Z], [Z^T, 0]] basis^T
RMat4 embed_block(const RMat2& z, const RMat4& basis) {
  RMat4 y = RMat4::Zero();
  y.block<2, 2>(0, 2) = z;
  y.block<2, 2>(2, 0) = z.transpose();
  return basis * y * basis.transpose();
}

RMat4 real_chsh(const AnglePair& angles) { return chsh_operator(angles).matrix.matrix().real(); }

// The objective in the rotated key bases, where each pinching removes the
// off-diagonal 2x2 block.
struct RealObjective {
  ObjectiveKind kind;
  double w[2];
  double mu;
  RMat4 basis[2];

  RealObjective(const ObjectiveSpec& spec, double phi_a)
      : kind(spec.kind),
        w{spec.lambda, 1.0 - spec.lambda},
        mu(spec.mu),
        basis{detail::key_basis(0.0), detail::key_basis(phi_a)} {}

  double value(const RMat4& rho) const {
    double v = 0.0;
    for (int i = 0; i < 2; ++i) {
      if (w[i] == 0.0) continue;
      const RMat2 b = detail::removed_block(rho, basis[i]);
      v += kind == ObjectiveKind::trace_norm ? 2.0 * w[i] * nuclear_norm(b) : 2.0 * w[i] * b.squaredNorm();
    }
    if (kind == ObjectiveKind::frobenius) v += 0.5 * mu * rho.squaredNorm();
    return v;
  }

  RMat4 gradient(const RMat4& rho) const {
    RMat4 g = mu * rho;
    for (int i = 0; i < 2; ++i) {
      if (w[i] != 0.0) g += 2.0 * w[i] * embed_block(detail::removed_block(rho, basis[i]), basis[i]);
    }
    return g;
  }

  // sum_i w_i basis_i [[0, Z_i], [Z_i^T, 0]] basis_i^T
  RMat4 dual_image(const RMat2 (&z)[2]) const {
    RMat4 g = RMat4::Zero();
    for (int i = 0; i < 2; ++i) {
      if (w[i] != 0.0) g += w[i] * embed_block(z[i], basis[i]);
    }
    return g;
  }
};

void require_finite(double v, const char* who) {
  if (!std::isfinite(v)) throw NumericalError(std::string(who) + ": objective became non-finite", v);
}

OptResult infeasible_result(double s, double lmax) {
  OptResult r;
  r.status = SolveStatus::infeasible;
  r.value = kInf;
  r.lower_bound = kInf;
  r.feasibility_residual = std::max(0.0, s - lmax);
  return r;
}

void finish(OptResult& r, const RMat4& rho, const detail::FeasibleSet& set, const SolverConfig& cfg) {
  r.minimizer = detail::to_density(rho);
  r.feasibility_residual = set.residual(rho);
  if (r.status == SolveStatus::converged && r.feasibility_residual > cfg.feas_tol) r.status = SolveStatus::max_iters;
}

RMat4 initial_state(const detail::FeasibleSet& set, WarmStart& warm) {
  const RMat4 start = warm.rho ? *warm.rho : RMat4(RMat4::Identity() / 4.0);
  return set.project(start, warm.projection_dual);
}

// Restarted primal-dual hybrid gradient. Every kRestartEvery iterations the
// iteration restarts from whichever of the current and averaged iterates has
// the smaller duality gap, once that gap has shrunk by kRestartShrink or the
// epoch has run kRestartMaxEpoch iterations. The primal weight omega (tau =
// eta omega, sigma = eta / omega) is then moved toward the ratio of primal to
// dual movement over the epoch.
constexpr int kRestartEvery = 80;
constexpr int kRestartMaxEpoch = 640;
constexpr double kRestartShrink = 0.2;

OptResult solve_trace_primal_dual(const RealObjective& obj, const detail::FeasibleSet& set,
                                  const SolverConfig& cfg, WarmStart& warm) {
  OptResult r;
  const double eta = 0.95 / std::hypot(obj.w[0], obj.w[1]);
  double omega = kPrimalDualRatio;

  RMat4 rho = initial_state(set, warm);
  RMat2 z[2] = {warm.z0.value_or(RMat2::Zero()), warm.z1.value_or(RMat2::Zero())};
  RMat4 rho_bar = rho;

  double best_value = obj.value(rho);
  RMat4 best_rho = rho;
  double best_bound = -kInf;
  RMat2 best_z[2] = {z[0], z[1]};
  if (cfg.record_history) r.history.push_back(best_value);

  RMat4 rho_sum = RMat4::Zero();
  RMat2 z_sum[2] = {RMat2::Zero(), RMat2::Zero()};
  int epoch = 0;
  RMat4 rho_start = rho;
  RMat2 z_start[2] = {z[0], z[1]};
  double last_gap = kInf;

  // Updates the best primal value and dual bound; returns the gap of (x, y).
  auto score = [&](const RMat4& x, const RMat2 (&y)[2]) {
    const double v = obj.value(x);
    const double lb = set.min_linear(obj.dual_image(y), warm.bound_multiplier);
    if (v < best_value) {
      best_value = v;
      best_rho = x;
    }
    if (lb > best_bound) {
      best_bound = lb;
      best_z[0] = y[0];
      best_z[1] = y[1];
    }
    return v - lb;
  };

  r.status = SolveStatus::max_iters;
  int k = 0;
  for (k = 1; k <= cfg.max_iters; ++k) {
    const double tau = eta * omega;
    const double sigma = eta / omega;
    for (int i = 0; i < 2; ++i) {
      if (obj.w[i] == 0.0) continue;
      z[i] = clip_spectral(z[i] + sigma * obj.w[i] * detail::removed_block(rho_bar, obj.basis[i]));
    }
    const RMat4 prev = rho;
    rho = set.project(rho - tau * obj.dual_image(z), warm.projection_dual);
    rho_bar = 2.0 * rho - prev;
    rho_sum += rho;
    z_sum[0] += z[0];
    z_sum[1] += z[1];
    ++epoch;

    const double v = obj.value(rho);
    require_finite(v, "minimize");
    if (cfg.record_history) r.history.push_back(v);
    if (v < best_value) {
      best_value = v;
      best_rho = rho;
    }
    if (k % cfg.check_every != 0 && k != cfg.max_iters && k % kRestartEvery != 0) continue;

    const RMat4 rho_avg = rho_sum / epoch;
    const RMat2 z_avg[2] = {z_sum[0] / epoch, z_sum[1] / epoch};
    const double gap_now = score(rho, z);
    const double gap_avg = score(rho_avg, z_avg);
    if (best_value - best_bound <= cfg.grad_tol) {
      r.status = SolveStatus::converged;
      break;
    }
    if (k % kRestartEvery != 0) continue;
    const double gap = std::min(gap_now, gap_avg);
    if (gap > kRestartShrink * last_gap && epoch < kRestartMaxEpoch) continue;

    const bool use_avg = gap_avg < gap_now;
    const RMat4 rho_new = use_avg ? rho_avg : rho;
    const RMat2 z_new[2] = {use_avg ? z_avg[0] : z[0], use_avg ? z_avg[1] : z[1]};
    const double moved_primal = (rho_new - rho_start).norm();
    const double moved_dual = std::hypot((z_new[0] - z_start[0]).norm(), (z_new[1] - z_start[1]).norm());
    if (moved_primal > 1e-10 && moved_dual > 1e-10) omega = std::sqrt(omega * moved_primal / moved_dual);
    rho = rho_bar = rho_start = rho_new;
    for (int i = 0; i < 2; ++i) z[i] = z_start[i] = z_new[i];
    rho_sum.setZero();
    z_sum[0].setZero();
    z_sum[1].setZero();
    epoch = 0;
    last_gap = gap;
  }
  r.iterations = std::min(k, cfg.max_iters);
  r.value = best_value;
  r.lower_bound = std::min(best_bound, best_value);
  r.final_grad_norm = std::max(0.0, best_value - best_bound);
  warm.rho = best_rho;
  warm.z0 = best_z[0];
  warm.z1 = best_z[1];
  finish(r, best_rho, set, cfg);
  return r;
}

OptResult solve_trace_subgradient(const RealObjective& obj, const detail::FeasibleSet& set,
                                  const SolverConfig& cfg, WarmStart& warm) {
  OptResult r;
  RMat4 rho = initial_state(set, warm);
  double best_value = obj.value(rho);
  RMat4 best_rho = rho;
  if (cfg.record_history) r.history.push_back(best_value);
  auto polar = [&](const RMat4& x, RMat2 (&z)[2]) {
    for (int i = 0; i < 2; ++i) z[i] = polar_factor(detail::removed_block(x, obj.basis[i]));
  };
  int k = 1;
  for (; k <= cfg.max_iters; ++k) {
    RMat2 z[2];
    polar(rho, z);
    const RMat4 g = obj.dual_image(z);
    const double gn = g.norm();
    if (gn == 0.0) break;
    rho = set.project(rho - (cfg.initial_step / std::sqrt(static_cast<double>(k))) * g, warm.projection_dual);
    const double v = obj.value(rho);
    require_finite(v, "minimize");
    if (cfg.record_history) r.history.push_back(v);
    if (v < best_value) {
      best_value = v;
      best_rho = rho;
    }
  }
  // Sign matrices of the best iterate are a feasible dual point.
  RMat2 z[2];
  polar(best_rho, z);
  const double lb = std::min(best_value, set.min_linear(obj.dual_image(z), warm.bound_multiplier));
  r.value = best_value;
  r.lower_bound = lb;
  r.final_grad_norm = best_value - lb;
  r.iterations = std::min(k, cfg.max_iters);
  r.status = r.final_grad_norm <= cfg.grad_tol ? SolveStatus::converged : SolveStatus::max_iters;
  warm.rho = best_rho;
  finish(r, best_rho, set, cfg);
  return r;
}

OptResult solve_frobenius(const RealObjective& obj, const detail::FeasibleSet& set, const SolverConfig& cfg,
                          WarmStart& warm) {
  OptResult r;
  RMat4 rho = initial_state(set, warm);
  double f = obj.value(rho);
  if (cfg.record_history) r.history.push_back(f);
  double lip = 1.0 / cfg.initial_step;
  double mapping_norm = kInf;
  r.status = SolveStatus::max_iters;
  int k = 1;
  for (; k <= cfg.max_iters; ++k) {
    const RMat4 g = obj.gradient(rho);
    RMat4 next;
    double f_next = 0.0;
    RMat4 step;
    for (int bt = 0;; ++bt) {
      next = set.project(rho - g / lip, warm.projection_dual);
      step = next - rho;
      f_next = obj.value(next);
      require_finite(f_next, "minimize");
      if (cfg.step_rule == StepRule::fixed) break;
      const double noise = 16.0 * std::numeric_limits<double>::epsilon() * (1.0 + std::abs(f));
      if (f_next <= f + inner(g, step) + 0.5 * lip * step.squaredNorm() + noise) break;
      if (bt > 60) throw NumericalError("minimize: backtracking failed to find a descent step", f_next - f);
      lip *= 2.0;
    }
    mapping_norm = lip * step.norm();
    rho = next;
    f = f_next;
    if (cfg.record_history) r.history.push_back(f);
    if (mapping_norm <= cfg.grad_tol) {
      r.status = SolveStatus::converged;
      break;
    }
  }
  const RMat4 g = obj.gradient(rho);
  const double fw = set.min_linear(g, warm.bound_multiplier) - inner(g, rho);
  r.value = f;
  r.lower_bound = std::min(f, f + fw);
  r.final_grad_norm = mapping_norm;
  r.iterations = std::min(k, cfg.max_iters);
  warm.rho = rho;
  finish(r, rho, set, cfg);
  return r;
}

// Nelder-Mead with dimension-adapted coefficients.
struct SimplexResult {
  Eigen::VectorXd x;
  double f = kInf;
  int evals = 0;
};

SimplexResult nelder_mead(const std::function<double(const Eigen::VectorXd&)>& fn, const Eigen::VectorXd& x0,
                          double scale, int max_evals, double ftol) {
  const int n = static_cast<int>(x0.size());
  const double alpha = 1.0;
  const double beta = 1.0 + 2.0 / n;
  const double gamma = 0.75 - 1.0 / (2.0 * n);
  const double delta = 1.0 - 1.0 / n;

  std::vector<Eigen::VectorXd> pts(n + 1, x0);
  std::vector<double> vals(n + 1);
  for (int i = 0; i < n; ++i) pts[i + 1](i) += scale;
  int evals = 0;
  for (int i = 0; i <= n; ++i) {
    vals[i] = fn(pts[i]);
    ++evals;
  }
  std::vector<int> order(n + 1);
  while (evals < max_evals) {
    for (int i = 0; i <= n; ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return vals[a] < vals[b]; });
    const int best = order[0];
    const int worst = order[n];
    const int second = order[n - 1];
    if (std::abs(vals[worst] - vals[best]) <= ftol * (1.0 + std::abs(vals[best]))) break;

    Eigen::VectorXd centroid = Eigen::VectorXd::Zero(n);
    for (int i = 0; i < n; ++i) centroid += pts[order[i]];
    centroid /= n;

    const Eigen::VectorXd xr = centroid + alpha * (centroid - pts[worst]);
    const double fr = fn(xr);
    ++evals;
    if (fr < vals[best]) {
      const Eigen::VectorXd xe = centroid + beta * (xr - centroid);
      const double fe = fn(xe);
      ++evals;
      if (fe < fr) {
        pts[worst] = xe;
        vals[worst] = fe;
      } else {
        pts[worst] = xr;
        vals[worst] = fr;
      }
      continue;
    }
    if (fr < vals[second]) {
      pts[worst] = xr;
      vals[worst] = fr;
      continue;
    }
    const bool outside = fr < vals[worst];
    const Eigen::VectorXd xc =
        outside ? Eigen::VectorXd(centroid + gamma * (xr - centroid)) : Eigen::VectorXd(centroid - gamma * (centroid - pts[worst]));
    const double fc = fn(xc);
    ++evals;
    if (fc < (outside ? fr : vals[worst])) {
      pts[worst] = xc;
      vals[worst] = fc;
      continue;
    }
    for (int i = 1; i <= n; ++i) {
      const int j = order[i];
      pts[j] = pts[best] + delta * (pts[j] - pts[best]);
      vals[j] = fn(pts[j]);
      ++evals;
    }
  }
  const auto it = std::min_element(vals.begin(), vals.end());
  SimplexResult out;
  out.x = pts[static_cast<std::size_t>(it - vals.begin())];
  out.f = *it;
  out.evals = evals;
  return out;
}

Mat4 cholesky_state(const Eigen::VectorXd& x) {
  Mat4 l = Mat4::Zero();
  for (int i = 0; i < 4; ++i) l(i, i) = x(i);
  int idx = 4;
  for (int i = 1; i < 4; ++i) {
    for (int j = 0; j < i; ++j) {
      l(i, j) = std::complex<double>(x(idx), x(idx + 1));
      idx += 2;
    }
  }
  Mat4 rho = l * l.adjoint();
  const double tr = rho.trace().real();
  if (!(tr > 1e-300)) return Mat4::Identity() / 4.0;
  rho /= tr;
  return 0.5 * (rho + rho.adjoint());
}

}  // namespace

const char* to_string(SolveStatus status) {
  switch (status) {
    case SolveStatus::converged:
      return "converged";
    case SolveStatus::max_iters:
      return "max_iters";
    case SolveStatus::infeasible:
      return "infeasible";
  }
  return "unknown";
}

void SolverConfig::validate() const {
  if (max_iters < 1) throw ConfigError("SolverConfig: max_iters must be >= 1");
  if (!(grad_tol > 0.0) || !(feas_tol > 0.0)) throw ConfigError("SolverConfig: tolerances must be > 0");
  if (!(initial_step > 0.0) || !std::isfinite(initial_step)) {
    throw ConfigError("SolverConfig: initial_step must be a positive number");
  }
  if (restarts < 1) throw ConfigError("SolverConfig: restarts must be >= 1");
  if (check_every < 1) throw ConfigError("SolverConfig: check_every must be >= 1");
}

namespace detail {

Eigen::Vector4d simplex_project(const Eigen::Vector4d& v) {
  Eigen::Vector4d u = v;
  std::sort(u.data(), u.data() + 4, std::greater<>());
  double cumulative = 0.0;
  double theta = 0.0;
  for (int i = 0; i < 4; ++i) {
    cumulative += u(i);
    const double t = (cumulative - 1.0) / (i + 1);
    if (u(i) - t > 0.0) theta = t;
  }
  return (v.array() - theta).cwiseMax(0.0);
}

RMat4 key_basis(double phi) {
  const double c = std::cos(0.5 * phi);
  const double s = std::sin(0.5 * phi);
  RMat4 b = RMat4::Zero();
  b(0, 0) = c;
  b(1, 1) = c;
  b(0, 2) = -s;
  b(1, 3) = -s;
  b(2, 0) = s;
  b(3, 1) = s;
  b(2, 2) = c;
  b(3, 3) = c;
  return b;
}

RMat2 removed_block(const RMat4& rho, const RMat4& basis) {
  return (basis.transpose() * rho * basis).block<2, 2>(0, 2);
}

DensityMatrix4 to_density(const RMat4& rho) {
  const RMat4 sym = 0.5 * (rho + rho.transpose());
  return DensityMatrix4(Herm4(sym.cast<std::complex<double>>()));
}

FeasibleSet::FeasibleSet(const RMat4& chsh, double s, double feas_tol, double face_tol) : c_(chsh), s_(s) {
  const RealEig es(chsh);
  const Vector4d ev = es.eigenvalues();  // ascending
  lmin_ = ev(0);
  lmax_ = ev(3);
  feasible_ = std::isfinite(s) && s <= lmax_ + feas_tol && s >= lmin_ - feas_tol;
  if (!feasible_) return;
  const double scale = std::max(1.0, std::max(std::abs(lmax_), std::abs(lmin_)));
  auto face_from = [&](double edge) {
    face_projector_.setZero();
    for (int i = 0; i < 4; ++i) {
      if (std::abs(ev(i) - edge) <= 1e-9 * scale) {
        face_projector_ += es.eigenvectors().col(i) * es.eigenvectors().col(i).transpose();
      }
    }
  };
  if (s >= lmax_ - face_tol * scale) {
    face_ = Face::top;
    face_from(lmax_);
  } else if (s <= lmin_ + face_tol * scale) {
    face_ = Face::bottom;
    face_from(lmin_);
  }
}

RMat4 FeasibleSet::project_face(const RMat4& a) const {
  const RMat4& p = face_projector_;
  const double big = 10.0 * (1.0 + a.norm());
  const RMat4 m = p * a * p - big * (RMat4::Identity() - p);
  const RealEig es(m);
  const Vector4d x = simplex_project(es.eigenvalues());
  return es.eigenvectors() * x.asDiagonal() * es.eigenvectors().transpose();
}

RMat4 FeasibleSet::project(const RMat4& a_in, Vector2d& y) const {
  if (!feasible_) throw InfeasibleError("projection onto an empty feasible set", lmax_);
  const RMat4 a = 0.5 * (a_in + a_in.transpose());
  if (face_ != Face::none) return project_face(a);

  struct Point {
    RMat4 x;
    Vector4d d;
    RMat4 v;
    Vector2d grad;
    double theta;
  };
  auto evaluate = [&](const Vector2d& yy) {
    Point p;
    const RealEig es(a + yy(0) * RMat4::Identity() + yy(1) * c_);
    p.d = es.eigenvalues();
    p.v = es.eigenvectors();
    const Vector4d pos = p.d.cwiseMax(0.0);
    p.x = p.v * pos.asDiagonal() * p.v.transpose();
    p.grad = {p.x.trace() - 1.0, inner(p.x, c_) - s_};
    p.theta = 0.5 * pos.squaredNorm() - yy(0) - yy(1) * s_;
    return p;
  };

  Point cur = evaluate(y);
  for (int it = 0; it < kNewtonMaxIters; ++it) {
    if (cur.d(3) <= 0.0) {
      // No positive eigenvalue: theta is linear here, so shift the trace
      // multiplier until one eigenvalue carries unit weight.
      y(0) += 1.0 - cur.d(3);
      cur = evaluate(y);
    }
    const double res = cur.grad.lpNorm<Eigen::Infinity>();
    if (res <= kProjectionTol) return cur.x;

    // Generalized Hessian from divided differences of max(., 0).
    const RMat4 ct = cur.v.transpose() * c_ * cur.v;
    Eigen::Matrix2d h = Eigen::Matrix2d::Zero();
    for (int k = 0; k < 4; ++k) {
      for (int l = 0; l < 4; ++l) {
        const double dk = cur.d(k);
        const double dl = cur.d(l);
        double omega = 0.0;
        if (dk > 0.0 && dl > 0.0) {
          omega = 1.0;
        } else if (dk > 0.0 || dl > 0.0) {
          omega = (std::max(dk, 0.0) - std::max(dl, 0.0)) / (dk - dl);
        }
        if (k == l) {
          h(0, 0) += omega;
          h(0, 1) += omega * ct(k, k);
        }
        h(1, 1) += omega * ct(k, l) * ct(k, l);
      }
    }
    h(1, 0) = h(0, 1);
    Vector2d dir;
    if (h(0, 0) == 0.0) {
      dir = -cur.grad;
    } else {
      // A ridge only guards an exactly singular Hessian; anything larger stalls
      // Newton when two eigenvalues of C nearly coincide.
      const double ridge = 1e-12 * (1.0 + h.trace());
      dir = (h + ridge * Eigen::Matrix2d::Identity()).ldlt().solve(-cur.grad);
    }
    const double slope = cur.grad.dot(dir);
    double step = 1.0;
    Point next;
    bool accepted = false;
    for (int ls = 0; ls < 60; ++ls) {
      next = evaluate(y + step * dir);
      // Near the solution the decrease in theta drops below rounding; a
      // reduced residual is then the acceptance test.
      if (next.theta <= cur.theta + 1e-4 * step * slope ||
          next.grad.lpNorm<Eigen::Infinity>() <= (1.0 - 1e-4 * step) * res) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) {
      // Flat in theta to rounding: accept the point with the smaller residual.
      if (next.grad.lpNorm<Eigen::Infinity>() >= res) break;
    }
    y += step * dir;
    cur = std::move(next);
  }
  const double res = cur.grad.lpNorm<Eigen::Infinity>();
  if (res <= 1e-11) return cur.x;
  throw NumericalError("feasible-set projection did not converge", res);
}

double FeasibleSet::min_linear(const RMat4& g_in, double& t) const {
  if (!feasible_) return kInf;
  const RMat4 g = 0.5 * (g_in + g_in.transpose());
  if (face_ != Face::none) {
    const RMat4& p = face_projector_;
    const double big = 10.0 * (1.0 + g.norm());
    const RealEig es(p * g * p + big * (RMat4::Identity() - p), Eigen::EigenvaluesOnly);
    return es.eigenvalues()(0);
  }
  double best = -kInf;
  double best_t = t;
  // phi(t) = lambda_min(g - t C) + t s is concave; its slope is s - v^T C v.
  auto eval = [&](double tt, double& slope) {
    const RealEig es(g - tt * c_);
    const Eigen::Vector4d v = es.eigenvectors().col(0);
    const double val = es.eigenvalues()(0) + tt * s_;
    slope = s_ - v.dot(c_ * v);
    if (val > best) {
      best = val;
      best_t = tt;
    }
    return val;
  };
  double d0 = 0.0;
  eval(t, d0);
  if (d0 == 0.0) {
    t = best_t;
    return best;
  }
  double lo = t;
  double hi = t;
  double dlo = d0;
  double dhi = d0;
  double h = std::max(1.0, 0.25 * std::abs(t));
  bool bracketed = false;
  for (int i = 0; i < 80 && !bracketed; ++i) {
    if (d0 > 0.0) {
      lo = hi;
      dlo = dhi;
      hi = lo + h;
      eval(hi, dhi);
      bracketed = dhi <= 0.0;
    } else {
      hi = lo;
      dhi = dlo;
      lo = hi - h;
      eval(lo, dlo);
      bracketed = dlo >= 0.0;
    }
    h *= 2.0;
  }
  if (bracketed) {
    // Illinois false position on the monotone slope.
    int side = 0;
    for (int i = 0; i < 100; ++i) {
      if (hi - lo <= 1e-14 * (1.0 + std::abs(lo) + std::abs(hi))) break;
      double m = (dlo - dhi) > 0.0 ? lo + dlo * (hi - lo) / (dlo - dhi) : 0.5 * (lo + hi);
      if (!(m > lo && m < hi)) m = 0.5 * (lo + hi);
      double dm = 0.0;
      eval(m, dm);
      if (dm == 0.0) break;
      if (dm > 0.0) {
        lo = m;
        dlo = dm;
        if (side == 1) dhi *= 0.5;
        side = 1;
      } else {
        hi = m;
        dhi = dm;
        if (side == -1) dlo *= 0.5;
        side = -1;
      }
    }
  }
  t = best_t;
  return best;
}

double FeasibleSet::residual(const RMat4& rho) const {
  const RealEig es(0.5 * (rho + rho.transpose()), Eigen::EigenvaluesOnly);
  return std::max({std::abs(rho.trace() - 1.0), std::abs(inner(rho, c_) - s_), std::max(0.0, -es.eigenvalues()(0))});
}

}  // namespace detail

DensityMatrix4 project_feasible(const Herm4& a, const ChshOperator& chsh, double s, const SolverConfig& cfg) {
  cfg.validate();
  const Mat4& c = chsh.matrix.matrix();
  const auto spectrum = eig(chsh.matrix);
  const double lmax = spectrum.eigenvalues(0);
  const double lmin = spectrum.eigenvalues(3);
  if (!std::isfinite(s) || s > lmax + cfg.feas_tol || s < lmin - cfg.feas_tol) {
    std::ostringstream os;
    os << "project_feasible: score " << s << " outside the attainable range [" << lmin << ", " << lmax << "]";
    throw InfeasibleError(os.str(), lmax);
  }
  const double scale = std::max({1.0, std::abs(lmax), std::abs(lmin)});
  const bool top = s >= lmax - 1e-9 * scale;
  const bool bottom = s <= lmin + 1e-9 * scale;
  if (top || bottom) {
    // The feasible set is the face of unit-trace states on one eigenspace;
    // this is the limit the alternation approaches only sublinearly.
    const double edge = top ? lmax : lmin;
    Mat4 p = Mat4::Zero();
    for (int i = 0; i < 4; ++i) {
      if (std::abs(spectrum.eigenvalues(i) - edge) <= 1e-9 * scale) {
        p += spectrum.eigenvectors.col(i) * spectrum.eigenvectors.col(i).adjoint();
      }
    }
    const double big = 10.0 * (1.0 + a.matrix().norm());
    const Mat4 m = p * a.matrix() * p - big * (Mat4::Identity() - p);
    const auto d = detail::eig_matrix<double, 4>(0.5 * (m + m.adjoint()));
    const Eigen::Vector4d x = detail::simplex_project(d.eigenvalues);
    const Mat4 rho = d.eigenvectors * x.cast<std::complex<double>>().asDiagonal() * d.eigenvectors.adjoint();
    return DensityMatrix4(Herm4::from_trusted(0.5 * (rho + rho.adjoint())));
  }

  // Affine projection onto {Tr X = 1, Tr(X C) = s}.
  const double trc = c.trace().real();
  const double cc = c.squaredNorm();
  Eigen::Matrix2d gram;
  gram << 4.0, trc, trc, cc;
  const Eigen::Matrix2d gram_inv = gram.inverse();
  auto affine = [&](const Mat4& x) {
    const Eigen::Vector2d r(x.trace().real() - 1.0, (x * c).trace().real() - s);
    const Eigen::Vector2d coef = gram_inv * r;
    return Mat4(x - coef(0) * Mat4::Identity() - coef(1) * c);
  };
  auto affine_residual = [&](const Mat4& x) {
    return std::max(std::abs(x.trace().real() - 1.0), std::abs((x * c).trace().real() - s));
  };

  Mat4 x = a.matrix();
  Mat4 q = Mat4::Zero();
  const long limit = 10L * cfg.max_iters;
  for (long it = 0; it < limit; ++it) {
    const Mat4 y = affine(x);  // no correction term is needed for an affine set
    const Mat4 shifted = y + q;
    const Mat4 xn = detail::psd_part(detail::eig_matrix<double, 4>(0.5 * (shifted + shifted.adjoint())));
    q = shifted - xn;
    const double change = (xn - x).norm();
    x = xn;
    // Renormalizing the trace scales the score error by s, hence the margin.
    if (change <= 0.1 * cfg.feas_tol && affine_residual(x) <= 0.1 * cfg.feas_tol) {
      const double tr = x.trace().real();
      const Mat4 rho = x / tr;
      return DensityMatrix4(Herm4::from_trusted(0.5 * (rho + rho.adjoint())));
    }
  }
  throw NumericalError("project_feasible: Dykstra alternation did not settle", affine_residual(x));
}

OptResult minimize(const ObjectiveSpec& spec_in, const AnglePair& angles, double s, const SolverConfig& cfg,
                   WarmStart* warm) {
  cfg.validate();
  const ObjectiveSpec spec = spec_in.with_phi_a(angles.phi_a());
  spec.validate();
  const detail::FeasibleSet set(real_chsh(angles), s, cfg.feas_tol);
  if (!set.feasible()) return infeasible_result(s, set.lambda_max());
  WarmStart local;
  WarmStart& state = warm ? *warm : local;
  const RealObjective obj(spec, angles.phi_a());
  if (spec.kind == ObjectiveKind::frobenius) return solve_frobenius(obj, set, cfg, state);
  if (cfg.trace_method == TraceNormMethod::subgradient) return solve_trace_subgradient(obj, set, cfg, state);
  return solve_trace_primal_dual(obj, set, cfg, state);
}

OptResult oracle_minimize(const ObjectiveSpec& spec_in, const AnglePair& angles, double s, const SolverConfig& cfg) {
  cfg.validate();
  const ObjectiveSpec spec = spec_in.with_phi_a(angles.phi_a());
  spec.validate();
  const Mat4 c = chsh_operator(angles).matrix.matrix();
  const detail::KeyProjectors keys(spec.phi_a);
  auto objective = [&](const Mat4& rho) {
    return spec.kind == ObjectiveKind::trace_norm ? detail::trace_value(rho, spec.lambda, keys)
                                                  : detail::frobenius_value(rho, spec, keys);
  };
  auto score = [&](const Mat4& rho) { return (rho * c).trace().real(); };
  const Eigen::SelfAdjointEigenSolver<Mat4> c_eig(c);

  std::mt19937_64 rng(cfg.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  constexpr int kDim = 16;
  constexpr int kEvalsPerStage = 4000;

  OptResult best;
  best.status = SolveStatus::infeasible;
  best.value = kInf;
  best.lower_bound = -kInf;
  double best_residual = kInf;
  Mat4 best_rho = Mat4::Identity() / 4.0;
  int total_evals = 0;

  for (int restart = 0; restart < cfg.restarts; ++restart) {
    Eigen::VectorXd x(kDim);
    for (int i = 0; i < kDim; ++i) x(i) = normal(rng);
    for (double weight = 10.0; weight <= 1e7 * 1.000001; weight *= 10.0) {
      auto penalized = [&](const Eigen::VectorXd& p) {
        const Mat4 rho = cholesky_state(p);
        const double r = score(rho) - s;
        return objective(rho) + weight * r * r;
      };
      // Repeated restarts of the simplex around the incumbent counter premature collapse.
      double scale = 0.25 * std::max(0.1, x.norm() / std::sqrt(double(kDim)));
      double previous = kInf;
      for (int round = 0; round < 4; ++round) {
        const SimplexResult sr = nelder_mead(penalized, x, scale, kEvalsPerStage, 1e-12);
        total_evals += sr.evals;
        x = sr.x;
        if (previous - sr.f <= 1e-12 * (1.0 + std::abs(sr.f))) break;
        previous = sr.f;
        scale *= 0.5;
      }
    }
    Mat4 rho = cholesky_state(x);
    // Close the remaining penalty residual by mixing in the extreme eigenvector
    // on the far side of s.
    const double miss = s - score(rho);
    const double edge = miss > 0.0 ? c_eig.eigenvalues()(3) : c_eig.eigenvalues()(0);
    const Eigen::Vector4cd v = c_eig.eigenvectors().col(miss > 0.0 ? 3 : 0);
    if (miss != 0.0 && std::abs(edge - score(rho)) > 0.0) {
      const double t = std::clamp(miss / (edge - score(rho)), 0.0, 1.0);
      rho = (1.0 - t) * rho + t * (v * v.adjoint());
    }
    const double residual = std::abs(score(rho) - s);
    const double value = objective(rho);
    const bool feasible = residual <= kOracleFeasTol;
    const bool better = feasible ? (best_residual > kOracleFeasTol || value < best.value) : residual < best_residual &&
                                                                                              best_residual > kOracleFeasTol;
    if (better) {
      best.value = value;
      best_residual = residual;
      best_rho = rho;
    }
  }
  best.iterations = total_evals;
  best.feasibility_residual = best_residual;
  if (best_residual > kOracleFeasTol) {
    best.status = SolveStatus::infeasible;
    best.value = kInf;
    return best;
  }
  best.status = SolveStatus::converged;
  best.minimizer = DensityMatrix4(Herm4::from_trusted(best_rho));
  return best;
}

}  // namespace diqkd
