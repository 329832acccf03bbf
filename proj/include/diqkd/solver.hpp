#pragma once

// Minimization of the pinching objectives over
//
//   F(s) = { rho >= 0, Tr rho = 1, Tr(rho CHSH) = s }.
//
// The CHSH operator and both key projectors are real, so the conjugate of a
// feasible state is feasible with the same objective value and, by convexity,
// a real minimizer exists. The first-order solvers therefore iterate over real
// symmetric 4x4 matrices. The oracle keeps the full complex parameterization.
//
// Every first-order solve also reports a certified lower bound obtained from a
// dual point, so value - lower_bound is a rigorous optimality gap.

#include <cstdint>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "diqkd/chsh.hpp"
#include "diqkd/hermitian.hpp"
#include "diqkd/objective.hpp"

namespace diqkd {

enum class StepRule { fixed, backtracking };

/// Trace-norm algorithm: primal-dual hybrid gradient (default) or the plain
/// projected subgradient method with steps initial_step / sqrt(k).
enum class TraceNormMethod { primal_dual, subgradient };

enum class SolveStatus { converged, max_iters, infeasible };

const char* to_string(SolveStatus status);

struct SolverConfig {
  int max_iters = 5000;
  double grad_tol = 1e-8;
  double feas_tol = 1e-8;
  StepRule step_rule = StepRule::backtracking;
  double initial_step = 1.0;
  int restarts = 32;
  std::uint64_t seed = 0;
  TraceNormMethod trace_method = TraceNormMethod::primal_dual;
  /// Iterations between optimality-gap evaluations.
  int check_every = 10;
  /// Keep the objective value of every iterate in OptResult::history.
  bool record_history = false;

  /// Throws ConfigError on a nonpositive budget or tolerance.
  void validate() const;
};

struct OptResult {
  double value = 0.0;
  std::optional<DensityMatrix4> minimizer;
  SolveStatus status = SolveStatus::infeasible;
  int iterations = 0;
  /// Certified optimality gap for the trace norm; projected-gradient mapping
  /// norm for the Frobenius objective.
  double final_grad_norm = 0.0;
  double feasibility_residual = 0.0;
  /// A certified lower bound on the minimum (-inf when none is available).
  double lower_bound = 0.0;
  std::vector<double> history;
};

/// Solver state carried between nearby solves. Leaving it default-constructed
/// means a cold start.
struct WarmStart {
  std::optional<Eigen::Matrix4d> rho;
  std::optional<Eigen::Matrix2d> z0;
  std::optional<Eigen::Matrix2d> z1;
  Eigen::Vector2d projection_dual = Eigen::Vector2d::Zero();
  double bound_multiplier = 0.0;
};

namespace detail {

using RMat4 = Eigen::Matrix4d;
using RMat2 = Eigen::Matrix2d;

/// Euclidean projection onto the probability simplex.
Eigen::Vector4d simplex_project(const Eigen::Vector4d& v);

/// Exact Frobenius projection onto the real part of F(s) and linear
/// minimization over it.
///
/// Interior scores use a semismooth Newton method on the two multipliers of
/// Tr rho = 1 and Tr(rho C) = s. When s sits within face_tol of the largest
/// (or smallest) eigenvalue of C the feasible set collapses to the unit-trace
/// states on that eigenspace and both operations are solved there directly.
class FeasibleSet {
 public:
  FeasibleSet(const RMat4& chsh, double s, double feas_tol, double face_tol = 1e-9);

  bool feasible() const noexcept { return feasible_; }
  bool on_face() const noexcept { return face_ != Face::none; }
  double lambda_max() const noexcept { return lmax_; }
  double lambda_min() const noexcept { return lmin_; }

  /// Nearest feasible point. `dual` carries the multipliers across calls.
  RMat4 project(const RMat4& a, Eigen::Vector2d& dual) const;

  /// min over F(s) of <g, rho>, from the concave dual
  /// max_t lambda_min(g - t C) + t s. Any t certifies a lower bound; `t` is
  /// a warm start and receives the best value found.
  double min_linear(const RMat4& g, double& t) const;

  /// max of |Tr rho - 1|, |Tr(rho C) - s| and the negative part of lambda_min.
  double residual(const RMat4& rho) const;

 private:
  enum class Face { none, top, bottom };

  RMat4 project_face(const RMat4& a) const;

  RMat4 c_;
  double s_;
  double lmax_ = 0.0;
  double lmin_ = 0.0;
  bool feasible_ = false;
  Face face_ = Face::none;
  RMat4 face_projector_ = RMat4::Zero();
};

/// Real orthogonal W (x) I mapping Q(phi) (x) I to diag(1, 1, 0, 0).
RMat4 key_basis(double phi);

/// Off-diagonal 2x2 block of W^T rho W: the part removed by the pinching.
RMat2 removed_block(const RMat4& rho, const RMat4& basis);

DensityMatrix4 to_density(const RMat4& rho);

}  // namespace detail

/// Dykstra's alternating projections between the PSD cone and the affine set
/// {Tr rho = 1, Tr(rho C) = s}. Throws InfeasibleError when s lies outside
/// the spectrum of C (beyond feas_tol) and NumericalError when the
/// alternation has not settled after 10 max_iters rounds.
DensityMatrix4 project_feasible(const Herm4& a, const ChshOperator& chsh, double s, const SolverConfig& cfg);

/// Minimizes the objective over F(s) at the given angles. The objective's
/// phi_a is taken from `angles`. Infeasible scores give status infeasible.
OptResult minimize(const ObjectiveSpec& spec, const AnglePair& angles, double s, const SolverConfig& cfg,
                   WarmStart* warm = nullptr);

/// Independent penalty-method Nelder-Mead search over rho = L L^H / Tr(L L^H)
/// with complex lower-triangular L, from cfg.restarts seeded random starts.
OptResult oracle_minimize(const ObjectiveSpec& spec, const AnglePair& angles, double s, const SolverConfig& cfg);

}  // namespace diqkd
