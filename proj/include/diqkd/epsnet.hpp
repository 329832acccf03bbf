#pragma once

// Epsilon-net search over both measurement angles in [0, pi/2].
//
// Each party's interval is covered by segments of half-width eps. One party is
// refined while the other is held on a finite candidate set; the winner is then
// fixed and the other party is refined. A segment value is the solver's lower
// bound at the segment center, and the final value is reduced by the
// pessimistic errors L * eps of both parties and by 2 (1 - lambda) eps.

#include <functional>
#include <numbers>
#include <optional>
#include <utility>
#include <vector>

#include "diqkd/chsh.hpp"
#include "diqkd/objective.hpp"
#include "diqkd/solver.hpp"

namespace diqkd {

enum class NetOrder { alice_first, bob_first };
enum class Party { alice, bob };

const char* to_string(NetOrder order);
const char* to_string(Party party);

struct Segment {
  double center = 0.0;
  double half_width = 0.0;
  std::optional<double> value;
  std::optional<double> delta;
};

struct NetConfig {
  double eps0 = std::numbers::pi / 64.0;
  int refine_factor = 4;
  double width_tol = 1e-4;
  /// Minimum number of feasible samples behind a Lipschitz estimate.
  int lipschitz_grid = 3;
  NetOrder order = NetOrder::alice_first;
  /// Rounds of sequential fixing; the search stops early once a round
  /// returns the angles of the previous one.
  int rounds = 3;
  /// Optimality gap used for segment solves that only steer the search.
  double navigation_gap = 1e-6;

  /// Throws ConfigError unless eps0 in (0, pi/4], eps0 > width_tol > 0,
  /// refine_factor >= 2, lipschitz_grid >= 3 and rounds >= 1.
  void validate() const;
};

/// One refinement level of one phase, kept for diagnostics and tests.
struct LevelRecord {
  Party party = Party::alice;
  int round = 0;
  int level = 0;
  double half_width = 0.0;
  double lipschitz = 0.0;
  double delta = 0.0;
  double best_center = 0.0;
  std::optional<double> best_value;
  int feasible = 0;
  std::vector<Segment> segments;
};

struct WorstCaseBound {
  double n_star = 0.0;
  AnglePair best_angles{0.0, 0.0};
  double delta_a = 0.0;
  double delta_b = 0.0;
  int segments_solved = 0;
  double relaxed_s = 0.0;
  /// Solver lower bound at best_angles and relaxed_s, before corrections.
  double raw_value = 0.0;
  double eps_final = 0.0;
  double objective_correction = 0.0;
  /// Set when some level had fewer than lipschitz_grid feasible samples.
  bool lipschitz_undersampled = false;
  int rounds_used = 0;
  std::vector<LevelRecord> levels;
};

struct SegmentEvaluation {
  std::optional<double> value;  // empty when the score is unattainable
  double max_attainable = 0.0;
};

/// Value of the relaxed problem at one angle pair. `final_solve` asks for the
/// tight tolerance.
using SegmentEvaluator = std::function<SegmentEvaluation(const AnglePair&, double s, bool final_solve)>;

/// ceil((pi/2) / (2 eps0)) segments with centers at odd multiples of eps0.
/// When eps0 does not divide pi/2 evenly the last segment is clipped to end at
/// pi/2 and recentered on what remains.
std::vector<Segment> build_net(double eps0);

/// Splits a segment into `factor` equal children.
std::vector<Segment> refine_segment(const Segment& parent, int factor);

/// Largest central-difference slope over the samples, times 1.5.
/// Requires at least 3 samples with strictly increasing angles.
double estimate_lipschitz(const std::vector<std::pair<double, double>>& samples);

/// Delta = l * eps0.
double pessimistic_delta(double l, double eps0);

/// Refinement rounds from eps0 down to width_tol: ceil(log_f(eps0 / width_tol)).
int refinement_levels(const NetConfig& cfg);

/// Half-width reached after refinement_levels rounds.
double final_half_width(const NetConfig& cfg);

/// Evaluator backed by minimize(), returning certified lower bounds and
/// warm-starting from the nearest previously solved angle pair.
SegmentEvaluator solver_evaluator(const ObjectiveSpec& spec, const SolverConfig& cfg, double navigation_gap);

/// Every segment is solved at s - 2 eps_final. Throws DomainError for s <= 2,
/// InfeasibleError when no segment admits the relaxed score, and
/// NumericalError (naming the angles) when a segment solve fails.
WorstCaseBound optimize_angles(const ObjectiveSpec& spec, double s, const NetConfig& net_cfg,
                               const SolverConfig& solver_cfg);

WorstCaseBound optimize_angles(const ObjectiveSpec& spec, double s, const NetConfig& net_cfg,
                               const SegmentEvaluator& evaluate);

}  // namespace diqkd
