#include "diqkd/epsnet.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <memory>
#include <sstream>

#include "diqkd/io.hpp"

namespace diqkd {
namespace {

constexpr double kLipschitzSafety = 1.5;
constexpr double kAngleSlack = 1e-12;
constexpr std::size_t kWarmCacheSize = 64;

struct PhaseResult {
  double center = 0.0;
  std::optional<double> value;
  double lipschitz = 0.0;
  double delta = 0.0;
  double max_attainable = -std::numeric_limits<double>::infinity();
};

class Search {
 public:
  Search(const ObjectiveSpec& spec, double s, const NetConfig& cfg, const SegmentEvaluator& evaluate)
      : spec_(spec), cfg_(cfg), evaluate_(evaluate) {
    out_.eps_final = final_half_width(cfg);
    out_.relaxed_s = s - 2.0 * out_.eps_final;
  }

  WorstCaseBound run() {
    const Party first = cfg_.order == NetOrder::alice_first ? Party::alice : Party::bob;
    const Party second = first == Party::alice ? Party::bob : Party::alice;
    std::vector<double> coarse_centers;
    for (const Segment& seg : build_net(cfg_.eps0)) coarse_centers.push_back(seg.center);

    std::optional<std::pair<double, double>> previous;
    double max_attainable = -std::numeric_limits<double>::infinity();
    PhaseResult p_res;
    PhaseResult q_res;
    for (int round = 1; round <= cfg_.rounds; ++round) {
      const std::vector<double> others = round == 1 ? coarse_centers : std::vector<double>{q_res.center};
      p_res = phase(first, round, others);
      q_res = phase(second, round, {p_res.center});
      max_attainable = std::max({max_attainable, p_res.max_attainable, q_res.max_attainable});
      out_.rounds_used = round;
      const std::pair<double, double> now{p_res.center, q_res.center};
      if (previous && *previous == now) break;
      previous = now;
    }

    const PhaseResult& a_res = first == Party::alice ? p_res : q_res;
    const PhaseResult& b_res = first == Party::alice ? q_res : p_res;
    out_.best_angles = AnglePair::clipped(a_res.center, b_res.center);
    out_.delta_a = a_res.delta;
    out_.delta_b = b_res.delta;
    const SegmentEvaluation final_eval = solve(out_.best_angles, true);
    if (!final_eval.value) {
      std::ostringstream os;
      os << "optimize_angles: relaxed score " << out_.relaxed_s
         << " is not attainable at any segment center; largest attainable score seen "
         << std::max(max_attainable, final_eval.max_attainable);
      throw InfeasibleError(os.str(), std::max(max_attainable, final_eval.max_attainable));
    }
    out_.raw_value = *final_eval.value;
    out_.objective_correction = 2.0 * (1.0 - spec_.lambda) * out_.eps_final;
    out_.n_star = std::max(0.0, out_.raw_value - out_.delta_a - out_.delta_b - out_.objective_correction);
    return out_;
  }

 private:
  SegmentEvaluation solve(const AnglePair& angles, bool final_solve) {
    SegmentEvaluation e;
    try {
      e = evaluate_(angles, out_.relaxed_s, final_solve);
    } catch (const NumericalError& err) {
      std::ostringstream os;
      os << "segment solve at (phi_a=" << angles.phi_a() << ", phi_b=" << angles.phi_b() << ") failed: " << err.what();
      throw NumericalError(os.str(), err.residual());
    }
    if (e.value) ++out_.segments_solved;
    return e;
  }

  PhaseResult phase(Party party, int round, const std::vector<double>& others) {
    PhaseResult res;
    std::vector<Segment> segments = build_net(cfg_.eps0);
    std::optional<double> last_lipschitz;
    for (int level = 0;; ++level) {
      std::vector<std::pair<double, double>> samples;
      std::optional<std::size_t> best;
      std::optional<std::size_t> closest;  // highest attainable score when nothing is feasible
      std::vector<double> attainable(segments.size(), -std::numeric_limits<double>::infinity());
      for (std::size_t i = 0; i < segments.size(); ++i) {
        Segment& seg = segments[i];
        for (double other : others) {
          const AnglePair angles = party == Party::alice ? AnglePair::clipped(seg.center, other)
                                                         : AnglePair::clipped(other, seg.center);
          const SegmentEvaluation e = solve(angles, false);
          attainable[i] = std::max(attainable[i], e.max_attainable);
          if (e.value && (!seg.value || *e.value < *seg.value)) seg.value = e.value;
        }
        res.max_attainable = std::max(res.max_attainable, attainable[i]);
        if (seg.value) {
          samples.emplace_back(seg.center, *seg.value);
          if (!best || *seg.value < *segments[*best].value) best = i;
        }
        if (!closest || attainable[i] > attainable[*closest]) closest = i;
      }

      double lipschitz = 0.0;
      if (static_cast<int>(samples.size()) >= cfg_.lipschitz_grid) {
        lipschitz = estimate_lipschitz(samples);
      } else if (last_lipschitz) {
        lipschitz = *last_lipschitz;
      } else {
        out_.lipschitz_undersampled = true;
      }
      last_lipschitz = lipschitz;
      const double half_width = segments.front().half_width;
      const double delta = pessimistic_delta(lipschitz, half_width);
      for (Segment& seg : segments) {
        if (seg.value) seg.delta = delta;
      }

      const std::size_t chosen = best ? *best : *closest;
      LevelRecord rec;
      rec.party = party;
      rec.round = round;
      rec.level = level;
      rec.half_width = half_width;
      rec.lipschitz = lipschitz;
      rec.delta = delta;
      rec.best_center = segments[chosen].center;
      rec.best_value = segments[chosen].value;
      rec.feasible = static_cast<int>(samples.size());
      rec.segments = segments;
      out_.levels.push_back(std::move(rec));

      res.center = segments[chosen].center;
      res.value = segments[chosen].value;
      res.lipschitz = lipschitz;
      res.delta = delta;
      if (half_width <= cfg_.width_tol * (1.0 + 1e-12)) return res;
      // A unimodal profile has its minimizer between the neighbouring centers,
      // so the neighbours are refined together with the winner.
      std::vector<Segment> next;
      const std::size_t first = chosen == 0 ? 0 : chosen - 1;
      const std::size_t last = std::min(segments.size() - 1, chosen + 1);
      for (std::size_t i = first; i <= last; ++i) {
        for (Segment& child : refine_segment(segments[i], cfg_.refine_factor)) next.push_back(child);
      }
      segments = std::move(next);
    }
  }

  ObjectiveSpec spec_;
  NetConfig cfg_;
  const SegmentEvaluator& evaluate_;
  WorstCaseBound out_;
};

}  // namespace

const char* to_string(NetOrder order) { return order == NetOrder::alice_first ? "alice_first" : "bob_first"; }
const char* to_string(Party party) { return party == Party::alice ? "alice" : "bob"; }

void NetConfig::validate() const {
  if (!(eps0 > 0.0 && eps0 <= std::numbers::pi / 4.0 + kAngleSlack)) {
    throw ConfigError("NetConfig: eps0 must lie in (0, pi/4]");
  }
  if (!(width_tol > 0.0 && width_tol < eps0)) throw ConfigError("NetConfig: need eps0 > width_tol > 0");
  if (refine_factor < 2) throw ConfigError("NetConfig: refine_factor must be >= 2");
  if (lipschitz_grid < 3) throw ConfigError("NetConfig: lipschitz_grid must be >= 3");
  if (rounds < 1) throw ConfigError("NetConfig: rounds must be >= 1");
  if (!(navigation_gap > 0.0)) throw ConfigError("NetConfig: navigation_gap must be > 0");
}

std::vector<Segment> build_net(double eps0) {
  if (!(eps0 > 0.0 && eps0 <= std::numbers::pi / 4.0 + kAngleSlack)) {
    throw ConfigError("build_net: eps0 must lie in (0, pi/4]");
  }
  const double span = kHalfPi;
  const auto count = static_cast<std::size_t>(std::ceil(span / (2.0 * eps0) - 1e-9));
  std::vector<Segment> net;
  net.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    Segment seg;
    seg.center = (2.0 * static_cast<double>(i) + 1.0) * eps0;
    seg.half_width = eps0;
    if (seg.center + eps0 > span + 1e-12) {
      const double lo = seg.center - eps0;
      seg.center = 0.5 * (lo + span);
      seg.half_width = 0.5 * (span - lo);
    }
    net.push_back(seg);
  }
  return net;
}

std::vector<Segment> refine_segment(const Segment& parent, int factor) {
  if (factor < 2) throw ConfigError("refine_segment: factor must be >= 2");
  const double child = parent.half_width / factor;
  const double lo = parent.center - parent.half_width;
  std::vector<Segment> out;
  out.reserve(static_cast<std::size_t>(factor));
  for (int j = 0; j < factor; ++j) {
    Segment seg;
    seg.center = lo + (2.0 * j + 1.0) * child;
    seg.half_width = child;
    out.push_back(seg);
  }
  return out;
}

double estimate_lipschitz(const std::vector<std::pair<double, double>>& samples) {
  if (samples.size() < 3) throw ConfigError("estimate_lipschitz: at least 3 samples are required");
  for (std::size_t i = 1; i < samples.size(); ++i) {
    if (!(samples[i].first > samples[i - 1].first)) {
      throw ConfigError("estimate_lipschitz: sample angles must be strictly increasing");
    }
  }
  double slope = 0.0;
  for (std::size_t i = 1; i + 1 < samples.size(); ++i) {
    const double d = (samples[i + 1].second - samples[i - 1].second) / (samples[i + 1].first - samples[i - 1].first);
    slope = std::max(slope, std::abs(d));
  }
  return kLipschitzSafety * slope;
}

double pessimistic_delta(double l, double eps0) {
  if (!(l >= 0.0)) throw DomainError("pessimistic_delta: Lipschitz constant must be >= 0");
  if (!(eps0 > 0.0)) throw DomainError("pessimistic_delta: eps0 must be > 0");
  return l * eps0;
}

int refinement_levels(const NetConfig& cfg) {
  cfg.validate();
  int k = 0;
  double hw = cfg.eps0;
  while (hw > cfg.width_tol * (1.0 + 1e-12)) {
    hw /= cfg.refine_factor;
    ++k;
  }
  return k;
}

double final_half_width(const NetConfig& cfg) {
  return cfg.eps0 / std::pow(static_cast<double>(cfg.refine_factor), refinement_levels(cfg));
}

SegmentEvaluator solver_evaluator(const ObjectiveSpec& spec, const SolverConfig& cfg, double navigation_gap) {
  struct Cached {
    AnglePair angles;
    WarmStart warm;
  };
  auto cache = std::make_shared<std::deque<Cached>>();
  SolverConfig nav = cfg;
  nav.grad_tol = std::max(cfg.grad_tol, navigation_gap);
  return [spec, cfg, nav, cache](const AnglePair& angles, double s, bool final_solve) {
    SegmentEvaluation e;
    e.max_attainable = max_violation(angles);
    if (s > e.max_attainable + cfg.feas_tol) return e;
    WarmStart warm;
    double nearest = std::numeric_limits<double>::infinity();
    for (const Cached& c : *cache) {
      const double d = std::abs(c.angles.phi_a() - angles.phi_a()) + std::abs(c.angles.phi_b() - angles.phi_b());
      if (d < nearest) {
        nearest = d;
        warm = c.warm;
      }
    }
    const OptResult r = minimize(spec, angles, s, final_solve ? cfg : nav, &warm);
    if (r.status == SolveStatus::infeasible) return e;
    // The regularizer never contributes to the reported bound.
    e.value = spec.kind == ObjectiveKind::frobenius
                  ? r.lower_bound - 0.5 * spec.mu * r.minimizer->matrix().squaredNorm()
                  : r.lower_bound;
    cache->push_back({angles, std::move(warm)});
    if (cache->size() > kWarmCacheSize) cache->pop_front();
    return e;
  };
}

WorstCaseBound optimize_angles(const ObjectiveSpec& spec, double s, const NetConfig& net_cfg,
                               const SegmentEvaluator& evaluate) {
  net_cfg.validate();
  spec.validate();
  if (!std::isfinite(s) || s <= 2.0) throw DomainError("optimize_angles: score must exceed the classical bound 2");
  if (s > kTsirelson + 1e-12) {
    std::ostringstream os;
    os << "optimize_angles: score " << format_double(s) << " exceeds the maximum attainable score "
       << format_double(kTsirelson);
    throw InfeasibleError(os.str(), kTsirelson);
  }
  Search search(spec, s, net_cfg, evaluate);
  return search.run();
}

WorstCaseBound optimize_angles(const ObjectiveSpec& spec, double s, const NetConfig& net_cfg,
                               const SolverConfig& solver_cfg) {
  solver_cfg.validate();
  net_cfg.validate();
  return optimize_angles(spec, s, net_cfg, solver_evaluator(spec, solver_cfg, net_cfg.navigation_gap));
}

}  // namespace diqkd
