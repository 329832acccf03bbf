#include "diqkd/keyrate.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <sstream>
#include <thread>

namespace diqkd {
namespace {

ObjectiveSpec objective_for(const KeyRateParams& params, const PipelineConfig& cfg) {
  return cfg.objective == ObjectiveKind::trace_norm ? ObjectiveSpec::trace_norm(params.lambda(), 0.0)
                                                    : ObjectiveSpec::frobenius(params.lambda(), 0.0, cfg.mu);
}

void fill_rates(BoundRow& row, const KeyRateParams& params) {
  row.r_inf = secret_fraction(row.c_bar, params);
  row.k_inf = key_rate(row.r_inf, params);
}

BoundRow failed_row(double s, const KeyRateParams& params, const PipelineConfig& cfg, const char* status,
                    const std::string& detail) {
  BoundRow row;
  row.s = s;
  row.status = status;
  row.detail = detail;
  row.objective = cfg.objective;
  row.lambda = params.lambda();
  fill_rates(row, params);
  return row;
}

}  // namespace

void KeyRateParams::validate() const {
  if (!(p >= 0.0 && p <= 1.0)) throw ConfigError("KeyRateParams: p must lie in [0, 1]");
  if (!(qber0 >= 0.0 && qber0 <= 0.5) || !(qber1 >= 0.0 && qber1 <= 0.5)) {
    throw ConfigError("KeyRateParams: QBERs must lie in [0, 1/2]");
  }
}

BoundRow cstar_bound(double s, const KeyRateParams& params, const PipelineConfig& cfg) {
  params.validate();
  const ObjectiveSpec spec = objective_for(params, cfg);
  const WorstCaseBound b = optimize_angles(spec, s, cfg.net, cfg.solver);
  BoundRow row;
  row.s = s;
  row.phi_a = b.best_angles.phi_a();
  row.phi_b = b.best_angles.phi_b();
  row.n_star = b.n_star;
  row.delta_total = b.delta_a + b.delta_b + b.objective_correction;
  row.c_bar = std::max(0.0, pinsker_lift(b.n_star));
  row.objective = cfg.objective;
  row.lambda = params.lambda();
  row.eps_final = b.eps_final;
  row.relaxed_s = b.relaxed_s;
  row.delta_a = b.delta_a;
  row.delta_b = b.delta_b;
  row.objective_correction = b.objective_correction;
  row.segments_solved = b.segments_solved;
  if (b.lipschitz_undersampled) row.detail = "lipschitz estimate undersampled";
  fill_rates(row, params);
  return row;
}

ConvexityReport verify_convexity(const std::vector<BoundRow>& rows, double slack) {
  ConvexityReport report;
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].ok()) {
      idx.push_back(i);
    } else {
      ++report.rows_skipped;
    }
  }
  report.rows_checked = idx.size();
  if (idx.size() < 3) {
    report.passed = false;
    report.notes.push_back("fewer than 3 rows with status ok");
    return report;
  }
  for (std::size_t k = 1; k < idx.size(); ++k) {
    if (!(rows[idx[k]].s > rows[idx[k - 1]].s)) {
      report.passed = false;
      report.notes.push_back("rows are not strictly increasing in s");
      return report;
    }
  }
  for (std::size_t k = 0; k + 1 < idx.size(); ++k) {
    const BoundRow& a = rows[idx[k]];
    const BoundRow& b = rows[idx[k + 1]];
    const double drop = a.c_bar - b.c_bar;
    if (drop > slack) {
      report.violations.push_back({ConvexityViolation::Kind::monotone, idx[k], a.s, b.s, b.s, drop - slack});
    }
  }
  for (std::size_t k = 0; k + 2 < idx.size(); ++k) {
    const BoundRow& a = rows[idx[k]];
    const BoundRow& m = rows[idx[k + 1]];
    const BoundRow& b = rows[idx[k + 2]];
    // Chord value at the middle abscissa; for an even grid this is the
    // midpoint average.
    const double t = (m.s - a.s) / (b.s - a.s);
    const double chord = (1.0 - t) * a.c_bar + t * b.c_bar;
    const double excess = m.c_bar - chord;
    if (excess > slack) {
      report.violations.push_back({ConvexityViolation::Kind::midpoint, idx[k], a.s, m.s, b.s, excess - slack});
    }
  }
  report.passed = report.violations.empty();
  return report;
}

double secret_fraction(double c_bar, const KeyRateParams& params) {
  params.validate();
  const double lam = params.lambda();
  return c_bar - lam * binary_entropy(params.qber0) - (1.0 - lam) * binary_entropy(params.qber1);
}

double key_rate(double r_inf, const KeyRateParams& params) {
  params.validate();
  return params.p_s() * r_inf;
}

std::vector<double> score_grid(double s_min, double s_max, int steps) {
  if (steps < 1) throw ConfigError("score_grid: steps must be >= 1");
  if (!(s_min <= s_max)) throw ConfigError("score_grid: s_min must not exceed s_max");
  std::vector<double> grid;
  grid.reserve(static_cast<std::size_t>(steps));
  if (steps == 1) {
    grid.push_back(s_min);
    return grid;
  }
  for (int i = 0; i < steps; ++i) {
    grid.push_back((s_min * (steps - 1 - i) + s_max * i) / (steps - 1));
  }
  return grid;
}

std::vector<BoundRow> sweep(const std::vector<double>& s_grid, const KeyRateParams& params,
                            const PipelineConfig& cfg) {
  params.validate();
  cfg.net.validate();
  cfg.solver.validate();
  std::vector<BoundRow> rows(s_grid.size());
  auto work = [&](std::size_t i) {
    const double s = s_grid[i];
    try {
      rows[i] = cstar_bound(s, params, cfg);
    } catch (const InfeasibleError& e) {
      rows[i] = failed_row(s, params, cfg, kStatusInfeasible, e.what());
    } catch (const DomainError& e) {
      rows[i] = failed_row(s, params, cfg, kStatusInfeasible, e.what());
    } catch (const NumericalError& e) {
      rows[i] = failed_row(s, params, cfg, kStatusNumerical, e.what());
    }
  };
  unsigned threads = cfg.threads > 0 ? static_cast<unsigned>(cfg.threads) : std::thread::hardware_concurrency();
  threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(s_grid.size())));
  if (threads <= 1) {
    for (std::size_t i = 0; i < s_grid.size(); ++i) work(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < threads; ++t) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < s_grid.size(); i = next++) work(i);
      });
    }
    for (std::thread& th : pool) th.join();
  }
  std::stable_sort(rows.begin(), rows.end(), [](const BoundRow& a, const BoundRow& b) { return a.s < b.s; });
  return rows;
}

}  // namespace diqkd
