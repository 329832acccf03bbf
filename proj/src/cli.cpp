#include "diqkd/cli.hpp"

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <ctime>
#include <iostream>
#include <map>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "diqkd/checks.hpp"
#include "diqkd/io.hpp"
#include "diqkd/sampling.hpp"
#include "diqkd/sdp.hpp"

namespace diqkd::cli {
namespace {

using nlohmann::json;

constexpr const char* kVersion = "0.1.0";

const std::map<std::string, ObjectiveKind> kObjectives{{"trace", ObjectiveKind::trace_norm},
                                                       {"frobenius", ObjectiveKind::frobenius}};
const std::map<std::string, Format> kFormats{{"csv", Format::csv}, {"json", Format::json}};
const std::map<std::string, NetOrder> kOrders{{"alice_first", NetOrder::alice_first},
                                              {"bob_first", NetOrder::bob_first}};

bool is_table(Command c) { return c == Command::sweep || c == Command::keyrate; }

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

json row_to_json(const BoundRow& r) {
  return json{{"s", r.s},
              {"phi_a", r.phi_a},
              {"phi_b", r.phi_b},
              {"n_star", r.n_star},
              {"delta_total", r.delta_total},
              {"c_bar", r.c_bar},
              {"r_inf", r.r_inf},
              {"k_inf", r.k_inf},
              {"status", r.status},
              {"objective", to_string(r.objective)},
              {"grade", r.grade()},
              {"lambda", r.lambda},
              {"eps_final", r.eps_final},
              {"relaxed_s", r.relaxed_s},
              {"delta_a", r.delta_a},
              {"delta_b", r.delta_b},
              {"objective_correction", r.objective_correction},
              {"segments_solved", r.segments_solved},
              {"detail", r.detail}};
}

template <typename T>
T field(const json& j, const char* key) {
  if (!j.contains(key)) throw ConfigError(std::string("rows: missing field '") + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("rows: bad field '") + key + "': " + e.what());
  }
}

json config_echo(const RunConfig& c) {
  json j{{"command", to_string(c.command)},
         {"p", c.p},
         {"qber0", c.qber0},
         {"qber1", c.qber1},
         {"eps0", c.eps0},
         {"width_tol", c.width_tol},
         {"order", to_string(c.order)},
         {"objective", to_string(c.objective)},
         {"mu", c.mu},
         {"max_iters", c.max_iters},
         {"grad_tol", c.grad_tol},
         {"seed", c.seed},
         {"format", to_string(c.format)}};
  if (is_table(c.command)) {
    j["s_min"] = c.s_min;
    j["s_max"] = c.s_max;
    j["steps"] = c.steps;
  } else {
    j["s"] = c.s;
  }
  return j;
}

void emit(const RunConfig& cfg, const std::string& text, std::ostream& out) {
  if (cfg.output_path.empty()) {
    out << text;
    out.flush();
  } else {
    write_file_atomic(cfg.output_path, text);
  }
}

int run_bound(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  BoundRow row;
  try {
    row = cstar_bound(cfg.s, cfg.params(), cfg.pipeline());
  } catch (const InfeasibleError& e) {
    err << "diqkd bound: infeasible: " << e.what() << "\n";
    return kExitInfeasible;
  }
  emit(cfg, serialize({row}, cfg), out);
  return kExitOk;
}

int run_table(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  const std::vector<BoundRow> rows = sweep(score_grid(cfg.s_min, cfg.s_max, cfg.steps), cfg.params(), cfg.pipeline());
  int failed = 0, negative = 0;
  for (const BoundRow& r : rows) {
    if (!r.ok()) {
      ++failed;
      err << "diqkd " << to_string(cfg.command) << ": s=" << format_double(r.s) << " " << r.status << ": "
          << r.detail << "\n";
    } else if (r.r_inf <= 0.0) {
      ++negative;
    }
  }
  if (cfg.command == Command::keyrate && negative > 0) {
    err << "diqkd keyrate: " << negative << " of " << rows.size()
        << " rows have r_inf <= 0 (no key at those scores)\n";
  }
  emit(cfg, serialize(rows, cfg), out);
  return failed == static_cast<int>(rows.size()) ? kExitInfeasible : kExitOk;
}

int run_verify(const RunConfig& cfg, std::ostream& out) {
  std::vector<CheckResult> results = run_module_suites(cfg.seed);

  // Serialization round trip on synthetic rows.
  CheckResult io;
  io.name = "serialization";
  Rng rng(cfg.seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<BoundRow> rows(5);
  for (BoundRow& r : rows) {
    r.s = 2.0 + u(rng);
    r.phi_a = u(rng);
    r.phi_b = u(rng);
    r.n_star = u(rng);
    r.c_bar = pinsker_lift(r.n_star);
    r.r_inf = r.c_bar - u(rng);
    r.k_inf = 0.5 * r.r_inf;
  }
  io.samples = static_cast<int>(rows.size());
  const auto same = [](const std::vector<BoundRow>& a, const std::vector<BoundRow>& b) {
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i) {
      if (a[i].s != b[i].s || a[i].phi_a != b[i].phi_a || a[i].phi_b != b[i].phi_b || a[i].n_star != b[i].n_star ||
          a[i].c_bar != b[i].c_bar || a[i].r_inf != b[i].r_inf || a[i].k_inf != b[i].k_inf ||
          a[i].status != b[i].status)
        return false;
    }
    return true;
  };
  if (!same(rows, rows_from_csv(to_csv(rows)))) ++io.violations;
  if (!same(rows, rows_from_json(to_json(rows, cfg)))) ++io.violations;
  io.passed = io.violations == 0;
  results.push_back(io);

  std::ostringstream os;
  int failed = 0;
  for (const CheckResult& r : results) {
    os << format_check(r) << "\n";
    if (!r.passed) ++failed;
  }
  os << "summary: " << results.size() - failed << " passed, " << failed << " failed, seed " << cfg.seed << "\n";
  emit(cfg, os.str(), out);
  return failed == 0 ? kExitOk : kExitVerify;
}

int run_export(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  const KeyRateParams params = cfg.params();
  const ObjectiveSpec spec = cfg.objective == ObjectiveKind::trace_norm
                                 ? ObjectiveSpec::trace_norm(params.lambda(), cfg.phi_a)
                                 : ObjectiveSpec::frobenius(params.lambda(), cfg.phi_a, cfg.mu);
  const AnglePair angles(cfg.phi_a, cfg.phi_b);
  const double top = max_violation(angles);
  if (cfg.s > top + 1e-12) {
    err << "diqkd export-sdp: score " << format_double(cfg.s) << " exceeds the maximum attainable score "
        << format_double(top) << " at these angles\n";
    return kExitInfeasible;
  }
  emit(cfg, format_sdp(export_sdp_standard_form(spec, angles, cfg.s)), out);
  return kExitOk;
}

}  // namespace

const char* to_string(Command c) {
  switch (c) {
    case Command::bound: return "bound";
    case Command::sweep: return "sweep";
    case Command::keyrate: return "keyrate";
    case Command::verify: return "verify";
    case Command::export_sdp: return "export-sdp";
  }
  return "?";
}

const char* to_string(Format f) { return f == Format::csv ? "csv" : "json"; }

void RunConfig::validate() const {
  params().validate();
  if (is_table(command)) {
    if (!(s_min > 2.0 && s_min <= s_max && s_max <= kTsirelson)) {
      throw ConfigError("scores must satisfy 2 < s-min <= s-max <= 2 sqrt 2");
    }
    if (steps < 1) throw ConfigError("steps must be >= 1");
  }
  if (command == Command::bound && !(s > 2.0)) throw ConfigError("bound: s must exceed the classical bound 2");
  if (command == Command::export_sdp) {
    AnglePair(phi_a, phi_b);
    if (!std::isfinite(s)) throw ConfigError("export-sdp: s must be finite");
  }
  if (threads < 0) throw ConfigError("thread count must be >= 0");
  pipeline().net.validate();
  pipeline().solver.validate();
  if (objective == ObjectiveKind::frobenius && !(mu > 0.0)) throw ConfigError("frobenius objective needs mu > 0");
}

PipelineConfig RunConfig::pipeline() const {
  PipelineConfig pc;
  pc.objective = objective;
  pc.mu = mu;
  pc.net.eps0 = eps0;
  pc.net.width_tol = width_tol;
  pc.net.order = order;
  pc.solver.max_iters = max_iters;
  pc.solver.grad_tol = grad_tol;
  pc.solver.seed = seed;
  pc.threads = threads;
  return pc;
}

KeyRateParams RunConfig::params() const { return KeyRateParams{p, qber0, qber1}; }

std::string to_csv(const std::vector<BoundRow>& rows) {
  std::string out = std::string(kCsvHeader) + "\n";
  for (const BoundRow& r : rows) {
    for (double x : {r.s, r.phi_a, r.phi_b, r.n_star, r.delta_total, r.c_bar, r.r_inf, r.k_inf}) {
      out += format_double(x);
      out += ',';
    }
    out += r.status;
    out += '\n';
  }
  return out;
}

std::string to_json(const std::vector<BoundRow>& rows, const RunConfig& cfg) {
  json meta{{"version", kVersion}, {"seed", cfg.seed}, {"config", config_echo(cfg)}};
  if (cfg.timestamp) meta["timestamp"] = utc_timestamp();
  json arr = json::array();
  for (const BoundRow& r : rows) arr.push_back(row_to_json(r));
  return json{{"meta", meta}, {"rows", arr}}.dump(2) + "\n";
}

std::vector<BoundRow> rows_from_json(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("rows: invalid JSON: ") + e.what());
  }
  if (!doc.is_object() || !doc.contains("rows") || !doc.at("rows").is_array()) {
    throw ConfigError("rows: expected an object with a 'rows' array");
  }
  std::vector<BoundRow> rows;
  for (const json& j : doc.at("rows")) {
    BoundRow r;
    r.s = field<double>(j, "s");
    r.phi_a = field<double>(j, "phi_a");
    r.phi_b = field<double>(j, "phi_b");
    r.n_star = field<double>(j, "n_star");
    r.delta_total = field<double>(j, "delta_total");
    r.c_bar = field<double>(j, "c_bar");
    r.r_inf = field<double>(j, "r_inf");
    r.k_inf = field<double>(j, "k_inf");
    r.status = field<std::string>(j, "status");
    r.objective = parse_objective_kind(field<std::string>(j, "objective"));
    r.lambda = field<double>(j, "lambda");
    r.eps_final = field<double>(j, "eps_final");
    r.relaxed_s = field<double>(j, "relaxed_s");
    r.delta_a = field<double>(j, "delta_a");
    r.delta_b = field<double>(j, "delta_b");
    r.objective_correction = field<double>(j, "objective_correction");
    r.segments_solved = field<int>(j, "segments_solved");
    r.detail = field<std::string>(j, "detail");
    rows.push_back(std::move(r));
  }
  return rows;
}

std::vector<BoundRow> rows_from_csv(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string line;
  if (!std::getline(in, line) || line != kCsvHeader) throw ConfigError("rows: CSV header mismatch");
  std::vector<BoundRow> rows;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (cells.size() != 9) throw ConfigError("rows: line " + std::to_string(lineno) + " has wrong column count");
    BoundRow r;
    double* targets[] = {&r.s, &r.phi_a, &r.phi_b, &r.n_star, &r.delta_total, &r.c_bar, &r.r_inf, &r.k_inf};
    for (int k = 0; k < 8; ++k) *targets[k] = parse_double(cells[k]);
    r.status = cells[8];
    rows.push_back(std::move(r));
  }
  return rows;
}

std::string serialize(const std::vector<BoundRow>& rows, const RunConfig& cfg) {
  if (rows.empty()) throw ConfigError("serialize: no rows");
  return cfg.format == Format::csv ? to_csv(rows) : to_json(rows, cfg);
}

int threads_from_env() {
  const char* v = std::getenv("DIQKD_THREADS");
  if (v == nullptr || *v == '\0') return 0;
  try {
    std::size_t used = 0;
    const int n = std::stoi(v, &used);
    if (used != std::string_view(v).size() || n < 0) throw std::invalid_argument(v);
    return n;
  } catch (const std::exception&) {
    throw ConfigError(std::string("DIQKD_THREADS must be a nonnegative integer, got '") + v + "'");
  }
}

int run(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  try {
    cfg.validate();
    switch (cfg.command) {
      case Command::bound: return run_bound(cfg, out, err);
      case Command::sweep:
      case Command::keyrate: return run_table(cfg, out, err);
      case Command::verify: return run_verify(cfg, out);
      case Command::export_sdp: return run_export(cfg, out, err);
    }
  } catch (const IoError& e) {
    err << "diqkd: I/O error: " << e.what() << "\n";
    return kExitIo;
  } catch (const InfeasibleError& e) {
    err << "diqkd: infeasible: " << e.what() << "\n";
    return kExitInfeasible;
  } catch (const ConfigError& e) {
    err << "diqkd: invalid configuration: " << e.what() << "\n";
    return kExitConfig;
  } catch (const DomainError& e) {
    err << "diqkd: invalid configuration: " << e.what() << "\n";
    return kExitConfig;
  } catch (const Error& e) {
    err << "diqkd: error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}

int main_entry(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  RunConfig cfg;
  CLI::App app{"Certified DIQKD entropy bounds and key rates"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);

  auto common = [&](CLI::App* sub) {
    sub->add_option("--p", cfg.p, "Alice's key-basis probability");
    sub->add_option("--qber0", cfg.qber0, "QBER of the first key basis");
    sub->add_option("--qber1", cfg.qber1, "QBER of the second key basis");
    sub->add_option("--objective", cfg.objective, "trace or frobenius")
        ->transform(CLI::CheckedTransformer(kObjectives, CLI::ignore_case));
    sub->add_option("--mu", cfg.mu, "Frobenius regularization weight");
    sub->add_option("--seed", cfg.seed, "Random seed");
    sub->add_option("-o,--output", cfg.output_path, "Output file (written atomically); stdout if omitted");
  };
  auto net = [&](CLI::App* sub) {
    sub->add_option("--eps0", cfg.eps0, "Initial net half-width in radians");
    sub->add_option("--width-tol", cfg.width_tol, "Stop refining below this half-width");
    sub->add_option("--order", cfg.order, "alice_first or bob_first")
        ->transform(CLI::CheckedTransformer(kOrders, CLI::ignore_case));
    sub->add_option("--max-iters", cfg.max_iters, "Solver iteration budget");
    sub->add_option("--grad-tol", cfg.grad_tol, "Solver optimality tolerance");
    sub->add_option("--format", cfg.format, "csv or json")
        ->transform(CLI::CheckedTransformer(kFormats, CLI::ignore_case));
    sub->add_flag("--timestamp", cfg.timestamp, "Add meta.timestamp to JSON output");
  };

  CLI::App* bound = app.add_subcommand("bound", "Bound at one CHSH score");
  common(bound);
  net(bound);
  bound->add_option("--s", cfg.s, "CHSH score")->required();

  CLI::App* sweep_cmd = app.add_subcommand("sweep", "Bound table over a score grid");
  CLI::App* keyrate = app.add_subcommand("keyrate", "Key-rate table over a score grid");
  for (CLI::App* sub : {sweep_cmd, keyrate}) {
    common(sub);
    net(sub);
    sub->add_option("--s-min", cfg.s_min, "Smallest score");
    sub->add_option("--s-max", cfg.s_max, "Largest score");
    sub->add_option("--steps", cfg.steps, "Number of grid points");
  }

  CLI::App* verify = app.add_subcommand("verify", "Run the invariant suites");
  verify->add_option("--seed", cfg.seed, "Random seed");
  verify->add_option("-o,--output", cfg.output_path, "Output file; stdout if omitted");

  CLI::App* exp = app.add_subcommand("export-sdp", "Write the standard-form SDP at one angle pair");
  common(exp);
  exp->add_option("--s", cfg.s, "CHSH score")->required();
  exp->add_option("--phi-a", cfg.phi_a, "Alice's angle");
  exp->add_option("--phi-b", cfg.phi_b, "Bob's angle");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? kExitOk : kExitConfig;
  }

  if (bound->parsed()) cfg.command = Command::bound;
  if (sweep_cmd->parsed()) cfg.command = Command::sweep;
  if (keyrate->parsed()) cfg.command = Command::keyrate;
  if (verify->parsed()) cfg.command = Command::verify;
  if (exp->parsed()) cfg.command = Command::export_sdp;
  try {
    cfg.threads = threads_from_env();
  } catch (const ConfigError& e) {
    err << "diqkd: invalid configuration: " << e.what() << "\n";
    return kExitConfig;
  }
  return run(cfg, out, err);
}

}  // namespace diqkd::cli
