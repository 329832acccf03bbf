#pragma once

// Command-line front end: bound, sweep, keyrate, verify, export-sdp.

#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "diqkd/epsnet.hpp"
#include "diqkd/keyrate.hpp"

namespace diqkd::cli {

enum class Command { bound, sweep, keyrate, verify, export_sdp };
enum class Format { csv, json };

inline constexpr int kExitOk = 0;
inline constexpr int kExitInfeasible = 2;
inline constexpr int kExitConfig = 3;
inline constexpr int kExitVerify = 4;
inline constexpr int kExitIo = 5;

inline constexpr const char* kCsvHeader = "s,phi_a,phi_b,n_star,delta_total,c_bar,r_inf,k_inf,status";

struct RunConfig {
  Command command = Command::sweep;
  double s = 2.5;  // bound and export-sdp
  double s_min = 2.05;
  double s_max = kTsirelson;
  int steps = 16;
  double p = 0.5;
  double qber0 = 0.0;
  double qber1 = 0.0;
  double eps0 = NetConfig{}.eps0;
  double width_tol = NetConfig{}.width_tol;
  NetOrder order = NetOrder::alice_first;
  double mu = kDefaultMu;
  ObjectiveKind objective = ObjectiveKind::trace_norm;
  double phi_a = kHalfPi;  // export-sdp
  double phi_b = kHalfPi;  // export-sdp
  int max_iters = SolverConfig{}.max_iters;
  double grad_tol = SolverConfig{}.grad_tol;
  std::uint64_t seed = 0;
  std::string output_path;  // empty writes to stdout
  Format format = Format::csv;
  bool timestamp = false;
  /// Worker cap for sweeps, 0 = hardware concurrency. Taken from DIQKD_THREADS.
  int threads = 0;

  /// Throws ConfigError when an invariant of the selected command fails.
  void validate() const;
  PipelineConfig pipeline() const;
  KeyRateParams params() const;
};

const char* to_string(Command c);
const char* to_string(Format f);

/// Header line plus one line per row; floats in shortest round-trip form.
std::string to_csv(const std::vector<BoundRow>& rows);

/// {"meta": {...}, "rows": [...]}, pretty-printed with a trailing newline.
std::string to_json(const std::vector<BoundRow>& rows, const RunConfig& cfg);

/// Inverse of to_json for the row array. Throws ConfigError on schema errors.
std::vector<BoundRow> rows_from_json(std::string_view text);

/// Inverse of to_csv for the nine CSV columns. Throws ConfigError.
std::vector<BoundRow> rows_from_csv(std::string_view text);

std::string serialize(const std::vector<BoundRow>& rows, const RunConfig& cfg);

/// Reads DIQKD_THREADS; unset gives 0. Throws ConfigError on a malformed value.
int threads_from_env();

/// Executes a validated config. Diagnostics go to `err`; results go to
/// cfg.output_path or, when that is empty, to `out`.
int run(const RunConfig& cfg, std::ostream& out, std::ostream& err);

/// Parses argv and runs. Returns the process exit code.
int main_entry(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace diqkd::cli
