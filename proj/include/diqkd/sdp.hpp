#pragma once

// Standard-form SDP data for one (objective, angles, score) instance, for
// cross-checking the first-order solver against an external SDP solver.
//
// Decision vector x is real. rho = sum_k x_k B_k over a real basis of 4x4
// Hermitian matrices (variables 0..15); further variables are the epigraph
// scalars t_k (frobenius) or the blocks P0, Q0, P1, Q1 (trace norm).
//
//   minimize   c . x
//   subject to F0 + sum_i x_i F_i  >= 0   for every block
//              a . x = rhs                for every equality
//
// The text layout is documented in docs/sdp_format.md.

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "diqkd/chsh.hpp"
#include "diqkd/objective.hpp"

namespace diqkd {

struct SdpEntry {
  int row = 0;
  int col = 0;
  double re = 0.0;
  double im = 0.0;
  friend bool operator==(const SdpEntry&, const SdpEntry&) = default;
};

/// One coefficient matrix of a block; var = -1 marks the constant F0.
struct SdpTerm {
  int var = -1;
  std::vector<SdpEntry> entries;
  friend bool operator==(const SdpTerm&, const SdpTerm&) = default;
};

struct SdpBlock {
  std::string label;
  int size = 0;
  std::vector<SdpTerm> terms;
  friend bool operator==(const SdpBlock&, const SdpBlock&) = default;
};

struct SdpCoefficient {
  int var = 0;
  double value = 0.0;
  friend bool operator==(const SdpCoefficient&, const SdpCoefficient&) = default;
};

struct SdpEquality {
  std::string label;
  double rhs = 0.0;
  std::vector<SdpCoefficient> coefficients;
  friend bool operator==(const SdpEquality&, const SdpEquality&) = default;
};

struct SdpProblem {
  ObjectiveKind kind = ObjectiveKind::frobenius;
  double lambda = 0.0;
  double mu = 0.0;
  double phi_a = 0.0;
  double phi_b = 0.0;
  double s = 0.0;
  int dim = 4;
  std::vector<std::string> variables;
  std::vector<SdpCoefficient> objective;
  std::vector<SdpBlock> blocks;
  std::vector<SdpEquality> equalities;
  friend bool operator==(const SdpProblem&, const SdpProblem&) = default;
};

inline constexpr int kStateVariables = 16;

/// The k-th real basis matrix of 4x4 Hermitian matrices (k in [0, 16)).
Mat4 hermitian_basis(int k);

SdpProblem export_sdp_standard_form(const ObjectiveSpec& spec, const AnglePair& angles, double s);

std::string format_sdp(const SdpProblem& problem);
SdpProblem parse_sdp(std::string_view text);

/// Writes the problem through a temporary file and a rename. Throws IoError.
void write_sdp_file(const SdpProblem& problem, const std::filesystem::path& path);
SdpProblem read_sdp_file(const std::filesystem::path& path);

}  // namespace diqkd
