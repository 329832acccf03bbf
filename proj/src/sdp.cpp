#include "diqkd/sdp.hpp"

#include <array>
#include <sstream>
#include <utility>

#include "diqkd/io.hpp"

namespace diqkd {
namespace {

using C = std::complex<double>;

constexpr std::array<std::pair<int, int>, 6> kPairs{{{0, 1}, {0, 2}, {0, 3}, {1, 2}, {1, 3}, {2, 3}}};
constexpr double kDropBelow = 0.0;

std::string basis_name(int k) {
  if (k < 4) return "rho_d_" + std::to_string(k);
  const bool imag = k >= 10;
  const auto [i, j] = kPairs[(k - 4) % 6];
  return std::string(imag ? "rho_im_" : "rho_re_") + std::to_string(i) + "_" + std::to_string(j);
}

template <typename Matrix>
std::vector<SdpEntry> nonzero_entries(const Matrix& m, int row_offset = 0, int col_offset = 0) {
  std::vector<SdpEntry> out;
  for (int j = 0; j < m.cols(); ++j) {
    for (int i = 0; i < m.rows(); ++i) {
      const C z = m(i, j);
      if (std::abs(z) > kDropBelow) out.push_back({i + row_offset, j + col_offset, z.real(), z.imag()});
    }
  }
  return out;
}

void append(std::vector<SdpEntry>& into, std::vector<SdpEntry> more) {
  into.insert(into.end(), more.begin(), more.end());
}

// Schur block [[t, vec(M)^H], [vec(M), I_16]] for the epigraph t >= ||M||_F^2.
SdpBlock frobenius_schur_block(const std::string& label, int t_var, const std::function<Mat4(const Mat4&)>& map) {
  constexpr int kSize = 17;
  SdpBlock block{label, kSize, {}};
  SdpTerm constant{-1, {}};
  for (int r = 1; r < kSize; ++r) constant.entries.push_back({r, r, 1.0, 0.0});
  block.terms.push_back(constant);
  block.terms.push_back({t_var, {{0, 0, 1.0, 0.0}}});
  for (int k = 0; k < kStateVariables; ++k) {
    const Mat4 image = map(hermitian_basis(k));
    SdpTerm term{k, {}};
    for (int col = 0; col < 4; ++col) {
      for (int row = 0; row < 4; ++row) {
        const C z = image(row, col);
        if (std::abs(z) <= kDropBelow) continue;
        const int v = 1 + col * 4 + row;
        term.entries.push_back({v, 0, z.real(), z.imag()});
        term.entries.push_back({0, v, z.real(), -z.imag()});
      }
    }
    if (!term.entries.empty()) block.terms.push_back(std::move(term));
  }
  return block;
}

// [[P, M], [M, Q]] >= 0 with M = removed part of rho; 0.5 Tr(P + Q) >= ||M||_1 at optimum.
SdpBlock trace_schur_block(const std::string& label, int p_offset, int q_offset, const Mat4& projector) {
  SdpBlock block{label, 8, {}};
  for (int k = 0; k < kStateVariables; ++k) {
    const Mat4 m = detail::removed_part<double, 4>(hermitian_basis(k), projector);
    SdpTerm term{k, {}};
    append(term.entries, nonzero_entries(m, 0, 4));
    append(term.entries, nonzero_entries(Mat4(m.adjoint()), 4, 0));
    if (!term.entries.empty()) block.terms.push_back(std::move(term));
  }
  for (int k = 0; k < kStateVariables; ++k) {
    block.terms.push_back({p_offset + k, nonzero_entries(hermitian_basis(k), 0, 0)});
  }
  for (int k = 0; k < kStateVariables; ++k) {
    block.terms.push_back({q_offset + k, nonzero_entries(hermitian_basis(k), 4, 4)});
  }
  return block;
}

SdpBlock state_psd_block() {
  SdpBlock block{"psd_rho", 4, {}};
  for (int k = 0; k < kStateVariables; ++k) block.terms.push_back({k, nonzero_entries(hermitian_basis(k))});
  return block;
}

std::vector<SdpEquality> state_equalities(const Mat4& chsh, double s) {
  SdpEquality trace{"trace", 1.0, {}};
  SdpEquality score{"chsh", s, {}};
  for (int k = 0; k < kStateVariables; ++k) {
    const Mat4 b = hermitian_basis(k);
    const double tr = b.trace().real();
    if (tr != 0.0) trace.coefficients.push_back({k, tr});
    const double sc = (b * chsh).trace().real();
    if (sc != 0.0) score.coefficients.push_back({k, sc});
  }
  return {trace, score};
}

// Line-oriented tokenizer with position-aware errors.
class Reader {
 public:
  explicit Reader(std::string_view text) : in_(std::string(text)) {}

  std::vector<std::string> line(std::size_t expected_min, const char* what) {
    std::string raw;
    if (!std::getline(in_, raw)) throw ConfigError(std::string("sdp parse: unexpected end before ") + what);
    ++line_no_;
    std::istringstream ls(raw);
    std::vector<std::string> tokens;
    for (std::string tok; ls >> tok;) tokens.push_back(tok);
    if (tokens.size() < expected_min) fail(std::string("malformed ") + what);
    return tokens;
  }

  std::vector<std::string> keyed(const std::string& key, std::size_t n_values) {
    auto t = line(1 + n_values, key.c_str());
    if (t[0] != key || t.size() != 1 + n_values) fail("expected '" + key + "'");
    return t;
  }

  [[noreturn]] void fail(const std::string& msg) const {
    throw ConfigError("sdp parse: line " + std::to_string(line_no_) + ": " + msg);
  }

 private:
  std::istringstream in_;
  int line_no_ = 0;
};

int parse_int(const std::string& tok) {
  const double x = parse_double(tok);
  if (x != static_cast<double>(static_cast<long long>(x))) throw ConfigError("sdp parse: expected integer '" + tok + "'");
  return static_cast<int>(x);
}

}  // namespace

Mat4 hermitian_basis(int k) {
  if (k < 0 || k >= kStateVariables) throw ConfigError("hermitian_basis: index out of range");
  Mat4 b = Mat4::Zero();
  if (k < 4) {
    b(k, k) = 1.0;
    return b;
  }
  const auto [i, j] = kPairs[(k - 4) % 6];
  if (k < 10) {
    b(i, j) = 1.0;
    b(j, i) = 1.0;
  } else {
    b(i, j) = C(0.0, 1.0);
    b(j, i) = C(0.0, -1.0);
  }
  return b;
}

SdpProblem export_sdp_standard_form(const ObjectiveSpec& spec, const AnglePair& angles, double s) {
  spec.validate();
  if (!std::isfinite(s)) throw ConfigError("export_sdp_standard_form: score must be finite");
  SdpProblem p;
  p.kind = spec.kind;
  p.lambda = spec.lambda;
  p.mu = spec.mu;
  p.phi_a = angles.phi_a();
  p.phi_b = angles.phi_b();
  p.s = s;
  for (int k = 0; k < kStateVariables; ++k) p.variables.push_back(basis_name(k));

  // The objective's key angle is the pair's Alice angle.
  const detail::KeyProjectors keys(angles.phi_a());
  const Mat4 chsh = chsh_operator(angles).matrix.matrix();

  if (spec.kind == ObjectiveKind::frobenius) {
    const int t0 = kStateVariables;
    p.variables.insert(p.variables.end(), {"t0", "t1", "t2"});
    p.objective = {{t0, spec.lambda}, {t0 + 1, 1.0 - spec.lambda}, {t0 + 2, 0.5 * spec.mu}};
    p.blocks.push_back(frobenius_schur_block(
        "schur_t0", t0, [&](const Mat4& x) { return Mat4(detail::removed_part<double, 4>(x, keys.p0)); }));
    p.blocks.push_back(frobenius_schur_block(
        "schur_t1", t0 + 1, [&](const Mat4& x) { return Mat4(detail::removed_part<double, 4>(x, keys.p1)); }));
    p.blocks.push_back(frobenius_schur_block("schur_t2", t0 + 2, [](const Mat4& x) { return x; }));
  } else {
    const int p0 = kStateVariables, q0 = p0 + 16, p1 = q0 + 16, q1 = p1 + 16;
    for (const char* prefix : {"P0_", "Q0_", "P1_", "Q1_"}) {
      for (int k = 0; k < kStateVariables; ++k) p.variables.push_back(prefix + basis_name(k).substr(4));
    }
    for (int k = 0; k < 4; ++k) {
      p.objective.push_back({p0 + k, 0.5 * spec.lambda});
      p.objective.push_back({q0 + k, 0.5 * spec.lambda});
    }
    for (int k = 0; k < 4; ++k) {
      p.objective.push_back({p1 + k, 0.5 * (1.0 - spec.lambda)});
      p.objective.push_back({q1 + k, 0.5 * (1.0 - spec.lambda)});
    }
    p.blocks.push_back(trace_schur_block("schur_pq0", p0, q0, keys.p0));
    p.blocks.push_back(trace_schur_block("schur_pq1", p1, q1, keys.p1));
  }
  p.blocks.push_back(state_psd_block());
  p.equalities = state_equalities(chsh, s);
  return p;
}

std::string format_sdp(const SdpProblem& p) {
  std::ostringstream os;
  os << "diqkd-sdp 1\n";
  os << "kind " << (p.kind == ObjectiveKind::frobenius ? "frobenius" : "trace_norm") << "\n";
  os << "lambda " << format_double(p.lambda) << "\n";
  os << "mu " << format_double(p.mu) << "\n";
  os << "phi_a " << format_double(p.phi_a) << "\n";
  os << "phi_b " << format_double(p.phi_b) << "\n";
  os << "s " << format_double(p.s) << "\n";
  os << "dim " << p.dim << "\n";
  os << "sense minimize\n";
  os << "vars " << p.variables.size() << "\n";
  for (std::size_t i = 0; i < p.variables.size(); ++i) os << "var " << i << " " << p.variables[i] << "\n";
  os << "objective " << p.objective.size() << "\n";
  for (const auto& c : p.objective) os << "c " << c.var << " " << format_double(c.value) << "\n";
  os << "blocks " << p.blocks.size() << "\n";
  for (std::size_t b = 0; b < p.blocks.size(); ++b) {
    const auto& blk = p.blocks[b];
    os << "block " << b << " " << blk.label << " " << blk.size << " " << blk.terms.size() << "\n";
    for (const auto& t : blk.terms) {
      os << "term " << t.var << " " << t.entries.size() << "\n";
      for (const auto& e : t.entries) {
        os << e.row << " " << e.col << " " << format_double(e.re) << " " << format_double(e.im) << "\n";
      }
    }
  }
  os << "eqs " << p.equalities.size() << "\n";
  for (const auto& eq : p.equalities) {
    os << "eq " << eq.label << " " << format_double(eq.rhs) << " " << eq.coefficients.size() << "\n";
    for (const auto& c : eq.coefficients) os << "a " << c.var << " " << format_double(c.value) << "\n";
  }
  os << "end\n";
  return os.str();
}

SdpProblem parse_sdp(std::string_view text) {
  Reader r(text);
  SdpProblem p;
  {
    auto t = r.line(2, "header");
    if (t[0] != "diqkd-sdp" || t[1] != "1") r.fail("expected header 'diqkd-sdp 1'");
  }
  const std::string kind = r.keyed("kind", 1)[1];
  if (kind == "frobenius") {
    p.kind = ObjectiveKind::frobenius;
  } else if (kind == "trace_norm") {
    p.kind = ObjectiveKind::trace_norm;
  } else {
    r.fail("unknown kind '" + kind + "'");
  }
  p.lambda = parse_double(r.keyed("lambda", 1)[1]);
  p.mu = parse_double(r.keyed("mu", 1)[1]);
  p.phi_a = parse_double(r.keyed("phi_a", 1)[1]);
  p.phi_b = parse_double(r.keyed("phi_b", 1)[1]);
  p.s = parse_double(r.keyed("s", 1)[1]);
  p.dim = parse_int(r.keyed("dim", 1)[1]);
  if (r.keyed("sense", 1)[1] != "minimize") r.fail("only 'sense minimize' is supported");
  const int nvars = parse_int(r.keyed("vars", 1)[1]);
  for (int i = 0; i < nvars; ++i) {
    auto t = r.keyed("var", 2);
    if (parse_int(t[1]) != i) r.fail("variables must be listed in index order");
    p.variables.push_back(t[2]);
  }
  auto check_var = [&](int v, bool allow_constant) {
    if (v >= nvars || v < (allow_constant ? -1 : 0)) r.fail("variable index out of range");
  };
  const int nobj = parse_int(r.keyed("objective", 1)[1]);
  for (int i = 0; i < nobj; ++i) {
    auto t = r.keyed("c", 2);
    SdpCoefficient c{parse_int(t[1]), parse_double(t[2])};
    check_var(c.var, false);
    p.objective.push_back(c);
  }
  const int nblocks = parse_int(r.keyed("blocks", 1)[1]);
  for (int b = 0; b < nblocks; ++b) {
    auto t = r.keyed("block", 4);
    if (parse_int(t[1]) != b) r.fail("blocks must be listed in index order");
    SdpBlock blk{t[2], parse_int(t[3]), {}};
    const int nterms = parse_int(t[4]);
    for (int k = 0; k < nterms; ++k) {
      auto tt = r.keyed("term", 2);
      SdpTerm term{parse_int(tt[1]), {}};
      check_var(term.var, true);
      const int nnz = parse_int(tt[2]);
      for (int e = 0; e < nnz; ++e) {
        auto et = r.line(4, "entry");
        if (et.size() != 4) r.fail("entry must be 'row col re im'");
        SdpEntry entry{parse_int(et[0]), parse_int(et[1]), parse_double(et[2]), parse_double(et[3])};
        if (entry.row < 0 || entry.col < 0 || entry.row >= blk.size || entry.col >= blk.size) {
          r.fail("entry outside block");
        }
        term.entries.push_back(entry);
      }
      blk.terms.push_back(std::move(term));
    }
    p.blocks.push_back(std::move(blk));
  }
  const int neqs = parse_int(r.keyed("eqs", 1)[1]);
  for (int q = 0; q < neqs; ++q) {
    auto t = r.keyed("eq", 3);
    SdpEquality eq{t[1], parse_double(t[2]), {}};
    const int nnz = parse_int(t[3]);
    for (int i = 0; i < nnz; ++i) {
      auto at = r.keyed("a", 2);
      SdpCoefficient c{parse_int(at[1]), parse_double(at[2])};
      check_var(c.var, false);
      eq.coefficients.push_back(c);
    }
    p.equalities.push_back(std::move(eq));
  }
  r.keyed("end", 0);
  return p;
}

void write_sdp_file(const SdpProblem& problem, const std::filesystem::path& path) {
  write_file_atomic(path, format_sdp(problem));
}

SdpProblem read_sdp_file(const std::filesystem::path& path) { return parse_sdp(read_file(path)); }

}  // namespace diqkd
