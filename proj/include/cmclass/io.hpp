#pragma once

#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "json.hpp"

#include "cmclass/cm_class.hpp"
#include "cmclass/convergence.hpp"
#include "cmclass/elliptic.hpp"
#include "cmclass/grid.hpp"
#include "cmclass/metrics.hpp"
#include "cmclass/shape_opt.hpp"

namespace cmclass::io {

using json = nlohmann::ordered_json;

inline constexpr int kSchemaVersion = 1;

namespace detail {

[[noreturn]] inline void format_error(std::size_t line, std::size_t column, const std::string& what) {
  fail(ErrorCode::FormatError, "line " + std::to_string(line) + ", column " + std::to_string(column) + ": " + what);
}

struct Line {
  std::size_t number = 0;
  std::string_view text;
};

inline std::vector<Line> split_lines(std::string_view text) {
  std::vector<Line> out;
  std::size_t start = 0, number = 1;
  while (start <= text.size()) {
    auto end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    auto s = text.substr(start, end - start);
    if (!s.empty() && s.back() == '\r') s.remove_suffix(1);
    out.push_back({number++, s});
    if (end == text.size()) break;
    start = end + 1;
  }
  while (!out.empty() && out.back().text.find_first_not_of(" \t") == std::string_view::npos) out.pop_back();
  return out;
}

struct Token {
  std::string_view text;
  std::size_t column = 0;
};

inline std::vector<Token> tokens(std::string_view s) {
  std::vector<Token> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && (s[i] == ' ' || s[i] == '\t')) ++i;
    if (i >= s.size()) break;
    const auto start = i;
    while (i < s.size() && s[i] != ' ' && s[i] != '\t') ++i;
    out.push_back({s.substr(start, i - start), start + 1});
  }
  return out;
}

inline std::int64_t parse_int(const Token& t, std::size_t line) {
  std::int64_t v = 0;
  const auto* end = t.text.data() + t.text.size();
  const auto [p, ec] = std::from_chars(t.text.data(), end, v);
  if (ec != std::errc() || p != end) format_error(line, t.column, "expected an integer, got '" + std::string(t.text) + "'");
  return v;
}

inline double parse_real(const Token& t, std::size_t line) {
  double v = 0.0;
  const auto* end = t.text.data() + t.text.size();
  const auto [p, ec] = std::from_chars(t.text.data(), end, v);
  if (ec != std::errc() || p != end) format_error(line, t.column, "expected a number, got '" + std::string(t.text) + "'");
  if (!std::isfinite(v)) format_error(line, t.column, "non-finite value '" + std::string(t.text) + "'");
  return v;
}

inline std::string real(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// Shared three-line header: "<MAGIC> k", extents, spacing and origin.
inline GridSpec parse_header(const std::vector<Line>& lines, std::string_view magic) {
  if (lines.size() < 3) format_error(lines.empty() ? 1 : lines.size(), 1, "truncated header");
  const auto h = tokens(lines[0].text);
  if (h.size() != 2 || h[0].text != magic) format_error(1, 1, "expected '" + std::string(magic) + " <k>'");
  const auto k = parse_int(h[1], 1);
  if (k < 2 || k > kMaxDim) format_error(1, h[1].column, "dimension out of range");
  const auto dims = tokens(lines[1].text);
  if (static_cast<std::int64_t>(dims.size()) != k)
    format_error(2, 1, "expected " + std::to_string(k) + " extents, got " + std::to_string(dims.size()));
  std::vector<std::int64_t> extents;
  for (const auto& t : dims) {
    const auto n = parse_int(t, 2);
    if (n < 4 || n > (std::int64_t{1} << 24)) format_error(2, t.column, "extent out of range");
    extents.push_back(n);
  }
  const auto geo = tokens(lines[2].text);
  if (static_cast<std::int64_t>(geo.size()) != k + 1)
    format_error(3, 1, "expected spacing and " + std::to_string(k) + " origin coordinates");
  const double h_spacing = parse_real(geo[0], 3);
  std::vector<double> origin;
  for (std::size_t i = 1; i < geo.size(); ++i) origin.push_back(parse_real(geo[i], 3));
  try {
    GridSpec g(std::move(extents), h_spacing, std::move(origin));
    if (g.size() > (std::size_t{1} << 32)) format_error(2, 1, "grid has too many cells");
    return g;
  } catch (const Error& e) {
    if (e.code() == ErrorCode::FormatError) throw;
    format_error(2, 1, e.what());
  }
}

inline std::string header(std::string_view magic, const GridSpec& g) {
  std::string s(magic);
  s += " " + std::to_string(g.dim()) + "\n";
  for (int a = 0; a < g.dim(); ++a) s += (a ? " " : "") + std::to_string(g.extent(a));
  s += "\n" + real(g.spacing());
  for (double o : g.origin()) s += " " + real(o);
  return s + "\n";
}

// Whitespace-separated reals after `first_line`, exactly `count` of them.
inline std::vector<double> parse_reals(const std::vector<Line>& lines, std::size_t first_line, std::size_t count) {
  std::vector<double> v;
  for (std::size_t i = first_line; i < lines.size(); ++i)
    for (const auto& t : tokens(lines[i].text)) {
      if (v.size() == count) format_error(lines[i].number, t.column, "more values than cells");
      v.push_back(parse_real(t, lines[i].number));
    }
  return v;
}

}  // namespace detail

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::FormatError, "cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::FormatError, "cannot write '" + path.string() + "'");
  out << text;
}

// ---- masks ----

inline DomainMask parse_mask_text(std::string_view text) {
  const auto lines = detail::split_lines(text);
  const auto grid = detail::parse_header(lines, "CMMASK");
  const auto row_len = static_cast<std::size_t>(grid.extent(grid.dim() - 1));
  const auto rows = grid.size() / row_len;
  if (lines.size() != 3 + rows)
    detail::format_error(lines.size(), 1,
                         "expected " + std::to_string(rows) + " cell rows, got " + std::to_string(lines.size() - 3));
  std::vector<std::uint8_t> in(grid.size(), 0);
  for (std::size_t r = 0; r < rows; ++r) {
    const auto& ln = lines[3 + r];
    if (ln.text.size() != row_len)
      detail::format_error(ln.number, std::min(ln.text.size(), row_len) + 1,
                           "row must have exactly " + std::to_string(row_len) + " cells");
    for (std::size_t j = 0; j < row_len; ++j) {
      const char ch = ln.text[j];
      if (ch != '0' && ch != '1') detail::format_error(ln.number, j + 1, "cell must be '0' or '1'");
      in[r * row_len + j] = ch == '1' ? 1 : 0;
    }
  }
  return DomainMask(grid, std::move(in));
}

inline std::string emit_mask_text(const DomainMask& m) {
  const auto& g = m.grid();
  std::string s = detail::header("CMMASK", g);
  const auto row_len = static_cast<std::size_t>(g.extent(g.dim() - 1));
  for (CellIndex i = 0; i < m.size(); ++i) {
    s += m[i] ? '1' : '0';
    if ((i + 1) % row_len == 0) s += '\n';
  }
  return s;
}

inline DomainMask parse_mask(const std::filesystem::path& p) { return parse_mask_text(read_file(p)); }
inline void emit_mask(const DomainMask& m, const std::filesystem::path& p) { write_file(p, emit_mask_text(m)); }

// ---- scalar fields ----

inline ScalarField parse_field_text(std::string_view text) {
  const auto lines = detail::split_lines(text);
  const auto grid = detail::parse_header(lines, "CMFIELD");
  auto v = detail::parse_reals(lines, 3, grid.size());
  if (v.size() != grid.size())
    detail::format_error(lines.size(), 1, "expected " + std::to_string(grid.size()) + " values, got " + std::to_string(v.size()));
  return ScalarField(grid, std::move(v));
}

inline std::string emit_field_text(const ScalarField& f) {
  const auto& g = f.grid();
  std::string s = detail::header("CMFIELD", g);
  const auto row_len = static_cast<std::size_t>(g.extent(g.dim() - 1));
  for (CellIndex i = 0; i < f.size(); ++i) {
    s += detail::real(f[i]);
    s += (i + 1) % row_len == 0 ? '\n' : ' ';
  }
  return s;
}

inline ScalarField parse_field(const std::filesystem::path& p) { return parse_field_text(read_file(p)); }
inline void emit_field(const ScalarField& f, const std::filesystem::path& p) { write_file(p, emit_field_text(f)); }

// ---- coefficients ----
// CMCOEFF k / extents / spacing origin / "alpha <a>" / then either k*k values
// (one matrix for every cell) or cells*k*k values (row-major per cell).

inline EllipticCoefficients parse_coefficients_text(std::string_view text) {
  const auto lines = detail::split_lines(text);
  const auto grid = detail::parse_header(lines, "CMCOEFF");
  if (lines.size() < 4) detail::format_error(lines.size(), 1, "missing alpha line");
  const auto at = detail::tokens(lines[3].text);
  if (at.size() != 2 || at[0].text != "alpha") detail::format_error(4, 1, "expected 'alpha <value>'");
  const double alpha = detail::parse_real(at[1], 4);
  const auto kk = static_cast<std::size_t>(grid.dim() * grid.dim());
  auto v = detail::parse_reals(lines, 4, grid.size() * kk);
  try {
    if (v.size() == kk) return EllipticCoefficients::constant(grid, v, alpha);
    if (v.size() == grid.size() * kk) return EllipticCoefficients(grid, std::move(v), alpha);
  } catch (const Error& e) {
    detail::format_error(5, 1, e.what());
  }
  detail::format_error(lines.size(), 1, "expected k*k or cells*k*k coefficient values");
}

inline std::string emit_coefficients_text(const EllipticCoefficients& a) {
  std::string s = detail::header("CMCOEFF", a.grid());
  s += "alpha " + detail::real(a.alpha()) + "\n";
  const auto kk = static_cast<std::size_t>(a.grid().dim() * a.grid().dim());
  const auto e = a.entries();
  for (std::size_t i = 0; i < e.size(); ++i) {
    s += detail::real(e[i]);
    s += (i + 1) % kk == 0 ? '\n' : ' ';
  }
  return s;
}

inline EllipticCoefficients parse_coefficients(const std::filesystem::path& p) {
  return parse_coefficients_text(read_file(p));
}

// ---- JSON reports ----

inline json cell_json(const GridSpec& g, CellIndex c) {
  json a = json::array();
  const auto cc = g.coords(c);
  for (int i = 0; i < g.dim(); ++i) a.push_back(cc[static_cast<std::size_t>(i)]);
  return a;
}

inline json to_json(const GridSpec& g, const MetricReport& r) {
  json j;
  j["schema_version"] = kSchemaVersion;
  j["value"] = r.value;
  j["forward"] = json::array({cell_json(g, r.forward.from), cell_json(g, r.forward.to)});
  j["backward"] = json::array({cell_json(g, r.backward.from), cell_json(g, r.backward.to)});
  return j;
}

inline json to_json(const GridSpec& g, const FailingPair& fp) {
  json j;
  j["x"] = cell_json(g, fp.x);
  j["y"] = cell_json(g, fp.y);
  j["level"] = fp.level;
  j["required_radius"] = fp.required_radius;
  j["component_x"] = fp.component_x;
  j["component_y"] = fp.component_y;
  return j;
}

inline json to_json(const GridSpec& g, const TubeWitness& w) {
  json j;
  j["x"] = cell_json(g, w.pair.from);
  j["y"] = cell_json(g, w.pair.to);
  j["d_star"] = w.d_star;
  j["radius"] = w.radius;
  json path = json::array();
  for (auto c : w.path) path.push_back(cell_json(g, c));
  j["path"] = std::move(path);
  return j;
}

inline json to_json(const GridSpec& g, const MembershipReport& r, const ClassParams& p) {
  json j;
  j["schema_version"] = kSchemaVersion;
  j["member"] = r.member();
  j["params"] = {{"M", p.M}, {"R", p.R}};
  j["nonempty"] = r.nonempty;
  j["connected"] = r.connected;
  j["compactly_contained"] = r.compactly_contained;
  if (r.inner_ball)
    j["inner_ball"] = {{"center", cell_json(g, r.inner_ball->center)}, {"radius", r.inner_ball->radius}};
  else
    j["inner_ball"] = nullptr;
  j["cm_holds"] = r.cm_holds;
  j["failing_pair"] = r.failing_pair ? to_json(g, *r.failing_pair) : json(nullptr);
  json w = json::array();
  for (const auto& t : r.witnesses) w.push_back(to_json(g, t));
  j["witnesses"] = std::move(w);
  return j;
}

inline json membership_json(const GridSpec& g, const MembershipReport& r, const ClassParams& p) {
  auto j = to_json(g, r, p);
  j.erase("schema_version");
  return j;
}

inline json to_json(const ConvergenceReport& r, const std::optional<ClassParams>& p) {
  json j;
  j["schema_version"] = kSchemaVersion;
  j["selected_indices"] = r.selected_indices;
  j["limit_index"] = r.limit_index;
  j["residuals"] = r.residuals;
  j["cauchy_tol"] = r.cauchy_tol;
  j["degenerate"] = r.degenerate;
  if (r.limit_membership && p)
    j["limit_membership"] = membership_json(r.limit.grid(), *r.limit_membership, *p);
  else
    j["limit_membership"] = nullptr;
  return j;
}

inline json to_json(const SolveReport& r) {
  json j;
  j["iterations"] = r.iterations;
  j["relative_residual"] = r.relative_residual;
  j["dirichlet_energy"] = r.dirichlet_energy;
  j["load_pairing"] = r.load_pairing;
  return j;
}

inline json to_json(const EnergyCheck& e) {
  json j;
  j["holds"] = e.holds;
  j["alpha_gradient"] = e.alpha_gradient;
  j["energy"] = e.energy;
  j["load_pairing"] = e.load_pairing;
  j["identity_gap"] = e.identity_gap;
  j["identity_bound"] = e.identity_bound;
  return j;
}

inline json to_json(const IterationRecord& r) {
  json j;
  j["iteration"] = r.iteration;
  j["move"] = to_string(r.move);
  j["cell"] = r.cell;
  j["repaired"] = r.repaired;
  j["failed_attempts"] = r.failed_attempts;
  j["J"] = r.J;
  j["accepted"] = r.accepted;
  j["temperature"] = r.temperature;
  j["best_J"] = r.best_J;
  return j;
}

// ---- optimize configuration ----

struct OptimizeJob {
  std::filesystem::path mask;
  std::filesystem::path f;
  std::optional<std::filesystem::path> g;
  std::optional<std::filesystem::path> target_mask;  ///< g = solution on this mask
  std::optional<std::filesystem::path> coeff;        ///< identity when absent
  double pde_tol = 1e-10;
  OptimizerConfig config;
  std::optional<std::filesystem::path> out_mask;
  std::optional<std::filesystem::path> trace_out;
  std::optional<std::filesystem::path> summary_out;
};

inline OptimizeJob parse_config_text(std::string_view text, const std::filesystem::path& base_dir = {}) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    fail(ErrorCode::FormatError, std::string("config is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) fail(ErrorCode::FormatError, "config must be a JSON object");
  static const std::vector<std::string> known = {
      "mask",  "f",    "g",       "target_mask",         "coeff",   "pde_tol",  "M",        "R",
      "budget", "initial_temperature", "cooling", "move_mix", "rng_seed", "chains",
      "max_attempts", "out_mask", "trace_out", "summary_out"};
  for (const auto& [key, _] : j.items())
    if (std::find(known.begin(), known.end(), key) == known.end())
      fail(ErrorCode::UnknownKey, "unknown config key '" + key + "'");
  for (const char* key : {"mask", "f", "M", "R"})
    if (!j.contains(key)) fail(ErrorCode::MissingKey, std::string("config is missing '") + key + "'");
  if (j.contains("g") == j.contains("target_mask"))
    fail(ErrorCode::MissingKey, "config needs exactly one of 'g' and 'target_mask'");

  const auto path = [&](const char* key) {
    if (!j[key].is_string()) fail(ErrorCode::FormatError, std::string("'") + key + "' must be a string");
    std::filesystem::path p = j[key].get<std::string>();
    return p.is_absolute() ? p : base_dir / p;
  };
  const auto number = [&](const char* key) {
    if (!j[key].is_number()) fail(ErrorCode::FormatError, std::string("'") + key + "' must be a number");
    return j[key].get<double>();
  };
  const auto count = [&](const char* key) {
    if (!j[key].is_number_unsigned()) fail(ErrorCode::FormatError, std::string("'") + key + "' must be a nonnegative integer");
    return j[key].get<std::uint64_t>();
  };

  OptimizeJob job;
  job.mask = path("mask");
  job.f = path("f");
  if (j.contains("g")) job.g = path("g");
  if (j.contains("target_mask")) job.target_mask = path("target_mask");
  if (j.contains("coeff")) job.coeff = path("coeff");
  if (j.contains("pde_tol")) job.pde_tol = number("pde_tol");
  auto& c = job.config;
  c.params.M = number("M");
  c.params.R = number("R");
  if (j.contains("budget")) c.budget = static_cast<std::size_t>(count("budget"));
  if (j.contains("initial_temperature")) c.initial_temperature = number("initial_temperature");
  if (j.contains("cooling")) c.cooling = number("cooling");
  if (j.contains("move_mix")) {
    const auto& m = j["move_mix"];
    if (!m.is_array() || m.size() != 3) fail(ErrorCode::FormatError, "'move_mix' must be an array of 3 numbers");
    for (std::size_t i = 0; i < 3; ++i) {
      if (!m[i].is_number()) fail(ErrorCode::FormatError, "'move_mix' must be an array of 3 numbers");
      c.move_mix[i] = m[i].get<double>();
    }
  }
  if (j.contains("rng_seed")) c.rng_seed = count("rng_seed");
  if (j.contains("chains")) {
    const auto n = count("chains");
    if (n < 1 || n > 1024) fail(ErrorCode::FormatError, "'chains' must be in [1, 1024]");
    c.chains = static_cast<int>(n);
  }
  if (j.contains("max_attempts")) {
    const auto n = count("max_attempts");
    if (n < 1 || n > 1000) fail(ErrorCode::FormatError, "'max_attempts' must be in [1, 1000]");
    c.max_attempts = static_cast<int>(n);
  }
  if (j.contains("out_mask")) job.out_mask = path("out_mask");
  if (j.contains("trace_out")) job.trace_out = path("trace_out");
  if (j.contains("summary_out")) job.summary_out = path("summary_out");
  if (!(job.pde_tol > 0.0 && job.pde_tol < 1.0)) fail(ErrorCode::FormatError, "'pde_tol' must be in (0, 1)");
  c.validate();
  return job;
}

inline OptimizeJob parse_config(const std::filesystem::path& p) {
  return parse_config_text(read_file(p), p.parent_path());
}

/// Manifest: one mask path per line, relative to the manifest; '#' starts a comment.
inline DomainSequence parse_manifest(const std::filesystem::path& p) {
  const auto text = read_file(p);
  std::vector<DomainMask> masks;
  std::vector<std::string> labels;
  for (const auto& ln : detail::split_lines(text)) {
    auto s = ln.text.substr(0, ln.text.find('#'));
    const auto b = s.find_first_not_of(" \t");
    if (b == std::string_view::npos) continue;
    s = s.substr(b, s.find_last_not_of(" \t") - b + 1);
    std::filesystem::path mp{std::string(s)};
    if (!mp.is_absolute()) mp = p.parent_path() / mp;
    masks.push_back(parse_mask(mp));
    labels.emplace_back(s);
  }
  if (masks.empty()) fail(ErrorCode::FormatError, "manifest lists no masks");
  try {
    return DomainSequence(std::move(masks), std::move(labels));
  } catch (const Error& e) {
    if (e.code() == ErrorCode::GridMismatch) throw;
    fail(ErrorCode::FormatError, e.what());
  }
}

}  // namespace cmclass::io
