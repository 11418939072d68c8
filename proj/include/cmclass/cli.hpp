#pragma once

#include <filesystem>
#include <iostream>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "cmclass/io.hpp"

namespace cmclass::cli {

/// Exit codes: 0 success or property holds, 1 property violated, 2 input or usage error.
enum Exit : int { kOk = 0, kViolated = 1, kInputError = 2 };

inline int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::InfeasibleInit:
    case ErrorCode::NoConvergence:
    case ErrorCode::RepairFailed:
    case ErrorCode::NotConnected:
    case ErrorCode::TraceCorrupt:
      return kViolated;
    default:
      return kInputError;
  }
}

namespace detail {

inline void emit_json(const io::json& j, std::ostream& out, const std::optional<std::filesystem::path>& path) {
  const auto text = j.dump(2) + "\n";
  if (path)
    io::write_file(*path, text);
  else
    out << text;
}

inline int run_check(const std::string& mask_path, const ClassParams& params, std::size_t witnesses, std::ostream& out) {
  const auto mask = io::parse_mask(mask_path);
  const auto rep = check_membership(mask, params, witnesses);
  emit_json(io::to_json(mask.grid(), rep, params), out, std::nullopt);
  return rep.member() ? kOk : kViolated;
}

inline int run_dist(const std::string& a_path, const std::string& b_path, bool complement, std::ostream& out) {
  const auto a = io::parse_mask(a_path);
  const auto b = io::parse_mask(b_path);
  require_same_grid(a.grid(), b.grid());
  const auto rep = complement ? rho(a, b) : delta(CompactSet::of_mask(a), CompactSet::of_mask(b));
  auto j = io::to_json(a.grid(), rep);
  j["mode"] = complement ? "complement" : "sets";
  emit_json(j, out, std::nullopt);
  return kOk;
}

inline int run_converge(const std::string& manifest, double tol, const std::optional<std::string>& limit_out,
                        const std::optional<ClassParams>& params, bool lemmas, std::ostream& out) {
  const auto seq = io::parse_manifest(manifest);
  if (params) validate(*params, seq.grid());
  const auto rep = select_convergent(seq, tol, params);
  auto j = io::to_json(rep, params);
  bool ok = !rep.degenerate && (!rep.limit_membership || rep.limit_membership->member());
  if (lemmas) {
    const auto suite = lemma_suite(seq, tol);
    io::json checks = io::json::array();
    for (const auto& c : suite.checks) checks.push_back({{"name", c.name}, {"passed", c.passed}, {"detail", c.detail}});
    j["lemmas"] = std::move(checks);
    ok = ok && suite.all_passed();
  }
  if (limit_out) io::emit_mask(rep.limit, *limit_out);
  emit_json(j, out, std::nullopt);
  return ok ? kOk : kViolated;
}

inline int run_solve(const std::string& mask_path, const std::string& f_path, const std::optional<std::string>& coeff_path,
                     double tol, const std::string& out_path, std::ostream& out) {
  const auto mask = io::parse_mask(mask_path);
  const auto f = io::parse_field(f_path);
  const auto coeff = coeff_path ? io::parse_coefficients(*coeff_path) : EllipticCoefficients::identity(mask.grid());
  require_same_grid(mask.grid(), f.grid());
  require_same_grid(mask.grid(), coeff.grid());
  require(tol > 0.0 && tol < 1.0, ErrorCode::InvalidArgument, "tol must be in (0, 1)");
  const auto res = solve_dirichlet(mask, coeff, f, tol);
  const auto energy = energy_check(res.u, mask, coeff, f, tol);
  const auto support = support_confinement_check(res.u, mask);
  io::emit_field(res.u, out_path);
  io::json j;
  j["schema_version"] = io::kSchemaVersion;
  j["report"] = io::to_json(res.report);
  j["energy_check"] = io::to_json(energy);
  j["support_confined"] = support.confined;
  emit_json(j, out, std::nullopt);
  return energy.holds && support.confined ? kOk : kViolated;
}

inline int run_optimize(const std::string& config_path, std::ostream& out) {
  const auto job = io::parse_config(config_path);
  const auto init = io::parse_mask(job.mask);
  const auto f = io::parse_field(job.f);
  const auto coeff = job.coeff ? io::parse_coefficients(*job.coeff) : EllipticCoefficients::identity(init.grid());
  require_same_grid(init.grid(), f.grid());
  require_same_grid(init.grid(), coeff.grid());
  ScalarField g;
  if (job.g) {
    g = io::parse_field(*job.g);
  } else {
    const auto target = io::parse_mask(*job.target_mask);
    require_same_grid(init.grid(), target.grid());
    g = solve_dirichlet(target, coeff, f, job.pde_tol).u;
  }
  const Objective obj{g, f, coeff, job.pde_tol};
  obj.validate();
  validate(job.config.params, init.grid());

  const auto trace = optimize(obj, job.config, init);
  if (job.out_mask) io::emit_mask(trace.best_mask, *job.out_mask);
  if (job.trace_out) {
    std::string lines;
    for (const auto& r : trace.records) lines += io::to_json(r).dump() + "\n";
    io::write_file(*job.trace_out, lines);
  }
  const auto seq = minimizing_sequence_report(trace, obj, job.config.params);
  io::json j;
  j["schema_version"] = io::kSchemaVersion;
  j["best_J"] = trace.best_J;
  j["inf_estimate"] = trace.inf_estimate;
  j["initial_J"] = trace.records.front().J;
  j["iterations"] = trace.records.size() - 1;
  j["accepted"] = std::count_if(trace.records.begin(), trace.records.end(), [](const IterationRecord& r) { return r.accepted; });
  j["improvements"] = trace.improvements.size();
  j["chain"] = trace.chain;
  j["chain_best"] = trace.chain_best;
  io::json mseq = io::json::array();
  for (const auto& e : seq.entries)
    mseq.push_back({{"iteration", e.iteration}, {"J", e.stored_J}, {"recomputed_J", e.recomputed_J}});
  j["minimizing_sequence"] = std::move(mseq);
  j["best_membership"] = io::membership_json(trace.best_mask.grid(), check_membership(trace.best_mask, job.config.params),
                                             job.config.params);
  emit_json(j, out, job.summary_out);
  return kOk;
}

}  // namespace detail

/// Entry point shared by the executable and the tests.
inline int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Domain class checks, Hausdorff metrics and shape optimization on grids", "cmtool"};
  app.require_subcommand(1);

  std::string mask, a, b, manifest, f, out_path, config;
  std::optional<std::string> coeff, limit_out;
  double M = 0.0, R = 0.0, tol = 0.0;
  std::optional<double> cM, cR;
  std::size_t witnesses = 0;
  bool complement = false, lemmas = false;

  auto* check = app.add_subcommand("check", "class membership report");
  check->add_option("--mask", mask, "mask file")->required();
  check->add_option("--M", M, "tube shrink factor (> 1)")->required();
  check->add_option("--R", R, "inner-ball radius")->required();
  check->add_option("--witnesses", witnesses, "number of tube witnesses to record");

  auto* dist = app.add_subcommand("dist", "Hausdorff distance between masks");
  dist->add_option("--a", a, "first mask file")->required();
  dist->add_option("--b", b, "second mask file")->required();
  dist->add_flag("--complement", complement, "distance between closed complements (rho)");

  auto* converge = app.add_subcommand("converge", "select a convergent subsequence");
  converge->add_option("--manifest", manifest, "manifest listing mask files")->required();
  converge->add_option("--tol", tol, "clustering tolerance")->required();
  converge->add_option("--limit-out", limit_out, "write the limit mask here");
  converge->add_option("--M", cM, "check the limit with this M");
  converge->add_option("--R", cR, "check the limit with this R");
  converge->add_flag("--lemmas", lemmas, "also run the lemma suite");

  auto* solve = app.add_subcommand("solve", "Dirichlet solve on a mask");
  solve->add_option("--mask", mask, "mask file")->required();
  solve->add_option("--f", f, "load field file")->required();
  solve->add_option("--coeff", coeff, "coefficient file (identity when omitted)");
  solve->add_option("--tol", tol, "relative residual tolerance")->required();
  solve->add_option("--out", out_path, "solution field file")->required();

  auto* opt = app.add_subcommand("optimize", "annealed shape optimization");
  opt->add_option("--config", config, "JSON configuration")->required();

  std::vector<const char*> argv{"cmtool"};
  for (const auto& s : args) argv.push_back(s.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kInputError;
  }

  try {
    if (check->parsed()) return detail::run_check(mask, ClassParams{M, R, std::nullopt}, witnesses, out);
    if (dist->parsed()) return detail::run_dist(a, b, complement, out);
    if (converge->parsed()) {
      if (cM.has_value() != cR.has_value()) {
        err << "error: --M and --R must be given together\n";
        return kInputError;
      }
      std::optional<ClassParams> params;
      if (cM) params = ClassParams{*cM, *cR, std::nullopt};
      return detail::run_converge(manifest, tol, limit_out, params, lemmas, out);
    }
    if (solve->parsed()) return detail::run_solve(mask, f, coeff, tol, out_path, out);
    if (opt->parsed()) return detail::run_optimize(config, out);
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kInputError;
  }
  return kInputError;
}

}  // namespace cmclass::cli
