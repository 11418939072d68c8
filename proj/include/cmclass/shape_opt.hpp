#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <future>
#include <limits>
#include <optional>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include "cmclass/cm_class.hpp"
#include "cmclass/connectivity.hpp"
#include "cmclass/elliptic.hpp"
#include "cmclass/grid.hpp"

namespace cmclass {

/// Tracking objective J(omega) = 1/2 sum over the box of (u_omega - g)^2 h^k.
struct Objective {
  ScalarField g;
  ScalarField f;
  EllipticCoefficients coeff;
  double pde_tol = 1e-10;

  void validate() const {
    require_same_grid(g.grid(), f.grid());
    require_same_grid(g.grid(), coeff.grid());
    require(pde_tol > 0.0 && pde_tol < 1.0, ErrorCode::InvalidArgument, "pde_tol must be in (0, 1)");
  }
};

enum class MoveKind { Initial, BoundaryFlip, PatchFlip, Reanchor };

inline const char* to_string(MoveKind m) {
  switch (m) {
    case MoveKind::Initial: return "initial";
    case MoveKind::BoundaryFlip: return "boundary_flip";
    case MoveKind::PatchFlip: return "patch_flip";
    case MoveKind::Reanchor: return "reanchor";
  }
  return "unknown";
}

struct OptimizerConfig {
  ClassParams params;
  std::size_t budget = 2000;
  double initial_temperature = 3e-9;
  double cooling = 0.997;
  std::array<double, 3> move_mix{0.7, 0.2, 0.1};  ///< boundary flip, patch flip, re-anchor
  std::uint64_t rng_seed = 1;
  int chains = 1;
  int max_attempts = 8;            ///< proposals per iteration before the iteration fails
  bool check_feasibility = false;  ///< re-run check_membership on every evaluated mask

  void validate() const {
    require(budget < std::numeric_limits<std::size_t>::max() / 2, ErrorCode::InvalidArgument, "budget too large");
    require(std::isfinite(initial_temperature) && initial_temperature > 0.0, ErrorCode::InvalidArgument,
            "initial_temperature must be positive");
    require(cooling > 0.0 && cooling < 1.0, ErrorCode::InvalidArgument, "cooling must be in (0, 1)");
    double sum = 0.0;
    for (double p : move_mix) {
      require(std::isfinite(p) && p >= 0.0, ErrorCode::InvalidArgument, "move probabilities must be >= 0");
      sum += p;
    }
    require(std::abs(sum - 1.0) <= 1e-9, ErrorCode::InvalidArgument, "move probabilities must sum to 1");
    require(chains >= 1, ErrorCode::InvalidArgument, "chains must be >= 1");
    require(max_attempts >= 1, ErrorCode::InvalidArgument, "max_attempts must be >= 1");
  }
};

struct IterationRecord {
  std::size_t iteration = 0;
  MoveKind move = MoveKind::Initial;
  CellIndex cell = 0;           ///< flipped cell, patch corner, or new seed
  bool repaired = false;        ///< repair changed the proposed mask
  int failed_attempts = 0;      ///< proposals rejected because repair failed
  double J = 0.0;               ///< objective of the evaluated candidate
  bool accepted = false;
  double temperature = 0.0;
  double best_J = 0.0;          ///< best accepted J so far
};

struct Improvement {
  std::size_t iteration = 0;
  DomainMask mask;
  double J = 0.0;
};

/// Record of one annealing run; `improvements` is the strictly decreasing
/// minimizing sequence, and inf_estimate the smallest J seen.
struct OptTrace {
  std::vector<IterationRecord> records;
  std::vector<Improvement> improvements;
  DomainMask best_mask;
  double best_J = 0.0;
  double inf_estimate = 0.0;
  int chain = 0;
  std::vector<double> chain_best;  ///< best J per chain, by chain id
};

struct Evaluation {
  double J = 0.0;
  SolveResult solve;
};

struct SupportCheck {
  bool confined = true;
  std::optional<CellIndex> violating;
};

/// u vanishes off the closure of omega: |u| <= 1e-14 on every false cell that
/// has no true face neighbor.
inline SupportCheck support_confinement_check(const ScalarField& u, const DomainMask& omega) {
  require_same_grid(u.grid(), omega.grid());
  const Neighborhood face(omega.grid(), Adjacency::Face);
  for (CellIndex c = 0; c < u.size(); ++c) {
    if (omega[c] || std::abs(u[c]) <= 1e-14) continue;
    bool collar = false;
    face.for_each(c, [&](CellIndex n) { collar = collar || omega[n]; });
    if (!collar) return {false, c};
  }
  return {};
}

/// Midpoint-rule J of the zero-extended state. Does not re-check membership.
inline Evaluation evaluate(const DomainMask& omega, const Objective& obj) {
  obj.validate();
  require_same_grid(omega.grid(), obj.g.grid());
  Evaluation ev;
  ev.solve = solve_dirichlet(omega, obj.coeff, obj.f, obj.pde_tol);
  const double vol = detail::cell_volume(omega.grid());
  double s = 0.0;
  for (CellIndex c = 0; c < omega.size(); ++c) {
    const double d = ev.solve.u[c] - obj.g[c];
    s += d * d;
  }
  ev.J = 0.5 * s * vol;
  return ev;
}

namespace detail {

// Non-margin cells with a face neighbor of the other value.
inline std::vector<CellIndex> frontier_cells(const DomainMask& m, const Neighborhood& face) {
  std::vector<CellIndex> out;
  for (CellIndex c = 0; c < m.size(); ++c) {
    if (m.grid().on_margin(c)) continue;
    bool differs = false;
    face.for_each(c, [&](CellIndex n) { differs = differs || (m[n] != m[c]); });
    if (differs) out.push_back(c);
  }
  return out;
}

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::size_t pick(std::mt19937_64& rng, std::size_t n) {
  return static_cast<std::size_t>(rng() % static_cast<std::uint64_t>(n));
}

inline double unit(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

struct Proposal {
  MoveKind move = MoveKind::BoundaryFlip;
  CellIndex cell = 0;
  DomainMask mask;
  CellIndex seed = 0;
};

inline Proposal propose(const DomainMask& cur, CellIndex seed, const OptimizerConfig& cfg, std::mt19937_64& rng,
                        const Neighborhood& face) {
  const auto& g = cur.grid();
  const double roll = unit(rng);
  Proposal p;
  p.seed = seed;
  if (roll < cfg.move_mix[0] + cfg.move_mix[1]) {
    const auto front = frontier_cells(cur, face);
    const auto c = front[pick(rng, front.size())];
    p.cell = c;
    std::vector<std::uint8_t> in(cur.cells().begin(), cur.cells().end());
    if (roll < cfg.move_mix[0]) {
      p.move = MoveKind::BoundaryFlip;
      in[c] = cur[c] ? 0 : 1;
    } else {
      p.move = MoveKind::PatchFlip;
      const auto value = static_cast<std::uint8_t>(cur[c] ? 0 : 1);
      const auto base = g.coords(c);
      const int k = g.dim();
      for (int bits = 0; bits < (1 << k); ++bits) {
        auto cc = base;
        for (int a = 0; a < k; ++a) cc[static_cast<std::size_t>(a)] += (bits >> a) & 1;
        if (!g.in_range(cc)) continue;
        const auto idx = g.index(cc);
        if (!g.on_margin(idx)) in[idx] = value;
      }
    }
    p.mask = DomainMask(g, std::move(in));
  } else {
    p.move = MoveKind::Reanchor;
    const auto cells = cur.true_cells();
    p.seed = p.cell = cells[pick(rng, cells.size())];
    p.mask = cur;
  }
  return p;
}

inline OptTrace run_chain(const Objective& obj, const OptimizerConfig& cfg, const DomainMask& init,
                          std::uint64_t seed_value, int chain_id) {
  std::mt19937_64 rng(seed_value);
  const Neighborhood face(init.grid(), Adjacency::Face);
  OptTrace tr;
  tr.chain = chain_id;

  DomainMask cur = init;
  double cur_J = evaluate(cur, obj).J;
  CellIndex seed = edt(cur).argmax().first;
  if (cfg.params.seed_hint && cur[*cfg.params.seed_hint]) seed = *cfg.params.seed_hint;
  tr.best_mask = cur;
  tr.best_J = cur_J;
  tr.records.push_back({0, MoveKind::Initial, seed, false, 0, cur_J, true, cfg.initial_temperature, cur_J});
  tr.improvements.push_back({0, cur, cur_J});

  double temperature = cfg.initial_temperature;
  for (std::size_t it = 1; it <= cfg.budget; ++it) {
    IterationRecord rec;
    rec.iteration = it;
    rec.temperature = temperature;
    std::optional<Proposal> prop;
    DomainMask cand;
    for (int attempt = 0; attempt < cfg.max_attempts && !prop; ++attempt) {
      auto p = propose(cur, seed, cfg, rng, face);
      try {
        cand = repair_to_class(p.mask, cfg.params, p.seed);
        prop = std::move(p);
      } catch (const Error& e) {
        if (e.code() != ErrorCode::RepairFailed) throw;
        ++rec.failed_attempts;
      }
    }
    if (!prop) fail(ErrorCode::RepairFailed, "every proposal of iteration " + std::to_string(it) + " failed repair");
    if (cfg.check_feasibility && !check_membership(cand, cfg.params).member())
      fail(ErrorCode::RepairFailed, "repair returned a non-member at iteration " + std::to_string(it));

    rec.move = prop->move;
    rec.cell = prop->cell;
    rec.repaired = !(cand == prop->mask);
    rec.J = cand == cur ? cur_J : evaluate(cand, obj).J;
    const double dJ = rec.J - cur_J;
    rec.accepted = dJ <= 0.0 || unit(rng) < std::exp(-dJ / temperature);
    if (rec.accepted) {
      cur = std::move(cand);
      cur_J = rec.J;
      seed = prop->seed;
      if (!cur[seed] || edt(cur)[seed] < cfg.params.R) seed = edt(cur).argmax().first;
      if (cur_J < tr.best_J) {
        tr.best_J = cur_J;
        tr.best_mask = cur;
        tr.improvements.push_back({it, cur, cur_J});
      }
    }
    rec.best_J = tr.best_J;
    tr.records.push_back(rec);
    temperature *= cfg.cooling;
  }
  tr.inf_estimate = tr.best_J;
  return tr;
}

/// Worker cap from CM_THREADS (0 or unset: hardware concurrency).
inline unsigned thread_cap() {
  unsigned cap = 0;
  if (const char* env = std::getenv("CM_THREADS")) cap = static_cast<unsigned>(std::strtoul(env, nullptr, 10));
  if (cap == 0) cap = std::max(1u, std::thread::hardware_concurrency());
  return cap;
}

}  // namespace detail

/// Simulated annealing over class members. Each proposal is a move followed by
/// repair_to_class and a forward solve; acceptance is Metropolis with a
/// geometric temperature schedule. Independent chains use derived seeds and the
/// winner is the lowest best J, then the lowest chain id.
inline OptTrace optimize(const Objective& obj, const OptimizerConfig& config, const DomainMask& init) {
  obj.validate();
  config.validate();
  require_same_grid(init.grid(), obj.g.grid());
  validate(config.params, init.grid());
  if (!check_membership(init, config.params).member())
    fail(ErrorCode::InfeasibleInit, "initial mask is not a class member");

  const auto chains = static_cast<std::size_t>(config.chains);
  std::vector<OptTrace> traces(chains);
  const auto seed_of = [&](std::size_t c) {
    return chains == 1 ? config.rng_seed : detail::splitmix64(config.rng_seed + c);
  };
  const std::size_t workers = std::min<std::size_t>(chains, detail::thread_cap());
  for (std::size_t start = 0; start < chains; start += workers) {
    std::vector<std::future<OptTrace>> batch;
    for (std::size_t c = start; c < std::min(chains, start + workers); ++c)
      batch.push_back(std::async(workers > 1 ? std::launch::async : std::launch::deferred,
                                 [&, c] { return detail::run_chain(obj, config, init, seed_of(c), static_cast<int>(c)); }));
    for (std::size_t i = 0; i < batch.size(); ++i) traces[start + i] = batch[i].get();
  }

  std::size_t winner = 0;
  for (std::size_t c = 1; c < chains; ++c)
    if (traces[c].best_J < traces[winner].best_J) winner = c;
  OptTrace out = std::move(traces[winner]);
  out.chain_best.clear();
  for (std::size_t c = 0; c < chains; ++c) out.chain_best.push_back(c == winner ? out.best_J : traces[c].best_J);
  return out;
}

struct SequenceEntry {
  std::size_t iteration = 0;
  double stored_J = 0.0;
  double recomputed_J = 0.0;
  bool member = false;
};

struct SequenceReport {
  std::vector<SequenceEntry> entries;
  double limit_J = 0.0;
};

/// Re-verifies the minimizing sequence of a trace: strictly decreasing J,
/// membership of every stored best, J re-solved within 10 pde_tol relative, and
/// the last element equal to best_J. Throws TraceCorrupt on any mismatch.
inline SequenceReport minimizing_sequence_report(const OptTrace& trace, const Objective& obj,
                                                 const ClassParams& params) {
  require(!trace.improvements.empty(), ErrorCode::TraceCorrupt, "trace has no accepted candidate");
  SequenceReport rep;
  double prev = std::numeric_limits<double>::infinity();
  for (const auto& imp : trace.improvements) {
    if (!(imp.J < prev)) fail(ErrorCode::TraceCorrupt, "J is not strictly decreasing at iteration " + std::to_string(imp.iteration));
    prev = imp.J;
    SequenceEntry e;
    e.iteration = imp.iteration;
    e.stored_J = imp.J;
    e.member = check_membership(imp.mask, params).member();
    if (!e.member) fail(ErrorCode::TraceCorrupt, "stored mask at iteration " + std::to_string(imp.iteration) + " is not a member");
    e.recomputed_J = evaluate(imp.mask, obj).J;
    const double bound = 10.0 * obj.pde_tol * std::max(std::abs(e.stored_J), std::abs(e.recomputed_J));
    if (!(std::abs(e.recomputed_J - e.stored_J) <= bound))
      fail(ErrorCode::TraceCorrupt, "J mismatch at iteration " + std::to_string(imp.iteration));
    if (imp.iteration < trace.records.size() && trace.records[imp.iteration].J != imp.J)
      fail(ErrorCode::TraceCorrupt, "record and minimizing sequence disagree at iteration " + std::to_string(imp.iteration));
    rep.entries.push_back(e);
  }
  rep.limit_J = trace.improvements.back().J;
  if (rep.limit_J != trace.best_J || trace.inf_estimate != trace.best_J)
    fail(ErrorCode::TraceCorrupt, "best_J is not the limit of the minimizing sequence");
  return rep;
}

}  // namespace cmclass
