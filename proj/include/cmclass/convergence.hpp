#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "cmclass/cm_class.hpp"
#include "cmclass/connectivity.hpp"
#include "cmclass/edt.hpp"
#include "cmclass/grid.hpp"
#include "cmclass/metrics.hpp"

namespace cmclass {

/// Finite stand-in for a domain sequence; repetition models an infinite sequence.
class DomainSequence {
 public:
  DomainSequence() = default;
  explicit DomainSequence(std::vector<DomainMask> masks, std::vector<std::string> labels = {})
      : masks_(std::move(masks)), labels_(std::move(labels)) {
    require(!masks_.empty(), ErrorCode::InvalidArgument, "sequence is empty");
    for (const auto& m : masks_) require_same_grid(masks_.front().grid(), m.grid());
    require(labels_.empty() || labels_.size() == masks_.size(), ErrorCode::InvalidArgument,
            "label count does not match mask count");
  }

  const GridSpec& grid() const { return masks_.front().grid(); }
  const std::vector<DomainMask>& masks() const noexcept { return masks_; }
  const std::vector<std::string>& labels() const noexcept { return labels_; }
  std::size_t size() const noexcept { return masks_.size(); }
  const DomainMask& operator[](std::size_t i) const { return masks_[i]; }

  DomainSequence subsequence(const std::vector<std::size_t>& indices) const {
    std::vector<DomainMask> out;
    out.reserve(indices.size());
    for (auto i : indices) out.push_back(masks_.at(i));
    return DomainSequence(std::move(out));
  }

 private:
  std::vector<DomainMask> masks_;
  std::vector<std::string> labels_;
};

/// Pairwise rho over a sequence. Equal masks are collapsed before any distance
/// work, so sequences sampled with repetition cost only their distinct values.
class PairwiseRho {
 public:
  explicit PairwiseRho(const DomainSequence& seq) : n_(seq.size()) {
    slot_.resize(n_);
    std::vector<const DomainMask*> distinct;
    for (std::size_t i = 0; i < n_; ++i) {
      std::size_t s = 0;
      while (s < distinct.size() && !(*distinct[s] == seq[i])) ++s;
      if (s == distinct.size()) distinct.push_back(&seq[i]);
      slot_[i] = s;
    }
    const auto u = distinct.size();
    std::vector<DistanceField> fields;
    fields.reserve(u);
    for (auto* m : distinct) fields.push_back(edt(*m));
    std::vector<std::int64_t> directed(u * u, 0);
    for (std::size_t a = 0; a < u; ++a)
      for (std::size_t b = 0; b < u; ++b)
        if (a != b) directed[a * u + b] = directed_complement_steps(*distinct[a], fields[b]);
    table_.assign(u * u, 0.0);
    for (std::size_t a = 0; a < u; ++a)
      for (std::size_t b = 0; b < u; ++b)
        table_[a * u + b] = seq.grid().length(std::max(directed[a * u + b], directed[b * u + a]));
    distinct_ = u;
  }

  double operator()(std::size_t i, std::size_t j) const { return table_[slot_[i] * distinct_ + slot_[j]]; }
  std::size_t distinct() const noexcept { return distinct_; }

 private:
  std::size_t n_;
  std::size_t distinct_ = 0;
  std::vector<std::size_t> slot_;
  std::vector<double> table_;
};

struct ConvergenceReport {
  std::vector<std::size_t> selected_indices;
  std::size_t limit_index = 0;  ///< position in the input sequence of the medoid
  DomainMask limit;
  std::vector<double> residuals;  ///< rho(selected mask, limit), aligned with selected_indices
  double cauchy_tol = 0.0;
  bool degenerate = false;  ///< no value recurs within tol; the reported cluster is a singleton
  std::optional<MembershipReport> limit_membership;
};

/// Selection by greedy clustering under rho. The center is the mask with the
/// most sequence members within tol (ties: earliest); the cluster is every index
/// within tol of it; the limit is the cluster medoid (smallest max residual,
/// ties: earliest).
inline ConvergenceReport select_convergent(const DomainSequence& seq, double tol,
                                           const std::optional<ClassParams>& params = std::nullopt) {
  require(std::isfinite(tol) && tol >= 0.0, ErrorCode::InvalidArgument, "tol must be nonnegative");
  const PairwiseRho rho_of(seq);
  const auto n = seq.size();

  std::size_t center = 0;
  std::size_t best_count = 0;
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t count = 0;
    for (std::size_t j = 0; j < n; ++j)
      if (rho_of(i, j) <= tol) ++count;
    if (count > best_count) {
      best_count = count;
      center = i;
    }
  }

  ConvergenceReport rep;
  rep.cauchy_tol = tol;
  for (std::size_t j = 0; j < n; ++j)
    if (rho_of(center, j) <= tol) rep.selected_indices.push_back(j);
  rep.degenerate = n > 1 && rep.selected_indices.size() == 1;

  double best_spread = std::numeric_limits<double>::infinity();
  for (auto m : rep.selected_indices) {
    double spread = 0.0;
    for (auto j : rep.selected_indices) spread = std::max(spread, rho_of(m, j));
    if (spread < best_spread) {
      best_spread = spread;
      rep.limit_index = m;
    }
  }
  rep.limit = seq[rep.limit_index];
  for (auto j : rep.selected_indices) rep.residuals.push_back(rho_of(j, rep.limit_index));
  if (params) rep.limit_membership = check_membership(rep.limit, *params);
  return rep;
}

/// Accumulation-point limit: a cell belongs to the limit complement when its
/// smallest distance to the sequence complements is at most tol. The finite
/// sequence is read as one period of a periodic sequence, so the liminf over
/// the sequence is the minimum over its members.
inline DomainMask h_limit_accumulation(const DomainSequence& seq, double tol) {
  require(seq.size() >= 2, ErrorCode::InvalidArgument, "need at least two masks");
  require(std::isfinite(tol) && tol >= 0.0, ErrorCode::InvalidArgument, "tol must be nonnegative");
  const auto& grid = seq.grid();
  std::vector<std::int64_t> nearest(grid.size(), std::numeric_limits<std::int64_t>::max());
  for (const auto& m : seq.masks()) {
    const auto d = edt(m);
    for (CellIndex i = 0; i < grid.size(); ++i) nearest[i] = std::min(nearest[i], d.squared_steps(i));
  }
  std::vector<std::uint8_t> in(grid.size(), 0);
  for (CellIndex i = 0; i < grid.size(); ++i) in[i] = grid.length(nearest[i]) > tol ? 1 : 0;
  return DomainMask(grid, std::move(in));
}

struct GammaResult {
  bool holds = false;
  std::size_t index = 0;  ///< n_K when holds, otherwise the latest violating index
};

/// Eventual containment of K in the sequence members, given that K with its
/// face halo sits inside the limit.
inline GammaResult gamma_property_check(const DomainSequence& seq, const DomainMask& limit, const CompactSet& k) {
  require_same_grid(seq.grid(), limit.grid());
  require_same_grid(seq.grid(), k.grid());
  const Neighborhood face(limit.grid(), Adjacency::Face);
  for (auto c : k.cells()) {
    bool ok = limit[c];
    face.for_each(c, [&](CellIndex n) { ok = ok && limit[n]; });
    if (!ok) fail(ErrorCode::NotCompactlyInside, "cell " + limit.grid().describe(c) + " or its halo leaves the limit");
  }
  const auto contains_k = [&](const DomainMask& m) {
    return std::all_of(k.cells().begin(), k.cells().end(), [&](CellIndex c) { return m[c]; });
  };
  for (std::size_t n = seq.size(); n-- > 0;) {
    if (contains_k(seq[n])) continue;
    if (n + 1 == seq.size()) return {false, n};
    return {true, n + 1};
  }
  return {true, 0};
}

struct NestedLimitResult {
  bool nested = true;
  std::optional<CellIndex> counterexample;  ///< a cell in the inner limit but not the outer one
};

/// Nested sequences keep nested accumulation limits: inner_n inside outer_n for
/// every n implies the same for the limits.
inline NestedLimitResult nested_limit_check(const DomainSequence& outer, const DomainSequence& inner, double tol) {
  require(outer.size() == inner.size(), ErrorCode::InvalidArgument, "sequences differ in length");
  require_same_grid(outer.grid(), inner.grid());
  for (std::size_t n = 0; n < outer.size(); ++n)
    for (CellIndex i = 0; i < outer.grid().size(); ++i)
      require(!inner[n][i] || outer[n][i], ErrorCode::InvalidArgument,
              "inner member " + std::to_string(n) + " is not inside the outer member");
  const auto lo = h_limit_accumulation(outer, tol);
  const auto li = h_limit_accumulation(inner, tol);
  for (CellIndex i = 0; i < lo.size(); ++i)
    if (li[i] && !lo[i]) return {false, i};
  return {};
}

struct LemmaCheck {
  std::string name;
  bool passed = false;
  std::string detail;
};

struct LemmaReport {
  ConvergenceReport selection;
  std::vector<LemmaCheck> checks;
  bool all_passed() const {
    return std::all_of(checks.begin(), checks.end(), [](const LemmaCheck& c) { return c.passed; });
  }
};

namespace detail {

inline DomainSequence at_least_two(const DomainSequence& s) {
  if (s.size() >= 2) return s;
  return DomainSequence({s[0], s[0]});
}

inline DomainMask ball_mask(const GridSpec& grid, CellIndex center, double r) {
  std::vector<std::uint8_t> in(grid.size(), 0);
  for (CellIndex i = 0; i < grid.size(); ++i) in[i] = (!grid.on_margin(i) && grid.distance(center, i) < r) ? 1 : 0;
  return DomainMask(grid, std::move(in));
}

}  // namespace detail

/// Runs the convergence lemmas on the subsequence picked by select_convergent:
/// accumulation limit vs. metric limit, nested limits of inner balls, the ball
/// limit, connectedness of the limit of connected sets, and the Gamma-property.
inline LemmaReport lemma_suite(const DomainSequence& seq, double tol) {
  LemmaReport out;
  out.selection = select_convergent(seq, tol);
  const auto& sel = out.selection;
  const auto sub = detail::at_least_two(seq.subsequence(sel.selected_indices));
  const auto& grid = seq.grid();
  const auto& limit = sel.limit;
  const auto limit_edt = edt(limit);
  for (const auto& m : sub.masks()) require(!m.empty(), ErrorCode::EmptyDomain, "sequence member is empty");

  {
    const auto acc = h_limit_accumulation(sub, tol);
    const double gap = rho(acc, limit).value;
    out.checks.push_back({"accumulation_limit", gap <= 2.0 * tol,
                          "rho(accumulation limit, medoid) = " + std::to_string(gap)});
  }

  std::vector<CellIndex> centers;
  std::vector<double> radii;
  for (const auto& m : sub.masks()) {
    const auto [c, r] = edt(m).argmax();
    centers.push_back(c);
    radii.push_back(r);
  }
  const double r0 = *std::min_element(radii.begin(), radii.end());

  {
    std::vector<DomainMask> balls;
    for (auto c : centers) balls.push_back(detail::ball_mask(grid, c, r0));
    const auto res = nested_limit_check(sub, DomainSequence(std::move(balls)), tol);
    out.checks.push_back({"nested_limits", res.nested,
                          res.nested ? "ball limits stay inside domain limits"
                                     : "cell " + grid.describe(*res.counterexample) + " escapes"});
  }

  {
    std::vector<double> mean(static_cast<std::size_t>(grid.dim()), 0.0);
    for (auto c : centers)
      for (int a = 0; a < grid.dim(); ++a) mean[static_cast<std::size_t>(a)] += grid.center(c, a);
    CellCoord cc{};
    for (int a = 0; a < grid.dim(); ++a) {
      const double m = mean[static_cast<std::size_t>(a)] / static_cast<double>(centers.size());
      const auto q = std::llround((m - grid.origin()[static_cast<std::size_t>(a)]) / grid.spacing());
      cc[static_cast<std::size_t>(a)] = std::clamp<std::int64_t>(q, 0, grid.extent(a) - 1);
    }
    const auto x0 = grid.index(cc);
    double slack = std::numeric_limits<double>::infinity();
    for (std::size_t n = 0; n < sub.size(); ++n) {
      const double res = n < sel.residuals.size() ? sel.residuals[n] : 0.0;
      slack = std::min(slack, grid.distance(x0, centers[n]) + res);
    }
    const bool ok = limit_edt[x0] >= r0 - slack;
    out.checks.push_back({"ball_limit", ok,
                          "limit depth at mean center " + grid.describe(x0) + " = " + std::to_string(limit_edt[x0]) +
                              ", required " + std::to_string(r0 - slack)});
  }

  {
    std::vector<std::int64_t> farthest(grid.size(), 0);
    for (const auto& m : sub.masks()) {
      const auto d = distance_to(CompactSet::of_mask(m));
      for (CellIndex i = 0; i < grid.size(); ++i) farthest[i] = std::max(farthest[i], d.squared_steps(i));
    }
    std::vector<std::uint8_t> k(grid.size(), 0);
    for (CellIndex i = 0; i < grid.size(); ++i) k[i] = grid.length(farthest[i]) <= tol ? 1 : 0;
    std::vector<std::uint8_t> grown = k;
    const Neighborhood nb(grid, Adjacency::FaceVertex);
    for (CellIndex i = 0; i < grid.size(); ++i)
      if (k[i]) nb.for_each(i, [&](CellIndex n) { grown[n] = 1; });
    const int count = connected_components(grid, grown, Adjacency::FaceVertex).count;
    out.checks.push_back({"connected_limit", count == 1, "limit components after one-cell dilation = " +
                                                             std::to_string(count)});
  }

  {
    std::vector<CellIndex> core;
    for (CellIndex i = 0; i < grid.size(); ++i)
      if (limit_edt[i] > tol + grid.spacing()) core.push_back(i);
    if (core.empty()) {
      out.checks.push_back({"gamma_property", true, "vacuous: limit has no core deeper than tol + h"});
    } else {
      const auto g = gamma_property_check(sub, limit, CompactSet(grid, std::move(core)));
      out.checks.push_back({"gamma_property", g.holds, "n_K = " + std::to_string(g.index)});
    }
  }
  return out;
}

}  // namespace cmclass
