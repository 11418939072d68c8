#pragma once

#include <cstdint>
#include <utility>

#include "cmclass/edt.hpp"
#include "cmclass/grid.hpp"
#include "cmclass/morphology.hpp"

namespace cmclass {

struct CellPair {
  CellIndex from = 0;
  CellIndex to = 0;
  friend bool operator==(const CellPair&, const CellPair&) = default;
};

/// Two-sided Hausdorff distance with the cell pairs realizing each directed sup.
struct MetricReport {
  double value = 0.0;
  CellPair forward;   ///< x in the first set and its nearest cell in the second
  CellPair backward;  ///< y in the second set and its nearest cell in the first
};

namespace detail {

// sup over `from` of the distance to `to`, using a precomputed distance field to `to`.
// Ties go to the smallest cell index on both sides of the pair.
inline std::pair<std::int64_t, CellPair> directed_sup(const CompactSet& from, const CompactSet& to,
                                                      const DistanceField& to_field) {
  std::int64_t best = -1;
  CellIndex arg = from.cells().front();
  for (auto c : from.cells()) {
    const auto s = to_field.squared_steps(c);
    if (s > best) {
      best = s;
      arg = c;
    }
  }
  CellIndex nearest = to.cells().front();
  for (auto c : to.cells()) {
    if (from.grid().squared_steps(arg, c) == best) {
      nearest = c;
      break;
    }
  }
  return {best, {arg, nearest}};
}

}  // namespace detail

/// Hausdorff distance between compact cell sets.
inline MetricReport delta(const CompactSet& k1, const CompactSet& k2) {
  require_same_grid(k1.grid(), k2.grid());
  const auto to_k2 = distance_to(k2);
  const auto to_k1 = distance_to(k1);
  const auto [fwd, fwd_pair] = detail::directed_sup(k1, k2, to_k2);
  const auto [bwd, bwd_pair] = detail::directed_sup(k2, k1, to_k1);
  return {k1.grid().length(std::max(fwd, bwd)), fwd_pair, bwd_pair};
}

/// Hausdorff-Pompeiu distance between open sets: delta of their closed complements.
inline MetricReport rho(const DomainMask& omega1, const DomainMask& omega2) {
  require_same_grid(omega1.grid(), omega2.grid());
  return delta(closed_complement(omega1), closed_complement(omega2));
}

/// Directed complement distance sup_{x outside omega1} dist(x, outside omega2), in
/// squared steps, reusing the EDT of omega2. Used by the pairwise routines.
inline std::int64_t directed_complement_steps(const DomainMask& omega1, const DistanceField& edt2) {
  std::int64_t best = 0;
  for (CellIndex i = 0; i < omega1.size(); ++i)
    if (!omega1[i] && edt2.squared_steps(i) > best) best = edt2.squared_steps(i);
  return best;
}

/// rho from precomputed distance fields of both masks.
inline double rho_value(const DomainMask& omega1, const DistanceField& edt1, const DomainMask& omega2,
                        const DistanceField& edt2) {
  return omega1.grid().length(
      std::max(directed_complement_steps(omega1, edt2), directed_complement_steps(omega2, edt1)));
}

/// True iff every cell of a lies within strict distance eps of some cell of b.
inline bool eps_cover_check(const CompactSet& a, const CompactSet& b, double eps) {
  require_same_grid(a.grid(), b.grid());
  require(eps > 0.0, ErrorCode::InvalidArgument, "eps must be positive");
  const auto to_b = distance_to(b);
  for (auto c : a.cells())
    if (!(to_b[c] < eps)) return false;
  return true;
}

/// dist(K, boundary of omega): the smallest EDT value over K.
inline double dist_compact_to_boundary(const CompactSet& k, const DomainMask& omega, const DistanceField& dist) {
  require_same_grid(k.grid(), omega.grid());
  double best = std::numeric_limits<double>::infinity();
  for (auto c : k.cells()) {
    require(omega[c], ErrorCode::NotContained, "cell " + k.grid().describe(c) + " is outside the domain");
    best = std::min(best, dist[c]);
  }
  return best;
}

inline double dist_compact_to_boundary(const CompactSet& k, const DomainMask& omega) {
  return dist_compact_to_boundary(k, omega, edt(omega));
}

}  // namespace cmclass
