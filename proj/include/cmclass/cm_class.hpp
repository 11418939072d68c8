#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <vector>

#include "cmclass/connectivity.hpp"
#include "cmclass/edt.hpp"
#include "cmclass/grid.hpp"
#include "cmclass/metrics.hpp"
#include "cmclass/morphology.hpp"

namespace cmclass {

/// Class parameters: tube shrink factor M > 1 and inner-ball radius R.
struct ClassParams {
  double M = 2.0;
  double R = 0.1;
  std::optional<CellIndex> seed_hint;
};

inline void validate(const ClassParams& p, const GridSpec& grid) {
  require(std::isfinite(p.M) && p.M > 1.0, ErrorCode::InvalidArgument, "M must be > 1");
  require(std::isfinite(p.R) && p.R >= 2.0 * grid.spacing(), ErrorCode::InvalidArgument,
          "R must be at least two cells");
  if (p.seed_hint) require(*p.seed_hint < grid.size(), ErrorCode::InvalidArgument, "seed hint out of range");
}

/// A connected cell set joining x and y that stays in the erosion at `radius`.
struct TubeWitness {
  CellPair pair;
  double d_star = 0.0;
  double radius = 0.0;
  std::vector<CellIndex> path;  ///< ordered cell path from pair.from to pair.to
  CompactSet k_set;
};

/// A pair violating the tube condition at `level` (= d*), with the ids of the
/// components of the erosion at level / M that hold each endpoint.
struct FailingPair {
  CellIndex x = 0;
  CellIndex y = 0;
  double level = 0.0;
  double required_radius = 0.0;  ///< level / M
  int component_x = -1;
  int component_y = -1;
};

struct InnerBall {
  CellIndex center = 0;
  double radius = 0.0;
};

struct CmVerdict {
  bool holds = true;
  std::optional<FailingPair> failing;
};

struct MembershipReport {
  bool nonempty = false;
  bool connected = false;
  bool compactly_contained = false;
  std::optional<InnerBall> inner_ball;
  bool cm_holds = false;
  std::optional<FailingPair> failing_pair;
  std::vector<TubeWitness> witnesses;

  bool member() const { return nonempty && connected && compactly_contained && inner_ball.has_value() && cm_holds; }
};

namespace detail {

// True cells ordered by decreasing distance, ties by increasing index.
inline std::vector<CellIndex> cells_by_depth(const DomainMask& omega, const DistanceField& dist) {
  auto cells = omega.true_cells();
  std::stable_sort(cells.begin(), cells.end(),
                   [&](CellIndex a, CellIndex b) { return dist.squared_steps(a) > dist.squared_steps(b); });
  return cells;
}

inline void require_inside(const DomainMask& omega, CellIndex c) {
  require(c < omega.size() && omega[c], ErrorCode::OutsideDomain,
          "cell " + (c < omega.size() ? omega.grid().describe(c) : std::to_string(c)) + " is not in the domain");
}

}  // namespace detail

/// Largest erosion level (an EDT value, or 0) at which x and y share a
/// face+vertex component of the erosion.
inline double max_tube_radius(const DomainMask& omega, const DistanceField& dist, CellIndex x, CellIndex y) {
  detail::require_inside(omega, x);
  detail::require_inside(omega, y);
  if (x == y) return dist[x];
  const auto order = detail::cells_by_depth(omega, dist);
  const Neighborhood nb(omega.grid(), Adjacency::FaceVertex);
  UnionFind uf(omega.size());
  std::vector<std::uint8_t> inserted(omega.size(), 0);
  std::size_t i = 0;
  while (i < order.size()) {
    const auto level = dist.squared_steps(order[i]);
    for (; i < order.size() && dist.squared_steps(order[i]) == level; ++i) {
      const auto c = order[i];
      inserted[c] = 1;
      nb.for_each(c, [&](CellIndex n) {
        if (inserted[n]) uf.unite(c, n);
      });
    }
    if (inserted[x] && inserted[y] && uf.same(x, y)) return omega.grid().length(level);
  }
  return 0.0;
}

inline double max_tube_radius(const DomainMask& omega, CellIndex x, CellIndex y) {
  return max_tube_radius(omega, edt(omega), x, y);
}

/// Level-sweep decision of the tube property. For each distinct EDT value d,
/// taken in decreasing order, every cell with EDT >= d must lie in a single
/// component of the erosion at d / M. Union-find carries both the erosion
/// (inserted as d / M falls) and a per-root count of the level-d cells.
inline CmVerdict check_cm(const DomainMask& omega, const DistanceField& dist, double M) {
  require(std::isfinite(M) && M > 1.0, ErrorCode::InvalidArgument, "M must be > 1");
  require(!omega.empty(), ErrorCode::EmptyDomain, "domain is empty");
  if (connected_components(omega, Adjacency::FaceVertex).count != 1)
    fail(ErrorCode::NotConnected, "domain has more than one component");

  const auto order = detail::cells_by_depth(omega, dist);
  const Neighborhood nb(omega.grid(), Adjacency::FaceVertex);
  UnionFind uf(omega.size());
  std::vector<std::uint8_t> inserted(omega.size(), 0);
  std::vector<std::size_t> s_count(omega.size(), 0);
  std::size_t s_total = 0;
  std::size_t next_e = 0;  // next cell to insert into the erosion
  std::size_t next_s = 0;  // next cell to add to the level set

  const auto join = [&](CellIndex a, CellIndex b) {
    const auto ra = uf.find(a);
    const auto rb = uf.find(b);
    if (ra == rb) return;
    const auto total = s_count[ra] + s_count[rb];
    s_count[uf.unite(ra, rb)] = total;
  };

  while (next_s < order.size()) {
    const auto level_steps = dist.squared_steps(order[next_s]);
    const double d = dist[order[next_s]];
    const double t = d / M;
    for (; next_e < order.size() && dist[order[next_e]] >= t; ++next_e) {
      const auto c = order[next_e];
      inserted[c] = 1;
      nb.for_each(c, [&](CellIndex n) {
        if (inserted[n]) join(c, n);
      });
    }
    const auto first_new = next_s;
    for (; next_s < order.size() && dist.squared_steps(order[next_s]) == level_steps; ++next_s) {
      ++s_count[uf.find(order[next_s])];
      ++s_total;
    }
    const auto ref = order.front();
    if (s_count[uf.find(ref)] == s_total) continue;

    FailingPair fp;
    fp.x = ref;
    for (auto i = first_new; i < next_s; ++i) {
      if (!uf.same(order[i], ref)) {
        fp.y = order[i];
        break;
      }
    }
    fp.level = d;
    fp.required_radius = t;
    const auto labels = connected_components(erode(dist, t), Adjacency::FaceVertex);
    fp.component_x = labels.label[fp.x];
    fp.component_y = labels.label[fp.y];
    return {false, fp};
  }
  return {true, std::nullopt};
}

inline CmVerdict check_cm(const DomainMask& omega, double M) { return check_cm(omega, edt(omega), M); }

/// Shortest face+vertex cell path from x to y inside the erosion at r; among
/// shortest paths, the one with lexicographically smallest cell indices.
inline TubeWitness witness_path(const DomainMask& omega, const DistanceField& dist, CellIndex x, CellIndex y,
                                double r) {
  detail::require_inside(omega, x);
  detail::require_inside(omega, y);
  require(std::isfinite(r) && r > 0.0, ErrorCode::InvalidArgument, "tube radius must be positive");
  const auto in_tube = [&](CellIndex c) { return omega[c] && dist[c] >= r; };
  if (!in_tube(x) || !in_tube(y))
    fail(ErrorCode::NotTubeConnected, "endpoint lies outside the erosion at the requested radius");

  const Neighborhood nb(omega.grid(), Adjacency::FaceVertex);
  constexpr auto unseen = std::numeric_limits<std::size_t>::max();
  std::vector<std::size_t> hops(omega.size(), unseen);
  std::vector<CellIndex> queue{y};
  hops[y] = 0;
  for (std::size_t head = 0; head < queue.size() && hops[x] == unseen; ++head) {
    const auto c = queue[head];
    nb.for_each(c, [&](CellIndex n) {
      if (hops[n] == unseen && in_tube(n)) {
        hops[n] = hops[c] + 1;
        queue.push_back(n);
      }
    });
  }
  if (hops[x] == unseen)
    fail(ErrorCode::NotTubeConnected, "endpoints lie in different components of the erosion");

  TubeWitness w;
  w.pair = {x, y};
  w.d_star = std::min(dist[x], dist[y]);
  w.radius = r;
  w.path.push_back(x);
  for (auto c = x; c != y;) {
    CellIndex next = unseen;
    nb.for_each(c, [&](CellIndex n) {
      if (next == unseen && hops[n] != unseen && hops[n] + 1 == hops[c]) next = n;
    });
    c = next;
    w.path.push_back(c);
  }
  w.k_set = CompactSet(omega.grid(), w.path);
  return w;
}

inline TubeWitness witness_path(const DomainMask& omega, CellIndex x, CellIndex y, double r) {
  return witness_path(omega, edt(omega), x, y, r);
}

/// Re-checks a witness from scratch: endpoints in the set, set connected, set inside the erosion.
inline bool validate_witness(const DomainMask& omega, const TubeWitness& w) {
  if (!(w.k_set.grid() == omega.grid())) return false;
  if (!w.k_set.contains(w.pair.from) || !w.k_set.contains(w.pair.to)) return false;
  if (connected_components(w.k_set, Adjacency::FaceVertex).count != 1) return false;
  const auto dist = edt(omega);
  for (auto c : w.k_set.cells())
    if (!omega[c] || dist[c] < w.radius) return false;
  return true;
}

/// Full class predicate. Failures are reported as fields, not errors.
/// `witness_samples` > 0 additionally records tube witnesses from the inner-ball
/// center to that many evenly spaced true cells.
inline MembershipReport check_membership(const DomainMask& omega, const ClassParams& params,
                                         std::size_t witness_samples = 0) {
  validate(params, omega.grid());
  MembershipReport rep;
  rep.compactly_contained = true;
  for (CellIndex i = 0; i < omega.size(); ++i)
    if (omega[i] && omega.grid().on_margin(i)) rep.compactly_contained = false;
  rep.nonempty = !omega.empty();
  if (!rep.nonempty) return rep;

  const auto dist = edt(omega);
  const auto labels = connected_components(omega, Adjacency::FaceVertex);
  rep.connected = labels.count == 1;
  const auto [center, depth] = dist.argmax();
  if (depth >= params.R) rep.inner_ball = InnerBall{center, depth};

  if (!rep.connected) {
    FailingPair fp;
    fp.x = static_cast<CellIndex>(std::find(labels.label.begin(), labels.label.end(), 0) - labels.label.begin());
    fp.y = static_cast<CellIndex>(std::find(labels.label.begin(), labels.label.end(), 1) - labels.label.begin());
    fp.level = std::min(dist[fp.x], dist[fp.y]);
    fp.required_radius = fp.level / params.M;
    fp.component_x = 0;
    fp.component_y = 1;
    rep.failing_pair = fp;
    return rep;
  }

  const auto verdict = check_cm(omega, dist, params.M);
  rep.cm_holds = verdict.holds;
  rep.failing_pair = verdict.failing;

  if (rep.cm_holds && witness_samples > 0) {
    const auto cells = omega.true_cells();
    const auto step = std::max<std::size_t>(1, cells.size() / witness_samples);
    for (std::size_t i = 0; i < cells.size() && rep.witnesses.size() < witness_samples; i += step) {
      const auto y = cells[i];
      const double r = std::min(dist[center], dist[y]) / params.M;
      rep.witnesses.push_back(witness_path(omega, dist, center, y, r));
    }
  }
  return rep;
}

/// Feasibility restoration into the class (a heuristic, not a metric
/// projection). Each round keeps the seed's component, force-adds the seed ball
/// when it is missing, and at the highest failing level d replaces the domain by
/// the opening (union of radius-d/M open balls) of the erosion component that
/// holds the seed. Stops at the first member or fails after `max_rounds`.
inline DomainMask repair_to_class(const DomainMask& omega, const ClassParams& params, CellIndex seed,
                                  int max_rounds = 50) {
  validate(params, omega.grid());
  const auto& grid = omega.grid();
  require(seed < grid.size() && !grid.on_margin(seed), ErrorCode::InvalidArgument, "seed must be an interior cell");
  if (check_membership(omega, params).member()) return omega;

  std::vector<std::uint8_t> cur(omega.cells().begin(), omega.cells().end());
  for (int round = 0; round < max_rounds; ++round) {
    {
      const DomainMask m(grid, cur);
      const auto d = edt(m);
      if (!(d[seed] >= params.R)) {
        for (CellIndex i = 0; i < grid.size(); ++i) {
          if (grid.distance(seed, i) < params.R) {
            if (grid.on_margin(i)) fail(ErrorCode::RepairFailed, "seed ball reaches the outer ring");
            cur[i] = 1;
          }
        }
      }
    }
    {
      const auto labels = connected_components(grid, cur, Adjacency::FaceVertex);
      const int keep = labels.label[seed];
      for (CellIndex i = 0; i < grid.size(); ++i) cur[i] = labels.label[i] == keep ? 1 : 0;
    }
    const DomainMask m(grid, cur);
    const auto dist = edt(m);
    const auto verdict = check_cm(m, dist, params.M);
    if (verdict.holds) {
      if (dist[seed] >= params.R && check_membership(m, params).member()) return m;
      continue;  // the seed ball went missing; the next round restores it
    }

    const double t = verdict.failing->required_radius;
    const auto eroded = erode(dist, t);
    const auto labels = connected_components(eroded, Adjacency::FaceVertex);
    CellIndex anchor = seed;
    if (!eroded[seed]) {
      std::int64_t best = std::numeric_limits<std::int64_t>::max();
      for (CellIndex i = 0; i < grid.size(); ++i) {
        if (!eroded[i]) continue;
        const auto s = grid.squared_steps(seed, i);
        if (s < best) {
          best = s;
          anchor = i;
        }
      }
    }
    std::vector<std::uint8_t> keeper(grid.size(), 0);
    for (CellIndex i = 0; i < grid.size(); ++i) keeper[i] = labels.label[i] == labels.label[anchor] ? 1 : 0;
    const auto opened = open_ball_union(grid, keeper, t);
    for (CellIndex i = 0; i < grid.size(); ++i) cur[i] = (cur[i] && opened[i]) ? 1 : 0;
    if (std::count(cur.begin(), cur.end(), std::uint8_t{1}) == 0) fail(ErrorCode::RepairFailed, "repair emptied the domain");
  }
  fail(ErrorCode::RepairFailed, "no class member reached within " + std::to_string(max_rounds) + " rounds");
}

}  // namespace cmclass
