#include <gtest/gtest.h>

#include <random>

#include "test_support.hpp"

using namespace cmclass;
using namespace cmtest;

namespace {

constexpr double kH = 1.0 / 128.0;

const GridSpec& dumbbell_grid() {
  static const GridSpec g = centered_grid(68, 30, kH);
  return g;
}

const DomainMask& neck_dumbbell() {
  static const DomainMask m = dumbbell(dumbbell_grid(), 0.2, 0.3, 0.02);
  return m;
}

double dist_to_point(const GridSpec& g, CellIndex c, double x, double y) {
  return std::hypot(g.center(c, 0) - x, g.center(c, 1) - y);
}

// Deepest cell of the lobe whose center is at (cx, 0).
CellIndex lobe_center(const DomainMask& m, double cx) {
  const auto f = edt(m);
  CellIndex best = 0;
  double bv = -1.0;
  for (auto c : m.true_cells())
    if ((m.grid().center(c, 0) - cx) * cx > -0.25 * cx * cx && dist_to_point(m.grid(), c, cx, 0.0) < 0.1 && f[c] > bv) {
      bv = f[c];
      best = c;
    }
  return best;
}

DomainMask scaled(const DomainMask& m, double c) {
  const auto& g = m.grid();
  std::vector<double> origin;
  for (int a = 0; a < g.dim(); ++a) origin.push_back(g.origin()[static_cast<std::size_t>(a)] * c);
  return DomainMask(GridSpec(g.extents(), g.spacing() * c, origin), std::vector<std::uint8_t>(m.cells().begin(), m.cells().end()));
}

}  // namespace

TEST(MaxTubeRadius, SameCellIsDepth) {
  const auto g = unit_grid(20);
  const auto d = disk(g, 0.5, 0.5, 0.35);
  const auto c = g.index({10, 12});
  EXPECT_EQ(max_tube_radius(d, c, c), edt(d)[c]);
}

TEST(MaxTubeRadius, ConvexDiskSegment) {
  const double h = 1.0 / 64.0;
  const auto g = centered_grid(32, 32, h);
  const auto d = disk(g, 0.0, 0.0, 0.4);
  const auto f = edt(d);
  const auto x = g.index({32 - 8, 32 + 6}), y = g.index({32 + 8, 32 - 5});  // about 0.3 apart, either side of center
  EXPECT_NEAR(g.distance(x, y), 0.3, 2 * h);
  EXPECT_GE(max_tube_radius(d, x, y), std::min(f[x], f[y]));
}

TEST(MaxTubeRadius, DumbbellCentersMatchBisection) {
  const auto& m = neck_dumbbell();
  const auto x = lobe_center(m, -0.3), y = lobe_center(m, 0.3);
  const double r = max_tube_radius(m, x, y);
  EXPECT_NEAR(r, 0.02, kH);
  EXPECT_EQ(r, tube_radius_bisect(m, x, y));
}

TEST(MaxTubeRadius, MatchesWidestPathOracle) {
  std::mt19937_64 rng(31);
  const auto g = unit_grid(15);
  for (int t = 0; t < 20; ++t) {
    const auto m = random_blob(g, rng, 60 + rng() % 120);
    const auto f = edt(m);
    const auto cells = m.true_cells();
    const auto x = cells[rng() % cells.size()];
    const auto w = widest_from(m, brute_edt(m), x);
    for (int k = 0; k < 20; ++k) {
      const auto y = cells[rng() % cells.size()];
      const double want = x == y ? f[x] : w[y];
      ASSERT_EQ(max_tube_radius(m, f, x, y), want);
    }
  }
}

TEST(MaxTubeRadius, MonotoneUnderEnlargement) {
  std::mt19937_64 rng(32);
  const auto g = unit_grid(15);
  for (int t = 0; t < 20; ++t) {
    const auto m = random_blob(g, rng, 80);
    auto bigger = m;
    for (int k = 0; k < 15; ++k) {
      const auto c = rng() % g.size();
      if (!g.on_margin(c)) bigger = bigger.with(c, true);
    }
    const auto cells = m.true_cells();
    const auto x = cells[rng() % cells.size()], y = cells[rng() % cells.size()];
    EXPECT_GE(max_tube_radius(bigger, x, y), max_tube_radius(m, x, y));
  }
}

TEST(MaxTubeRadius, OutsideDomain) {
  const auto g = unit_grid(10);
  const auto d = disk(g, 0.5, 0.5, 0.3);
  try {
    max_tube_radius(d, g.index({1, 1}), g.index({5, 5}));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::OutsideDomain);
  }
}

TEST(CheckCm, DumbbellFailsAtM5) {
  const auto& m = neck_dumbbell();
  const auto v = check_cm(m, 5.0);
  ASSERT_FALSE(v.holds);
  ASSERT_TRUE(v.failing.has_value());
  const auto& fp = *v.failing;
  const auto& g = dumbbell_grid();
  const auto left = lobe_center(m, -0.3), right = lobe_center(m, 0.3);
  EXPECT_EQ(std::min(fp.x, fp.y), left);
  EXPECT_EQ(std::max(fp.x, fp.y), right);
  EXPECT_LE(dist_to_point(g, left, -0.3, 0.0), kH);
  EXPECT_LE(dist_to_point(g, right, 0.3, 0.0), kH);
  // Per-pair oracle at the centers.
  const auto f = edt(m);
  EXPECT_LT(tube_radius_bisect(m, fp.x, fp.y), std::min(f[fp.x], f[fp.y]) / 5.0);
  EXPECT_EQ(fp.required_radius, fp.level / 5.0);
  EXPECT_NE(fp.component_x, fp.component_y);
  EXPECT_GE(fp.component_x, 0);
  EXPECT_GE(fp.component_y, 0);
}

TEST(CheckCm, DumbbellPassesAtM20) {
  const auto& m = neck_dumbbell();
  EXPECT_TRUE(check_cm(m, 20.0).holds);
  // Per-pair oracle over all levels: every cell reaches the deepest cell with a wide enough tube.
  const auto f = brute_edt(m);
  const auto x = lobe_center(m, -0.3);
  const auto w = widest_from(m, f, x);
  for (auto y : m.true_cells()) ASSERT_GE(w[y], std::min(f[x], f[y]) / 20.0);
}

TEST(CheckCm, ConvexShapesPass) {
  const auto g = unit_grid(40);
  for (const auto& s : convex_shapes(g, 41, 20))
    for (double M : {2.0, 10.0}) EXPECT_TRUE(check_cm(s, M).holds) << "M = " << M;
}

// The grid EDT of a convex shape is not exactly concave, so the widest tube can
// fall short of min(edt(x), edt(y)); the shortfall stays below one cell.
TEST(CheckCm, ConvexTubeDeficitBelowOneCell) {
  const auto g = unit_grid(40);
  for (const auto& s : convex_shapes(g, 41, 10)) {
    const auto f = brute_edt(s);
    double worst = 0.0;
    for (auto x : s.true_cells()) {
      const auto w = widest_from(s, f, x);
      for (auto y : s.true_cells()) worst = std::max(worst, std::min(f[x], f[y]) - w[y]);
    }
    EXPECT_LT(worst, g.spacing());
  }
}

TEST(CheckCm, MatchesAllPairsOracle) {
  std::mt19937_64 rng(42);
  int mismatches = 0, failing = 0, total = 0;
  for (std::int64_t n : {12, 16, 24}) {
    const auto g = unit_grid(n - 1);
    for (int t = 0; t < 25; ++t) {
      const auto m = random_blob(g, rng, 10 + rng() % (static_cast<std::size_t>((n - 2) * (n - 2)) - 10));
      for (double M : {1.5, 3.0}) {
        const bool fast = check_cm(m, M).holds;
        const bool slow = brute_cm(m, M);
        mismatches += fast != slow;
        failing += !slow;
        ++total;
      }
    }
  }
  EXPECT_EQ(mismatches, 0);
  EXPECT_GT(failing, 0);
  EXPECT_LT(failing, total);
}

TEST(CheckCm, FailingPairIsGenuine) {
  std::mt19937_64 rng(43);
  const auto g = unit_grid(19);
  int seen = 0;
  for (int t = 0; t < 60; ++t) {
    const auto m = random_blob(g, rng, 150);
    const auto v = check_cm(m, 1.2);
    EXPECT_EQ(v.holds, !v.failing.has_value());
    if (v.holds) continue;
    ++seen;
    const auto& fp = *v.failing;
    const auto f = edt(m);
    EXPECT_EQ(fp.level, std::min(f[fp.x], f[fp.y]));
    EXPECT_LT(max_tube_radius(m, f, fp.x, fp.y), fp.level / 1.2);
  }
  EXPECT_GT(seen, 0);
}

TEST(CheckCm, MonotoneInM) {
  std::mt19937_64 rng(44);
  const auto g = unit_grid(19);
  for (int t = 0; t < 40; ++t) {
    const auto m = random_blob(g, rng, 40 + rng() % 200);
    bool held = false;
    for (double M : {1.1, 1.5, 2.0, 3.0, 5.0, 8.0, 20.0}) {
      const bool now = check_cm(m, M).holds;
      if (held) {
        EXPECT_TRUE(now);
      }
      held = held || now;
    }
  }
}

TEST(CheckCm, ScaleInvariance) {
  std::mt19937_64 rng(45);
  const auto g = unit_grid(19);
  for (int t = 0; t < 20; ++t) {
    const auto m = random_blob(g, rng, 60 + rng() % 150);
    for (double c : {0.1, 3.7, 1000.0}) {
      const auto s = scaled(m, c);
      EXPECT_EQ(check_cm(m, 2.5).holds, check_cm(s, 2.5).holds);
      const ClassParams p{2.5, 0.15, std::nullopt}, ps{2.5, 0.15 * c, std::nullopt};
      EXPECT_EQ(check_membership(m, p).member(), check_membership(s, ps).member());
    }
  }
}

TEST(CheckCm, Errors) {
  const auto g = unit_grid(20);
  const DomainMask empty(g, std::vector<std::uint8_t>(g.size(), 0));
  try {
    check_cm(empty, 2.0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::EmptyDomain);
  }
  const auto two = DomainMask::from_predicate(g, [](const std::vector<double>& p) {
    return std::hypot(p[0] - 0.25, p[1] - 0.5) < 0.15 || std::hypot(p[0] - 0.75, p[1] - 0.5) < 0.15;
  });
  try {
    check_cm(two, 2.0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NotConnected);
  }
  EXPECT_THROW(check_cm(disk(g, 0.5, 0.5, 0.3), 1.0), Error);
}

TEST(Membership, DiskIsMember) {
  const double h = 1.0 / 64.0;
  const auto g = centered_grid(32, 32, h);
  const auto d = disk(g, 0.0, 0.0, 0.4);
  const auto rep = check_membership(d, {2.0, 0.1, std::nullopt});
  EXPECT_TRUE(rep.nonempty && rep.connected && rep.compactly_contained && rep.cm_holds);
  ASSERT_TRUE(rep.inner_ball.has_value());
  EXPECT_TRUE(rep.member());
  EXPECT_LE(dist_to_point(g, rep.inner_ball->center, 0.0, 0.0), 2 * h);
  EXPECT_GE(rep.inner_ball->radius, 0.1);
  EXPECT_FALSE(rep.failing_pair.has_value());

  const auto small = check_membership(d, {2.0, 0.5, std::nullopt});
  EXPECT_FALSE(small.inner_ball.has_value());
  EXPECT_FALSE(small.member());
}

TEST(Membership, InnerBallIsArgmax) {
  std::mt19937_64 rng(46);
  const auto g = unit_grid(19);
  for (int t = 0; t < 20; ++t) {
    const auto m = random_blob(g, rng, 150);
    const auto f = brute_edt(m);
    const double top = *std::max_element(f.begin(), f.end());
    const auto rep = check_membership(m, {2.0, 2.5 / 19.0, std::nullopt});
    EXPECT_EQ(rep.inner_ball.has_value(), top >= 2.5 / 19.0);
    if (rep.inner_ball) {
      EXPECT_EQ(rep.inner_ball->center, static_cast<CellIndex>(std::find(f.begin(), f.end(), top) - f.begin()));
      EXPECT_EQ(rep.inner_ball->radius, top);
    }
  }
}

TEST(Membership, DisjointDisks) {
  const auto g = unit_grid(40);
  const auto two = DomainMask::from_predicate(g, [](const std::vector<double>& p) {
    return std::hypot(p[0] - 0.25, p[1] - 0.5) < 0.15 || std::hypot(p[0] - 0.75, p[1] - 0.5) < 0.15;
  });
  const auto rep = check_membership(two, {2.0, 0.1, std::nullopt});
  EXPECT_FALSE(rep.connected);
  EXPECT_FALSE(rep.member());
  EXPECT_FALSE(rep.cm_holds);
  EXPECT_TRUE(rep.failing_pair.has_value());
}

TEST(Membership, EmptyAndParams) {
  const auto g = unit_grid(20);
  const DomainMask empty(g, std::vector<std::uint8_t>(g.size(), 0));
  const auto rep = check_membership(empty, {2.0, 0.1, std::nullopt});
  EXPECT_FALSE(rep.nonempty);
  EXPECT_FALSE(rep.member());
  EXPECT_THROW(check_membership(empty, {0.9, 0.1, std::nullopt}), Error);
  EXPECT_THROW(check_membership(empty, {2.0, 0.05, std::nullopt}), Error);  // R < 2h
}

TEST(Membership, Deterministic) {
  const auto& m = neck_dumbbell();
  const ClassParams p{5.0, 0.1, std::nullopt};
  const auto a = check_membership(m, p), b = check_membership(m, p);
  ASSERT_TRUE(a.failing_pair && b.failing_pair);
  EXPECT_EQ(a.failing_pair->x, b.failing_pair->x);
  EXPECT_EQ(a.failing_pair->y, b.failing_pair->y);
}

TEST(Witness, SingletonPath) {
  const auto g = unit_grid(20);
  const auto d = disk(g, 0.5, 0.5, 0.3);
  const auto c = g.index({10, 10});
  const auto w = witness_path(d, c, c, 0.1);
  EXPECT_EQ(w.path, std::vector<CellIndex>{c});
  EXPECT_TRUE(validate_witness(d, w));
}

TEST(Witness, StraightCorridor) {
  const GridSpec g({5, 16}, 1.0, {0.0, 0.0});
  const auto corridor = box(g, 1.5, 2.5, 0.5, 14.5);  // row 2, columns 1..14
  const auto x = g.index({2, 1}), y = g.index({2, 14});
  const auto w = witness_path(corridor, x, y, 0.5);
  ASSERT_EQ(w.path.size(), 14u);
  for (std::size_t i = 0; i < w.path.size(); ++i) EXPECT_EQ(w.path[i], g.index({2, 1 + static_cast<std::int64_t>(i)}));
  EXPECT_TRUE(validate_witness(corridor, w));
}

TEST(Witness, ThreadsDumbbellNeck) {
  const auto& m = neck_dumbbell();
  const auto x = lobe_center(m, -0.3), y = lobe_center(m, 0.3);
  const auto w = witness_path(m, x, y, 0.015);
  const auto f = brute_edt(m);
  for (auto c : w.path) EXPECT_GE(f[c], 0.015);
  EXPECT_TRUE(validate_witness(m, w));
  // Consecutive cells are face+vertex neighbors.
  for (std::size_t i = 1; i < w.path.size(); ++i) EXPECT_EQ(oracle_sq(m.grid(), w.path[i - 1], w.path[i]) <= 2, true);
  // Shortest: BFS hop count from the oracle neighbors.
  std::vector<int> hops(m.size(), -1);
  std::queue<CellIndex> q;
  hops[x] = 0;
  q.push(x);
  while (!q.empty()) {
    const auto c = q.front();
    q.pop();
    for (auto n : oracle_neighbors(m.grid(), c, true))
      if (hops[n] < 0 && m[n] && f[n] >= 0.015) {
        hops[n] = hops[c] + 1;
        q.push(n);
      }
  }
  EXPECT_EQ(static_cast<int>(w.path.size()) - 1, hops[y]);
  try {
    witness_path(m, x, y, 0.04);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NotTubeConnected);
  }
}

TEST(Witness, SampledWitnessesValidate) {
  const double h = 1.0 / 64.0;
  const auto g = centered_grid(32, 32, h);
  const auto e = ellipse(g, 0.0, 0.0, 0.45, 0.25, 0.3);
  const auto rep = check_membership(e, {2.0, 0.1, std::nullopt}, 12);
  ASSERT_TRUE(rep.member());
  EXPECT_EQ(rep.witnesses.size(), 12u);
  for (const auto& w : rep.witnesses) {
    EXPECT_TRUE(validate_witness(e, w));
    EXPECT_EQ(w.radius, w.d_star / 2.0);
  }
}

TEST(Repair, MemberUnchanged) {
  const auto g = unit_grid(40);
  const auto d = disk(g, 0.5, 0.5, 0.35);
  const ClassParams p{2.0, 0.1, std::nullopt};
  EXPECT_EQ(repair_to_class(d, p, g.index({20, 20})), d);
}

TEST(Repair, DumbbellKeepsSeedLobe) {
  const auto& m = neck_dumbbell();
  const auto& g = dumbbell_grid();
  const ClassParams p{5.0, 0.1, std::nullopt};
  const auto seed = lobe_center(m, -0.3);
  const auto out = repair_to_class(m, p, seed);
  EXPECT_TRUE(check_membership(out, p).member());
  const auto left = disk(g, -0.3, 0.0, 0.2);
  EXPECT_LE(delta(CompactSet::of_mask(out), CompactSet::of_mask(left)).value, std::sqrt(2.0) * kH);
  EXPECT_LE(rho(out, left).value, std::sqrt(2.0) * kH);
  for (auto c : out.true_cells()) EXPECT_LT(g.center(c, 0), 0.0);
}

TEST(Repair, RemovesSpeck) {
  const auto g = unit_grid(40);
  const auto d = disk(g, 0.4, 0.5, 0.3);
  const auto speck = d.with(g.index({36, 36}), true);
  const ClassParams p{2.0, 0.1, std::nullopt};
  EXPECT_EQ(repair_to_class(speck, p, g.index({16, 20})), d);
}

TEST(Repair, OutputIsAlwaysMemberOrError) {
  std::mt19937_64 rng(47);
  const auto g = unit_grid(31);
  const ClassParams p{3.0, 2.0 / 31.0, std::nullopt};
  int ok = 0;
  for (int t = 0; t < 40; ++t) {
    const auto m = random_blob(g, rng, 100 + rng() % 500);
    const auto cells = m.true_cells();
    const auto seed = cells[rng() % cells.size()];
    try {
      const auto out = repair_to_class(m, p, seed);
      EXPECT_TRUE(check_membership(out, p).member());
      // Output lies in the input plus the seed ball.
      for (auto c : out.true_cells()) EXPECT_TRUE(m[c] || g.distance(seed, c) < p.R);
      ++ok;
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::RepairFailed);
    }
  }
  EXPECT_GT(ok, 30);
}
