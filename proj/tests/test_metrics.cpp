#include <gtest/gtest.h>

#include <random>

#include "test_support.hpp"

using namespace cmclass;
using namespace cmtest;

namespace {

double density(std::mt19937_64& rng) { return 0.02 + 0.5 * static_cast<double>(rng() % 1000) / 1000.0; }

DomainMask shifted(const DomainMask& m, std::int64_t dx, std::int64_t dy) {
  const auto& g = m.grid();
  std::vector<std::uint8_t> out(g.size(), 0);
  for (auto c : m.true_cells()) {
    const auto p = g.coords(c);
    out[g.index({p[0] + dx, p[1] + dy})] = 1;
  }
  return DomainMask(g, out);
}

}  // namespace

TEST(Delta, SelfIsZero) {
  std::mt19937_64 rng(1);
  const auto g = unit_grid(15);
  const auto k = random_set(g, rng, 0.2);
  EXPECT_EQ(delta(k, k).value, 0.0);
}

TEST(Delta, SinglePair345) {
  const GridSpec g = GridSpec::cube(2, 8, 1.0);
  const CompactSet a(g, {g.index({0, 0})}), b(g, {g.index({3, 4})});
  const auto r = delta(a, b);
  EXPECT_EQ(r.value, 5.0);
  EXPECT_EQ(r.forward, (CellPair{g.index({0, 0}), g.index({3, 4})}));
  EXPECT_EQ(r.backward, (CellPair{g.index({3, 4}), g.index({0, 0})}));
}

TEST(Delta, MatchesDoubleLoopOracle) {
  std::mt19937_64 rng(2024);
  int pairs = 0;
  for (std::int64_t n : {6, 11, 16, 23, 32}) {
    const GridSpec g({n, n - 1 - static_cast<std::int64_t>(rng() % 2)}, 0.37, {0.0, 0.0});
    for (int t = 0; t < 100; ++t, ++pairs) {
      const auto a = random_set(g, rng, density(rng));
      const auto b = random_set(g, rng, density(rng));
      const auto r = delta(a, b);
      ASSERT_EQ(r.value, brute_delta(a, b));
      ASSERT_EQ(r.value, delta(b, a).value);
      // Witnesses realize the directed distances.
      EXPECT_TRUE(a.contains(r.forward.from) && b.contains(r.forward.to));
      EXPECT_TRUE(b.contains(r.backward.from) && a.contains(r.backward.to));
      EXPECT_EQ(r.value, std::max(g.distance(r.forward.from, r.forward.to), g.distance(r.backward.from, r.backward.to)));
    }
  }
  EXPECT_GE(pairs, 500);
}

TEST(Delta, GridMismatch) {
  const auto g1 = unit_grid(10), g2 = unit_grid(11);
  try {
    delta(CompactSet(g1, {5}), CompactSet(g2, {5}));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::GridMismatch);
  }
}

TEST(Delta, MetricAxioms) {
  std::mt19937_64 rng(77);
  for (std::int64_t n : {8, 16, 24}) {
    const auto g = unit_grid(n - 1);
    for (int t = 0; t < 200; ++t) {
      const auto a = random_set(g, rng, density(rng));
      const auto b = random_set(g, rng, density(rng));
      const auto c = random_set(g, rng, density(rng));
      const double ab = delta(a, b).value, bc = delta(b, c).value, ac = delta(a, c).value;
      EXPECT_GE(ab, 0.0);
      EXPECT_EQ(ab, delta(b, a).value);
      EXPECT_EQ(ab == 0.0, a == b);
      EXPECT_LE(ac, ab + bc + 1e-12);
    }
  }
}

TEST(Rho, MetricAxioms) {
  std::mt19937_64 rng(78);
  for (std::int64_t n : {8, 16, 24}) {
    const auto g = unit_grid(n - 1);
    for (int t = 0; t < 200; ++t) {
      const auto a = random_mask(g, rng, 0.5 + 0.5 * density(rng));
      const auto b = random_mask(g, rng, 0.5 + 0.5 * density(rng));
      const auto c = t % 3 == 0 ? a : random_mask(g, rng, 0.5 + 0.5 * density(rng));
      const double ab = rho(a, b).value, bc = rho(b, c).value, ac = rho(a, c).value;
      EXPECT_GE(ab, 0.0);
      EXPECT_EQ(ab, rho(b, a).value);
      EXPECT_EQ(ab == 0.0, a == b);
      EXPECT_EQ(ac == 0.0, a == c);
      EXPECT_LE(ac, ab + bc + 1e-12);
    }
  }
}

TEST(Rho, EqualsDeltaOfComplements) {
  std::mt19937_64 rng(5);
  const auto g = unit_grid(13);
  for (int t = 0; t < 50; ++t) {
    const auto a = random_blob(g, rng, 40 + rng() % 100);
    const auto b = random_blob(g, rng, 40 + rng() % 100);
    EXPECT_EQ(rho(a, b).value, brute_delta(closed_complement(a), closed_complement(b)));
    EXPECT_EQ(rho(a, b).value, rho_value(a, edt(a), b, edt(b)));
  }
}

TEST(Rho, SelfIsZero) {
  const auto g = unit_grid(20);
  const auto d = disk(g, 0.5, 0.5, 0.3);
  EXPECT_EQ(rho(d, d).value, 0.0);
}

TEST(Rho, OneExtraCell) {
  const auto g = unit_grid(20);
  const auto big = box(g, 0.2, 0.8, 0.2, 0.8);
  const auto c = g.index({10, 10});
  const auto small = big.with(c, false);
  const auto e2 = edt(big);
  const auto want = brute_delta(closed_complement(small), closed_complement(big));
  EXPECT_EQ(rho(small, big).value, e2[c]);
  EXPECT_EQ(rho(small, big).value, want);
}

TEST(Rho, OffsetDisks) {
  const double h = 1.0 / 64.0;
  const auto g = centered_grid(40, 40, h);
  const auto base = disk(g, 0.0, 0.0, 0.3);
  for (int m = 1; m <= 6; ++m) {
    const auto moved = disk(g, m * h, 0.0, 0.3);
    const double v = rho(base, moved).value;
    EXPECT_LE(v, m * h) << "m = " << m;
    EXPECT_EQ(v, brute_delta(closed_complement(base), closed_complement(moved)));
  }
}

TEST(Metrics, TranslationEquivariance) {
  std::mt19937_64 rng(6);
  const auto g = unit_grid(20);
  for (int t = 0; t < 10; ++t) {
    const auto m = random_blob(g, rng, 80);
    const auto coords = [&](CellIndex c) { return g.coords(c); };
    bool fits = true;
    for (auto c : m.true_cells()) fits = fits && coords(c)[0] + 1 < 20 && coords(c)[1] + 1 < 20;
    if (!fits) continue;
    const auto s = shifted(m, 1, 1);
    const auto e = edt(m), es = edt(s);
    for (auto c : m.true_cells()) {
      const auto p = g.coords(c);
      EXPECT_EQ(e[c], es[g.index({p[0] + 1, p[1] + 1})]);
    }
    EXPECT_EQ(erode(s, 0.1), shifted(erode(m, 0.1), 1, 1));
  }
}

TEST(Morphology, ErosionIsMonotone) {
  std::mt19937_64 rng(9);
  const auto g = unit_grid(24);
  for (int t = 0; t < 20; ++t) {
    const auto m = random_mask(g, rng, 0.8);
    const double r1 = 0.005 + 0.01 * (rng() % 10), r2 = r1 + 0.01 * (rng() % 10);
    EXPECT_TRUE(subset(erode(m, r2), erode(m, r1)));
    EXPECT_LE(connected_components(m, Adjacency::FaceVertex).count, connected_components(m, Adjacency::Face).count);
  }
}

TEST(EpsCover, SubsetIsCovered) {
  std::mt19937_64 rng(10);
  const auto g = unit_grid(15);
  const auto m = random_mask(g, rng, 0.6);
  const auto b = CompactSet::of_mask(m);
  const auto a = random_subset(m, rng, 0.3);
  EXPECT_TRUE(eps_cover_check(a, b, 1e-9));
}

TEST(EpsCover, StrictThreshold) {
  const GridSpec g = GridSpec::cube(2, 8, 1.0);
  const CompactSet a(g, {g.index({0, 0})}), b(g, {g.index({3, 4})});
  EXPECT_FALSE(eps_cover_check(a, b, 5.0));
  EXPECT_TRUE(eps_cover_check(a, b, 5.0001));
}

TEST(EpsCover, MatchesOracleAndDelta) {
  std::mt19937_64 rng(12);
  const auto g = unit_grid(15);
  for (int t = 0; t < 200; ++t) {
    const auto a = random_set(g, rng, density(rng));
    const auto b = random_set(g, rng, density(rng));
    const double eps = 0.02 + 0.3 * static_cast<double>(rng() % 1000) / 1000.0;
    const bool ab = eps_cover_check(a, b, eps), ba = eps_cover_check(b, a, eps);
    EXPECT_EQ(ab, brute_cover(a, b, eps));
    EXPECT_EQ(ba, brute_cover(b, a, eps));
    if (delta(a, b).value < eps) {
      EXPECT_TRUE(ab && ba);
    }
  }
}

TEST(DistToBoundary, Examples) {
  const GridSpec g = GridSpec::cube(2, 5, 1.0);
  const auto m = box(g, 0.5, 3.5, 0.5, 3.5);  // 3x3 block
  EXPECT_EQ(m.count(), 9u);
  EXPECT_EQ(dist_compact_to_boundary(CompactSet(g, {g.index({2, 2})}), m), 2.0);
  EXPECT_EQ(dist_compact_to_boundary(CompactSet(g, {g.index({1, 2})}), m), 1.0);
  EXPECT_EQ(dist_compact_to_boundary(CompactSet::of_mask(m), m), 1.0);
  try {
    dist_compact_to_boundary(CompactSet(g, {g.index({0, 0})}), m);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NotContained);
  }
}

TEST(DistToBoundary, LipschitzInDelta) {
  std::mt19937_64 rng(13);
  const auto g = unit_grid(24);
  const auto m = disk(g, 0.5, 0.5, 0.42);
  const auto f = edt(m);
  for (int t = 0; t < 300; ++t) {
    const auto k1 = random_subset(m, rng, 0.005 + 0.05 * static_cast<double>(rng() % 100) / 100.0);
    const auto k2 = random_subset(m, rng, 0.005 + 0.05 * static_cast<double>(rng() % 100) / 100.0);
    const double d1 = dist_compact_to_boundary(k1, m, f), d2 = dist_compact_to_boundary(k2, m, f);
    EXPECT_LE(std::abs(d1 - d2), delta(k1, k2).value + 1e-12);
  }
}
