#include <gtest/gtest.h>

#include "lagather/counts.hpp"
#include "lagather/verify.hpp"
#include "oracles.hpp"

using namespace lagather;

TEST(BruckCounts, SixteenRanksFourRegions) {
  const auto c = bruck_counts(Topology(16, 4));
  EXPECT_EQ(c.max_msgs_nonlocal, 4);
  EXPECT_EQ(c.max_values_nonlocal, 15);
  // Rank 0 sends nothing locally.
  EXPECT_EQ(c.critical, (RankCounts{0, 4, 0, 15}));
  // Rank 3 sends its first two messages inside region 0.
  EXPECT_EQ(c.max_msgs_local, 2);
  EXPECT_EQ(c.max_values_local, 3);
}

TEST(BruckCounts, TwoRanks) {
  const auto c = bruck_counts(Topology(2, 1));
  EXPECT_EQ(c.max_msgs_nonlocal, 1);
  EXPECT_EQ(c.max_values_nonlocal, 1);
}

TEST(BruckCounts, MatchesSimulationAt64) {
  const Topology t(64, 4);
  const auto c = bruck_counts(t);
  const auto res = run(AlgorithmId::Bruck, t);
  EXPECT_EQ(c.max_msgs_nonlocal, 6);
  EXPECT_EQ(c.max_values_nonlocal, 63);
  EXPECT_EQ(res.tally.per_rank[0].msgs_nonlocal, 6);
  EXPECT_EQ(res.tally.per_rank[0].bytes_nonlocal, 63 * 4);
}

TEST(BruckCounts, MaximaMatchDirectEnumeration) {
  for (int p : {4, 32, 256})
    for (int pl : {1, 2, 4, 16}) {
      if (pl > p) continue;
      for (int n : {1, 3}) {
        const auto c = bruck_counts(Topology(p, pl, 4, n));
        oracle::Counts mx;
        for (const auto& r : oracle::bruck_sends(p, pl, n)) {
          mx.msgs_local = std::max(mx.msgs_local, r.msgs_local);
          mx.msgs_nonlocal = std::max(mx.msgs_nonlocal, r.msgs_nonlocal);
          mx.values_local = std::max(mx.values_local, r.values_local);
          mx.values_nonlocal = std::max(mx.values_nonlocal, r.values_nonlocal);
        }
        EXPECT_EQ(c.max_msgs_local, mx.msgs_local);
        EXPECT_EQ(c.max_msgs_nonlocal, mx.msgs_nonlocal);
        EXPECT_EQ(c.max_values_local, mx.values_local);
        EXPECT_EQ(c.max_values_nonlocal, mx.values_nonlocal);
      }
    }
}

TEST(BruckCounts, RejectsNonPowerOfTwo) { EXPECT_THROW(bruck_counts(Topology(12, 4)), std::invalid_argument); }

TEST(LocalityCounts, SixteenRanksFourRegions) {
  const auto c = locality_counts(Topology(16, 4));
  EXPECT_EQ(c.max_msgs_nonlocal, 1);
  EXPECT_EQ(c.max_values_nonlocal, 4);
  EXPECT_EQ(c.max_msgs_local, 4);
  // 3 values in the first local gather, 4 * 3 in the second.
  EXPECT_EQ(c.max_values_local, 15);
}

TEST(LocalityCounts, TwoRoundsAt64) {
  const Topology t(64, 4);
  const auto c = locality_counts(t);
  EXPECT_EQ(c.max_msgs_nonlocal, 2);
  EXPECT_EQ(c.max_values_nonlocal, 20);
  EXPECT_EQ(c.max_msgs_local, 6);
  const auto res = run(AlgorithmId::LocalityBruck, t);
  EXPECT_EQ(res.tally.max.msgs_nonlocal, 2);
  EXPECT_EQ(res.tally.max.bytes_nonlocal, 80);
}

TEST(LocalityCounts, GeometricVolume) {
  for (int pl : {2, 4, 8})
    for (int k = 0; pl > 1 && k <= 3; ++k) {
      int r = 1;
      for (int i = 0; i < k; ++i) r *= pl;
      if (r * pl > 4096) continue;
      const auto c = locality_counts(Topology(r * pl, pl, 4, 3));
      EXPECT_EQ(c.max_values_nonlocal, 3 * pl * (r - 1) / (pl - 1));
      EXPECT_EQ(c.max_msgs_local, std::countr_zero(unsigned(pl)) * (k + 1));
    }
}

TEST(LocalityCounts, RejectsUnsupported) { EXPECT_THROW(locality_counts(Topology(32, 4)), UnsupportedTopology); }

TEST(RingCounts, Examples) {
  const auto c = ring_counts(Topology(16, 4));
  EXPECT_EQ(c.max_msgs_nonlocal + c.critical.msgs_local, 15);
  EXPECT_EQ(c.max_values_nonlocal, 15);
  EXPECT_EQ(c.max_msgs_local, 15);
  EXPECT_EQ(ring_counts(Topology(1, 1)), CountPrediction{});

  const auto res = run(AlgorithmId::Ring, Topology(16, 4));
  EXPECT_EQ(res.tally.per_rank[4].msgs_nonlocal, 15);
  EXPECT_EQ(res.tally.per_rank[5].msgs_local, 15);
  for (const auto& e : res.events) {
    if (e.src == 4) { EXPECT_EQ(e.dst, 3); }
    if (e.src == 5) { EXPECT_EQ(e.dst, 4); }
  }
}

TEST(HierarchicalCounts, SixteenRanksFourRegions) {
  const auto c = hierarchical_counts(Topology(16, 4));
  EXPECT_EQ(c.max_msgs_nonlocal, 2);
  EXPECT_EQ(c.max_values_nonlocal, 12);
  EXPECT_EQ(c.max_msgs_local, 3);
  EXPECT_EQ(c.max_values_local, 48);
}

TEST(Profiles, TotalsAgreeWithCriticalCounts) {
  for (const auto& g : standard_grid({1, 2, 16, 64, 256}, {1, 2, 4, 8, 16}, {1, 3}))
    EXPECT_EQ(profile_totals(critical_profile(g.algorithm, g.topo)), counts_for(g.algorithm, g.topo).critical)
        << describe(g);
}

// Every count field, the critical rank and its message sequence agree with the
// simulated tallies.
TEST(Counts, EqualSimulatedTallies) {
  for (const auto& g : standard_grid({1, 2, 4, 8, 16, 32, 64, 128, 256}, {1, 2, 4, 8, 16}, {1, 3})) {
    const auto rep = check_point(g, default_cost_params());
    EXPECT_TRUE(rep.counts) << describe(g);
    EXPECT_TRUE(rep.critical) << describe(g);
  }
}

TEST(Counts, LocalityAwareSendsLessNonLocally) {
  for (int pl : {2, 4, 8, 16})
    for (int r = pl; r * pl <= 65536; r *= pl) {
      const Topology t(r * pl, pl, 4, 1);
      const auto loc = locality_counts(t);
      const auto std_bruck = bruck_counts(t);
      EXPECT_LT(loc.max_values_nonlocal, std_bruck.max_values_nonlocal) << describe(t);
      if (pl > 2) { EXPECT_LT(loc.max_msgs_nonlocal, std_bruck.max_msgs_nonlocal) << describe(t); }
    }
}
