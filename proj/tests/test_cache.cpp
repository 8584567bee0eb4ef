#include <gtest/gtest.h>

#include <algorithm>
#include <list>
#include <map>

#include "memsim/cache.hpp"
#include "memsim/random.hpp"

using namespace memsim;

namespace {

CacheConfig one_set(std::uint32_t ways) { return CacheConfig{static_cast<std::uint64_t>(ways) * 64, ways, 64, 1, false}; }

// Reference LRU: one recency list per set, most recent first.
struct ReferenceLru {
  std::uint64_t sets;
  std::uint32_t ways;
  std::map<std::uint64_t, std::list<std::uint64_t>> lists;

  bool access(std::uint64_t address) {
    const std::uint64_t line = address / 64;
    auto& l = lists[line % sets];
    auto it = std::find(l.begin(), l.end(), line);
    const bool hit = it != l.end();
    if (hit) l.erase(it);
    l.push_front(line);
    if (l.size() > ways) l.pop_back();
    return hit;
  }
};

}  // namespace

TEST(Cache, GeometryAndValidation) {
  Cache c(CacheConfig{});
  EXPECT_EQ(c.set_count(), 256u);
  EXPECT_EQ(c.set_index(0x40), 1u);
  EXPECT_EQ(c.set_index(256 * 64), 0u);
  EXPECT_THROW(Cache(CacheConfig{0, 4, 64, 1, false}), std::invalid_argument);
  EXPECT_THROW(Cache(CacheConfig{1000, 4, 64, 1, false}), std::invalid_argument);
  EXPECT_THROW(Cache(CacheConfig{3 * 4 * 64, 4, 64, 1, false}), std::invalid_argument);
  EXPECT_THROW(Cache(CacheConfig{4 * 48, 4, 48, 1, false}), std::invalid_argument);
}

TEST(Cache, EvictsLeastRecentlyUsed) {
  Cache c(one_set(4));
  for (std::uint64_t a : {0x000, 0x040, 0x080, 0x0c0}) {
    EXPECT_FALSE(c.lookup(a));
    EXPECT_FALSE(c.fill(0, a).has_value());
  }
  EXPECT_TRUE(c.lookup(0x000));  // 0x040 is now the LRU line
  const auto ev = c.fill(0, 0x100);
  ASSERT_TRUE(ev.has_value());
  EXPECT_EQ(ev->line_address, 0x040u / 64);
  EXPECT_FALSE(c.contains(0x040));
  EXPECT_TRUE(c.contains(0x000));
  EXPECT_EQ(c.hits(), 1u);
  EXPECT_EQ(c.misses(), 4u);
}

TEST(Cache, RefillOfPresentLineIsNoop) {
  Cache c(one_set(2));
  c.fill(0, 0x0);
  c.fill(1, 0x40);
  EXPECT_FALSE(c.fill(1, 0x0).has_value());
  EXPECT_EQ(c.owner_of(0x0), AppId{0});
  // The refill refreshed 0x0, so 0x40 is evicted next.
  EXPECT_EQ(c.fill(0, 0x80)->line_address, 1u);
}

TEST(Cache, MatchesReferenceLru) {
  Rng rng(77);
  CacheConfig cfg{8 * 4 * 64, 4, 64, 1, false};
  Cache c(cfg);
  ReferenceLru ref{8, 4, {}};
  for (int i = 0; i < 20000; ++i) {
    const std::uint64_t addr = rng.below(96) * 64 + rng.below(64);
    const bool hit = c.lookup(addr);
    ASSERT_EQ(hit, ref.access(addr)) << "access " << i;
    if (!hit) c.fill(0, addr);
  }
}

TEST(Cache, PartitionedAppReplacesOwnLine) {
  Cache c(one_set(4));
  const WayPartition p({1, 3});
  c.fill(0, 0x000, &p);
  c.fill(1, 0x040, &p);
  c.fill(1, 0x080, &p);
  c.fill(1, 0x0c0, &p);
  // App 0 is at quota: its own line goes even though app 1 holds older lines.
  auto ev = c.fill(0, 0x100, &p);
  ASSERT_TRUE(ev.has_value());
  EXPECT_EQ(ev->owner, 0u);
  EXPECT_EQ(ev->line_address, 0u);
}

TEST(Cache, PartitionQuotasNeverExceededFromEmpty) {
  Rng rng(5);
  CacheConfig cfg{4 * 8 * 64, 8, 64, 1, true};
  Cache c(cfg);
  const WayPartition p({2, 5, 1});
  ASSERT_TRUE(p.valid_for(8));
  for (int i = 0; i < 20000; ++i) {
    const auto app = static_cast<AppId>(rng.below(3));
    const std::uint64_t addr = (static_cast<std::uint64_t>(app) << 32) | (rng.below(200) * 64);
    if (!c.lookup(addr)) c.fill(app, addr, &p);
    if (i % 97 == 0) {
      for (std::uint64_t set = 0; set < 4; ++set) {
        std::array<std::uint32_t, 3> owned{};
        for (std::uint64_t line = set; line < 200; line += 4)
          for (AppId a = 0; a < 3; ++a)
            if (auto o = c.owner_of((static_cast<std::uint64_t>(a) << 32) | (line * 64)); o) ++owned[*o];
        for (AppId a = 0; a < 3; ++a) ASSERT_LE(owned[a], p.quota(a));
      }
    }
  }
}

TEST(WayPartition, Validity) {
  EXPECT_TRUE(WayPartition({8, 8}).valid_for(16));
  EXPECT_FALSE(WayPartition({0, 16}).valid_for(16));
  EXPECT_FALSE(WayPartition({8, 7}).valid_for(16));
  EXPECT_THROW(WayPartition({1}).quota(1), std::out_of_range);
}

TEST(Ats, SampledSetSelection) {
  const CacheConfig llc{2 << 20, 16, 64, 20, true};
  AuxiliaryTagStore all(0, llc, 0);
  EXPECT_EQ(all.sampled_set_count(), 2048u);
  AuxiliaryTagStore sampled(0, llc, 64);
  EXPECT_EQ(sampled.sampled_set_count(), 64u);
  const auto sets = sampled.sampled_sets();
  EXPECT_EQ(sets.front(), 0u);
  EXPECT_EQ(sets[1], 32u);
  EXPECT_TRUE(sampled.is_sampled(32 * 64));
  EXPECT_FALSE(sampled.is_sampled(33 * 64));
  EXPECT_EQ(sampled.access(33 * 64).outcome, AtsOutcome::kNotSampled);
  EXPECT_EQ(sampled.sampled_accesses(), 0u);
}

TEST(Ats, StackDistancesMatchBruteForce) {
  const std::uint32_t ways = 8;
  AuxiliaryTagStore ats(0, one_set(ways), 0);
  Rng rng(11);
  std::vector<std::uint64_t> history;
  std::array<std::uint64_t, 9> expected{};
  for (int i = 0; i < 5000; ++i) {
    const std::uint64_t line = rng.below(14);
    // Distinct lines touched since the previous access to `line`.
    std::uint32_t distance = 0;
    bool seen = false;
    std::vector<std::uint64_t> between;
    for (auto it = history.rbegin(); it != history.rend(); ++it) {
      if (*it == line) {
        seen = true;
        break;
      }
      if (std::find(between.begin(), between.end(), *it) == between.end()) between.push_back(*it);
    }
    if (seen && between.size() < ways) distance = static_cast<std::uint32_t>(between.size()) + 1;
    ++expected[distance];
    const AtsAccess got = ats.access(line * 64);
    ASSERT_EQ(got.stack_distance, distance) << "access " << i;
    ASSERT_EQ(got.outcome, distance ? AtsOutcome::kHit : AtsOutcome::kMiss);
    history.push_back(line);
  }
  for (std::uint32_t n = 1; n <= ways; ++n) {
    std::uint64_t want = 0;
    for (std::uint32_t d = 1; d <= n; ++d) want += expected[d];
    EXPECT_EQ(ats.hits_within(n), want);
  }
  EXPECT_EQ(ats.sampled_accesses(), 5000u);
  ats.reset_histogram();
  EXPECT_EQ(ats.sampled_accesses(), 0u);
}

TEST(Ats, HitsWithinEqualsSmallerLruCache) {
  // LRU inclusion: hits at distance <= n are exactly the hits of an n-way cache.
  Rng rng(21);
  std::vector<std::uint64_t> seq;
  for (int i = 0; i < 3000; ++i) seq.push_back(rng.below(20) * 64);
  AuxiliaryTagStore ats(0, one_set(16), 0);
  for (auto a : seq) ats.access(a);
  for (std::uint32_t n : {1u, 2u, 4u, 7u, 16u}) {
    Cache c(one_set(n));
    std::uint64_t hits = 0;
    for (auto a : seq) {
      if (c.lookup(a)) ++hits;
      else c.fill(0, a);
    }
    EXPECT_EQ(ats.hits_within(n), hits) << n << " ways";
  }
}

TEST(Ats, DeferredFill) {
  AuxiliaryTagStore ats(0, one_set(4), 0);
  EXPECT_EQ(ats.access(0x40, false).outcome, AtsOutcome::kMiss);
  EXPECT_EQ(ats.access(0x40, false).outcome, AtsOutcome::kMiss);
  ats.fill(0x40);
  EXPECT_EQ(ats.access(0x40, false).stack_distance, 1u);
  EXPECT_EQ(ats.misses(), 2u);
  EXPECT_EQ(ats.hits(), 1u);
}

TEST(Ats, ScalesSampledCounts) {
  auto s = AtsSampleStats::from_counts(30, 90);
  EXPECT_DOUBLE_EQ(s.ats_hit_fraction, 0.25);
  auto scaled = scale_ats_counts(s, 1000);
  EXPECT_EQ(scaled.hits, 250u);
  EXPECT_EQ(scaled.misses, 750u);
  // Ties round to even.
  EXPECT_EQ(scale_ats_counts(AtsSampleStats::from_counts(1, 1), 3).hits, 2u);
  EXPECT_EQ(scale_ats_counts(AtsSampleStats::from_counts(1, 1), 5).hits, 2u);
  EXPECT_EQ(scale_ats_counts(AtsSampleStats::from_counts(0, 0), 10).misses, 10u);
  Rng rng(1);
  for (int i = 0; i < 1000; ++i) {
    auto st = AtsSampleStats::from_counts(rng.below(100), rng.below(100));
    const auto n = rng.below(100000);
    const auto c = scale_ats_counts(st, n);
    ASSERT_EQ(c.hits + c.misses, n);
  }
}

TEST(Ats, ScalingExamples) {
  EXPECT_EQ(scale_ats_counts({0.5, 0.5}, 100).hits, 50u);
  const auto all = scale_ats_counts({1.0, 0.0}, 7);
  EXPECT_EQ(all.hits, 7u);
  EXPECT_EQ(all.misses, 0u);
  const auto third = scale_ats_counts({1.0 / 3.0, 2.0 / 3.0}, 99);
  EXPECT_EQ(third.hits, 33u);
  EXPECT_EQ(third.misses, 66u);
}

TEST(Ats, ContentionMissIsAtsHit) {
  const CacheConfig llc{2 * 64, 2, 64, 20, true};
  Cache shared(llc);
  AuxiliaryTagStore ats(0, llc, 0);
  const std::uint64_t x = 0x0;
  EXPECT_EQ(ats.access(x).outcome, AtsOutcome::kMiss);
  EXPECT_FALSE(shared.lookup(x));
  shared.fill(0, x);
  shared.fill(1, 0x1000);
  shared.fill(1, 0x2000);  // evicts x from the shared cache
  EXPECT_FALSE(shared.lookup(x));
  EXPECT_EQ(ats.access(x).outcome, AtsOutcome::kHit);
}

TEST(Cache, TwoWayQuotaOneKeepsOtherAppsLines) {
  Cache c(one_set(2));
  const WayPartition p({1, 1});
  EXPECT_FALSE(c.lookup(0x0));
  c.fill(1, 0x1000, &p);
  c.fill(0, 0x40, &p);
  EXPECT_TRUE(c.lookup(0x40));
  const auto ev = c.fill(0, 0x80, &p);
  ASSERT_TRUE(ev.has_value());
  EXPECT_EQ(ev->line_address, 1u);
  EXPECT_TRUE(c.contains(0x1000));
}
