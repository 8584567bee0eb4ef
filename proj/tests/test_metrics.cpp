#include <gtest/gtest.h>

#include <map>

#include "memsim/metrics.hpp"
#include "memsim/random.hpp"

using namespace memsim;

TEST(EstimationError, Examples) {
  EXPECT_NEAR(estimation_error(2.2, 2.0), 10.0, 1e-12);
  EXPECT_DOUBLE_EQ(estimation_error(2.0, 2.0), 0.0);
  EXPECT_DOUBLE_EQ(estimation_error(1.0, 2.0), 50.0);
  EXPECT_THROW(estimation_error(1.0, 0.0), std::domain_error);
}

TEST(EstimationError, ScaleFree) {
  Rng rng(1);
  for (int i = 0; i < 1000; ++i) {
    const double e = 0.5 + 3 * rng.uniform(), a = 0.5 + 3 * rng.uniform();
    ASSERT_NEAR(estimation_error(e, a), estimation_error(2 * e, 2 * a), 1e-9);
  }
}

TEST(Speedups, Examples) {
  EXPECT_DOUBLE_EQ(weighted_speedup(std::vector<double>{2.0, 2.0}), 1.0);
  EXPECT_DOUBLE_EQ(weighted_speedup(std::vector<double>{1, 1, 1, 1}), 4.0);
  EXPECT_DOUBLE_EQ(weighted_speedup(std::vector<double>{2.0, 4.0}),
                   weighted_speedup(std::vector<double>{2.0}) + weighted_speedup(std::vector<double>{4.0}));
  EXPECT_DOUBLE_EQ(harmonic_speedup(std::vector<double>{2, 2}), 0.5);
  EXPECT_DOUBLE_EQ(harmonic_speedup(std::vector<double>{1, 1, 1}), 1.0);
  EXPECT_DOUBLE_EQ(harmonic_speedup(std::vector<double>{1, 3}), 0.5);
  EXPECT_THROW(harmonic_speedup(std::vector<double>{}), std::invalid_argument);
  EXPECT_THROW(harmonic_speedup(std::vector<double>{1, 0}), std::domain_error);
  EXPECT_DOUBLE_EQ(maximum_slowdown(std::vector<double>{1.2, 3.4}), 3.4);
  EXPECT_DOUBLE_EQ(maximum_slowdown(std::vector<double>{1.7}), 1.7);
  EXPECT_DOUBLE_EQ(maximum_slowdown(std::vector<double>{3.4, 1.2}), 3.4);
  EXPECT_THROW(maximum_slowdown(std::vector<double>{}), std::invalid_argument);
}

TEST(Speedups, BoundsForSlowedApps) {
  Rng rng(2);
  for (int i = 0; i < 500; ++i) {
    std::vector<double> s(1 + rng.below(8));
    for (auto& v : s) v = 1.0 + 4 * rng.uniform();
    ASSERT_LE(weighted_speedup(s), static_cast<double>(s.size()));
    ASSERT_LE(harmonic_speedup(s), 1.0);
    for (double v : s) ASSERT_GE(maximum_slowdown(s), v);
  }
}

TEST(Streaks, Examples) {
  const std::vector<AppId> log{0, 0, 1};
  const auto h = streak_histogram(log);
  EXPECT_EQ(h[0].counts[1], 1u);
  EXPECT_EQ(h[0].runs(), 1u);
  EXPECT_EQ(h[1].counts[0], 1u);

  const std::vector<AppId> long_run(20, 0);
  const auto l = streak_histogram(long_run);
  EXPECT_EQ(l[0].counts[kStreakBuckets - 1], 1u);
  EXPECT_EQ(l[0].runs(), 1u);
  EXPECT_EQ(l[0].requests(), 20u);
  EXPECT_DOUBLE_EQ(l[0].mean_length(), 20.0);
  EXPECT_TRUE(streak_histogram(std::vector<AppId>{}).empty());
}

TEST(Streaks, ConservationOverRandomLogs) {
  Rng rng(3);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<AppId> log;
    AppId cur = 0;
    for (int i = 0; i < 2000; ++i) {
      if (rng.below(4) == 0) cur = static_cast<AppId>(rng.below(4));
      if (rng.below(50) == 0)
        for (int k = 0; k < 30; ++k) log.push_back(cur);
      log.push_back(cur);
    }
    std::map<AppId, std::uint64_t> direct;
    for (AppId a : log) ++direct[a];
    const auto h = streak_histogram(log);
    for (auto [app, n] : direct) ASSERT_EQ(h[app].requests(), n);
  }
}

TEST(Progress, Interpolation) {
  ProgressSamples p{{0, 100, 200, 300}, {0, 50, 150, 150}};
  EXPECT_DOUBLE_EQ(*p.cycle_at(0), 0.0);
  EXPECT_DOUBLE_EQ(*p.cycle_at(25), 50.0);
  EXPECT_DOUBLE_EQ(*p.cycle_at(50), 100.0);
  EXPECT_DOUBLE_EQ(*p.cycle_at(100), 150.0);
  EXPECT_DOUBLE_EQ(*p.cycle_at(150), 200.0);  // first time the count is reached
  EXPECT_FALSE(p.cycle_at(151).has_value());
  EXPECT_FALSE(ProgressSamples{}.cycle_at(0).has_value());
}

TEST(Progress, AlignWindow) {
  // Alone run retires 2 instructions per cycle; the shared run 1 per cycle.
  ProgressSamples alone;
  for (std::uint64_t c = 0; c <= 1000; c += 100) {
    alone.cycles.push_back(c);
    alone.retired.push_back(2 * c);
  }
  const auto w = align_window(alone, 200, 500, 300);
  EXPECT_DOUBLE_EQ(w.ipc_shared, 1.0);
  EXPECT_DOUBLE_EQ(w.ipc_alone, 2.0);
  EXPECT_FALSE(w.truncated);
  EXPECT_TRUE(align_window(alone, 1500, 2500, 1000).truncated);
  EXPECT_THROW(align_window(alone, 0, 1, 0), std::domain_error);

  // Self-comparison: a run aligned against itself has slowdown 1 exactly.
  const auto self = align_window(alone, 400, 1000, 300);
  EXPECT_DOUBLE_EQ(self.ipc_alone / self.ipc_shared, 1.0);
}
