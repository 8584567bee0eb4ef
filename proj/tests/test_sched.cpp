#include <gtest/gtest.h>

#include "memsim/random.hpp"
#include "memsim/sched.hpp"

using namespace memsim;

namespace {

// A channel with eight banks; bank 0 has row 1 open.
struct Fixture {
  DramTiming timing;
  std::vector<BankState> banks = std::vector<BankState>(8);
  ChannelState channel;
  RequestQueue q{16};
  std::uint64_t next_id = 0;

  Fixture() {
    for (auto& b : banks) b.open_row = 1;
  }

  ChannelView view(Cycle now = 100) const { return ChannelView{banks, channel, timing, now}; }

  std::size_t add(AppId app, std::uint32_t bank, std::uint64_t row) {
    MemRequest r;
    r.id = next_id++;
    r.app = app;
    r.bank = bank;
    r.coord.bank = bank;
    r.coord.row = row;
    q.push(r);
    return q.size() - 1;
  }
};

constexpr std::uint64_t kHit = 1, kMiss = 2;

}  // namespace

TEST(RequestQueue, CapacityAndTake) {
  RequestQueue q(2);
  q.push({});
  MemRequest b;
  b.id = 5;
  q.push(b);
  EXPECT_TRUE(q.full());
  EXPECT_THROW(q.push({}), std::logic_error);
  EXPECT_EQ(q.take(1).id, 5u);
  EXPECT_EQ(q.size(), 1u);
}

TEST(Frfcfs, Examples) {
  Fixture f;
  f.add(0, 0, kMiss);
  const auto newer_hit = f.add(1, 0, kHit);
  EXPECT_EQ(frfcfs_select(f.q, f.view()), newer_hit);

  Fixture g;
  const auto older = g.add(0, 0, kHit);
  g.add(1, 1, kHit);
  EXPECT_EQ(frfcfs_select(g.q, g.view()), older);

  Fixture empty;
  EXPECT_FALSE(frfcfs_select(empty.q, empty.view()).has_value());
}

TEST(Frfcfs, SkipsUnissuable) {
  Fixture f;
  f.banks[0].busy_until = 200;
  f.add(0, 0, kHit);
  const auto other = f.add(0, 1, kMiss);
  EXPECT_EQ(frfcfs_select(f.q, f.view()), other);
  f.channel.last_column_issue = 98;
  EXPECT_FALSE(frfcfs_select(f.q, f.view()).has_value());
}

TEST(Frfcfs, MatchesBruteForceOrder) {
  Rng rng(3);
  for (int trial = 0; trial < 500; ++trial) {
    Fixture f;
    const auto n = 1 + rng.below(12);
    for (std::uint64_t i = 0; i < n; ++i) {
      f.add(static_cast<AppId>(rng.below(4)), static_cast<std::uint32_t>(rng.below(8)), 1 + rng.below(2));
      if (rng.below(4) == 0) f.banks[rng.below(8)].busy_until = 1000;
    }
    std::optional<std::size_t> want;
    for (int pass = 0; pass < 2 && !want; ++pass)
      for (std::size_t i = 0; i < f.q.size(); ++i) {
        const auto& r = f.q[i];
        if (f.banks[r.bank].busy_until > 100) continue;
        if (pass == 0 && r.coord.row != 1) continue;
        want = i;
        break;
      }
    ASSERT_EQ(frfcfs_select(f.q, f.view()), want);
  }
}

TEST(FrfcfsCap, Examples) {
  Fixture f;
  CapState cap(8, 4);
  MemRequest a;
  a.app = 0;
  a.bank = 0;
  for (int i = 0; i < 3; ++i) cap.record(a, true);
  f.add(0, 0, kHit);
  f.add(1, 0, kMiss);
  EXPECT_EQ(frfcfs_cap_select(f.q, f.view(), cap), 0u);  // count 3 < cap
  cap.record(a, true);
  EXPECT_EQ(cap.consecutive_hits[0], 4u);
  EXPECT_EQ(frfcfs_cap_select(f.q, f.view(), cap), 1u);

  Fixture only;
  only.add(0, 0, kHit);
  only.add(0, 0, kHit);
  EXPECT_EQ(frfcfs_cap_select(only.q, only.view(), cap), 0u);  // demoted, never starved
}

TEST(FrfcfsCap, CounterResetsOnOtherAppOrMiss) {
  CapState cap(2, 4);
  MemRequest a, b;
  a.app = 0;
  b.app = 1;
  cap.record(a, true);
  cap.record(a, true);
  cap.record(b, true);
  EXPECT_EQ(cap.consecutive_hits[0], 1u);
  cap.record(b, false);
  EXPECT_EQ(cap.consecutive_hits[0], 0u);
}

TEST(Bliss, CounterStateMachine) {
  BlissState s(2, 4, 10000);
  for (int i = 0; i < 4; ++i) bliss_update(s, 0);
  EXPECT_FALSE(s.blacklisted(0));
  bliss_update(s, 0);
  EXPECT_TRUE(s.blacklisted(0));
  EXPECT_EQ(s.requests_served, 0u);

  BlissState t(2, 4, 10000);
  bliss_update(t, 0);
  bliss_update(t, 0);
  bliss_update(t, 1);
  EXPECT_FALSE(t.blacklisted(0));
  EXPECT_EQ(*t.application_id, 1u);
  EXPECT_EQ(t.requests_served, 0u);

  BlissState u(2, 4, 10000);
  int blacklistings = 0;
  for (AppId app : {0, 0, 0, 0, 0, 1, 0, 0, 0, 0, 0}) {
    const bool before = u.blacklisted(0);
    bliss_update(u, app);
    if (!before && u.blacklisted(0)) ++blacklistings;
    if (u.blacklisted(0)) u.blacklist[0] = false;  // observe each event separately
  }
  EXPECT_EQ(blacklistings, 2);
}

TEST(Bliss, Clearing) {
  BlissState s(2, 4, 10000);
  s.blacklist[0] = true;
  EXPECT_FALSE(bliss_clear(s, 9999));
  EXPECT_TRUE(s.blacklisted(0));
  EXPECT_TRUE(bliss_clear(s, 10000));
  EXPECT_FALSE(s.blacklisted(0));
  s.blacklist[1] = true;
  EXPECT_FALSE(bliss_clear(s, 19999));
  EXPECT_TRUE(bliss_clear(s, 20000));
  EXPECT_FALSE(s.blacklisted(1));
}

TEST(Bliss, Selection) {
  BlissState s(2, 4, 10000);
  s.blacklist[0] = true;
  Fixture f;
  f.add(0, 0, kHit);
  f.add(1, 1, kMiss);
  EXPECT_EQ(bliss_select(f.q, f.view(), s), 1u);

  BlissState clean(2, 4, 10000);
  EXPECT_EQ(bliss_select(f.q, f.view(), clean), 0u);

  s.blacklist[1] = true;
  Fixture g;
  g.add(0, 0, kMiss);
  g.add(1, 1, kHit);
  EXPECT_EQ(bliss_select(g.q, g.view(), s), 1u);
}

TEST(Grouping, Selection) {
  Fixture f;
  f.add(0, 0, kHit);
  f.add(1, 1, kMiss);
  EXPECT_EQ(grouping_select(f.q, f.view(), {true, false}), 1u);
  EXPECT_EQ(grouping_select(f.q, f.view(), {false, false}), 0u);
  EXPECT_EQ(grouping_select(f.q, f.view(), {true, true}), 0u);
  EXPECT_THROW(grouping_select(f.q, f.view(), {true}), std::out_of_range);
}

TEST(EpochPriority, Selection) {
  Fixture f;
  f.add(0, 0, kHit);
  f.add(1, 1, kMiss);
  auto base = [](const RequestQueue& q, const ChannelView& v) { return frfcfs_select(q, v); };
  EXPECT_EQ(epoch_priority_select(f.q, f.view(), EpochPriorityState{1, 0}, base), 1u);
  EXPECT_EQ(epoch_priority_select(f.q, f.view(), EpochPriorityState{}, base), 0u);
  EXPECT_EQ(epoch_priority_select(f.q, f.view(), EpochPriorityState{3, 0}, base), 0u);
  f.banks[1].busy_until = 500;
  EXPECT_EQ(epoch_priority_select(f.q, f.view(), EpochPriorityState{1, 0}, base), 0u);
}

TEST(Scheduler, OverlayOnTopOfBase) {
  SchedulerSettings s;
  s.policy = SchedulerPolicy::kBliss;
  s.overlay_epoch_priority = true;
  Scheduler sched(s, 3, 1, 8);
  Fixture f;
  f.add(0, 0, kHit);
  f.add(1, 1, kMiss);
  f.add(2, 2, kMiss);
  EXPECT_EQ(sched.select(0, f.q, f.view()), 0u);
  sched.set_priority(2, 1000);
  EXPECT_EQ(sched.select(0, f.q, f.view()), 2u);
  sched.set_priority(std::nullopt, 0);
  MemRequest r;
  r.app = 0;
  for (int i = 0; i < 5; ++i) sched.on_issue(0, r, true);
  EXPECT_TRUE(sched.bliss(0).blacklisted(0));
  EXPECT_EQ(sched.select(0, f.q, f.view()), 1u);
  sched.tick_clear(10000);
  EXPECT_FALSE(sched.bliss(0).blacklisted(0));
}

TEST(Scheduler, ParsesPolicies) {
  EXPECT_EQ(parse_scheduler_policy("bliss"), SchedulerPolicy::kBliss);
  EXPECT_STREQ(to_string(SchedulerPolicy::kFrfcfsCap), "frfcfs_cap");
  EXPECT_THROW(parse_scheduler_policy("fcfs"), std::invalid_argument);
}
