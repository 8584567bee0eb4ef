#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "memsim/dram.hpp"

namespace memsim {

enum class SchedulerPolicy { kFrfcfs, kFrfcfsCap, kGrouping, kBliss };

inline const char* to_string(SchedulerPolicy p) {
  switch (p) {
    case SchedulerPolicy::kFrfcfs: return "frfcfs";
    case SchedulerPolicy::kFrfcfsCap: return "frfcfs_cap";
    case SchedulerPolicy::kGrouping: return "grouping";
    case SchedulerPolicy::kBliss: return "bliss";
  }
  return "?";
}

inline SchedulerPolicy parse_scheduler_policy(const std::string& s) {
  if (s == "frfcfs") return SchedulerPolicy::kFrfcfs;
  if (s == "frfcfs_cap") return SchedulerPolicy::kFrfcfsCap;
  if (s == "grouping") return SchedulerPolicy::kGrouping;
  if (s == "bliss") return SchedulerPolicy::kBliss;
  throw std::invalid_argument("unknown scheduler policy '" + s + "'");
}

// Per-channel request buffer in arrival order.
class RequestQueue {
 public:
  explicit RequestQueue(std::size_t capacity = 128) : capacity_(capacity) { items_.reserve(capacity); }

  bool full() const { return items_.size() >= capacity_; }
  bool empty() const { return items_.empty(); }
  std::size_t size() const { return items_.size(); }
  std::size_t capacity() const { return capacity_; }

  void push(MemRequest r) {
    if (full()) throw std::logic_error("request queue overflow");
    items_.push_back(std::move(r));
  }

  MemRequest take(std::size_t index) {
    MemRequest r = std::move(items_[index]);
    items_.erase(items_.begin() + static_cast<std::ptrdiff_t>(index));
    return r;
  }

  const MemRequest& operator[](std::size_t i) const { return items_[i]; }
  auto begin() const { return items_.begin(); }
  auto end() const { return items_.end(); }

 private:
  std::size_t capacity_;
  std::vector<MemRequest> items_;
};

// What the selection functions see of one channel.
struct ChannelView {
  std::span<const BankState> banks;
  const ChannelState& channel;
  const DramTiming& timing;
  Cycle now;

  bool issuable(const MemRequest& r) const { return can_issue(banks[r.bank], channel, now, timing); }
  bool row_hit(const MemRequest& r) const { return is_row_hit(banks[r.bank], r.coord.row); }
  bool channel_ready() const {
    return !channel.last_column_issue || now - *channel.last_column_issue >= timing.tCCD;
  }
};

using PriorityKey = std::array<int, 3>;

// Picks the issuable request with the lexicographically largest key; ties go
// to the older request (lower id), which also orders by app id for requests
// that arrived in the same cycle.
template <typename KeyFn>
std::optional<std::size_t> select_by_key(const RequestQueue& q, const ChannelView& view, KeyFn&& key) {
  if (!view.channel_ready()) return std::nullopt;
  std::optional<std::size_t> best;
  PriorityKey best_key{};
  for (std::size_t i = 0; i < q.size(); ++i) {
    const MemRequest& r = q[i];
    if (!view.issuable(r)) continue;
    PriorityKey k = key(r);
    if (!best || k > best_key || (k == best_key && r.id < q[*best].id)) {
      best = i;
      best_key = k;
    }
  }
  return best;
}

inline std::optional<std::size_t> frfcfs_select(const RequestQueue& q, const ChannelView& view) {
  return select_by_key(q, view, [&](const MemRequest& r) {
    return PriorityKey{view.row_hit(r) ? 1 : 0, 0, 0};
  });
}

// Consecutive row-hit services per bank, for FRFCFS-Cap.
struct CapState {
  std::uint32_t cap = 4;
  std::vector<std::optional<AppId>> last_app;  // per bank
  std::vector<std::uint32_t> consecutive_hits;  // per bank

  CapState() = default;
  CapState(std::uint32_t banks, std::uint32_t cap_value)
      : cap(cap_value), last_app(banks), consecutive_hits(banks, 0) {}

  bool capped(const MemRequest& r) const {
    return last_app[r.bank] && *last_app[r.bank] == r.app && consecutive_hits[r.bank] >= cap;
  }

  void record(const MemRequest& r, bool row_hit) {
    if (row_hit && last_app[r.bank] && *last_app[r.bank] == r.app) {
      ++consecutive_hits[r.bank];
    } else {
      consecutive_hits[r.bank] = row_hit ? 1 : 0;
    }
    last_app[r.bank] = r.app;
  }
};

inline std::optional<std::size_t> frfcfs_cap_select(const RequestQueue& q, const ChannelView& view,
                                                    const CapState& cap) {
  return select_by_key(q, view, [&](const MemRequest& r) {
    const bool hit = view.row_hit(r);
    const bool demoted = hit && cap.capped(r);
    return PriorityKey{demoted ? 0 : 1, hit ? 1 : 0, 0};
  });
}

struct BlissState {
  std::optional<AppId> application_id;
  std::uint32_t requests_served = 0;
  std::vector<bool> blacklist;
  std::uint32_t blacklisting_threshold = 4;
  Cycle clearing_interval_cycles = 10000;
  Cycle last_clear = 0;

  BlissState() = default;
  BlissState(std::size_t apps, std::uint32_t threshold, Cycle clearing_interval)
      : blacklist(apps, false), blacklisting_threshold(threshold), clearing_interval_cycles(clearing_interval) {}

  bool blacklisted(AppId app) const { return app < blacklist.size() && blacklist[app]; }
};

inline void bliss_update(BlissState& s, AppId issued_app) {
  if (s.application_id && *s.application_id == issued_app) {
    ++s.requests_served;
  } else {
    s.requests_served = 0;
    s.application_id = issued_app;
  }
  if (s.requests_served >= s.blacklisting_threshold) {
    if (issued_app >= s.blacklist.size()) s.blacklist.resize(issued_app + 1, false);
    s.blacklist[issued_app] = true;
    s.requests_served = 0;
  }
}

// Clears every blacklist bit once a full clearing interval has elapsed.
inline bool bliss_clear(BlissState& s, Cycle now) {
  if (now - s.last_clear < s.clearing_interval_cycles) return false;
  std::fill(s.blacklist.begin(), s.blacklist.end(), false);
  s.last_clear = now;
  return true;
}

inline std::optional<std::size_t> bliss_select(const RequestQueue& q, const ChannelView& view,
                                               const BlissState& s) {
  return select_by_key(q, view, [&](const MemRequest& r) {
    return PriorityKey{s.blacklisted(r.app) ? 0 : 1, view.row_hit(r) ? 1 : 0, 0};
  });
}

// high_intensity[app] is true for the memory-intensive group.
inline std::optional<std::size_t> grouping_select(const RequestQueue& q, const ChannelView& view,
                                                  const std::vector<bool>& high_intensity) {
  for (const auto& r : q)
    if (r.app >= high_intensity.size())
      throw std::out_of_range("app " + std::to_string(r.app) + " has no intensity class");
  return select_by_key(q, view, [&](const MemRequest& r) {
    return PriorityKey{high_intensity[r.app] ? 0 : 1, view.row_hit(r) ? 1 : 0, 0};
  });
}

struct EpochPriorityState {
  std::optional<AppId> app;
  Cycle epoch_end_cycle = 0;
};

// Requests of the epoch's highest-priority application go first (FRFCFS
// among them); with none issuable the base policy picks from the rest.
template <typename BaseSelect>
std::optional<std::size_t> epoch_priority_select(const RequestQueue& q, const ChannelView& view,
                                                 const EpochPriorityState& prio, BaseSelect&& base) {
  if (prio.app) {
    const AppId app = *prio.app;
    auto best = select_by_key(q, view, [&](const MemRequest& r) {
      return PriorityKey{r.app == app ? 1 : 0, view.row_hit(r) ? 1 : 0, 0};
    });
    if (best && q[*best].app == app) return best;
  }
  return base(q, view);
}

// Scheduler state for every channel plus the configured policy.
struct SchedulerSettings {
  SchedulerPolicy policy = SchedulerPolicy::kFrfcfs;
  bool overlay_epoch_priority = false;
  std::uint32_t blacklisting_threshold = 4;
  Cycle clearing_interval_cycles = 10000;
  std::uint32_t cap = 4;
  double grouping_mpki_threshold = 5.0;
  Cycle grouping_window_cycles = 5'000'000;
};

class Scheduler {
 public:
  Scheduler(const SchedulerSettings& settings, std::size_t apps, std::uint32_t channels,
            std::uint32_t banks_per_channel)
      : settings_(settings), high_intensity_(apps, false) {
    for (std::uint32_t c = 0; c < channels; ++c) {
      bliss_.emplace_back(apps, settings.blacklisting_threshold, settings.clearing_interval_cycles);
      cap_.emplace_back(banks_per_channel, settings.cap);
    }
  }

  const SchedulerSettings& settings() const { return settings_; }

  std::optional<std::size_t> select(std::uint32_t channel, const RequestQueue& q,
                                    const ChannelView& view) const {
    if (settings_.overlay_epoch_priority && priority_.app) {
      const AppId prio = *priority_.app;
      return select_by_key(q, view, [&](const MemRequest& r) {
        if (r.app == prio) return PriorityKey{1, view.row_hit(r) ? 1 : 0, 0};
        PriorityKey base = base_key(channel, r, view);
        return PriorityKey{0, base[0], base[1]};
      });
    }
    return select_by_key(q, view, [&](const MemRequest& r) {
      PriorityKey base = base_key(channel, r, view);
      return PriorityKey{base[0], base[1], 0};
    });
  }

  void on_issue(std::uint32_t channel, const MemRequest& r, bool row_hit) {
    bliss_update(bliss_[channel], r.app);
    cap_[channel].record(r, row_hit);
  }

  void tick_clear(Cycle now) {
    if (settings_.policy != SchedulerPolicy::kBliss) return;
    for (auto& s : bliss_) bliss_clear(s, now);
  }

  void set_priority(std::optional<AppId> app, Cycle epoch_end) {
    priority_.app = app;
    priority_.epoch_end_cycle = epoch_end;
  }
  const EpochPriorityState& priority() const { return priority_; }

  void set_intensity(std::vector<bool> high) { high_intensity_ = std::move(high); }
  const std::vector<bool>& intensity() const { return high_intensity_; }

  const BlissState& bliss(std::uint32_t channel) const { return bliss_[channel]; }
  const CapState& cap(std::uint32_t channel) const { return cap_[channel]; }

 private:
  // Two-level key of the base policy: (class, row hit).
  PriorityKey base_key(std::uint32_t channel, const MemRequest& r, const ChannelView& view) const {
    const int hit = view.row_hit(r) ? 1 : 0;
    switch (settings_.policy) {
      case SchedulerPolicy::kFrfcfs:
        return {hit, 0, 0};
      case SchedulerPolicy::kFrfcfsCap:
        return {hit && cap_[channel].capped(r) ? 0 : 1, hit, 0};
      case SchedulerPolicy::kGrouping:
        return {high_intensity_[r.app] ? 0 : 1, hit, 0};
      case SchedulerPolicy::kBliss:
        return {bliss_[channel].blacklisted(r.app) ? 0 : 1, hit, 0};
    }
    return {hit, 0, 0};
  }

  SchedulerSettings settings_;
  std::vector<BlissState> bliss_;
  std::vector<CapState> cap_;
  std::vector<bool> high_intensity_;
  EpochPriorityState priority_;
};

}  // namespace memsim
