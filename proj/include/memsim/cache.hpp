#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace memsim {

using AppId = std::uint32_t;

struct CacheConfig {
  std::uint64_t capacity_bytes = 64 << 10;
  std::uint32_t associativity = 4;
  std::uint32_t line_bytes = 64;
  std::uint32_t hit_latency_cycles = 1;
  bool shared = false;

  std::uint64_t set_count() const {
    return capacity_bytes / (static_cast<std::uint64_t>(associativity) * line_bytes);
  }
};

inline void validate(const CacheConfig& c) {
  if (c.associativity == 0 || c.line_bytes == 0 || c.capacity_bytes == 0)
    throw std::invalid_argument("cache capacity, associativity and line size must be positive");
  const std::uint64_t way_bytes = static_cast<std::uint64_t>(c.associativity) * c.line_bytes;
  if (c.capacity_bytes % way_bytes != 0)
    throw std::invalid_argument("cache capacity must be divisible by associativity * line size");
  if (!std::has_single_bit(c.set_count()))
    throw std::invalid_argument("cache set count must be a power of two");
  if (!std::has_single_bit(static_cast<std::uint64_t>(c.line_bytes)))
    throw std::invalid_argument("cache line size must be a power of two");
}

// Per-application way quotas for a partitioned shared cache.
class WayPartition {
 public:
  WayPartition() = default;
  explicit WayPartition(std::vector<std::uint32_t> ways) : ways_(std::move(ways)) {}

  bool contains(AppId app) const { return app < ways_.size(); }
  std::uint32_t quota(AppId app) const {
    if (!contains(app)) throw std::out_of_range("app " + std::to_string(app) + " missing from partition");
    return ways_[app];
  }
  const std::vector<std::uint32_t>& ways() const { return ways_; }

  bool valid_for(std::uint32_t associativity) const {
    std::uint64_t sum = 0;
    for (auto w : ways_) {
      if (w < 1) return false;
      sum += w;
    }
    return sum == associativity;
  }

  friend bool operator==(const WayPartition&, const WayPartition&) = default;

 private:
  std::vector<std::uint32_t> ways_;
};

struct EvictedLine {
  std::uint64_t line_address = 0;
  AppId owner = 0;
};

// Set-associative LRU cache storing tags only. Lookups and fills are
// separate: a miss is reported by lookup() and the line is installed later
// by fill(), when the memory response returns.
class Cache {
 public:
  explicit Cache(CacheConfig config) : config_(config) {
    validate(config_);
    sets_ = config_.set_count();
    line_shift_ = static_cast<std::uint32_t>(std::countr_zero(static_cast<std::uint64_t>(config_.line_bytes)));
    lines_.resize(sets_ * config_.associativity);
  }

  const CacheConfig& config() const { return config_; }
  std::uint64_t set_count() const { return sets_; }

  std::uint64_t line_address(std::uint64_t address) const { return address >> line_shift_; }
  std::uint64_t set_index(std::uint64_t address) const { return line_address(address) & (sets_ - 1); }

  // Returns true on a hit and refreshes the line's LRU stamp.
  bool lookup(std::uint64_t address) {
    const std::uint64_t tag = line_address(address);
    Line* set = set_begin(tag & (sets_ - 1));
    for (std::uint32_t w = 0; w < config_.associativity; ++w) {
      if (set[w].valid && set[w].tag == tag) {
        set[w].stamp = ++clock_;
        ++hits_;
        return true;
      }
    }
    ++misses_;
    return false;
  }

  bool contains(std::uint64_t address) const {
    const std::uint64_t tag = line_address(address);
    const Line* set = set_begin(tag & (sets_ - 1));
    for (std::uint32_t w = 0; w < config_.associativity; ++w)
      if (set[w].valid && set[w].tag == tag) return true;
    return false;
  }

  std::optional<AppId> owner_of(std::uint64_t address) const {
    const std::uint64_t tag = line_address(address);
    const Line* set = set_begin(tag & (sets_ - 1));
    for (std::uint32_t w = 0; w < config_.associativity; ++w)
      if (set[w].valid && set[w].tag == tag) return set[w].owner;
    return std::nullopt;
  }

  // Installs the line for `app`. Without a partition the set's LRU line is
  // the victim. With a partition, an app at or above its quota replaces its
  // own LRU line; below quota it takes a free way or the set's LRU line.
  std::optional<EvictedLine> fill(AppId app, std::uint64_t address,
                                  const WayPartition* partition = nullptr) {
    const std::uint64_t tag = line_address(address);
    Line* set = set_begin(tag & (sets_ - 1));
    const std::uint32_t ways = config_.associativity;

    for (std::uint32_t w = 0; w < ways; ++w) {
      if (set[w].valid && set[w].tag == tag) {
        set[w].stamp = ++clock_;
        return std::nullopt;
      }
    }

    Line* victim = nullptr;
    bool own_only = false;
    if (partition != nullptr) {
      const std::uint32_t quota = partition->quota(app);
      std::uint32_t owned = 0;
      for (std::uint32_t w = 0; w < ways; ++w)
        if (set[w].valid && set[w].owner == app) ++owned;
      own_only = owned >= quota;
    }
    if (!own_only) {
      for (std::uint32_t w = 0; w < ways && victim == nullptr; ++w)
        if (!set[w].valid) victim = &set[w];
    }
    if (victim == nullptr) {
      for (std::uint32_t w = 0; w < ways; ++w) {
        Line& l = set[w];
        if (!l.valid) continue;
        if (own_only && l.owner != app) continue;
        if (victim == nullptr || l.stamp < victim->stamp) victim = &l;
      }
    }
    if (victim == nullptr) {
      // Quota reached but no owned valid line: only possible with a quota of
      // zero, which WayPartition validation rules out. Fall back to LRU.
      for (std::uint32_t w = 0; w < ways; ++w)
        if (victim == nullptr || set[w].stamp < victim->stamp) victim = &set[w];
    }

    std::optional<EvictedLine> evicted;
    if (victim->valid) evicted = EvictedLine{victim->tag, victim->owner};
    victim->valid = true;
    victim->tag = tag;
    victim->owner = app;
    victim->stamp = ++clock_;
    return evicted;
  }

  std::uint64_t hits() const { return hits_; }
  std::uint64_t misses() const { return misses_; }

 private:
  struct Line {
    std::uint64_t tag = 0;
    std::uint64_t stamp = 0;
    AppId owner = 0;
    bool valid = false;
  };

  Line* set_begin(std::uint64_t set) { return &lines_[set * config_.associativity]; }
  const Line* set_begin(std::uint64_t set) const { return &lines_[set * config_.associativity]; }

  CacheConfig config_;
  std::uint64_t sets_ = 0;
  std::uint32_t line_shift_ = 6;
  std::vector<Line> lines_;
  std::uint64_t clock_ = 0;
  std::uint64_t hits_ = 0;
  std::uint64_t misses_ = 0;
};

enum class AtsOutcome { kNotSampled, kHit, kMiss };

struct AtsAccess {
  AtsOutcome outcome = AtsOutcome::kNotSampled;
  // 1-based LRU stack position of a hit; 0 otherwise.
  std::uint32_t stack_distance = 0;
};

// Auxiliary tag store: the owner's view of the shared cache as if it ran
// alone, kept for a subset of sets. Each sampled set is an LRU stack of the
// owner's lines with the shared cache's associativity; stack distances of
// hits are histogrammed so hits under any way count n can be recovered.
class AuxiliaryTagStore {
 public:
  AuxiliaryTagStore(AppId owner, const CacheConfig& llc, std::uint32_t sampled_sets)
      : owner_(owner), associativity_(llc.associativity) {
    validate(llc);
    line_shift_ = static_cast<std::uint32_t>(std::countr_zero(static_cast<std::uint64_t>(llc.line_bytes)));
    set_mask_ = llc.set_count() - 1;
    std::uint64_t sets = llc.set_count();
    if (sampled_sets == 0 || sampled_sets >= sets) {
      stride_ = 1;
    } else {
      stride_ = sets / sampled_sets;
    }
    stacks_.resize(sets / stride_);
    histogram_.assign(associativity_ + 1, 0);
  }

  AppId owner() const { return owner_; }
  std::uint32_t associativity() const { return associativity_; }
  std::size_t sampled_set_count() const { return stacks_.size(); }

  bool is_sampled(std::uint64_t address) const {
    return ((address >> line_shift_) & set_mask_) % stride_ == 0;
  }

  std::vector<std::uint64_t> sampled_sets() const {
    std::vector<std::uint64_t> out;
    for (std::uint64_t s = 0; s <= set_mask_; s += stride_) out.push_back(s);
    return out;
  }

  // Looks the line up. With fill_on_miss the line is installed immediately;
  // otherwise the caller installs it with fill() when the miss is serviced.
  AtsAccess access(std::uint64_t address, bool fill_on_miss = true) {
    if (!is_sampled(address)) return {};
    const std::uint64_t tag = address >> line_shift_;
    auto& stack = stacks_[(tag & set_mask_) / stride_];
    auto it = std::find(stack.begin(), stack.end(), tag);
    if (it != stack.end()) {
      const auto distance = static_cast<std::uint32_t>(it - stack.begin()) + 1;
      std::rotate(stack.begin(), it, it + 1);
      ++hits_;
      ++histogram_[distance];
      return {AtsOutcome::kHit, distance};
    }
    ++misses_;
    ++histogram_[0];
    if (fill_on_miss) insert(stack, tag);
    return {AtsOutcome::kMiss, 0};
  }

  void fill(std::uint64_t address) {
    if (!is_sampled(address)) return;
    const std::uint64_t tag = address >> line_shift_;
    auto& stack = stacks_[(tag & set_mask_) / stride_];
    auto it = std::find(stack.begin(), stack.end(), tag);
    if (it != stack.end()) {
      std::rotate(stack.begin(), it, it + 1);
      return;
    }
    insert(stack, tag);
  }

  std::uint64_t hits() const { return hits_; }
  std::uint64_t misses() const { return misses_; }

  // Sampled accesses that hit at stack distance <= ways.
  std::uint64_t hits_within(std::uint32_t ways) const {
    std::uint64_t sum = 0;
    for (std::uint32_t d = 1; d <= ways && d <= associativity_; ++d) sum += histogram_[d];
    return sum;
  }
  std::uint64_t sampled_accesses() const {
    std::uint64_t sum = 0;
    for (auto v : histogram_) sum += v;
    return sum;
  }
  void reset_histogram() { std::fill(histogram_.begin(), histogram_.end(), 0); }

 private:
  void insert(std::vector<std::uint64_t>& stack, std::uint64_t tag) {
    if (stack.size() >= associativity_) stack.pop_back();
    stack.insert(stack.begin(), tag);
  }

  AppId owner_;
  std::uint32_t associativity_;
  std::uint32_t line_shift_ = 6;
  std::uint64_t set_mask_ = 0;
  std::uint64_t stride_ = 1;
  std::vector<std::vector<std::uint64_t>> stacks_;
  std::vector<std::uint64_t> histogram_;  // [0] counts misses
  std::uint64_t hits_ = 0;
  std::uint64_t misses_ = 0;
};

struct AtsSampleStats {
  double ats_hit_fraction = 0.0;
  double ats_miss_fraction = 0.0;

  static AtsSampleStats from_counts(std::uint64_t hits, std::uint64_t misses) {
    const std::uint64_t total = hits + misses;
    if (total == 0) return {};
    return {static_cast<double>(hits) / total, static_cast<double>(misses) / total};
  }
};

struct ScaledAtsCounts {
  std::uint64_t hits = 0;
  std::uint64_t misses = 0;
};

// Scales sampled ATS fractions to a full access count. Hits are rounded half
// to even and misses take the remainder, so hits + misses == accesses.
inline ScaledAtsCounts scale_ats_counts(const AtsSampleStats& stats, std::uint64_t epoch_accesses) {
  const double raw = stats.ats_hit_fraction * static_cast<double>(epoch_accesses);
  auto hits = static_cast<std::uint64_t>(std::nearbyint(raw));
  hits = std::min(hits, epoch_accesses);
  return {hits, epoch_accesses - hits};
}

}  // namespace memsim
