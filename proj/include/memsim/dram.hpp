#pragma once

#include <algorithm>
#include <bit>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "memsim/cache.hpp"

namespace memsim {

using Cycle = std::uint64_t;

enum class Interleaving { kRow, kCacheBlock, kSubRow };

inline const char* to_string(Interleaving i) {
  switch (i) {
    case Interleaving::kRow: return "row";
    case Interleaving::kCacheBlock: return "cache_block";
    case Interleaving::kSubRow: return "sub_row";
  }
  return "?";
}

inline Interleaving parse_interleaving(const std::string& s) {
  if (s == "row") return Interleaving::kRow;
  if (s == "cache_block") return Interleaving::kCacheBlock;
  if (s == "sub_row") return Interleaving::kSubRow;
  throw std::invalid_argument("unknown interleaving '" + s + "'");
}

// All timings are in controller cycles.
struct DramTiming {
  std::uint32_t tRCD = 8;
  std::uint32_t tRP = 8;
  std::uint32_t tCL = 8;
  std::uint32_t tCCD = 4;
  std::uint32_t tRAS = 20;
  std::uint32_t burst_cycles = 4;
};

struct DramConfig {
  std::uint32_t channels = 1;
  std::uint32_t ranks_per_channel = 1;
  std::uint32_t banks_per_rank = 8;
  std::uint32_t row_bytes = 8192;
  std::uint32_t queue_capacity = 128;
  DramTiming timing;
  Interleaving interleaving = Interleaving::kRow;
  std::uint32_t blocks_per_stripe = 4;

  std::uint32_t banks_per_channel() const { return ranks_per_channel * banks_per_rank; }
  std::uint32_t total_banks() const { return channels * banks_per_channel(); }
  std::uint32_t blocks_per_row() const { return row_bytes / kBlockBytes; }

  static constexpr std::uint32_t kBlockBytes = 64;
};

inline void validate(const DramConfig& c) {
  auto pow2 = [](std::uint64_t v) { return v != 0 && std::has_single_bit(v); };
  if (!pow2(c.channels) || !pow2(c.ranks_per_channel) || !pow2(c.banks_per_rank))
    throw std::invalid_argument("channels, ranks and banks must be powers of two");
  if (!pow2(c.row_bytes) || c.row_bytes < DramConfig::kBlockBytes)
    throw std::invalid_argument("row_bytes must be a power of two >= 64");
  if (c.interleaving == Interleaving::kSubRow &&
      (!pow2(c.blocks_per_stripe) || c.blocks_per_stripe > c.blocks_per_row()))
    throw std::invalid_argument("blocks_per_stripe must be a power of two within a row");
  const auto& t = c.timing;
  if (t.tRCD < 1 || t.tRP < 1 || t.tCL < 1 || t.tCCD < 1 || t.tRAS < 1 || t.burst_cycles < 1)
    throw std::invalid_argument("DRAM timings must be >= 1");
  if (c.queue_capacity == 0) throw std::invalid_argument("queue_capacity must be positive");
}

struct DramCoord {
  std::uint32_t channel = 0;
  std::uint32_t rank = 0;
  std::uint32_t bank = 0;
  std::uint64_t row = 0;
  std::uint32_t column = 0;  // in 64-byte blocks within the row

  friend bool operator==(const DramCoord&, const DramCoord&) = default;
};

namespace detail {

inline std::uint32_t log2u(std::uint64_t v) { return static_cast<std::uint32_t>(std::countr_zero(v)); }

struct BitReader {
  std::uint64_t bits;
  std::uint64_t take(std::uint32_t width) {
    const std::uint64_t v = width == 0 ? 0 : bits & ((std::uint64_t{1} << width) - 1);
    bits >>= width;
    return v;
  }
};

}  // namespace detail

// Address layouts, low to high bits after the 6-bit block offset:
//   row:         column | bank | rank | channel | row
//   cache_block: channel | bank | rank | column | row
//   sub_row(b):  column_low (log2 b) | bank | channel | rank | column_high | row
inline DramCoord map_address(std::uint64_t address, const DramConfig& c) {
  using detail::log2u;
  detail::BitReader r{address >> 6};
  const std::uint32_t col_bits = log2u(c.blocks_per_row());
  const std::uint32_t bank_bits = log2u(c.banks_per_rank);
  const std::uint32_t rank_bits = log2u(c.ranks_per_channel);
  const std::uint32_t chan_bits = log2u(c.channels);
  DramCoord d;
  switch (c.interleaving) {
    case Interleaving::kRow:
      d.column = static_cast<std::uint32_t>(r.take(col_bits));
      d.bank = static_cast<std::uint32_t>(r.take(bank_bits));
      d.rank = static_cast<std::uint32_t>(r.take(rank_bits));
      d.channel = static_cast<std::uint32_t>(r.take(chan_bits));
      d.row = r.bits;
      break;
    case Interleaving::kCacheBlock:
      d.channel = static_cast<std::uint32_t>(r.take(chan_bits));
      d.bank = static_cast<std::uint32_t>(r.take(bank_bits));
      d.rank = static_cast<std::uint32_t>(r.take(rank_bits));
      d.column = static_cast<std::uint32_t>(r.take(col_bits));
      d.row = r.bits;
      break;
    case Interleaving::kSubRow: {
      const std::uint32_t low_bits = log2u(c.blocks_per_stripe);
      const auto low = r.take(low_bits);
      d.bank = static_cast<std::uint32_t>(r.take(bank_bits));
      d.channel = static_cast<std::uint32_t>(r.take(chan_bits));
      d.rank = static_cast<std::uint32_t>(r.take(rank_bits));
      const auto high = r.take(col_bits - low_bits);
      d.column = static_cast<std::uint32_t>((high << low_bits) | low);
      d.row = r.bits;
      break;
    }
  }
  return d;
}

// Flat bank index within the channel.
inline std::uint32_t bank_in_channel(const DramCoord& d, const DramConfig& c) {
  return d.rank * c.banks_per_rank + d.bank;
}

struct BankState {
  std::optional<std::uint64_t> open_row;
  Cycle busy_until = 0;
  Cycle activated_at = 0;
};

struct ChannelState {
  std::optional<Cycle> last_column_issue;
};

enum class RowOutcome { kHit, kClosed, kConflict };

struct ServiceResult {
  Cycle completion = 0;
  RowOutcome outcome = RowOutcome::kHit;
  bool was_row_hit() const { return outcome == RowOutcome::kHit; }
};

inline bool can_issue(const BankState& bank, const ChannelState& channel, Cycle now,
                      const DramTiming& t) {
  if (bank.busy_until > now) return false;
  return !channel.last_column_issue || now - *channel.last_column_issue >= t.tCCD;
}

inline bool is_row_hit(const BankState& bank, std::uint64_t row) {
  return bank.open_row && *bank.open_row == row;
}

// Composite service of one request: row hit costs tCL + burst, a closed bank
// adds tRCD, a conflict adds tRP + tRCD and cannot precharge before tRAS has
// elapsed since the activation of the open row.
inline ServiceResult service_latency(BankState& bank, ChannelState& channel, std::uint64_t row,
                                     Cycle now, const DramTiming& t) {
  if (!can_issue(bank, channel, now, t))
    throw std::logic_error("DRAM issue while bank busy or tCCD unmet at cycle " + std::to_string(now));
  ServiceResult res;
  if (is_row_hit(bank, row)) {
    res.outcome = RowOutcome::kHit;
    res.completion = now + t.tCL + t.burst_cycles;
  } else if (!bank.open_row) {
    res.outcome = RowOutcome::kClosed;
    bank.activated_at = now;
    res.completion = now + t.tRCD + t.tCL + t.burst_cycles;
  } else {
    res.outcome = RowOutcome::kConflict;
    const Cycle precharge = std::max<Cycle>(now, bank.activated_at + t.tRAS);
    bank.activated_at = precharge + t.tRP;
    res.completion = precharge + t.tRP + t.tRCD + t.tCL + t.burst_cycles;
  }
  bank.open_row = row;
  bank.busy_until = res.completion;
  channel.last_column_issue = now;
  return res;
}

struct MemRequest {
  std::uint64_t id = 0;  // unique, assigned in arrival order
  AppId app = 0;
  std::uint64_t address = 0;
  bool is_write = false;
  DramCoord coord;
  std::uint32_t bank = 0;  // flat bank index within the channel
  Cycle arrival_cycle = 0;
  std::optional<Cycle> service_complete_cycle;
  std::uint64_t payload = 0;  // opaque to the controller
};

inline MemRequest make_request(std::uint64_t id, AppId app, std::uint64_t address, bool is_write,
                               Cycle arrival, const DramConfig& c) {
  MemRequest r;
  r.id = id;
  r.app = app;
  r.address = address;
  r.is_write = is_write;
  r.coord = map_address(address, c);
  r.bank = bank_in_channel(r.coord, c);
  r.arrival_cycle = arrival;
  return r;
}

// Records every issue and flags tCCD violations per channel and overlapping
// service intervals per bank.
class DramMonitor {
 public:
  explicit DramMonitor(const DramConfig& c)
      : tccd_(c.timing.tCCD),
        banks_per_channel_(c.banks_per_channel()),
        last_issue_(c.channels),
        bank_free_(c.total_banks(), 0) {}

  void record(std::uint32_t channel, std::uint32_t bank, Cycle issue, Cycle completion) {
    auto& last = last_issue_[channel];
    if (last && issue - *last < tccd_) ++tccd_violations_;
    last = issue;
    auto& free_at = bank_free_[channel * banks_per_channel_ + bank];
    if (issue < free_at) ++overlap_violations_;
    free_at = completion;
    ++issues_;
  }

  std::uint64_t tccd_violations() const { return tccd_violations_; }
  std::uint64_t overlap_violations() const { return overlap_violations_; }
  std::uint64_t issues() const { return issues_; }

 private:
  std::uint32_t tccd_;
  std::uint32_t banks_per_channel_;
  std::vector<std::optional<Cycle>> last_issue_;
  std::vector<Cycle> bank_free_;
  std::uint64_t tccd_violations_ = 0;
  std::uint64_t overlap_violations_ = 0;
  std::uint64_t issues_ = 0;
};

}  // namespace memsim
