#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "memsim/trace.hpp"

namespace memsim {

struct CoreConfig {
  std::uint32_t issue_width = 3;
  std::uint32_t window_size = 128;
  std::uint32_t mshr_count = 8;
  std::uint32_t l1_hit_latency_cycles = 1;
};

inline void validate(const CoreConfig& c) {
  if (c.issue_width == 0 || c.window_size == 0 || c.mshr_count == 0 ||
      c.l1_hit_latency_cycles == 0)
    throw std::invalid_argument("core parameters must be strictly positive");
}

// Per-core sequence number of a memory instruction.
using RequestHandle = std::uint64_t;

struct MemoryOp {
  RequestHandle handle = 0;
  std::uint64_t address = 0;
  bool is_write = false;
};

// Trace-driven out-of-order core. Non-memory instructions complete as soon as
// they enter the window; memory instructions complete when the memory system
// returns their handle. Each tick:
//   1. completes the returned memory ops,
//   2. fetches up to issue_width instructions into the window,
//   3. issues memory ops in program order while MSHRs are free,
//   4. retires up to issue_width instructions from the head.
// A cycle is a memory stall cycle when nothing retired and the head is an
// incomplete memory instruction.
class Core {
 public:
  Core(CoreConfig config, std::shared_ptr<const Trace> trace, bool loop_trace = false)
      : config_(config),
        trace_(std::move(trace)),
        loop_(loop_trace),
        ring_(config.window_size + 1) {
    validate(config_);
    if (!trace_) trace_ = std::make_shared<Trace>();
    if (!trace_->empty()) gap_left_ = (*trace_)[0].gap_instructions;
  }

  void tick(std::span<const RequestHandle> responses, std::vector<MemoryOp>& issued) {
    if (finished()) throw std::logic_error("tick on a finished core");
    for (RequestHandle h : responses) complete(h);
    fetch();
    issue(issued);
    retire();
    ++total_cycles_;
  }

  std::vector<MemoryOp> tick(std::span<const RequestHandle> responses) {
    std::vector<MemoryOp> issued;
    tick(responses, issued);
    return issued;
  }

  bool finished() const { return trace_done() && entries_ == 0; }

  std::uint64_t retired_instructions() const { return retired_; }
  std::uint64_t total_cycles() const { return total_cycles_; }
  std::uint64_t memory_stall_cycles() const { return stall_cycles_; }
  std::uint64_t retired_memory_ops() const { return retired_mem_; }
  std::uint32_t retired_last_tick() const { return retired_last_tick_; }
  std::uint32_t window_occupancy() const { return occupancy_; }
  std::uint32_t in_flight() const { return in_flight_; }
  std::uint64_t trace_passes() const { return passes_; }
  const CoreConfig& config() const { return config_; }

 private:
  struct Entry {
    std::uint64_t seq = 0;
    std::uint64_t address = 0;
    std::uint32_t compute = 0;  // > 0 for a batch of non-memory instructions
    bool is_write = false;
    bool issued = false;
    bool complete = false;
  };

  Entry& slot(std::uint64_t seq) { return ring_[seq % ring_.size()]; }

  bool trace_done() const { return !loop_ && cursor_ >= trace_->size(); }

  void complete(RequestHandle h) {
    if (h < head_seq_ || h >= tail_seq_)
      throw std::logic_error("response for unknown handle " + std::to_string(h));
    Entry& e = slot(h);
    if (e.compute != 0 || !e.issued || e.complete)
      throw std::logic_error("response for handle not in flight " + std::to_string(h));
    e.complete = true;
    --in_flight_;
  }

  void fetch() {
    std::uint32_t budget = config_.issue_width;
    while (budget > 0 && occupancy_ < config_.window_size && !trace_->empty()) {
      if (cursor_ >= trace_->size()) {
        if (!loop_) break;
        cursor_ = 0;
        ++passes_;
        gap_left_ = (*trace_)[0].gap_instructions;
      }
      const TraceRecord& rec = (*trace_)[cursor_];
      if (gap_left_ > 0) {
        std::uint64_t n = gap_left_;
        if (n > budget) n = budget;
        if (n > config_.window_size - occupancy_) n = config_.window_size - occupancy_;
        push_compute(static_cast<std::uint32_t>(n));
        gap_left_ -= n;
        budget -= static_cast<std::uint32_t>(n);
        continue;
      }
      if (entries_ + 1 >= ring_.size()) break;
      Entry& e = slot(tail_seq_);
      e = Entry{};
      e.seq = tail_seq_++;
      e.address = rec.address;
      e.is_write = rec.is_write;
      ++entries_;
      ++occupancy_;
      --budget;
      ++cursor_;
      if (cursor_ < trace_->size()) gap_left_ = (*trace_)[cursor_].gap_instructions;
    }
  }

  void push_compute(std::uint32_t n) {
    if (entries_ > 0) {
      Entry& last = slot(tail_seq_ - 1);
      if (last.compute > 0) {
        last.compute += n;
        occupancy_ += n;
        return;
      }
    }
    Entry& e = slot(tail_seq_);
    e = Entry{};
    e.seq = tail_seq_++;
    e.compute = n;
    ++entries_;
    occupancy_ += n;
  }

  void issue(std::vector<MemoryOp>& issued) {
    if (issue_seq_ < head_seq_) issue_seq_ = head_seq_;
    while (issue_seq_ < tail_seq_ && in_flight_ < config_.mshr_count) {
      Entry& e = slot(issue_seq_);
      if (e.compute == 0 && !e.issued) {
        e.issued = true;
        ++in_flight_;
        issued.push_back(MemoryOp{e.seq, e.address, e.is_write});
      }
      ++issue_seq_;
    }
  }

  void retire() {
    std::uint32_t budget = config_.issue_width;
    std::uint32_t retired = 0;
    bool blocked_on_memory = false;
    while (budget > 0 && entries_ > 0) {
      Entry& head = slot(head_seq_);
      if (head.compute > 0) {
        std::uint32_t n = head.compute < budget ? head.compute : budget;
        head.compute -= n;
        occupancy_ -= n;
        budget -= n;
        retired += n;
        if (head.compute == 0) pop_head();
      } else if (head.complete) {
        pop_head();
        --occupancy_;
        --budget;
        ++retired;
        ++retired_mem_;
      } else {
        blocked_on_memory = true;
        break;
      }
    }
    retired_ += retired;
    retired_last_tick_ = retired;
    if (retired == 0 && blocked_on_memory) ++stall_cycles_;
  }

  void pop_head() {
    ++head_seq_;
    --entries_;
  }

  CoreConfig config_;
  std::shared_ptr<const Trace> trace_;
  bool loop_;
  std::vector<Entry> ring_;

  std::uint64_t head_seq_ = 0;
  std::uint64_t tail_seq_ = 0;
  std::uint64_t issue_seq_ = 0;
  std::uint64_t entries_ = 0;
  std::uint32_t occupancy_ = 0;
  std::uint32_t in_flight_ = 0;

  std::size_t cursor_ = 0;
  std::uint64_t gap_left_ = 0;
  std::uint64_t passes_ = 0;

  std::uint64_t retired_ = 0;
  std::uint64_t retired_mem_ = 0;
  std::uint64_t total_cycles_ = 0;
  std::uint64_t stall_cycles_ = 0;
  std::uint32_t retired_last_tick_ = 0;
};

inline double compute_alpha(std::uint64_t stall_cycles, std::uint64_t total_cycles) {
  if (total_cycles == 0) throw std::domain_error("alpha undefined for zero cycles");
  return static_cast<double>(stall_cycles) / static_cast<double>(total_cycles);
}

inline double compute_alpha(const Core& core) {
  return compute_alpha(core.memory_stall_cycles(), core.total_cycles());
}

inline double compute_ipc(std::uint64_t retired, std::uint64_t total_cycles) {
  if (total_cycles == 0) throw std::domain_error("IPC undefined for zero cycles");
  return static_cast<double>(retired) / static_cast<double>(total_cycles);
}

inline double compute_ipc(const Core& core) {
  return compute_ipc(core.retired_instructions(), core.total_cycles());
}

}  // namespace memsim
