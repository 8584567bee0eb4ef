#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "memsim/cache.hpp"

namespace memsim {

struct SlowdownRecord {
  AppId app = 0;
  std::uint64_t window = 0;
  double ipc_alone = 0.0;
  double ipc_shared = 0.0;
  double actual_slowdown = 0.0;
  std::optional<double> estimated_slowdown;
  std::optional<double> error_percent;
  bool truncated = false;  // alone run did not cover the shared work
  std::uint32_t flags = 0;
};

inline double estimation_error(double estimated, double actual) {
  if (!(actual > 0.0)) throw std::domain_error("actual slowdown must be positive");
  return std::abs(estimated - actual) / actual * 100.0;
}

inline double weighted_speedup(std::span<const double> slowdowns) {
  double ws = 0.0;
  for (double s : slowdowns) ws += 1.0 / s;
  return ws;
}

inline double harmonic_speedup(std::span<const double> slowdowns) {
  if (slowdowns.empty()) throw std::invalid_argument("harmonic speedup of no applications");
  double sum = 0.0;
  for (double s : slowdowns) {
    if (!(s > 0.0)) throw std::domain_error("slowdowns must be positive");
    sum += s;
  }
  return static_cast<double>(slowdowns.size()) / sum;
}

inline double maximum_slowdown(std::span<const double> slowdowns) {
  if (slowdowns.empty()) throw std::invalid_argument("maximum slowdown of no applications");
  return *std::max_element(slowdowns.begin(), slowdowns.end());
}

inline constexpr std::size_t kStreakBuckets = 16;

// counts[k - 1] holds runs of length k for k < 16; counts[15] holds runs of
// 16 or more, whose exact total length is kept in long_run_requests.
struct StreakHistogram {
  std::array<std::uint64_t, kStreakBuckets> counts{};
  std::uint64_t long_run_requests = 0;

  void add_run(std::uint64_t length) {
    if (length == 0) return;
    if (length >= kStreakBuckets) {
      ++counts[kStreakBuckets - 1];
      long_run_requests += length;
    } else {
      ++counts[length - 1];
    }
  }

  std::uint64_t runs() const {
    std::uint64_t n = 0;
    for (auto c : counts) n += c;
    return n;
  }

  std::uint64_t requests() const {
    std::uint64_t n = long_run_requests;
    for (std::size_t k = 1; k < kStreakBuckets; ++k) n += k * counts[k - 1];
    return n;
  }

  double mean_length() const {
    const auto r = runs();
    return r == 0 ? 0.0 : static_cast<double>(requests()) / static_cast<double>(r);
  }
};

// Incremental run-length encoder over one channel's service order.
class StreakTracker {
 public:
  void serve(AppId app, std::vector<StreakHistogram>& out) {
    if (current_ && *current_ == app) {
      ++length_;
      return;
    }
    flush(out);
    current_ = app;
    length_ = 1;
  }

  void flush(std::vector<StreakHistogram>& out) {
    if (!current_) return;
    if (*current_ >= out.size()) out.resize(*current_ + 1);
    out[*current_].add_run(length_);
    current_.reset();
    length_ = 0;
  }

 private:
  std::optional<AppId> current_;
  std::uint64_t length_ = 0;
};

inline std::vector<StreakHistogram> streak_histogram(std::span<const AppId> log) {
  std::vector<StreakHistogram> out;
  StreakTracker t;
  for (AppId a : log) t.serve(a, out);
  t.flush(out);
  return out;
}

// Retired-instruction progress of one run, sampled at fixed cycle intervals.
// samples[i] = retired instructions after cycles[i] cycles; starts at (0, 0).
struct ProgressSamples {
  std::vector<std::uint64_t> cycles;
  std::vector<std::uint64_t> retired;

  // Cycle at which `instructions` were retired, interpolated linearly
  // between bracketing samples. nullopt when the run never got that far.
  std::optional<double> cycle_at(std::uint64_t instructions) const {
    if (retired.empty()) return std::nullopt;
    auto it = std::lower_bound(retired.begin(), retired.end(), instructions);
    if (it == retired.end()) return std::nullopt;
    const auto j = static_cast<std::size_t>(it - retired.begin());
    if (*it == instructions || j == 0) return static_cast<double>(cycles[j]);
    const double r0 = static_cast<double>(retired[j - 1]);
    const double r1 = static_cast<double>(retired[j]);
    const double c0 = static_cast<double>(cycles[j - 1]);
    const double c1 = static_cast<double>(cycles[j]);
    return c0 + (static_cast<double>(instructions) - r0) / (r1 - r0) * (c1 - c0);
  }
};

struct AlignedWindow {
  double ipc_alone = 0.0;
  double ipc_shared = 0.0;
  bool truncated = false;
};

// Shared-run window covering retired instructions [begin, end) over
// `window_cycles` cycles, matched to the alone run's span for the same work.
inline AlignedWindow align_window(const ProgressSamples& alone, std::uint64_t begin, std::uint64_t end,
                                  std::uint64_t window_cycles) {
  AlignedWindow w;
  if (window_cycles == 0) throw std::domain_error("window must be positive");
  w.ipc_shared = static_cast<double>(end - begin) / static_cast<double>(window_cycles);
  const auto t0 = alone.cycle_at(begin);
  const auto t1 = alone.cycle_at(end);
  if (!t0 || !t1) {
    w.truncated = true;
    return w;
  }
  if (end == begin || *t1 <= *t0) {
    w.ipc_alone = w.ipc_shared;
    return w;
  }
  w.ipc_alone = static_cast<double>(end - begin) / (*t1 - *t0);
  return w;
}

}  // namespace memsim
