#pragma once

#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <vector>

#include "memsim/cache.hpp"
#include "memsim/outcome.hpp"
#include "memsim/random.hpp"

namespace memsim {

struct MiseConfig {
  std::uint64_t interval_cycles = 5'000'000;
  std::uint64_t epoch_cycles = 10'000;
  double alpha_threshold = 0.7;
};

inline void validate(const MiseConfig& c) {
  if (c.interval_cycles == 0 || c.epoch_cycles == 0)
    throw std::invalid_argument("mise interval and epoch must be positive");
  if (c.interval_cycles % c.epoch_cycles != 0)
    throw std::invalid_argument("mise interval must be a multiple of the epoch");
  if (!(c.alpha_threshold > 0.0 && c.alpha_threshold <= 1.0))
    throw std::invalid_argument("mise alpha_threshold must lie in (0, 1]");
}

// Per-application counters, reset at every interval boundary.
struct MiseCounters {
  std::uint64_t requests_served = 0;
  std::uint64_t hpe_count = 0;
  std::uint64_t hpe_requests = 0;
  std::uint64_t interference_cycles = 0;
  std::uint64_t stall_cycles = 0;
  std::uint64_t total_cycles = 0;
};

// Lottery weights: the probability that each application holds the highest
// priority for an epoch.
struct BandwidthAllocation {
  std::vector<double> weights;

  static BandwidthAllocation equal(std::size_t apps) {
    return {std::vector<double>(apps, apps == 0 ? 0.0 : 1.0 / static_cast<double>(apps))};
  }

  bool valid() const {
    if (weights.empty()) return false;
    double sum = 0.0;
    for (double w : weights) {
      if (!(w >= 0.0)) return false;
      sum += w;
    }
    return std::abs(sum - 1.0) <= 1e-9;
  }
};

// Draws the epoch's highest-priority application; consumes one draw.
inline AppId assign_epoch(const BandwidthAllocation& alloc, Rng& rng) {
  const double u = rng.uniform();
  double acc = 0.0;
  AppId last_positive = 0;
  for (AppId i = 0; i < alloc.weights.size(); ++i) {
    if (alloc.weights[i] <= 0.0) continue;
    acc += alloc.weights[i];
    last_positive = i;
    if (u < acc) return i;
  }
  return last_positive;
}

// One cycle of an application's highest-priority epoch: it is an
// interference cycle when the application has a request waiting in the
// request buffer and the previous command went to another application.
inline bool record_interference_cycle(MiseCounters& c, bool request_waiting,
                                      std::optional<AppId> last_issued_app, AppId app) {
  if (request_waiting && last_issued_app && *last_issued_app != app) {
    ++c.interference_cycles;
    return true;
  }
  return false;
}

inline double compute_srsr(const MiseCounters& c, std::uint64_t interval_cycles) {
  if (interval_cycles == 0) throw std::domain_error("interval length must be positive");
  return static_cast<double>(c.requests_served) / static_cast<double>(interval_cycles);
}

inline Outcome<double> compute_arsr(const MiseCounters& c, std::uint64_t epoch_cycles) {
  if (c.hpe_count == 0) return Outcome<double>::failure(ModelError::kNoHighPriorityEpochs);
  const double denom = static_cast<double>(epoch_cycles) * static_cast<double>(c.hpe_count) -
                       static_cast<double>(c.interference_cycles);
  if (denom <= 0.0) return Outcome<double>::failure(ModelError::kDegenerateDenominator);
  return static_cast<double>(c.hpe_requests) / denom;
}

// Memory-bound applications use ARSR / SRSR directly; below the alpha
// threshold the compute phase is kept out of the ratio.
inline Outcome<double> estimate_slowdown(double arsr, double srsr, double alpha, const MiseConfig& config) {
  if (srsr <= 0.0) return Outcome<double>::failure(ModelError::kNoProgress);
  const double ratio = arsr / srsr;
  if (alpha < config.alpha_threshold) return (1.0 - alpha) + alpha * ratio;
  return ratio;
}

struct MiseEstimate {
  double srsr = 0.0;
  double arsr = 0.0;
  double alpha = 0.0;
  std::optional<double> slowdown;
  std::uint32_t flags = kFlagNone;
};

// Runs the whole model for one application at an interval boundary.
// `previous` is carried forward when this interval yields no estimate.
inline MiseEstimate mise_interval_estimate(const MiseCounters& c, const MiseConfig& config,
                                           std::optional<double> previous) {
  MiseEstimate e;
  e.srsr = compute_srsr(c, config.interval_cycles);
  e.alpha = c.total_cycles == 0 ? 0.0
                                : static_cast<double>(c.stall_cycles) / static_cast<double>(c.total_cycles);
  auto arsr = compute_arsr(c, config.epoch_cycles);
  std::optional<double> fresh;
  if (arsr) {
    e.arsr = *arsr;
    auto s = estimate_slowdown(e.arsr, e.srsr, e.alpha, config);
    if (s) fresh = *s;
  }
  if (!arsr && arsr.error() == ModelError::kDegenerateDenominator) e.flags |= kFlagDegenerate;
  if (fresh) {
    e.slowdown = fresh;
  } else if (previous) {
    e.slowdown = previous;
    e.flags |= kFlagCarriedForward;
  } else {
    e.flags |= kFlagUnavailable;
  }
  return e;
}

}  // namespace memsim
