#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <stdexcept>
#include <vector>

#include "memsim/cache.hpp"
#include "memsim/outcome.hpp"

namespace memsim {

struct AsmConfig {
  std::uint64_t quantum_cycles = 5'000'000;
  std::uint64_t epoch_cycles = 10'000;
  std::uint32_t sampled_sets = 64;  // 0 samples every set
};

inline void validate(const AsmConfig& c) {
  if (c.quantum_cycles == 0 || c.epoch_cycles == 0)
    throw std::invalid_argument("asm quantum and epoch must be positive");
  if (c.quantum_cycles % c.epoch_cycles != 0)
    throw std::invalid_argument("asm quantum must be a multiple of the epoch");
}

// Per-application counters, reset at every quantum boundary. The epoch_*
// fields only advance during the application's own epochs.
struct AsmQuantumCounters {
  std::uint64_t epoch_count = 0;
  std::uint64_t epoch_hits = 0;
  std::uint64_t epoch_misses = 0;
  std::uint64_t epoch_hit_time = 0;
  std::uint64_t epoch_miss_time = 0;
  std::uint64_t epoch_ats_hits = 0;
  std::uint64_t epoch_ats_misses = 0;
  std::uint64_t queueing_cycles = 0;
  std::uint64_t shared_accesses = 0;
  std::uint64_t quantum_hits = 0;
  std::uint64_t quantum_misses = 0;
  std::uint64_t quantum_hit_time = 0;
  std::uint64_t quantum_miss_time = 0;

  // Raw sampled-set ATS outcomes during own epochs, before scaling.
  std::uint64_t sampled_epoch_ats_hits = 0;
  std::uint64_t sampled_epoch_ats_misses = 0;

  std::uint64_t epoch_accesses() const { return epoch_hits + epoch_misses; }
};

// Fills epoch_ats_hits/misses from the sampled fractions. Returns false when
// no sampled access happened, in which case the ATS is assumed to agree with
// the shared cache.
inline bool apply_ats_scaling(AsmQuantumCounters& c) {
  if (c.sampled_epoch_ats_hits + c.sampled_epoch_ats_misses == 0) {
    c.epoch_ats_hits = c.epoch_hits;
    c.epoch_ats_misses = c.epoch_misses;
    return false;
  }
  auto stats = AtsSampleStats::from_counts(c.sampled_epoch_ats_hits, c.sampled_epoch_ats_misses);
  auto scaled = scale_ats_counts(stats, c.epoch_accesses());
  c.epoch_ats_hits = scaled.hits;
  c.epoch_ats_misses = scaled.misses;
  return true;
}

inline double compute_car_shared(const AsmQuantumCounters& c, std::uint64_t quantum_cycles) {
  if (quantum_cycles == 0) throw std::domain_error("quantum length must be positive");
  return static_cast<double>(c.shared_accesses) / static_cast<double>(quantum_cycles);
}

struct ExcessCycles {
  double cycles = 0.0;
  double contention_misses = 0.0;
  double avg_miss_time = 0.0;
  double avg_hit_time = 0.0;
  bool clamped = false;
};

// Cycles spent on contention misses: misses that hit in the ATS.
inline ExcessCycles compute_excess_cycles(const AsmQuantumCounters& c, double llc_hit_latency) {
  ExcessCycles out;
  const double raw = static_cast<double>(c.epoch_ats_hits) - static_cast<double>(c.epoch_hits);
  out.clamped = raw < 0.0;
  out.contention_misses = std::max(0.0, raw);
  if (c.epoch_misses == 0) {
    out.contention_misses = 0.0;
    return out;
  }
  out.avg_miss_time = static_cast<double>(c.epoch_miss_time) / static_cast<double>(c.epoch_misses);
  out.avg_hit_time = c.epoch_hits == 0
                         ? llc_hit_latency
                         : static_cast<double>(c.epoch_hit_time) / static_cast<double>(c.epoch_hits);
  out.cycles = out.contention_misses * (out.avg_miss_time - out.avg_hit_time);
  return out;
}

inline double compute_avg_queueing_delay(const AsmQuantumCounters& c) {
  if (c.epoch_misses == 0) return 0.0;
  return static_cast<double>(c.queueing_cycles) / static_cast<double>(c.epoch_misses);
}

inline Outcome<double> car_alone_from_terms(double accesses, std::uint64_t epoch_count,
                                            std::uint64_t epoch_cycles, double excess_cycles,
                                            double ats_misses, double avg_queueing_delay) {
  if (epoch_count == 0) return Outcome<double>::failure(ModelError::kNoEpochs);
  const double denom = static_cast<double>(epoch_count) * static_cast<double>(epoch_cycles) -
                       excess_cycles - ats_misses * avg_queueing_delay;
  if (denom <= 0.0) return Outcome<double>::failure(ModelError::kDegenerateDenominator);
  return accesses / denom;
}

struct CarAlone {
  Outcome<double> car{0.0};
  std::uint32_t flags = kFlagNone;
};

inline CarAlone compute_car_alone(const AsmQuantumCounters& c, std::uint64_t epoch_cycles,
                                  double llc_hit_latency) {
  CarAlone out;
  const ExcessCycles excess = compute_excess_cycles(c, llc_hit_latency);
  if (excess.clamped) out.flags |= kFlagClamped;
  out.car = car_alone_from_terms(static_cast<double>(c.epoch_accesses()), c.epoch_count, epoch_cycles,
                                 excess.cycles, static_cast<double>(c.epoch_ats_misses),
                                 compute_avg_queueing_delay(c));
  if (!out.car && out.car.error() == ModelError::kDegenerateDenominator) out.flags |= kFlagDegenerate;
  return out;
}

struct SlowdownEstimate {
  std::uint32_t app = 0;
  std::uint64_t quantum = 0;
  double car_shared = 0.0;
  double car_alone = 0.0;
  std::optional<double> slowdown;
  std::uint32_t flags = kFlagNone;
};

// Slowdown as the ratio of alone to shared cache access rates. When the
// quantum yields no estimate, `previous` is carried forward.
inline SlowdownEstimate estimate_slowdown_asm(const AsmQuantumCounters& c, const AsmConfig& config,
                                              double llc_hit_latency,
                                              std::optional<SlowdownEstimate> previous = std::nullopt) {
  SlowdownEstimate e;
  e.car_shared = compute_car_shared(c, config.quantum_cycles);
  CarAlone alone = compute_car_alone(c, config.epoch_cycles, llc_hit_latency);
  e.flags |= alone.flags;
  if (alone.car && e.car_shared > 0.0) {
    e.car_alone = *alone.car;
    e.slowdown = e.car_alone / e.car_shared;
    return e;
  }
  if (previous && previous->slowdown) {
    e.car_alone = previous->car_alone;
    e.slowdown = previous->slowdown;
    e.flags |= kFlagCarriedForward;
  } else {
    e.flags |= kFlagUnavailable;
  }
  return e;
}

struct AsmWayEvaluation {
  std::uint32_t ways = 0;
  std::uint64_t quantum_hits_n = 0;
  double delta_hits = 0.0;
  double cycles_n = 0.0;
  double car_n = 0.0;
  double slowdown_n = std::numeric_limits<double>::infinity();
  bool valid = false;
};

// Full-quantum hits an application would have had with `ways` ways, scaled
// from the ATS stack-distance histogram.
inline std::uint64_t scaled_quantum_hits(const AuxiliaryTagStore& ats, std::uint32_t ways,
                                         std::uint64_t quantum_accesses) {
  const std::uint64_t sampled = ats.sampled_accesses();
  if (sampled == 0) return 0;
  auto stats = AtsSampleStats::from_counts(ats.hits_within(ways), sampled - ats.hits_within(ways));
  return scale_ats_counts(stats, quantum_accesses).hits;
}

inline AsmWayEvaluation evaluate_ways(const AsmQuantumCounters& c, std::uint64_t quantum_hits_n,
                                      std::uint32_t ways, std::uint64_t quantum_cycles, double car_alone,
                                      double llc_hit_latency) {
  AsmWayEvaluation ev;
  ev.ways = ways;
  ev.quantum_hits_n = quantum_hits_n;
  ev.delta_hits = static_cast<double>(quantum_hits_n) - static_cast<double>(c.quantum_hits);
  const double avg_miss = c.quantum_misses == 0
                              ? 0.0
                              : static_cast<double>(c.quantum_miss_time) / static_cast<double>(c.quantum_misses);
  const double avg_hit = c.quantum_hits == 0
                             ? llc_hit_latency
                             : static_cast<double>(c.quantum_hit_time) / static_cast<double>(c.quantum_hits);
  const double per_hit_saving = c.quantum_misses == 0 ? 0.0 : avg_miss - avg_hit;
  ev.cycles_n = static_cast<double>(quantum_cycles) - ev.delta_hits * per_hit_saving;
  if (ev.cycles_n <= 0.0) return ev;
  ev.car_n = static_cast<double>(c.quantum_hits + c.quantum_misses) / ev.cycles_n;
  ev.valid = true;
  if (ev.car_n > 0.0) ev.slowdown_n = car_alone / ev.car_n;
  return ev;
}

// slowdown_n for n = 1..associativity, made nonincreasing in n.
inline std::vector<double> slowdown_curve(const AsmQuantumCounters& c, const AuxiliaryTagStore& ats,
                                          std::uint64_t quantum_cycles, double car_alone,
                                          double llc_hit_latency) {
  const std::uint32_t ways = ats.associativity();
  std::vector<double> curve(ways);
  const std::uint64_t accesses = c.quantum_hits + c.quantum_misses;
  for (std::uint32_t n = 1; n <= ways; ++n) {
    auto ev = evaluate_ways(c, scaled_quantum_hits(ats, n, accesses), n, quantum_cycles, car_alone,
                            llc_hit_latency);
    curve[n - 1] = ev.slowdown_n;
  }
  for (std::uint32_t n = 1; n < ways; ++n) curve[n] = std::min(curve[n], curve[n - 1]);
  return curve;
}

}  // namespace memsim
