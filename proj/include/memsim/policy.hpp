#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "memsim/cache.hpp"
#include "memsim/mise.hpp"
#include "memsim/outcome.hpp"

namespace memsim {

enum class PolicyKind { kNone, kStatic, kMiseQos, kMiseFair, kAsmMem, kAsmCache, kAsmQos, kAsmCacheMem };

inline const char* to_string(PolicyKind p) {
  switch (p) {
    case PolicyKind::kNone: return "none";
    case PolicyKind::kStatic: return "static";
    case PolicyKind::kMiseQos: return "mise_qos";
    case PolicyKind::kMiseFair: return "mise_fair";
    case PolicyKind::kAsmMem: return "asm_mem";
    case PolicyKind::kAsmCache: return "asm_cache";
    case PolicyKind::kAsmQos: return "asm_qos";
    case PolicyKind::kAsmCacheMem: return "asm_cache_mem";
  }
  return "?";
}

inline PolicyKind parse_policy_kind(const std::string& s) {
  for (auto p : {PolicyKind::kNone, PolicyKind::kStatic, PolicyKind::kMiseQos, PolicyKind::kMiseFair,
                 PolicyKind::kAsmMem, PolicyKind::kAsmCache, PolicyKind::kAsmQos, PolicyKind::kAsmCacheMem})
    if (s == to_string(p)) return p;
  throw std::invalid_argument("unknown policy '" + s + "'");
}

// ---------------------------------------------------------------------------
// MISE-QoS

struct AoiBound {
  AppId app = 0;
  double bound = 2.0;
};

struct QosConfig {
  std::vector<AoiBound> aoi;
  double step = 0.02;
  std::uint32_t infeasibility_patience = 10;
};

inline void validate(const QosConfig& q) {
  for (const auto& a : q.aoi)
    if (!(a.bound > 1.0)) throw std::invalid_argument("QoS slowdown bounds must exceed 1");
  if (!(q.step > 0.0 && q.step < 1.0)) throw std::invalid_argument("QoS step must lie in (0, 1)");
}

enum class QosStatus { kMet, kMissed, kUnknown, kInfeasible };

inline const char* to_string(QosStatus s) {
  switch (s) {
    case QosStatus::kMet: return "met";
    case QosStatus::kMissed: return "missed";
    case QosStatus::kUnknown: return "unknown";
    case QosStatus::kInfeasible: return "infeasible";
  }
  return "?";
}

// Controller state carried between intervals.
struct QosState {
  std::vector<double> aoi_alloc;          // one per AoI, in QosConfig order
  std::vector<std::uint32_t> miss_streak;  // consecutive intervals above bound

  static QosState initial(const QosConfig& q, std::size_t apps) {
    QosState s;
    s.aoi_alloc.assign(q.aoi.size(), apps == 0 ? 0.0 : 1.0 / static_cast<double>(apps));
    s.miss_streak.assign(q.aoi.size(), 0);
    return s;
  }
};

struct QosUpdate {
  BandwidthAllocation alloc;
  std::vector<QosStatus> status;  // one per AoI
};

// AoIs move by one step toward their bound each interval; the other
// applications share the remaining bandwidth equally.
inline QosUpdate mise_qos_update(QosState& state, const std::vector<std::optional<double>>& estimates,
                                 const QosConfig& q, std::size_t apps) {
  QosUpdate out;
  out.status.assign(q.aoi.size(), QosStatus::kUnknown);
  for (std::size_t i = 0; i < q.aoi.size(); ++i) {
    const auto& est = estimates.at(q.aoi[i].app);
    if (!est) continue;
    double& a = state.aoi_alloc[i];
    if (*est < q.aoi[i].bound) {
      a -= q.step;
      state.miss_streak[i] = 0;
      out.status[i] = QosStatus::kMet;
    } else if (*est > q.aoi[i].bound) {
      a += q.step;
      ++state.miss_streak[i];
      out.status[i] = QosStatus::kMissed;
    } else {
      state.miss_streak[i] = 0;
      out.status[i] = QosStatus::kMet;
    }
    a = std::clamp(a, 0.0, 1.0);
  }

  double aoi_total = 0.0;
  for (double a : state.aoi_alloc) aoi_total += a;
  if (aoi_total > 1.0) {
    for (double& a : state.aoi_alloc) a /= aoi_total;
    aoi_total = 1.0;
  }

  std::vector<bool> is_aoi(apps, false);
  for (const auto& a : q.aoi) is_aoi.at(a.app) = true;
  const std::size_t others = static_cast<std::size_t>(std::count(is_aoi.begin(), is_aoi.end(), false));

  out.alloc.weights.assign(apps, 0.0);
  for (std::size_t i = 0; i < q.aoi.size(); ++i) out.alloc.weights[q.aoi[i].app] += state.aoi_alloc[i];
  const double residual = 1.0 - aoi_total;
  if (others > 0) {
    for (std::size_t a = 0; a < apps; ++a)
      if (!is_aoi[a]) out.alloc.weights[a] = residual / static_cast<double>(others);
  } else if (aoi_total > 0.0) {
    for (double& w : out.alloc.weights) w /= aoi_total;
  } else {
    out.alloc = BandwidthAllocation::equal(apps);
  }

  const bool all_to_aoi = others == 0 || residual <= 1e-9;
  if (all_to_aoi) {
    for (std::size_t i = 0; i < q.aoi.size(); ++i)
      if (state.miss_streak[i] >= q.infeasibility_patience) out.status[i] = QosStatus::kInfeasible;
  }
  return out;
}

// ---------------------------------------------------------------------------
// MISE-Fair

// Lowest bound the fairness controller will set.
inline constexpr double kMinFairBound = 1.01;

struct FairConfig {
  double bound = 2.0;
  double steal_step = 0.02;
  std::uint32_t history_intervals = 3;
  double tighten = 0.95;
  double loosen = 1.05;
};

inline void validate(const FairConfig& f) {
  if (!(f.bound > 1.0)) throw std::invalid_argument("fairness bound must exceed 1");
  if (!(f.steal_step > 0.0 && f.steal_step < 1.0))
    throw std::invalid_argument("fairness steal step must lie in (0, 1)");
  if (f.history_intervals == 0) throw std::invalid_argument("fairness history must be positive");
}

// Applications below the bound each give up one step of bandwidth, split
// equally among the applications at or above it.
inline BandwidthAllocation mise_fair_redistribute(const BandwidthAllocation& alloc,
                                                  const std::vector<std::optional<double>>& estimates,
                                                  double bound, double step) {
  std::vector<std::size_t> below, above;
  for (std::size_t i = 0; i < alloc.weights.size(); ++i) {
    const auto& e = estimates.at(i);
    if (!e) continue;
    (*e < bound ? below : above).push_back(i);
  }
  if (above.empty()) return alloc;

  BandwidthAllocation out = alloc;
  double stolen = 0.0;
  for (auto i : below) {
    const double take = std::min(step, out.weights[i]);
    out.weights[i] -= take;
    stolen += take;
  }
  for (auto i : above) out.weights[i] += stolen / static_cast<double>(above.size());

  double sum = 0.0;
  for (double w : out.weights) sum += w;
  if (sum > 0.0)
    for (double& w : out.weights) w /= sum;
  return out;
}

// history[k][app] is true when the app met the bound in interval k (most
// recent last). Returns the new bound.
inline double mise_fair_adjust_bound(const std::deque<std::vector<bool>>& history,
                                     const std::vector<std::optional<double>>& estimates,
                                     const FairConfig& f) {
  if (history.size() < f.history_intervals) return f.bound;
  double max_est = 0.0;
  bool any = false;
  for (const auto& e : estimates)
    if (e) {
      max_est = any ? std::max(max_est, *e) : *e;
      any = true;
    }
  if (!any) return f.bound;

  bool all_met = true;
  bool majority_missed = true;
  for (std::size_t k = history.size() - f.history_intervals; k < history.size(); ++k) {
    const auto& met = history[k];
    const auto n_met = static_cast<std::size_t>(std::count(met.begin(), met.end(), true));
    if (n_met != met.size()) all_met = false;
    if (2 * (met.size() - n_met) <= met.size()) majority_missed = false;
  }
  if (all_met) return std::max(f.tighten * max_est, kMinFairBound);
  if (majority_missed) return std::max(f.loosen * max_est, kMinFairBound);
  return f.bound;
}

// ---------------------------------------------------------------------------
// ASM-Mem

struct WeightedAllocation {
  BandwidthAllocation alloc;
  std::uint32_t flags = kFlagNone;
};

// Epoch probabilities proportional to estimated slowdown.
inline WeightedAllocation asm_mem_weights(const std::vector<std::optional<double>>& estimates) {
  WeightedAllocation out;
  out.alloc.weights.resize(estimates.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < estimates.size(); ++i) {
    double s = 1.0;
    if (estimates[i] && *estimates[i] > 0.0 && std::isfinite(*estimates[i])) {
      s = *estimates[i];
    } else {
      out.flags |= kFlagNeutralWeight;
    }
    out.alloc.weights[i] = s;
    sum += s;
  }
  for (double& w : out.alloc.weights) w /= sum;
  return out;
}

// ---------------------------------------------------------------------------
// ASM-Cache / ASM-QoS

struct PartitionStep {
  AppId app = 0;
  std::uint32_t from_ways = 0;
  std::uint32_t extra_ways = 0;
  double utility = 0.0;
};

struct PartitionDecision {
  std::vector<std::uint32_t> ways;
  std::vector<PartitionStep> trace;
  bool infeasible = false;

  WayPartition partition() const { return WayPartition(ways); }
};

// curves[app][n - 1] is the app's estimated slowdown with n ways.
using SlowdownCurves = std::vector<std::vector<double>>;

namespace detail {

inline double finite_slowdown(double s) {
  constexpr double kCeiling = 1e12;
  return std::isfinite(s) ? std::min(s, kCeiling) : kCeiling;
}

// Lookahead allocation of `total` ways over the listed apps, each starting
// from its entry in `ways`.
inline void lookahead(const SlowdownCurves& curves, const std::vector<AppId>& apps, std::uint32_t total,
                      std::vector<std::uint32_t>& ways, std::vector<PartitionStep>& trace) {
  std::uint32_t used = 0;
  for (AppId a : apps) used += ways[a];
  std::uint32_t remaining = total - used;
  while (remaining > 0) {
    std::optional<PartitionStep> best;
    for (AppId a : apps) {
      const auto& curve = curves.at(a);
      const std::uint32_t n = ways[a];
      for (std::uint32_t k = 1; k <= remaining && n + k <= curve.size(); ++k) {
        const double u = (finite_slowdown(curve[n - 1]) - finite_slowdown(curve[n + k - 1])) / k;
        const bool better = !best || u > best->utility ||
                            (u == best->utility && (k < best->extra_ways ||
                                                    (k == best->extra_ways && a < best->app)));
        if (better) best = PartitionStep{a, n, k, u};
      }
    }
    if (!best) break;
    ways[best->app] += best->extra_ways;
    remaining -= best->extra_ways;
    trace.push_back(*best);
  }
}

}  // namespace detail

inline PartitionDecision asm_cache_partition(const SlowdownCurves& curves, std::uint32_t associativity) {
  const auto apps = static_cast<std::uint32_t>(curves.size());
  if (apps == 0) throw std::invalid_argument("no applications to partition for");
  if (associativity < apps)
    throw std::invalid_argument("associativity " + std::to_string(associativity) + " below app count " +
                                std::to_string(apps));
  PartitionDecision d;
  d.ways.assign(apps, 1);
  std::vector<AppId> all(apps);
  for (AppId a = 0; a < apps; ++a) all[a] = a;
  detail::lookahead(curves, all, associativity, d.ways, d.trace);
  return d;
}

// Gives the AoI the fewest ways that meet its bound, then partitions the rest.
inline PartitionDecision asm_qos_allocate(AppId aoi, double bound, const SlowdownCurves& curves,
                                          std::uint32_t associativity) {
  const auto apps = static_cast<std::uint32_t>(curves.size());
  if (associativity < apps) throw std::invalid_argument("associativity below app count");
  const std::uint32_t max_aoi = associativity - (apps - 1);
  const auto& curve = curves.at(aoi);

  PartitionDecision d;
  d.ways.assign(apps, 1);
  std::optional<std::uint32_t> pick;
  for (std::uint32_t n = 1; n <= max_aoi && n <= curve.size(); ++n) {
    if (curve[n - 1] <= bound) {
      pick = n;
      break;
    }
  }
  d.ways[aoi] = pick.value_or(max_aoi);
  d.infeasible = !pick;

  std::vector<AppId> others;
  for (AppId a = 0; a < apps; ++a)
    if (a != aoi) others.push_back(a);
  if (others.empty()) {
    d.ways[aoi] = associativity;
  } else {
    detail::lookahead(curves, others, associativity - d.ways[aoi], d.ways, d.trace);
  }
  return d;
}

struct CacheMemDecision {
  PartitionDecision partition;
  WeightedAllocation bandwidth;
};

inline CacheMemDecision asm_cache_mem_step(const SlowdownCurves& curves, std::uint32_t associativity) {
  CacheMemDecision out;
  out.partition = asm_cache_partition(curves, associativity);
  std::vector<std::optional<double>> at_alloc(curves.size());
  for (std::size_t a = 0; a < curves.size(); ++a) {
    const double s = curves[a][out.partition.ways[a] - 1];
    if (std::isfinite(s)) at_alloc[a] = s;
  }
  out.bandwidth = asm_mem_weights(at_alloc);
  return out;
}

}  // namespace memsim
