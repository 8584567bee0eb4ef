#pragma once

#include <cmath>
#include <cstdint>
#include <deque>
#include <limits>
#include <memory>
#include <optional>
#include <queue>
#include <stdexcept>
#include <string>
#include <vector>

#include "memsim/asm_model.hpp"
#include "memsim/cache.hpp"
#include "memsim/core.hpp"
#include "memsim/dram.hpp"
#include "memsim/metrics.hpp"
#include "memsim/mise.hpp"
#include "memsim/policy.hpp"
#include "memsim/random.hpp"
#include "memsim/sched.hpp"
#include "memsim/trace.hpp"

namespace memsim {

enum class ModelKind { kNone, kMise, kAsm };

inline const char* to_string(ModelKind m) {
  switch (m) {
    case ModelKind::kNone: return "none";
    case ModelKind::kMise: return "mise";
    case ModelKind::kAsm: return "asm";
  }
  return "?";
}

inline ModelKind parse_model_kind(const std::string& s) {
  if (s == "none") return ModelKind::kNone;
  if (s == "mise") return ModelKind::kMise;
  if (s == "asm") return ModelKind::kAsm;
  throw std::invalid_argument("unknown model '" + s + "'");
}

// Bits above this are replaced by the address-space id, so co-running
// traces never share lines or rows.
inline constexpr unsigned kAddressSpaceShift = 40;

inline std::uint64_t physical_address(AppId space, std::uint64_t address) {
  return (static_cast<std::uint64_t>(space) << kAddressSpaceShift) |
         (address & ((std::uint64_t{1} << kAddressSpaceShift) - 1));
}

struct AppBinding {
  std::string name;
  std::shared_ptr<const Trace> trace;
  AppId address_space = 0;
};

struct PolicyConfig {
  PolicyKind kind = PolicyKind::kNone;
  QosConfig qos;
  FairConfig fair;
  std::vector<double> static_weights;
};

struct SimConfig {
  CoreConfig core;
  CacheConfig l1{64 << 10, 4, 64, 1, false};
  bool llc_enabled = false;
  CacheConfig llc{2 << 20, 16, 64, 20, true};
  DramConfig dram;
  SchedulerSettings scheduler;
  ModelKind model = ModelKind::kNone;
  MiseConfig mise;
  AsmConfig asm_model;
  PolicyConfig policy;
  std::vector<AppBinding> apps;
  Cycle run_length_cycles = 10'000'000;
  std::uint64_t seed = 1;
  bool loop_traces = true;
  Cycle window_cycles = 5'000'000;  // metrics window when no model runs
  Cycle sample_cycles = 100'000;

  // Window shared by metrics and the model.
  Cycle metrics_window() const {
    switch (model) {
      case ModelKind::kMise: return mise.interval_cycles;
      case ModelKind::kAsm: return asm_model.quantum_cycles;
      case ModelKind::kNone: break;
    }
    return window_cycles;
  }

  Cycle epoch_cycles() const { return model == ModelKind::kAsm ? asm_model.epoch_cycles : mise.epoch_cycles; }

  bool epoch_overlay() const {
    return scheduler.overlay_epoch_priority || model != ModelKind::kNone ||
           policy.kind == PolicyKind::kStatic;
  }
};

class ConfigError : public std::invalid_argument {
 public:
  explicit ConfigError(std::vector<std::string> issues)
      : std::invalid_argument(join(issues)), issues_(std::move(issues)) {}
  const std::vector<std::string>& issues() const { return issues_; }

 private:
  static std::string join(const std::vector<std::string>& v) {
    std::string out;
    for (const auto& s : v) out += (out.empty() ? "" : "; ") + s;
    return out;
  }
  std::vector<std::string> issues_;
};

// Every problem as "path: message"; empty when the config is runnable.
inline std::vector<std::string> config_issues(const SimConfig& c) {
  std::vector<std::string> out;
  auto check = [&](const char* path, auto&& fn) {
    try {
      fn();
    } catch (const std::exception& e) {
      out.push_back(std::string(path) + ": " + e.what());
    }
  };
  check("core", [&] { validate(c.core); });
  check("l1", [&] { validate(c.l1); });
  if (c.llc_enabled) check("llc", [&] { validate(c.llc); });
  check("dram", [&] { validate(c.dram); });
  check("mise", [&] { validate(c.mise); });
  check("asm", [&] { validate(c.asm_model); });
  check("policy.qos", [&] { validate(c.policy.qos); });
  check("policy.fair", [&] { validate(c.policy.fair); });
  const auto n = c.apps.size();
  if (n == 0) out.push_back("apps: at least one application is required");
  for (std::size_t i = 0; i < n; ++i)
    if (!c.apps[i].trace) out.push_back("apps[" + std::to_string(i) + "]: no trace bound");
  if (c.run_length_cycles == 0) out.push_back("run_length_cycles: must be positive");
  if (c.window_cycles == 0) out.push_back("metrics.window_cycles: must be positive");
  if (c.sample_cycles == 0) out.push_back("metrics.alone_sample_cycles: must be positive");
  if (c.model != ModelKind::kNone && c.run_length_cycles < c.metrics_window())
    out.push_back("run_length_cycles: shorter than one model interval");
  if (c.model == ModelKind::kAsm && !c.llc_enabled) out.push_back("llc.enabled: the asm model needs a shared cache");

  const auto kind = c.policy.kind;
  const bool mise_policy = kind == PolicyKind::kMiseQos || kind == PolicyKind::kMiseFair;
  const bool asm_policy = kind == PolicyKind::kAsmMem || kind == PolicyKind::kAsmCache ||
                          kind == PolicyKind::kAsmQos || kind == PolicyKind::kAsmCacheMem;
  if (mise_policy && c.model != ModelKind::kMise)
    out.push_back(std::string("policy.name: ") + to_string(kind) + " requires model mise");
  if (asm_policy && c.model != ModelKind::kAsm)
    out.push_back(std::string("policy.name: ") + to_string(kind) + " requires model asm");
  if ((kind == PolicyKind::kMiseQos || kind == PolicyKind::kAsmQos) && c.policy.qos.aoi.empty())
    out.push_back("policy.qos.aoi: at least one application of interest is required");
  for (const auto& a : c.policy.qos.aoi)
    if (a.app >= n) out.push_back("policy.qos.aoi: app " + std::to_string(a.app) + " out of range");
  if (kind == PolicyKind::kStatic) {
    BandwidthAllocation w{c.policy.static_weights};
    if (c.policy.static_weights.size() != n || !w.valid())
      out.push_back("policy.static_weights: need one weight per app summing to 1");
  }
  if ((kind == PolicyKind::kAsmCache || kind == PolicyKind::kAsmQos || kind == PolicyKind::kAsmCacheMem) &&
      c.llc_enabled && c.llc.associativity < n)
    out.push_back("llc.associativity: below the application count");
  return out;
}

inline void validate(const SimConfig& c) {
  auto issues = config_issues(c);
  if (!issues.empty()) throw ConfigError(std::move(issues));
}

// Model output for one app at one interval/quantum boundary.
struct IntervalRecord {
  ModelKind model = ModelKind::kNone;
  AppId app = 0;
  std::uint64_t index = 0;  // 1-based; covers [(index-1) * M, index * M)
  Cycle end_cycle = 0;
  double srsr = std::numeric_limits<double>::quiet_NaN();
  double arsr = std::numeric_limits<double>::quiet_NaN();
  double alpha = std::numeric_limits<double>::quiet_NaN();
  double car_shared = std::numeric_limits<double>::quiet_NaN();
  double car_alone = std::numeric_limits<double>::quiet_NaN();
  std::optional<double> estimate;
  std::uint32_t flags = kFlagNone;
  double weight = std::numeric_limits<double>::quiet_NaN();  // epoch weight for the next interval
  std::optional<std::uint32_t> ways;                         // LLC ways for the next quantum
  std::vector<double> slowdown_curve;
  std::string status;
  double bound = std::numeric_limits<double>::quiet_NaN();
};

struct AppResult {
  std::string name;
  std::uint64_t retired = 0;
  std::uint64_t cycles = 0;
  std::uint64_t stall_cycles = 0;
  std::uint64_t l1_hits = 0;
  std::uint64_t l1_misses = 0;
  std::uint64_t llc_hits = 0;
  std::uint64_t llc_misses = 0;
  std::uint64_t enqueued = 0;   // requests sent to the controller
  std::uint64_t served = 0;     // issued by the scheduler
  std::uint64_t completed = 0;  // delivered back to the core
  std::uint64_t epochs = 0;     // epochs as highest-priority app
  bool finished = false;
  ProgressSamples progress;
  std::vector<std::uint64_t> window_retired;  // cumulative, [0] at cycle 0
  StreakHistogram streaks;
};

struct SimResults {
  Cycle cycles = 0;
  Cycle window_cycles = 0;
  std::vector<AppResult> apps;
  std::vector<IntervalRecord> intervals;
  std::uint64_t dram_issues = 0;
  std::uint64_t tccd_violations = 0;
  std::uint64_t overlap_violations = 0;
  std::uint64_t cap_violations = 0;
  std::uint64_t row_hits = 0;
  std::uint64_t row_closed = 0;
  std::uint64_t row_conflicts = 0;
};

// Per-cycle order:
//   1. events due this cycle in (cycle, seq) order: DRAM completions and
//      cache-hit responses deliver to the core, filling L1/LLC/ATS on the
//      way; requests reaching the controller are enqueued;
//   2. cores tick in ascending id; new memory ops look up L1 and the LLC;
//   3. boundary events: interval/quantum end (estimation, then policy,
//      then counter reset), epoch end (priority lottery), blacklist
//      clearing, grouping reclassification;
//   4. each channel's scheduler issues at most one request;
//   5. model counters advance.
// Progress snapshots are taken before step 1, i.e. after exactly `now`
// completed cycles.
class Simulator {
 public:
  explicit Simulator(SimConfig config)
      : cfg_(checked(std::move(config))),
        scheduler_(make_settings(cfg_), cfg_.apps.size(), cfg_.dram.channels, cfg_.dram.banks_per_channel()),
        monitor_(cfg_.dram),
        lottery_(cfg_.seed) {
    const auto n = cfg_.apps.size();
    apps_.reserve(n);
    for (std::size_t i = 0; i < n; ++i) apps_.emplace_back(cfg_, static_cast<AppId>(i));
    if (cfg_.llc_enabled) llc_.emplace(cfg_.llc);
    const auto channels = cfg_.dram.channels;
    banks_.assign(channels, std::vector<BankState>(cfg_.dram.banks_per_channel()));
    channel_state_.assign(channels, ChannelState{});
    queues_.assign(channels, RequestQueue(cfg_.dram.queue_capacity));
    overflow_.resize(channels);
    streak_trackers_.resize(channels);
    results_.apps.resize(n);
    streaks_.resize(n);
    alloc_ = initial_allocation();
    if (cfg_.policy.kind == PolicyKind::kMiseQos) qos_state_ = QosState::initial(cfg_.policy.qos, n);
    fair_bound_ = cfg_.policy.fair.bound;
    window_ = cfg_.metrics_window();
    epoch_ = cfg_.epoch_cycles();
    overlay_ = cfg_.epoch_overlay();
  }

  SimResults run() {
    results_.window_cycles = window_;
    for (Cycle now = 0;; ++now) {
      observe(now);
      if (now == cfg_.run_length_cycles) {
        if (now % window_ == 0 && cfg_.model != ModelKind::kNone) model_boundary(now);
        break;
      }
      deliver_events(now);
      tick_cores(now);
      boundaries(now);
      schedule(now);
      count(now);
    }
    finish();
    return std::move(results_);
  }

 private:
  struct AppState {
    Core core;
    Cache l1;
    std::optional<AuxiliaryTagStore> ats;
    std::vector<RequestHandle> responses;
    std::vector<MemoryOp> issued;
    std::uint32_t outstanding_hits = 0;
    std::uint32_t outstanding_misses = 0;
    std::uint32_t queued = 0;
    MiseCounters mise;
    AsmQuantumCounters asmc;
    std::optional<double> prev_mise;
    std::optional<SlowdownEstimate> prev_asm;
    std::uint64_t stall_at_boundary = 0;
    std::uint64_t stall_at_window_start = 0;
    std::uint64_t group_retired = 0;
    std::uint64_t group_requests = 0;

    AppState(const SimConfig& c, AppId id)
        : core(c.core, c.apps[id].trace, c.loop_traces), l1(c.l1) {
      if (c.model == ModelKind::kAsm) ats.emplace(id, c.llc, c.asm_model.sampled_sets);
    }
  };

  enum class EventKind : std::uint8_t { kRespond, kLlcHitRespond, kArrive, kDramDone };

  struct Event {
    Cycle at;
    std::uint64_t seq;
    EventKind kind;
    AppId app;
    RequestHandle handle;
    std::uint64_t address;
    bool is_write;

    bool operator>(const Event& o) const { return at != o.at ? at > o.at : seq > o.seq; }
  };

  static SimConfig checked(SimConfig c) {
    validate(c);
    return c;
  }

  static SchedulerSettings make_settings(const SimConfig& c) {
    SchedulerSettings s = c.scheduler;
    s.overlay_epoch_priority = c.epoch_overlay();
    return s;
  }

  BandwidthAllocation initial_allocation() const {
    if (cfg_.policy.kind == PolicyKind::kStatic) return {cfg_.policy.static_weights};
    return BandwidthAllocation::equal(cfg_.apps.size());
  }

  void push(Cycle at, EventKind kind, AppId app, RequestHandle h, std::uint64_t addr, bool w) {
    events_.push(Event{at, seq_++, kind, app, h, addr, w});
  }

  void observe(Cycle now) {
    if (now % cfg_.sample_cycles == 0) {
      for (std::size_t a = 0; a < apps_.size(); ++a) {
        auto& p = results_.apps[a].progress;
        p.cycles.push_back(now);
        p.retired.push_back(apps_[a].core.retired_instructions());
      }
    }
    if (now % window_ == 0) {
      for (std::size_t a = 0; a < apps_.size(); ++a) {
        results_.apps[a].window_retired.push_back(apps_[a].core.retired_instructions());
        apps_[a].stall_at_boundary = apps_[a].core.memory_stall_cycles();
      }
    }
  }

  void deliver_events(Cycle now) {
    while (!events_.empty() && events_.top().at == now) {
      const Event e = events_.top();
      events_.pop();
      AppState& s = apps_[e.app];
      switch (e.kind) {
        case EventKind::kRespond:
          s.responses.push_back(e.handle);
          break;
        case EventKind::kLlcHitRespond:
          --s.outstanding_hits;
          s.l1.fill(e.app, e.address);
          s.responses.push_back(e.handle);
          break;
        case EventKind::kArrive:
          enqueue(e, now);
          break;
        case EventKind::kDramDone:
          if (llc_) {
            --s.outstanding_misses;
            llc_->fill(e.app, e.address, partition_ ? &*partition_ : nullptr);
            if (s.ats) s.ats->fill(e.address);
          }
          s.l1.fill(e.app, e.address);
          ++results_.apps[e.app].completed;
          s.responses.push_back(e.handle);
          break;
      }
    }
  }

  void enqueue(const Event& e, Cycle now) {
    MemRequest r = make_request(next_request_id_++, e.app, e.address, e.is_write, now, cfg_.dram);
    r.payload = e.handle;
    ++apps_[e.app].queued;
    ++results_.apps[e.app].enqueued;
    ++apps_[e.app].group_requests;
    auto& q = queues_[r.coord.channel];
    if (q.full() || !overflow_[r.coord.channel].empty()) {
      overflow_[r.coord.channel].push_back(std::move(r));
    } else {
      q.push(std::move(r));
    }
  }

  void tick_cores(Cycle now) {
    const Cycle l1_lat = cfg_.l1.hit_latency_cycles;
    const Cycle llc_lat = cfg_.llc.hit_latency_cycles;
    for (AppId a = 0; a < apps_.size(); ++a) {
      AppState& s = apps_[a];
      if (s.core.finished()) continue;
      s.issued.clear();
      s.core.tick(s.responses, s.issued);
      s.responses.clear();
      for (const MemoryOp& op : s.issued) {
        const std::uint64_t addr = physical_address(cfg_.apps[a].address_space, op.address);
        if (s.l1.lookup(addr)) {
          ++results_.apps[a].l1_hits;
          push(now + l1_lat, EventKind::kRespond, a, op.handle, addr, op.is_write);
          continue;
        }
        ++results_.apps[a].l1_misses;
        if (!llc_) {
          push(now + l1_lat, EventKind::kArrive, a, op.handle, addr, op.is_write);
          continue;
        }
        const bool hit = llc_->lookup(addr);
        llc_access(s, a, addr, hit);
        if (hit) {
          ++results_.apps[a].llc_hits;
          ++s.outstanding_hits;
          push(now + l1_lat + llc_lat, EventKind::kLlcHitRespond, a, op.handle, addr, op.is_write);
        } else {
          ++results_.apps[a].llc_misses;
          ++s.outstanding_misses;
          push(now + l1_lat + llc_lat, EventKind::kArrive, a, op.handle, addr, op.is_write);
        }
      }
    }
  }

  void llc_access(AppState& s, AppId a, std::uint64_t addr, bool hit) {
    if (!s.ats) return;
    auto& c = s.asmc;
    const AtsAccess ats = s.ats->access(addr, false);
    if (ats.outcome == AtsOutcome::kMiss && hit) s.ats->fill(addr);
    ++c.shared_accesses;
    ++(hit ? c.quantum_hits : c.quantum_misses);
    if (priority_ && *priority_ == a) {
      ++(hit ? c.epoch_hits : c.epoch_misses);
      if (ats.outcome == AtsOutcome::kHit) ++c.sampled_epoch_ats_hits;
      if (ats.outcome == AtsOutcome::kMiss) ++c.sampled_epoch_ats_misses;
    }
  }

  void boundaries(Cycle now) {
    if (now > 0 && now % window_ == 0 && cfg_.model != ModelKind::kNone) model_boundary(now);
    if (overlay_ && now % epoch_ == 0) {
      const AppId p = assign_epoch(alloc_, lottery_);
      priority_ = p;
      scheduler_.set_priority(p, now + epoch_);
      ++results_.apps[p].epochs;
      ++apps_[p].mise.hpe_count;
      ++apps_[p].asmc.epoch_count;
    }
    if (cfg_.scheduler.policy == SchedulerPolicy::kBliss) scheduler_.tick_clear(now);
    if (cfg_.scheduler.policy == SchedulerPolicy::kGrouping && now > 0 &&
        now % cfg_.scheduler.grouping_window_cycles == 0)
      reclassify();
  }

  void reclassify() {
    std::vector<bool> high(apps_.size(), false);
    for (std::size_t a = 0; a < apps_.size(); ++a) {
      AppState& s = apps_[a];
      const std::uint64_t retired = s.core.retired_instructions() - s.group_retired;
      const double mpki =
          retired == 0 ? 0.0 : 1000.0 * static_cast<double>(s.group_requests) / static_cast<double>(retired);
      high[a] = mpki >= cfg_.scheduler.grouping_mpki_threshold;
      s.group_retired = s.core.retired_instructions();
      s.group_requests = 0;
    }
    scheduler_.set_intensity(std::move(high));
  }

  void model_boundary(Cycle now) {
    ++boundary_index_;
    if (cfg_.model == ModelKind::kMise) {
      mise_boundary(now);
    } else {
      asm_boundary(now);
    }
  }

  void mise_boundary(Cycle now) {
    const auto n = apps_.size();
    std::vector<std::optional<double>> est(n);
    const std::size_t first = results_.intervals.size();
    for (AppId a = 0; a < n; ++a) {
      AppState& s = apps_[a];
      s.mise.stall_cycles = s.stall_at_boundary - s.stall_at_window_start;
      s.mise.total_cycles = cfg_.mise.interval_cycles;
      s.stall_at_window_start = s.stall_at_boundary;
      const MiseEstimate e = mise_interval_estimate(s.mise, cfg_.mise, s.prev_mise);
      if (e.slowdown) s.prev_mise = e.slowdown;
      est[a] = e.slowdown;
      IntervalRecord r;
      r.model = ModelKind::kMise;
      r.app = a;
      r.index = boundary_index_;
      r.end_cycle = now;
      r.srsr = e.srsr;
      if (e.arsr > 0.0) r.arsr = e.arsr;
      r.alpha = e.alpha;
      r.estimate = e.slowdown;
      r.flags = e.flags;
      results_.intervals.push_back(std::move(r));
      s.mise = MiseCounters{};
    }

    switch (cfg_.policy.kind) {
      case PolicyKind::kMiseQos: {
        QosUpdate u = mise_qos_update(qos_state_, est, cfg_.policy.qos, n);
        alloc_ = std::move(u.alloc);
        for (std::size_t i = 0; i < cfg_.policy.qos.aoi.size(); ++i) {
          auto& rec = results_.intervals[first + cfg_.policy.qos.aoi[i].app];
          rec.status = to_string(u.status[i]);
          rec.bound = cfg_.policy.qos.aoi[i].bound;
        }
        break;
      }
      case PolicyKind::kMiseFair: {
        std::vector<bool> met(n);
        for (std::size_t a = 0; a < n; ++a) met[a] = !est[a] || *est[a] <= fair_bound_;
        fair_history_.push_back(std::move(met));
        while (fair_history_.size() > cfg_.policy.fair.history_intervals) fair_history_.pop_front();
        alloc_ = mise_fair_redistribute(alloc_, est, fair_bound_, cfg_.policy.fair.steal_step);
        FairConfig f = cfg_.policy.fair;
        f.bound = fair_bound_;
        const double next = mise_fair_adjust_bound(fair_history_, est, f);
        if (next != fair_bound_) fair_history_.clear();
        for (std::size_t a = 0; a < n; ++a) results_.intervals[first + a].bound = fair_bound_;
        fair_bound_ = next;
        break;
      }
      default:
        break;
    }
    for (std::size_t a = 0; a < n; ++a) results_.intervals[first + a].weight = alloc_.weights[a];
  }

  void asm_boundary(Cycle now) {
    const auto n = apps_.size();
    const double hit_lat = cfg_.llc.hit_latency_cycles;
    std::vector<std::optional<double>> est(n);
    std::vector<double> car_alone(n, 0.0);
    const std::size_t first = results_.intervals.size();
    for (AppId a = 0; a < n; ++a) {
      AppState& s = apps_[a];
      const bool sampled = apply_ats_scaling(s.asmc);
      SlowdownEstimate e = estimate_slowdown_asm(s.asmc, cfg_.asm_model, hit_lat, s.prev_asm);
      e.app = a;
      e.quantum = boundary_index_;
      if (!sampled) e.flags |= kFlagNoSampledAccesses;
      if (e.slowdown) s.prev_asm = e;
      est[a] = e.slowdown;
      car_alone[a] = e.car_alone;
      IntervalRecord r;
      r.model = ModelKind::kAsm;
      r.app = a;
      r.index = boundary_index_;
      r.end_cycle = now;
      r.car_shared = e.car_shared;
      if (e.slowdown) r.car_alone = e.car_alone;
      r.estimate = e.slowdown;
      r.flags = e.flags;
      results_.intervals.push_back(std::move(r));
    }

    const auto kind = cfg_.policy.kind;
    const bool partitions = kind == PolicyKind::kAsmCache || kind == PolicyKind::kAsmQos ||
                            kind == PolicyKind::kAsmCacheMem;
    if (partitions) {
      SlowdownCurves curves(n);
      for (AppId a = 0; a < n; ++a) {
        if (est[a]) {
          curves[a] = slowdown_curve(apps_[a].asmc, *apps_[a].ats, cfg_.asm_model.quantum_cycles, car_alone[a],
                                     hit_lat);
        } else {
          curves[a].assign(cfg_.llc.associativity, 1.0);
        }
        results_.intervals[first + a].slowdown_curve = curves[a];
      }
      PartitionDecision d;
      if (kind == PolicyKind::kAsmCache) {
        d = asm_cache_partition(curves, cfg_.llc.associativity);
      } else if (kind == PolicyKind::kAsmQos) {
        const auto& aoi = cfg_.policy.qos.aoi.front();
        d = asm_qos_allocate(aoi.app, aoi.bound, curves, cfg_.llc.associativity);
        auto& rec = results_.intervals[first + aoi.app];
        rec.status = d.infeasible ? "infeasible" : "met";
        rec.bound = aoi.bound;
      } else {
        CacheMemDecision cm = asm_cache_mem_step(curves, cfg_.llc.associativity);
        d = std::move(cm.partition);
        alloc_ = std::move(cm.bandwidth.alloc);
        for (std::size_t a = 0; a < n; ++a) results_.intervals[first + a].flags |= cm.bandwidth.flags;
      }
      partition_ = d.partition();
      for (std::size_t a = 0; a < n; ++a) results_.intervals[first + a].ways = d.ways[a];
    } else if (kind == PolicyKind::kAsmMem) {
      WeightedAllocation w = asm_mem_weights(est);
      alloc_ = std::move(w.alloc);
      for (std::size_t a = 0; a < n; ++a) results_.intervals[first + a].flags |= w.flags;
    }
    for (std::size_t a = 0; a < n; ++a) {
      results_.intervals[first + a].weight = alloc_.weights[a];
      apps_[a].asmc = AsmQuantumCounters{};
      apps_[a].ats->reset_histogram();
    }
  }

  void schedule(Cycle now) {
    const auto& timing = cfg_.dram.timing;
    for (std::uint32_t ch = 0; ch < queues_.size(); ++ch) {
      RequestQueue& q = queues_[ch];
      auto& over = overflow_[ch];
      while (!over.empty() && !q.full()) {
        q.push(std::move(over.front()));
        over.pop_front();
      }
      if (q.empty()) continue;
      ChannelState& chs = channel_state_[ch];
      if (chs.last_column_issue && now - *chs.last_column_issue < timing.tCCD) continue;
      auto& banks = banks_[ch];
      ChannelView view{banks, chs, timing, now};
      const auto pick = scheduler_.select(ch, q, view);
      if (!pick) continue;
      if (cfg_.scheduler.policy == SchedulerPolicy::kFrfcfsCap) check_cap(ch, q, view, *pick);
      MemRequest r = q.take(*pick);
      const ServiceResult res = service_latency(banks[r.bank], chs, r.coord.row, now, timing);
      monitor_.record(ch, r.bank, now, res.completion);
      switch (res.outcome) {
        case RowOutcome::kHit: ++results_.row_hits; break;
        case RowOutcome::kClosed: ++results_.row_closed; break;
        case RowOutcome::kConflict: ++results_.row_conflicts; break;
      }
      scheduler_.on_issue(ch, r, res.was_row_hit());
      streak_trackers_[ch].serve(r.app, streaks_);
      AppState& s = apps_[r.app];
      --s.queued;
      ++results_.apps[r.app].served;
      ++s.mise.requests_served;
      if (priority_ && *priority_ == r.app) ++s.mise.hpe_requests;
      last_issued_app_ = r.app;
      push(res.completion, EventKind::kDramDone, r.app, r.payload, r.address, r.is_write);
    }
  }

  // A row hit beyond the cap while another app's request waits for the same
  // bank is a violation of the cap guarantee.
  void check_cap(std::uint32_t ch, const RequestQueue& q, const ChannelView& view, std::size_t pick) {
    const MemRequest& r = q[pick];
    if (!view.row_hit(r) || !scheduler_.cap(ch).capped(r)) return;
    for (const auto& other : q)
      if (other.app != r.app && other.bank == r.bank && view.issuable(other)) {
        ++results_.cap_violations;
        return;
      }
  }

  void count(Cycle) {
    if (cfg_.model == ModelKind::kNone) return;
    const bool asm_model = cfg_.model == ModelKind::kAsm;
    if (priority_) {
      AppState& p = apps_[*priority_];
      if (p.queued > 0 && last_issued_app_ && *last_issued_app_ != *priority_) {
        ++p.mise.interference_cycles;
        ++p.asmc.queueing_cycles;
      }
    }
    if (!asm_model) return;
    for (AppId a = 0; a < apps_.size(); ++a) {
      AppState& s = apps_[a];
      const bool own = priority_ && *priority_ == a;
      if (s.outstanding_hits > 0) {
        ++s.asmc.quantum_hit_time;
        if (own) ++s.asmc.epoch_hit_time;
      }
      if (s.outstanding_misses > 0) {
        ++s.asmc.quantum_miss_time;
        if (own) ++s.asmc.epoch_miss_time;
      }
    }
  }

  void finish() {
    results_.cycles = cfg_.run_length_cycles;
    for (auto& t : streak_trackers_) t.flush(streaks_);
    for (std::size_t a = 0; a < apps_.size(); ++a) {
      AppResult& r = results_.apps[a];
      const Core& c = apps_[a].core;
      r.name = cfg_.apps[a].name;
      r.retired = c.retired_instructions();
      r.cycles = c.total_cycles();
      r.stall_cycles = c.memory_stall_cycles();
      r.finished = c.finished();
      r.streaks = streaks_[a];
    }
    results_.dram_issues = monitor_.issues();
    results_.tccd_violations = monitor_.tccd_violations();
    results_.overlap_violations = monitor_.overlap_violations();
  }

  SimConfig cfg_;
  Scheduler scheduler_;
  DramMonitor monitor_;
  Rng lottery_;
  std::vector<AppState> apps_;
  std::optional<Cache> llc_;
  std::optional<WayPartition> partition_;
  std::vector<std::vector<BankState>> banks_;
  std::vector<ChannelState> channel_state_;
  std::vector<RequestQueue> queues_;
  std::vector<std::deque<MemRequest>> overflow_;
  std::vector<StreakTracker> streak_trackers_;
  std::vector<StreakHistogram> streaks_;
  std::priority_queue<Event, std::vector<Event>, std::greater<>> events_;
  std::uint64_t seq_ = 0;
  std::uint64_t next_request_id_ = 0;
  std::optional<AppId> priority_;
  std::optional<AppId> last_issued_app_;
  BandwidthAllocation alloc_;
  QosState qos_state_;
  std::deque<std::vector<bool>> fair_history_;
  double fair_bound_ = 2.0;
  std::uint64_t boundary_index_ = 0;
  Cycle window_ = 0;
  Cycle epoch_ = 0;
  bool overlay_ = false;
  SimResults results_;
};

inline SimResults run(const SimConfig& config) { return Simulator(config).run(); }

}  // namespace memsim
