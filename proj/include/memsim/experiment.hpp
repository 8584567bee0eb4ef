#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <thread>
#include <vector>

#include "memsim/metrics.hpp"
#include "memsim/sim.hpp"

namespace memsim {

// Runs fn(0..n-1) on up to `jobs` threads; results must be written to
// per-index slots so the outcome does not depend on completion order.
inline void parallel_for(std::size_t n, unsigned jobs, const std::function<void(std::size_t)>& fn) {
  if (jobs <= 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(n);
  std::vector<std::thread> pool;
  const auto workers = std::min<std::size_t>(jobs, n);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          fn(i);
        } catch (...) {
          errors[i] = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

// The configuration an application runs under when it has the machine to
// itself: same hardware, scheduler and length, no model and no policy.
inline SimConfig alone_config(const SimConfig& shared, AppId app) {
  SimConfig c = shared;
  c.apps = {shared.apps.at(app)};
  c.model = ModelKind::kNone;
  c.policy = PolicyConfig{};
  c.window_cycles = shared.metrics_window();
  // A lone app always wins the lottery; keeping the overlay keeps its
  // request ordering identical to a one-app shared run.
  c.scheduler.overlay_epoch_priority = shared.epoch_overlay();
  return c;
}

struct AloneRun {
  ProgressSamples progress;
  std::uint64_t retired = 0;
  std::uint64_t llc_accesses = 0;
  Cycle cycles = 0;
};

inline std::vector<AloneRun> run_alone_oracle(const SimConfig& shared, unsigned jobs = 1) {
  std::vector<AloneRun> out(shared.apps.size());
  parallel_for(out.size(), jobs, [&](std::size_t a) {
    SimResults r = run(alone_config(shared, static_cast<AppId>(a)));
    AloneRun& o = out[a];
    o.progress = std::move(r.apps[0].progress);
    o.retired = r.apps[0].retired;
    o.llc_accesses = r.apps[0].llc_hits + r.apps[0].llc_misses;
    o.cycles = r.cycles;
  });
  return out;
}

struct AppSummary {
  std::optional<double> actual_slowdown;  // over all post-warmup windows
  std::optional<double> mean_error;
  std::optional<double> mean_estimate;
  std::uint64_t error_samples = 0;
  bool truncated = false;
};

struct Evaluation {
  std::vector<SlowdownRecord> records;
  std::vector<AppSummary> apps;
  std::optional<double> weighted_speedup;
  std::optional<double> harmonic_speedup;
  std::optional<double> max_slowdown;
  std::optional<double> mean_error;
  std::uint64_t warmup_windows = 1;
};

// Per-window slowdown records and aggregate metrics. Without alone runs
// only shared IPC and estimates are filled in.
inline Evaluation evaluate(const SimResults& shared, const std::vector<AloneRun>* alone,
                           std::uint64_t warmup_windows = 1) {
  Evaluation ev;
  ev.warmup_windows = warmup_windows;
  const auto n = shared.apps.size();
  ev.apps.resize(n);
  const double nan = std::numeric_limits<double>::quiet_NaN();

  std::map<std::pair<AppId, std::uint64_t>, const IntervalRecord*> by_window;
  for (const auto& iv : shared.intervals) by_window[{iv.app, iv.index - 1}] = &iv;

  double error_sum = 0.0;
  std::uint64_t error_count = 0;
  for (AppId a = 0; a < n; ++a) {
    const auto& wr = shared.apps[a].window_retired;
    const std::size_t windows = wr.empty() ? 0 : wr.size() - 1;
    double app_err = 0.0, app_est = 0.0;
    std::uint64_t app_n = 0, est_n = 0;
    for (std::size_t k = warmup_windows; k < windows; ++k) {
      SlowdownRecord rec;
      rec.app = a;
      rec.window = k;
      rec.ipc_alone = nan;
      rec.actual_slowdown = nan;
      if (auto it = by_window.find({a, k}); it != by_window.end()) {
        rec.estimated_slowdown = it->second->estimate;
        rec.flags = it->second->flags;
      }
      if (alone != nullptr) {
        const AlignedWindow w = align_window((*alone)[a].progress, wr[k], wr[k + 1], shared.window_cycles);
        rec.ipc_shared = w.ipc_shared;
        rec.truncated = w.truncated;
        if (!w.truncated && w.ipc_shared > 0.0) {
          rec.ipc_alone = w.ipc_alone;
          rec.actual_slowdown = w.ipc_alone / w.ipc_shared;
        }
      } else {
        rec.ipc_shared = static_cast<double>(wr[k + 1] - wr[k]) / static_cast<double>(shared.window_cycles);
      }
      if (rec.estimated_slowdown) {
        app_est += *rec.estimated_slowdown;
        ++est_n;
      }
      if (rec.estimated_slowdown && std::isfinite(rec.actual_slowdown) && rec.actual_slowdown > 0.0) {
        rec.error_percent = estimation_error(*rec.estimated_slowdown, rec.actual_slowdown);
        app_err += *rec.error_percent;
        ++app_n;
      }
      ev.apps[a].truncated |= rec.truncated;
      ev.records.push_back(rec);
    }
    if (app_n > 0) ev.apps[a].mean_error = app_err / static_cast<double>(app_n);
    if (est_n > 0) ev.apps[a].mean_estimate = app_est / static_cast<double>(est_n);
    ev.apps[a].error_samples = app_n;
    error_sum += app_err;
    error_count += app_n;

    if (alone != nullptr && windows > warmup_windows) {
      const Cycle span = (windows - warmup_windows) * shared.window_cycles;
      const AlignedWindow w = align_window((*alone)[a].progress, wr[warmup_windows], wr[windows], span);
      if (!w.truncated && w.ipc_shared > 0.0) ev.apps[a].actual_slowdown = w.ipc_alone / w.ipc_shared;
      ev.apps[a].truncated |= w.truncated;
    }
  }
  if (error_count > 0) ev.mean_error = error_sum / static_cast<double>(error_count);

  std::vector<double> slowdowns;
  for (const auto& s : ev.apps)
    if (s.actual_slowdown) slowdowns.push_back(*s.actual_slowdown);
  if (!slowdowns.empty() && slowdowns.size() == n) {
    ev.weighted_speedup = weighted_speedup(slowdowns);
    ev.harmonic_speedup = harmonic_speedup(slowdowns);
    ev.max_slowdown = maximum_slowdown(slowdowns);
  }
  return ev;
}

struct Experiment {
  SimResults shared;
  std::optional<std::vector<AloneRun>> alone;
  Evaluation evaluation;
};

inline Experiment run_experiment(const SimConfig& config, bool oracle, unsigned jobs = 1,
                                 std::uint64_t warmup_windows = 1) {
  Experiment e;
  e.shared = run(config);
  if (oracle) e.alone = run_alone_oracle(config, jobs);
  e.evaluation = evaluate(e.shared, e.alone ? &*e.alone : nullptr, warmup_windows);
  return e;
}

}  // namespace memsim
