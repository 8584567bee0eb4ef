#pragma once

#include <charconv>
#include <cmath>
#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "memsim/config.hpp"
#include "memsim/experiment.hpp"

namespace memsim {

using ordered_json = nlohmann::ordered_json;

// Shortest round-trip decimal; "nan" for unavailable values.
inline std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

inline std::string format_number(const std::optional<double>& v) {
  return v ? format_number(*v) : "nan";
}

inline ordered_json json_number(const std::optional<double>& v) {
  if (!v || !std::isfinite(*v)) return nullptr;
  return *v;
}

inline void write_slowdowns_csv(std::ostream& out, const Evaluation& ev) {
  out << "app,window,ipc_alone,ipc_shared,actual,estimated,error_pct,flags\n";
  for (const auto& r : ev.records) {
    std::string flags = flags_to_string(r.flags);
    if (r.truncated) flags += flags.empty() ? "truncated" : "|truncated";
    out << r.app << ',' << r.window << ',' << format_number(r.ipc_alone) << ',' << format_number(r.ipc_shared)
        << ',' << format_number(r.actual_slowdown) << ',' << format_number(r.estimated_slowdown) << ','
        << format_number(r.error_percent) << ',' << flags << '\n';
  }
}

inline void write_intervals_csv(std::ostream& out, const SimResults& r) {
  out << "model,app,index,end_cycle,srsr,arsr,alpha,car_shared,car_alone,estimated,flags,weight,ways,bound,"
         "status,slowdown_curve\n";
  for (const auto& iv : r.intervals) {
    std::string curve;
    for (std::size_t i = 0; i < iv.slowdown_curve.size(); ++i)
      curve += (i ? ";" : "") + format_number(iv.slowdown_curve[i]);
    out << to_string(iv.model) << ',' << iv.app << ',' << iv.index << ',' << iv.end_cycle << ','
        << format_number(iv.srsr) << ',' << format_number(iv.arsr) << ',' << format_number(iv.alpha) << ','
        << format_number(iv.car_shared) << ',' << format_number(iv.car_alone) << ','
        << format_number(iv.estimate) << ',' << flags_to_string(iv.flags) << ',' << format_number(iv.weight)
        << ',' << (iv.ways ? std::to_string(*iv.ways) : "") << ',' << format_number(iv.bound) << ','
        << iv.status << ',' << curve << '\n';
  }
}

inline void write_streaks_csv(std::ostream& out, const SimResults& r) {
  out << "app";
  for (std::size_t k = 1; k < kStreakBuckets; ++k) out << ",len_" << k;
  out << ",len_" << kStreakBuckets << "plus,runs,requests,mean_length\n";
  for (std::size_t a = 0; a < r.apps.size(); ++a) {
    const auto& h = r.apps[a].streaks;
    out << a;
    for (auto c : h.counts) out << ',' << c;
    out << ',' << h.runs() << ',' << h.requests() << ',' << format_number(h.mean_length()) << '\n';
  }
}

inline ordered_json summary_json(const ExperimentSpec& spec, const Experiment& e) {
  const SimConfig& c = spec.sim;
  const Evaluation& ev = e.evaluation;
  ordered_json j;
  j["schema_version"] = kSchemaVersion;
  j["config_hash"] = config_hash(spec.document);
  j["seed"] = c.seed;
  j["cycles"] = e.shared.cycles;
  j["model"] = to_string(c.model);
  j["scheduler"] = to_string(c.scheduler.policy);
  j["policy"] = to_string(c.policy.kind);
  j["oracle"] = e.alone.has_value();
  j["window_cycles"] = e.shared.window_cycles;
  j["warmup_windows"] = ev.warmup_windows;
  j["weighted_speedup"] = json_number(ev.weighted_speedup);
  j["harmonic_speedup"] = json_number(ev.harmonic_speedup);
  j["max_slowdown"] = json_number(ev.max_slowdown);
  j["mean_error_pct"] = json_number(ev.mean_error);
  ordered_json apps = ordered_json::array();
  for (std::size_t a = 0; a < e.shared.apps.size(); ++a) {
    const AppResult& r = e.shared.apps[a];
    const AppSummary& s = ev.apps[a];
    ordered_json o;
    o["app"] = a;
    o["name"] = r.name;
    o["retired"] = r.retired;
    o["ipc"] = r.cycles == 0 ? 0.0 : static_cast<double>(r.retired) / static_cast<double>(r.cycles);
    o["actual_slowdown"] = json_number(s.actual_slowdown);
    o["mean_estimate"] = json_number(s.mean_estimate);
    o["mean_error_pct"] = json_number(s.mean_error);
    o["error_samples"] = s.error_samples;
    o["truncated"] = s.truncated;
    o["requests_served"] = r.served;
    o["epochs"] = r.epochs;
    o["mean_streak"] = r.streaks.mean_length();
    apps.push_back(std::move(o));
  }
  j["apps"] = std::move(apps);
  ordered_json mon;
  mon["dram_issues"] = e.shared.dram_issues;
  mon["tccd_violations"] = e.shared.tccd_violations;
  mon["overlap_violations"] = e.shared.overlap_violations;
  mon["cap_violations"] = e.shared.cap_violations;
  mon["row_hits"] = e.shared.row_hits;
  mon["row_closed"] = e.shared.row_closed;
  mon["row_conflicts"] = e.shared.row_conflicts;
  j["monitors"] = std::move(mon);
  return j;
}

struct CompareRow {
  std::string label;
  std::optional<double> ws, hs, max_slowdown, mean_error;
};

inline std::optional<double> optional_number(const json& j, const char* key) {
  if (!j.contains(key) || !j[key].is_number()) return std::nullopt;
  return j[key].get<double>();
}

inline std::optional<double> percent_delta(const std::optional<double>& base, const std::optional<double>& v) {
  if (!base || !v || *base == 0.0) return std::nullopt;
  return (*v - *base) / *base * 100.0;
}

// Side-by-side metrics with percentage deltas against the first summary.
inline void write_compare_csv(std::ostream& out, const std::vector<std::string>& labels,
                              const std::vector<json>& summaries) {
  if (summaries.size() < 2) throw std::invalid_argument("compare needs at least two summaries");
  for (std::size_t i = 0; i < summaries.size(); ++i) {
    const auto& s = summaries[i];
    if (!s.contains("schema_version") || s["schema_version"] != summaries[0]["schema_version"])
      throw std::invalid_argument("schema version mismatch in " + labels[i]);
  }
  out << "summary,weighted_speedup,ws_delta_pct,harmonic_speedup,hs_delta_pct,max_slowdown,max_slowdown_delta_pct,"
         "mean_error_pct,mean_error_delta_pct\n";
  const char* keys[] = {"weighted_speedup", "harmonic_speedup", "max_slowdown", "mean_error_pct"};
  for (std::size_t i = 0; i < summaries.size(); ++i) {
    out << labels[i];
    for (const char* k : keys) {
      const auto v = optional_number(summaries[i], k);
      out << ',' << format_number(v) << ',' << format_number(percent_delta(optional_number(summaries[0], k), v));
    }
    out << '\n';
  }
}

}  // namespace memsim
