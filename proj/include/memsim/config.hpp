#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <memory>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "memsim/sim.hpp"
#include "memsim/trace.hpp"

namespace memsim {

using json = nlohmann::json;

inline constexpr int kSchemaVersion = 1;

class TraceFileError : public std::runtime_error {
 public:
  TraceFileError(std::string path, const std::string& reason)
      : std::runtime_error(path + ": " + reason), path_(std::move(path)) {}
  const std::string& path() const { return path_; }

 private:
  std::string path_;
};

inline json default_document() {
  return json::parse(R"({
    "schema_version": 1,
    "seed": 1,
    "run_length_cycles": 10000000,
    "oracle": false,
    "loop_traces": true,
    "core": {"issue_width": 3, "window_size": 128, "mshr_count": 8},
    "l1": {"capacity_bytes": 65536, "associativity": 4, "line_bytes": 64, "hit_latency_cycles": 1},
    "llc": {"enabled": false, "capacity_bytes": 2097152, "associativity": 16, "line_bytes": 64,
            "hit_latency_cycles": 20},
    "dram": {"channels": 1, "ranks_per_channel": 1, "banks_per_rank": 8, "row_bytes": 8192,
             "queue_capacity": 128, "interleaving": "row", "blocks_per_stripe": 4,
             "timing": {"tRCD": 8, "tRP": 8, "tCL": 8, "tCCD": 4, "tRAS": 20, "burst_cycles": 4}},
    "scheduler": {"policy": "frfcfs", "overlay_epoch_priority": false, "blacklisting_threshold": 4,
                  "clearing_interval_cycles": 10000, "cap": 4, "grouping_mpki_threshold": 5.0,
                  "grouping_window_cycles": 5000000},
    "model": "none",
    "mise": {"interval": 5000000, "epoch": 10000, "alpha_threshold": 0.7},
    "asm": {"quantum": 5000000, "epoch": 10000, "sampled_sets": 64},
    "policy": {"name": "none",
               "qos": {"aoi": [], "step": 0.02, "patience": 10},
               "fair": {"bound": 2.0, "steal_step": 0.02, "history_intervals": 3, "tighten": 0.95,
                        "loosen": 1.05},
               "static_weights": []},
    "apps": [],
    "metrics": {"window_cycles": 5000000, "warmup_windows": 1, "alone_sample_cycles": 100000},
    "sweep": {"axes": []}
  })");
}

namespace detail {

// Keys whose values are free-form (arrays of records or numbers).
inline bool opaque_path(const std::string& path) {
  return path == "apps" || path == "policy.qos.aoi" || path == "policy.static_weights" || path == "sweep.axes";
}

inline void merge_into(json& base, const json& user, const std::string& prefix, std::vector<std::string>& issues) {
  for (auto it = user.begin(); it != user.end(); ++it) {
    const std::string path = prefix.empty() ? it.key() : prefix + "." + it.key();
    if (!base.contains(it.key())) {
      issues.push_back(path + ": unknown key");
      continue;
    }
    json& slot = base[it.key()];
    if (slot.is_object() && !opaque_path(path)) {
      if (!it->is_object()) {
        issues.push_back(path + ": expected an object");
        continue;
      }
      merge_into(slot, *it, path, issues);
    } else {
      slot = *it;
    }
  }
}

inline std::vector<std::string> split_path(const std::string& dotted) {
  std::vector<std::string> parts;
  std::stringstream ss(dotted);
  std::string part;
  while (std::getline(ss, part, '.')) parts.push_back(part);
  return parts;
}

inline bool all_digits(const std::string& s) {
  return !s.empty() && s.find_first_not_of("0123456789") == std::string::npos;
}

// Locates an existing node by dotted path; numeric segments index arrays.
inline json* find_path(json& doc, const std::string& dotted) {
  json* node = &doc;
  for (const auto& part : split_path(dotted)) {
    if (node->is_object()) {
      if (!node->contains(part)) return nullptr;
      node = &(*node)[part];
    } else if (node->is_array() && all_digits(part)) {
      const auto idx = std::stoull(part);
      if (idx >= node->size()) return nullptr;
      node = &(*node)[idx];
    } else {
      return nullptr;
    }
  }
  return node;
}

// Reads typed fields and records every failure with its path.
class Reader {
 public:
  explicit Reader(std::vector<std::string>& issues) : issues_(issues) {}

  template <typename T>
  T uint(const json& node, const std::string& path) {
    if (node.is_number_unsigned()) return checked<T>(node.get<std::uint64_t>(), path);
    if (node.is_number_integer()) {
      const auto v = node.get<std::int64_t>();
      if (v >= 0) return checked<T>(static_cast<std::uint64_t>(v), path);
    }
    if (node.is_number_float()) {
      const double d = node.get<double>();
      if (d >= 0 && std::floor(d) == d && d < 1.8e19) return checked<T>(static_cast<std::uint64_t>(d), path);
    }
    issues_.push_back(path + ": expected a non-negative integer");
    return T{};
  }

  double number(const json& node, const std::string& path) {
    if (node.is_number()) return node.get<double>();
    issues_.push_back(path + ": expected a number");
    return 0.0;
  }

  bool boolean(const json& node, const std::string& path) {
    if (node.is_boolean()) return node.get<bool>();
    issues_.push_back(path + ": expected true or false");
    return false;
  }

  std::string string(const json& node, const std::string& path) {
    if (node.is_string()) return node.get<std::string>();
    issues_.push_back(path + ": expected a string");
    return {};
  }

  template <typename Fn>
  auto parse(const std::string& path, Fn&& fn) -> decltype(fn()) {
    try {
      return fn();
    } catch (const std::exception& e) {
      issues_.push_back(path + ": " + e.what());
      return decltype(fn()){};
    }
  }

  void issue(std::string s) { issues_.push_back(std::move(s)); }

 private:
  template <typename T>
  T checked(std::uint64_t v, const std::string& path) {
    if (v > static_cast<std::uint64_t>(std::numeric_limits<T>::max())) {
      issues_.push_back(path + ": value out of range");
      return T{};
    }
    return static_cast<T>(v);
  }

  std::vector<std::string>& issues_;
};

}  // namespace detail

// Parses `text` as JSON when possible, otherwise takes it as a string.
inline json parse_override_value(const std::string& text) {
  try {
    return json::parse(text);
  } catch (const json::parse_error&) {
    return json(text);
  }
}

// Applies `path=value` to a resolved document; the path must already exist.
inline void apply_override(json& doc, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0)
    throw ConfigError({"--set " + assignment + ": expected path=value"});
  const std::string path = assignment.substr(0, eq);
  json* node = detail::find_path(doc, path);
  if (node == nullptr) throw ConfigError({path + ": unknown config path"});
  *node = parse_override_value(assignment.substr(eq + 1));
}

// User document merged over the defaults. Unknown keys are errors.
inline json resolve_document(const json& user) {
  if (!user.is_object()) throw ConfigError({"config: expected a JSON object"});
  json doc = default_document();
  std::vector<std::string> issues;
  detail::merge_into(doc, user, "", issues);
  if (!issues.empty()) throw ConfigError(std::move(issues));
  return doc;
}

inline json load_document(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw TraceFileError(path.string(), "cannot open config file");
  try {
    return resolve_document(json::parse(in));
  } catch (const json::parse_error& e) {
    throw ConfigError({path.string() + ": " + e.what()});
  }
}

inline std::string config_hash(const json& doc) {
  const std::string canonical = doc.dump();
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : canonical) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

struct SweepAxis {
  std::string path;
  std::vector<json> values;
};

struct ExperimentSpec {
  SimConfig sim;
  json document;
  bool oracle = false;
  std::uint64_t warmup_windows = 1;
  std::vector<SweepAxis> axes;
};

inline Trace load_trace_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw TraceFileError(path.string(), "cannot open trace file");
  try {
    return parse_trace(in);
  } catch (const TraceParseError& e) {
    throw TraceFileError(path.string(), e.what());
  }
}

namespace detail {

inline SyntheticWorkloadSpec read_synthetic(Reader& r, const json& node, const std::string& path,
                                            std::uint64_t default_seed) {
  SyntheticWorkloadSpec s;
  s.record_count = 100000;
  s.seed = default_seed;
  if (!node.is_object()) {
    r.issue(path + ": expected an object");
    return s;
  }
  for (auto it = node.begin(); it != node.end(); ++it) {
    const std::string p = path + "." + it.key();
    const auto& k = it.key();
    if (k == "footprint_bytes") s.footprint_bytes = r.uint<std::uint64_t>(*it, p);
    else if (k == "stride_bytes") s.stride_bytes = r.uint<std::uint64_t>(*it, p);
    else if (k == "compute_gap") s.compute_gap = r.uint<std::uint64_t>(*it, p);
    else if (k == "record_count") s.record_count = r.uint<std::uint64_t>(*it, p);
    else if (k == "reuse_fraction") s.reuse_fraction = r.number(*it, p);
    else if (k == "hot_region_bytes") s.hot_region_bytes = r.uint<std::uint64_t>(*it, p);
    else if (k == "write_fraction") s.write_fraction = r.number(*it, p);
    else if (k == "seed") s.seed = r.uint<std::uint64_t>(*it, p);
    else r.issue(p + ": unknown key");
  }
  if (s.record_count == 0) r.issue(path + ".record_count: must be positive");
  r.parse(path, [&] {
    validate(s);
    return 0;
  });
  return s;
}

}  // namespace detail

// Seed of the n-th synthetic app when the config gives none.
inline std::uint64_t derived_trace_seed(std::uint64_t run_seed, std::size_t index) {
  return run_seed * 1000003ull + index + 1;
}

// Builds the simulator configuration from a resolved document. Trace paths
// are relative to `base_dir`.
inline ExperimentSpec build_experiment(const json& doc, const std::filesystem::path& base_dir = ".") {
  std::vector<std::string> issues;
  detail::Reader r(issues);
  ExperimentSpec spec;
  spec.document = doc;
  SimConfig& c = spec.sim;

  if (r.uint<int>(doc["schema_version"], "schema_version") != kSchemaVersion)
    r.issue("schema_version: unsupported (expected " + std::to_string(kSchemaVersion) + ")");
  c.seed = r.uint<std::uint64_t>(doc["seed"], "seed");
  c.run_length_cycles = r.uint<Cycle>(doc["run_length_cycles"], "run_length_cycles");
  spec.oracle = r.boolean(doc["oracle"], "oracle");
  c.loop_traces = r.boolean(doc["loop_traces"], "loop_traces");

  const json& core = doc["core"];
  c.core.issue_width = r.uint<std::uint32_t>(core["issue_width"], "core.issue_width");
  c.core.window_size = r.uint<std::uint32_t>(core["window_size"], "core.window_size");
  c.core.mshr_count = r.uint<std::uint32_t>(core["mshr_count"], "core.mshr_count");

  auto read_cache = [&](const json& n, const std::string& p, CacheConfig& cc) {
    cc.capacity_bytes = r.uint<std::uint64_t>(n["capacity_bytes"], p + ".capacity_bytes");
    cc.associativity = r.uint<std::uint32_t>(n["associativity"], p + ".associativity");
    cc.line_bytes = r.uint<std::uint32_t>(n["line_bytes"], p + ".line_bytes");
    cc.hit_latency_cycles = r.uint<std::uint32_t>(n["hit_latency_cycles"], p + ".hit_latency_cycles");
  };
  read_cache(doc["l1"], "l1", c.l1);
  c.l1.shared = false;
  c.core.l1_hit_latency_cycles = c.l1.hit_latency_cycles;
  read_cache(doc["llc"], "llc", c.llc);
  c.llc.shared = true;
  c.llc_enabled = r.boolean(doc["llc"]["enabled"], "llc.enabled");

  const json& d = doc["dram"];
  c.dram.channels = r.uint<std::uint32_t>(d["channels"], "dram.channels");
  c.dram.ranks_per_channel = r.uint<std::uint32_t>(d["ranks_per_channel"], "dram.ranks_per_channel");
  c.dram.banks_per_rank = r.uint<std::uint32_t>(d["banks_per_rank"], "dram.banks_per_rank");
  c.dram.row_bytes = r.uint<std::uint32_t>(d["row_bytes"], "dram.row_bytes");
  c.dram.queue_capacity = r.uint<std::uint32_t>(d["queue_capacity"], "dram.queue_capacity");
  c.dram.interleaving =
      r.parse("dram.interleaving", [&] { return parse_interleaving(r.string(d["interleaving"], "dram.interleaving")); });
  c.dram.blocks_per_stripe = r.uint<std::uint32_t>(d["blocks_per_stripe"], "dram.blocks_per_stripe");
  const json& t = d["timing"];
  c.dram.timing.tRCD = r.uint<std::uint32_t>(t["tRCD"], "dram.timing.tRCD");
  c.dram.timing.tRP = r.uint<std::uint32_t>(t["tRP"], "dram.timing.tRP");
  c.dram.timing.tCL = r.uint<std::uint32_t>(t["tCL"], "dram.timing.tCL");
  c.dram.timing.tCCD = r.uint<std::uint32_t>(t["tCCD"], "dram.timing.tCCD");
  c.dram.timing.tRAS = r.uint<std::uint32_t>(t["tRAS"], "dram.timing.tRAS");
  c.dram.timing.burst_cycles = r.uint<std::uint32_t>(t["burst_cycles"], "dram.timing.burst_cycles");

  const json& s = doc["scheduler"];
  c.scheduler.policy = r.parse("scheduler.policy",
                               [&] { return parse_scheduler_policy(r.string(s["policy"], "scheduler.policy")); });
  c.scheduler.overlay_epoch_priority = r.boolean(s["overlay_epoch_priority"], "scheduler.overlay_epoch_priority");
  c.scheduler.blacklisting_threshold =
      r.uint<std::uint32_t>(s["blacklisting_threshold"], "scheduler.blacklisting_threshold");
  c.scheduler.clearing_interval_cycles =
      r.uint<Cycle>(s["clearing_interval_cycles"], "scheduler.clearing_interval_cycles");
  c.scheduler.cap = r.uint<std::uint32_t>(s["cap"], "scheduler.cap");
  c.scheduler.grouping_mpki_threshold = r.number(s["grouping_mpki_threshold"], "scheduler.grouping_mpki_threshold");
  c.scheduler.grouping_window_cycles = r.uint<Cycle>(s["grouping_window_cycles"], "scheduler.grouping_window_cycles");
  if (c.scheduler.grouping_window_cycles == 0) r.issue("scheduler.grouping_window_cycles: must be positive");
  if (c.scheduler.clearing_interval_cycles == 0) r.issue("scheduler.clearing_interval_cycles: must be positive");
  if (c.scheduler.blacklisting_threshold == 0) r.issue("scheduler.blacklisting_threshold: must be positive");
  if (c.scheduler.cap == 0) r.issue("scheduler.cap: must be positive");

  c.model = r.parse("model", [&] { return parse_model_kind(r.string(doc["model"], "model")); });
  c.mise.interval_cycles = r.uint<Cycle>(doc["mise"]["interval"], "mise.interval");
  c.mise.epoch_cycles = r.uint<Cycle>(doc["mise"]["epoch"], "mise.epoch");
  c.mise.alpha_threshold = r.number(doc["mise"]["alpha_threshold"], "mise.alpha_threshold");
  c.asm_model.quantum_cycles = r.uint<Cycle>(doc["asm"]["quantum"], "asm.quantum");
  c.asm_model.epoch_cycles = r.uint<Cycle>(doc["asm"]["epoch"], "asm.epoch");
  c.asm_model.sampled_sets = r.uint<std::uint32_t>(doc["asm"]["sampled_sets"], "asm.sampled_sets");

  const json& p = doc["policy"];
  c.policy.kind = r.parse("policy.name", [&] { return parse_policy_kind(r.string(p["name"], "policy.name")); });
  const json& q = p["qos"];
  if (!q["aoi"].is_array()) {
    r.issue("policy.qos.aoi: expected an array");
  } else {
    for (std::size_t i = 0; i < q["aoi"].size(); ++i) {
      const std::string ap = "policy.qos.aoi." + std::to_string(i);
      const json& a = q["aoi"][i];
      if (!a.is_object() || !a.contains("app") || !a.contains("bound")) {
        r.issue(ap + ": expected {\"app\": id, \"bound\": slowdown}");
        continue;
      }
      c.policy.qos.aoi.push_back({r.uint<AppId>(a["app"], ap + ".app"), r.number(a["bound"], ap + ".bound")});
    }
  }
  c.policy.qos.step = r.number(q["step"], "policy.qos.step");
  c.policy.qos.infeasibility_patience = r.uint<std::uint32_t>(q["patience"], "policy.qos.patience");
  const json& f = p["fair"];
  c.policy.fair.bound = r.number(f["bound"], "policy.fair.bound");
  c.policy.fair.steal_step = r.number(f["steal_step"], "policy.fair.steal_step");
  c.policy.fair.history_intervals = r.uint<std::uint32_t>(f["history_intervals"], "policy.fair.history_intervals");
  c.policy.fair.tighten = r.number(f["tighten"], "policy.fair.tighten");
  c.policy.fair.loosen = r.number(f["loosen"], "policy.fair.loosen");
  if (!p["static_weights"].is_array()) {
    r.issue("policy.static_weights: expected an array");
  } else {
    for (std::size_t i = 0; i < p["static_weights"].size(); ++i)
      c.policy.static_weights.push_back(
          r.number(p["static_weights"][i], "policy.static_weights." + std::to_string(i)));
  }

  const json& m = doc["metrics"];
  c.window_cycles = r.uint<Cycle>(m["window_cycles"], "metrics.window_cycles");
  spec.warmup_windows = r.uint<std::uint64_t>(m["warmup_windows"], "metrics.warmup_windows");
  c.sample_cycles = r.uint<Cycle>(m["alone_sample_cycles"], "metrics.alone_sample_cycles");

  const json& apps = doc["apps"];
  if (!apps.is_array()) {
    r.issue("apps: expected an array");
  } else {
    for (std::size_t i = 0; i < apps.size(); ++i) {
      const std::string ap = "apps." + std::to_string(i);
      const json& a = apps[i];
      AppBinding b;
      b.address_space = static_cast<AppId>(i);
      b.name = "app" + std::to_string(i);
      if (!a.is_object()) {
        r.issue(ap + ": expected an object");
        continue;
      }
      for (auto it = a.begin(); it != a.end(); ++it)
        if (it.key() != "name" && it.key() != "trace" && it.key() != "synthetic" && it.key() != "address_space")
          r.issue(ap + "." + it.key() + ": unknown key");
      if (a.contains("name")) b.name = r.string(a["name"], ap + ".name");
      if (a.contains("address_space")) b.address_space = r.uint<AppId>(a["address_space"], ap + ".address_space");
      if (a.contains("trace") == a.contains("synthetic")) {
        r.issue(ap + ": exactly one of \"trace\" or \"synthetic\" is required");
        continue;
      }
      if (a.contains("trace")) {
        std::filesystem::path tp = r.string(a["trace"], ap + ".trace");
        if (tp.is_relative()) tp = base_dir / tp;
        b.trace = std::make_shared<Trace>(load_trace_file(tp));
      } else {
        auto ws = detail::read_synthetic(r, a["synthetic"], ap + ".synthetic", derived_trace_seed(c.seed, i));
        if (issues.empty()) b.trace = std::make_shared<Trace>(generate_trace(ws));
      }
      c.apps.push_back(std::move(b));
    }
  }

  const json& axes = doc["sweep"]["axes"];
  std::set<std::string> seen;
  if (!axes.is_array()) {
    r.issue("sweep.axes: expected an array");
  } else {
    for (std::size_t i = 0; i < axes.size(); ++i) {
      const std::string ap = "sweep.axes." + std::to_string(i);
      const json& a = axes[i];
      if (!a.is_object() || !a.contains("path") || !a.contains("values") || !a["values"].is_array() ||
          a["values"].empty()) {
        r.issue(ap + ": expected {\"path\": dotted.path, \"values\": [non-empty]}");
        continue;
      }
      SweepAxis axis;
      axis.path = r.string(a["path"], ap + ".path");
      json probe = doc;
      if (detail::find_path(probe, axis.path) == nullptr) r.issue(ap + ".path: unknown config path " + axis.path);
      if (!seen.insert(axis.path).second) r.issue(ap + ".path: duplicate axis " + axis.path);
      for (const auto& v : a["values"]) axis.values.push_back(v);
      spec.axes.push_back(std::move(axis));
    }
  }

  if (issues.empty()) issues = config_issues(c);
  if (!issues.empty()) throw ConfigError(std::move(issues));
  return spec;
}

}  // namespace memsim
