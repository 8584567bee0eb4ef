// memsim: command-line front end for the memory-system simulator.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "memsim/config.hpp"
#include "memsim/experiment.hpp"
#include "memsim/log.hpp"
#include "memsim/report.hpp"
#include "memsim/trace.hpp"

namespace fs = std::filesystem;
using namespace memsim;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitRuntime = 1;
constexpr int kExitInvalid = 2;

struct RunOptions {
  std::string config;
  std::string out = "out";
  std::optional<std::uint64_t> seed;
  bool oracle = false;
  unsigned jobs = 1;
  std::vector<std::string> overrides;
};

void print_error(const json& j) { std::cerr << j.dump() << '\n'; }

// Runs `body` and maps failures to the documented exit codes.
template <typename Fn>
int guarded(Fn&& body) {
  try {
    return body();
  } catch (const ConfigError& e) {
    print_error({{"error", "invalid_config"}, {"issues", e.issues()}});
    return kExitInvalid;
  } catch (const TraceFileError& e) {
    print_error({{"error", "input_file"}, {"path", e.path()}, {"message", e.what()}});
    return kExitInvalid;
  } catch (const std::exception& e) {
    print_error({{"error", "runtime"}, {"message", e.what()}});
    return kExitRuntime;
  }
}

json load_with_overrides(const RunOptions& o) {
  json doc = load_document(o.config);
  for (const auto& s : o.overrides) apply_override(doc, s);
  if (o.seed) doc["seed"] = *o.seed;
  if (o.oracle) doc["oracle"] = true;
  return doc;
}

fs::path config_dir(const RunOptions& o) {
  const fs::path p = fs::path(o.config).parent_path();
  return p.empty() ? fs::path(".") : p;
}

void write_file(const fs::path& path, const std::string& body) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << body;
}

// Executes one experiment and writes its artifacts into `dir`.
ordered_json execute(const ExperimentSpec& spec, const fs::path& dir, unsigned jobs) {
  log(LogLevel::kInfo, "running " + std::to_string(spec.sim.apps.size()) + " apps for " +
                           std::to_string(spec.sim.run_length_cycles) + " cycles");
  Experiment e = run_experiment(spec.sim, spec.oracle, jobs, spec.warmup_windows);
  fs::create_directories(dir);
  ordered_json summary = summary_json(spec, e);
  write_file(dir / "summary.json", summary.dump(2) + "\n");
  std::ostringstream s, iv, st;
  write_slowdowns_csv(s, e.evaluation);
  write_intervals_csv(iv, e.shared);
  write_streaks_csv(st, e.shared);
  write_file(dir / "slowdowns.csv", s.str());
  write_file(dir / "intervals.csv", iv.str());
  write_file(dir / "streaks.csv", st.str());
  return summary;
}

int cmd_run(const RunOptions& o) {
  return guarded([&] {
    const json doc = load_with_overrides(o);
    const ExperimentSpec spec = build_experiment(doc, config_dir(o));
    const ordered_json summary = execute(spec, o.out, o.jobs);
    std::cout << summary.dump(2) << '\n';
    return kExitOk;
  });
}

std::string csv_cell(std::string s) {
  for (char& c : s)
    if (c == ',' || c == '\n') c = ';';
  return s;
}

int cmd_sweep(const RunOptions& o) {
  return guarded([&] {
    const json doc = load_with_overrides(o);
    const ExperimentSpec base = build_experiment(doc, config_dir(o));
    std::vector<std::vector<json>> points{{}};
    for (const auto& axis : base.axes) {
      std::vector<std::vector<json>> next;
      for (const auto& p : points)
        for (const auto& v : axis.values) {
          auto q = p;
          q.push_back(v);
          next.push_back(std::move(q));
        }
      points = std::move(next);
    }

    struct PointResult {
      std::string status = "ok";
      ordered_json summary;
    };
    std::vector<PointResult> results(points.size());
    parallel_for(points.size(), o.jobs, [&](std::size_t i) {
      char name[32];
      std::snprintf(name, sizeof name, "point_%03zu", i);
      try {
        json pd = doc;
        pd["sweep"]["axes"] = json::array();
        for (std::size_t k = 0; k < base.axes.size(); ++k)
          apply_override(pd, base.axes[k].path + "=" + points[i][k].dump());
        const ExperimentSpec spec = build_experiment(pd, config_dir(o));
        results[i].summary = execute(spec, fs::path(o.out) / name, 1);
      } catch (const ConfigError& e) {
        results[i].status = std::string("error: ") + e.what();
      } catch (const std::exception& e) {
        results[i].status = std::string("error: ") + e.what();
      }
      if (results[i].status != "ok") log(LogLevel::kWarn, std::string(name) + " failed: " + results[i].status);
    });

    std::ostringstream csv;
    csv << "point";
    for (const auto& axis : base.axes) csv << ',' << axis.path;
    csv << ",status,weighted_speedup,harmonic_speedup,max_slowdown,mean_error_pct\n";
    for (std::size_t i = 0; i < points.size(); ++i) {
      csv << i;
      for (const auto& v : points[i]) csv << ',' << csv_cell(v.dump());
      csv << ',' << csv_cell(results[i].status);
      for (const char* k : {"weighted_speedup", "harmonic_speedup", "max_slowdown", "mean_error_pct"}) {
        const auto& s = results[i].summary;
        csv << ',' << format_number(s.contains(k) && s[k].is_number() ? std::optional<double>(s[k].get<double>())
                                                                       : std::nullopt);
      }
      csv << '\n';
    }
    fs::create_directories(o.out);
    write_file(fs::path(o.out) / "sweep.csv", csv.str());
    std::cout << csv.str();
    return kExitOk;
  });
}

int cmd_compare(const std::vector<std::string>& files, const std::string& out) {
  return guarded([&] {
    std::vector<json> summaries;
    for (const auto& f : files) {
      std::ifstream in(f);
      if (!in) throw TraceFileError(f, "cannot open summary");
      summaries.push_back(json::parse(in));
    }
    std::ostringstream csv;
    try {
      write_compare_csv(csv, files, summaries);
    } catch (const std::invalid_argument& e) {
      throw ConfigError({std::string("compare: ") + e.what()});
    }
    if (!out.empty()) write_file(out, csv.str());
    std::cout << csv.str();
    return kExitOk;
  });
}

int cmd_gen_trace(const SyntheticWorkloadSpec& spec, const std::string& out) {
  return guarded([&] {
    Trace t;
    try {
      t = generate_trace(spec);
    } catch (const std::invalid_argument& e) {
      throw ConfigError({std::string("gen-trace: ") + e.what()});
    }
    if (out.empty() || out == "-") {
      serialize_trace(t, std::cout);
    } else {
      std::ofstream f(out, std::ios::binary);
      if (!f) throw std::runtime_error("cannot write " + out);
      serialize_trace(t, f);
    }
    return kExitOk;
  });
}

void add_run_options(CLI::App* cmd, RunOptions& o) {
  cmd->add_option("--config", o.config, "JSON configuration file")->required()->check(CLI::ExistingFile);
  cmd->add_option("--out", o.out, "output directory");
  cmd->add_option("--seed", o.seed, "override the run seed");
  cmd->add_flag("--oracle", o.oracle, "run every app alone and report actual slowdowns and errors");
  cmd->add_option("--jobs", o.jobs, "parallel alone runs")->check(CLI::PositiveNumber);
  cmd->add_option("--set", o.overrides, "override a config value, e.g. mise.epoch=10000");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Cycle-level multicore memory-system simulator"};
  app.require_subcommand(1);

  RunOptions run_opts, sweep_opts;
  auto* run = app.add_subcommand("run", "run one experiment");
  add_run_options(run, run_opts);
  auto* sweep = app.add_subcommand("sweep", "run the Cartesian product of sweep.axes");
  add_run_options(sweep, sweep_opts);

  std::vector<std::string> compare_files;
  std::string compare_out;
  auto* compare = app.add_subcommand("compare", "compare summary.json files against the first");
  compare->add_option("summaries", compare_files, "summary.json files")->required();
  compare->add_option("--out", compare_out, "CSV output file");

  SyntheticWorkloadSpec gen;
  gen.record_count = 100000;
  std::string gen_out;
  auto* gen_cmd = app.add_subcommand("gen-trace", "write a synthetic streaming trace");
  gen_cmd->add_option("--footprint", gen.footprint_bytes, "bytes walked by the stream");
  gen_cmd->add_option("--stride", gen.stride_bytes, "bytes between consecutive accesses");
  gen_cmd->add_option("--gap", gen.compute_gap, "non-memory instructions before each access");
  gen_cmd->add_option("--records", gen.record_count, "number of records");
  gen_cmd->add_option("--reuse", gen.reuse_fraction, "fraction of accesses to the hot region");
  gen_cmd->add_option("--hot", gen.hot_region_bytes, "hot region size in bytes");
  gen_cmd->add_option("--writes", gen.write_fraction, "fraction of writes");
  gen_cmd->add_option("--seed", gen.seed, "generator seed");
  gen_cmd->add_option("--out", gen_out, "output file (stdout when omitted)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  if (*run) return cmd_run(run_opts);
  if (*sweep) return cmd_sweep(sweep_opts);
  if (*compare) return cmd_compare(compare_files, compare_out);
  if (*gen_cmd) return cmd_gen_trace(gen, gen_out);
  return kExitRuntime;
}
