#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "memsim/trace.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

struct Result {
  int code = -1;
  std::string out;
  std::string err;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string first_line(const fs::path& p) {
  std::ifstream in(p);
  std::string line;
  std::getline(in, line);
  return line;
}

class Cli : public ::testing::Test {
 protected:
  fs::path dir;

  void SetUp() override {
    dir = fs::temp_directory_path() /
          (std::string("memsim_cli_") + ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::remove_all(dir);
    fs::create_directories(dir);
  }
  void TearDown() override { fs::remove_all(dir); }

  Result run(const std::string& args) {
    const fs::path out = dir / "stdout.txt", err = dir / "stderr.txt";
    const std::string cmd = std::string(MEMSIM_CLI_PATH) + " " + args + " > " + out.string() + " 2> " + err.string();
    const int status = std::system(cmd.c_str());
    Result r;
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    r.out = slurp(out);
    r.err = slurp(err);
    return r;
  }

  fs::path write_config(const json& j, const std::string& name = "c.json") {
    const fs::path p = dir / name;
    std::ofstream(p) << j.dump(2);
    return p;
  }

  json small_config() const {
    return json::parse(R"({
      "run_length_cycles": 400000,
      "model": "mise",
      "mise": {"interval": 100000},
      "dram": {"interleaving": "cache_block"},
      "apps": [{"name": "hog", "synthetic": {"compute_gap": 0, "record_count": 20000}},
               {"name": "light", "synthetic": {"compute_gap": 50, "record_count": 20000}}]
    })");
  }
};

}  // namespace

TEST_F(Cli, RunWritesArtifacts) {
  const auto cfg = write_config(small_config());
  const auto out = dir / "d";
  const auto r = run("run --config " + cfg.string() + " --out " + out.string() + " --seed 7");
  ASSERT_EQ(r.code, 0) << r.err;
  for (const char* f : {"summary.json", "slowdowns.csv", "intervals.csv", "streaks.csv"})
    EXPECT_TRUE(fs::exists(out / f)) << f;
  const json summary = json::parse(slurp(out / "summary.json"));
  EXPECT_EQ(summary["schema_version"], 1);
  EXPECT_EQ(summary["seed"], 7);
  EXPECT_EQ(summary["config_hash"].get<std::string>().size(), 16u);
  EXPECT_EQ(summary["apps"].size(), 2u);
  EXPECT_EQ(summary["apps"][0]["name"], "hog");
  EXPECT_EQ(json::parse(r.out), summary);
  EXPECT_EQ(first_line(out / "slowdowns.csv"), "app,window,ipc_alone,ipc_shared,actual,estimated,error_pct,flags");
  EXPECT_EQ(first_line(out / "intervals.csv").rfind("model,app,index,end_cycle,srsr,arsr,alpha", 0), 0u);
  EXPECT_EQ(first_line(out / "streaks.csv").rfind("app,len_1,", 0), 0u);
}

TEST_F(Cli, RerunIsByteIdentical) {
  const auto cfg = write_config(small_config());
  ASSERT_EQ(run("run --config " + cfg.string() + " --out " + (dir / "a").string()).code, 0);
  ASSERT_EQ(run("run --config " + cfg.string() + " --out " + (dir / "b").string()).code, 0);
  for (const char* f : {"summary.json", "slowdowns.csv", "intervals.csv", "streaks.csv"})
    EXPECT_EQ(slurp(dir / "a" / f), slurp(dir / "b" / f)) << f;
}

TEST_F(Cli, OracleFillsActualAndEstimated) {
  const auto cfg = write_config(small_config());
  const auto out = dir / "o";
  const auto r = run("run --config " + cfg.string() + " --out " + out.string() + " --oracle --jobs 2");
  ASSERT_EQ(r.code, 0) << r.err;
  std::ifstream in(out / "slowdowns.csv");
  std::string line;
  std::getline(in, line);
  int rows = 0;
  while (std::getline(in, line)) {
    ++rows;
    EXPECT_EQ(line.find("nan"), std::string::npos) << line;
  }
  EXPECT_EQ(rows, 2 * 3);  // two apps, four windows, first skipped
  const json summary = json::parse(slurp(out / "summary.json"));
  EXPECT_TRUE(summary["oracle"].get<bool>());
  EXPECT_TRUE(summary["weighted_speedup"].is_number());
  EXPECT_TRUE(summary["mean_error_pct"].is_number());
}

TEST_F(Cli, SetOverridesAreRepeatable) {
  const auto cfg = write_config(small_config());
  const auto out = dir / "s";
  const auto r = run("run --config " + cfg.string() + " --out " + out.string() +
                     " --set scheduler.policy=bliss --set seed=11");
  ASSERT_EQ(r.code, 0) << r.err;
  const json summary = json::parse(slurp(out / "summary.json"));
  EXPECT_EQ(summary["scheduler"], "bliss");
  EXPECT_EQ(summary["seed"], 11);
}

TEST_F(Cli, MissingTraceFileExitsTwoNamingPath) {
  json j = small_config();
  j["apps"] = json::parse(R"([{"trace": "nowhere.trace"}])");
  const auto cfg = write_config(j);
  const auto r = run("run --config " + cfg.string() + " --out " + (dir / "x").string());
  EXPECT_EQ(r.code, 2);
  const json err = json::parse(r.err);
  EXPECT_EQ(err["error"], "input_file");
  EXPECT_NE(err["path"].get<std::string>().find("nowhere.trace"), std::string::npos);
}

TEST_F(Cli, InvalidConfigExitsTwoWithIssues) {
  json j = small_config();
  j["core"] = {{"issue_width", 0}};
  j["mystery"] = true;
  const auto cfg = write_config(j);
  const auto r = run("run --config " + cfg.string());
  EXPECT_EQ(r.code, 2);
  const json err = json::parse(r.err);
  EXPECT_EQ(err["error"], "invalid_config");
  EXPECT_FALSE(err["issues"].empty());
  EXPECT_EQ(run("run --config " + cfg.string() + " --set nope=1").code, 2);
}

TEST_F(Cli, SweepRunsCartesianProduct) {
  json j = small_config();
  j["sweep"]["axes"] = json::parse(R"([{"path": "mise.interval", "values": [100000, 200000]},
                                       {"path": "mise.epoch", "values": [10000, 20000]}])");
  const auto cfg = write_config(j);
  const auto out = dir / "sw";
  const auto r = run("sweep --config " + cfg.string() + " --out " + out.string() + " --jobs 2");
  ASSERT_EQ(r.code, 0) << r.err;
  std::ifstream in(out / "sweep.csv");
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "point,mise.interval,mise.epoch,status,weighted_speedup,harmonic_speedup,max_slowdown,mean_error_pct");
  std::vector<std::string> rows;
  while (std::getline(in, line)) rows.push_back(line);
  ASSERT_EQ(rows.size(), 4u);
  EXPECT_EQ(rows[0].rfind("0,100000,10000,ok", 0), 0u);
  EXPECT_EQ(rows[1].rfind("1,100000,20000,ok", 0), 0u);
  EXPECT_EQ(rows[3].rfind("3,200000,20000,ok", 0), 0u);
  for (int i = 0; i < 4; ++i) EXPECT_TRUE(fs::exists(out / ("point_00" + std::to_string(i)) / "summary.json"));
}

TEST_F(Cli, SweepRecordsFailedPoints) {
  json j = small_config();
  j["sweep"]["axes"] = json::parse(R"([{"path": "mise.epoch", "values": [10000, 30000]}])");
  const auto cfg = write_config(j);
  const auto out = dir / "sf";
  const auto r = run("sweep --config " + cfg.string() + " --out " + out.string());
  ASSERT_EQ(r.code, 0) << r.err;
  const std::string csv = slurp(out / "sweep.csv");
  EXPECT_NE(csv.find("0,10000,ok"), std::string::npos);
  EXPECT_NE(csv.find("1,30000,error:"), std::string::npos);
}

TEST_F(Cli, EmptyAxesGiveSinglePoint) {
  const auto cfg = write_config(small_config());
  const auto out = dir / "single";
  ASSERT_EQ(run("sweep --config " + cfg.string() + " --out " + out.string()).code, 0);
  std::ifstream in(out / "sweep.csv");
  std::string line;
  int rows = -1;
  while (std::getline(in, line)) ++rows;
  EXPECT_EQ(rows, 1);
}

TEST_F(Cli, CompareSummaries) {
  json j = small_config();
  const auto cfg = write_config(j);
  ASSERT_EQ(run("run --oracle --config " + cfg.string() + " --out " + (dir / "f").string()).code, 0);
  ASSERT_EQ(run("run --oracle --config " + cfg.string() + " --out " + (dir / "b").string() +
                " --set scheduler.policy=bliss")
                .code,
            0);
  const auto f = (dir / "f" / "summary.json").string(), b = (dir / "b" / "summary.json").string();
  auto r = run("compare " + f + " " + b + " --out " + (dir / "cmp.csv").string());
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(first_line(dir / "cmp.csv").rfind("summary,weighted_speedup,ws_delta_pct", 0), 0u);

  r = run("compare " + f + " " + f);
  ASSERT_EQ(r.code, 0);
  std::istringstream rows(r.out);
  std::string line;
  std::getline(rows, line);
  while (std::getline(rows, line)) {
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    ASSERT_EQ(cells.size(), 9u);
    for (std::size_t k = 2; k < cells.size(); k += 2) EXPECT_EQ(cells[k], "0");
  }

  EXPECT_EQ(run("compare " + f).code, 2);
  json other = json::parse(slurp(f));
  other["schema_version"] = 99;
  std::ofstream(dir / "other.json") << other.dump();
  EXPECT_EQ(run("compare " + f + " " + (dir / "other.json").string()).code, 2);
}

TEST_F(Cli, GenTraceRoundTrips) {
  const auto p = dir / "g.trace";
  const auto r = run("gen-trace --footprint 65536 --stride 64 --gap 10 --records 3 --out " + p.string());
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(slurp(p), "10 0x0 R\n10 0x40 R\n10 0x80 R\n");
  const auto s = run("gen-trace --records 50 --reuse 0.5 --seed 3");
  ASSERT_EQ(s.code, 0);
  EXPECT_EQ(memsim::parse_trace(s.out).size(), 50u);
  EXPECT_EQ(run("gen-trace --stride 0").code, 2);
}
