#include <cstdlib>
#include <string>

#include <sys/wait.h>

#include <gtest/gtest.h>

#include "test_util.hpp"

namespace fs = std::filesystem;

namespace {

int run_cli(const std::string& args) {
  std::string cmd = std::string(FAIRBOOST_CLI) + " " + args + " >/dev/null 2>&1";
  int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    ASSERT_EQ(run_cli("gen-synth --seed 3 --users 120 --items 60 --skew 0.7 --max-prob 0.9 --out " +
                      (dir / "synth").string()),
              0);
    data = dir / "synth" / "u.data";
  }

  std::string base_args() const {
    return "--dataset " + data.string() + " --tau 10 --rounds 2 --seed 4";
  }

  fbtest::TempDir dir;
  fs::path data;
};

}  // namespace

TEST_F(Cli, GenSynthFiles) {
  for (const char* f : {"u.data", "truth.csv", "meta.json"}) EXPECT_TRUE(fs::exists(dir / "synth" / f)) << f;
  auto meta = fairboost::read_json(dir / "synth" / "meta.json");
  EXPECT_EQ(meta["n_users"], 120);
  EXPECT_EQ(meta["n_items"], 60);
  auto log = fairboost::load_movielens(data);
  EXPECT_EQ(log.size(), meta["n_observed"].get<std::size_t>());
}

TEST_F(Cli, RunWritesReports) {
  auto out = dir / "out";
  ASSERT_EQ(run_cli("run " + base_args() + " --algos MF,FAIRBOOST --out " + out.string()), 0);
  for (const char* f : {"report.json", "report.csv", "report.md", "rounds.csv", "trace.jsonl"}) {
    EXPECT_TRUE(fs::exists(out / f)) << f;
  }
  auto j = fairboost::read_json(out / "report.json");
  EXPECT_EQ(j["results"].size(), 2u);
}

TEST_F(Cli, RunIsByteIdentical) {
  auto a = dir / "a", b = dir / "b";
  ASSERT_EQ(run_cli("run " + base_args() + " --out " + a.string()), 0);
  ASSERT_EQ(run_cli("run " + base_args() + " --out " + b.string()), 0);
  for (const auto& e : fs::directory_iterator(a)) {
    EXPECT_EQ(fbtest::read_file(e.path()), fbtest::read_file(b / e.path().filename())) << e.path();
  }
}

TEST_F(Cli, ConfigFileAndFormatFlag) {
  auto cfg = fbtest::write_file(dir / "cfg.json", R"({
    "dataset": {"path": "synth/u.data", "loader": "movielens"},
    "algorithms": ["MF", "ADABOOST"],
    "tau": 10,
    "boost": {"rounds": 2},
    "output": {"dir": "cfg-out"}
  })");
  ASSERT_EQ(run_cli("run " + cfg.string() + " --format csv"), 0);
  EXPECT_TRUE(fs::exists(dir / "cfg-out" / "report.csv"));
  EXPECT_FALSE(fs::exists(dir / "cfg-out" / "report.json"));
}

TEST_F(Cli, SearchWritesTrialLog) {
  auto out = dir / "search";
  ASSERT_EQ(run_cli("search " + base_args() + " --trials 2 --eps1-range 1e-3,1 --eps2-range 1e-4,1e-1 "
                    "--objective MIN_PB_ABS --out " + out.string()),
            0);
  auto j = fairboost::read_json(out / "search.json");
  EXPECT_EQ(j["trials"].size(), 2u);
  EXPECT_EQ(j["objective"], "MIN_PB_ABS");
}

TEST_F(Cli, ExitCodes) {
  EXPECT_EQ(run_cli("--help"), 0);
  EXPECT_EQ(run_cli(""), 1);
  EXPECT_EQ(run_cli("run --bogus"), 1);
  EXPECT_EQ(run_cli("run"), 1);
  EXPECT_EQ(run_cli("run --dataset " + (dir / "missing").string()), 1);
  EXPECT_EQ(run_cli("run " + base_args() + " --delta RMSE"), 1);
  EXPECT_EQ(run_cli("run " + base_args() + " --algos SVD"), 1);
  EXPECT_EQ(run_cli("run " + base_args() + " --eps1 5"), 1);
  EXPECT_EQ(run_cli("search " + base_args() + " --eps1-range 0.5,0.1"), 1);
  EXPECT_EQ(run_cli("gen-synth --users 1 --out " + (dir / "g").string()), 1);
  fbtest::write_file(dir / "bad.json", R"({"tua": 3})");
  EXPECT_EQ(run_cli("run " + (dir / "bad.json").string()), 1);

  // Runtime failures: an unwritable output path and a diverging learner.
  fbtest::write_file(dir / "blocker", "x");
  EXPECT_EQ(run_cli("run " + base_args() + " --algos MF --out " + (dir / "blocker" / "out").string()), 2);
  fbtest::write_file(dir / "diverge.json",
                     R"({"dataset": {"path": "synth/u.data"}, "algorithms": ["MF"],
                         "boost": {"mf": {"learning_rate": 1e6}}, "output": {"dir": "d"}})");
  EXPECT_EQ(run_cli("run " + (dir / "diverge.json").string()), 2);
}
