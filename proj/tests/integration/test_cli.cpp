#include <gtest/gtest.h>

#include <sstream>

#include <nlohmann/json.hpp>

#include "activedpo/config.hpp"
#include "activedpo/errors.hpp"
#include "activedpo/io.hpp"
#include "cli.hpp"
#include "test_support.hpp"

namespace activedpo {
namespace {

using nlohmann::json;
using testing::TempDir;

struct Outcome {
  int code = 0;
  std::string out;
  std::string err;

  std::vector<json> rows() const {
    std::vector<json> r;
    std::istringstream in(out);
    for (std::string line; std::getline(in, line);)
      if (!line.empty()) r.push_back(json::parse(line));
    return r;
  }
  json error() const { return json::parse(err).at("error"); }
};

Outcome invoke(std::vector<std::string> args) {
  args.insert(args.begin(), "activedpo");
  std::ostringstream out, err;
  const int code = cli::main(args, out, err);
  return {code, out.str(), err.str()};
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    RunConfig c = testing::tiny_config(6, 3, 4, {10, 10});
    c.selection.iterations = 3;
    c.selection.batch_size = 2;
    save_config(c, dir_.file("tiny.json"));
  }
  std::string config() const { return dir_.file("tiny.json"); }

  TempDir dir_{"cli"};
};

TEST(SeedList, RangesAndLists) {
  EXPECT_EQ(cli::parse_seed_list("1-4"), (std::vector<std::uint64_t>{1, 2, 3, 4}));
  EXPECT_EQ(cli::parse_seed_list("7"), (std::vector<std::uint64_t>{7}));
  EXPECT_EQ(cli::parse_seed_list("1-2,9,11-12"), (std::vector<std::uint64_t>{1, 2, 9, 11, 12}));
  for (const char* bad : {"", "a", "3-1", "1,,2", "1-", "2x"})
    EXPECT_THROW(cli::parse_seed_list(bad), InvalidArgument) << bad;
}

TEST_F(CliTest, RunPrintsOneRowPerIteration) {
  const auto r = invoke({"run", "--config", config(), "--selector", "random"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto rows = r.rows();
  ASSERT_EQ(rows.size(), 4u);
  EXPECT_EQ(rows.back()["labels_used"], 6);
  EXPECT_EQ(rows.back()["selector"], "random");
}

TEST_F(CliTest, FlagsAndSetOverridesApply) {
  const auto a = invoke({"run", "--config", config(), "--batch_size", "1", "--selection.projection", "rademacher"});
  ASSERT_EQ(a.code, 0) << a.err;
  EXPECT_EQ(a.rows().back()["labels_used"], 3);
  const auto b = invoke({"run", "--config", config(), "--set", "selection.batch_size=1", "--set",
                         "selection.projection=rademacher"});
  ASSERT_EQ(b.code, 0) << b.err;
  EXPECT_EQ(a.out, b.out);
}

TEST_F(CliTest, StopAndResumeMatchesFullRun) {
  const auto full = invoke({"run", "--config", config(), "--out", dir_.file("full")});
  ASSERT_EQ(full.code, 0) << full.err;
  ASSERT_EQ(invoke({"run", "--config", config(), "--out", dir_.file("part"), "--stop-after", "2"}).code, 0);
  const auto resumed = invoke({"run", "--resume", dir_.file("part")});
  ASSERT_EQ(resumed.code, 0) << resumed.err;
  EXPECT_EQ(full.out, resumed.out);
  EXPECT_EQ(read_file(dir_.file("full") + "/metrics.jsonl"), read_file(dir_.file("part") + "/metrics.jsonl"));
  const auto mixed = invoke({"run", "--resume", dir_.file("part"), "--batch_size", "3"});
  EXPECT_NE(mixed.code, 0);
  EXPECT_EQ(mixed.error()["kind"], "invalid_argument");
}

TEST_F(CliTest, ErrorsAreMachineReadable) {
  auto r = invoke({"run", "--config", config(), "--set", "no_such_key=1"});
  EXPECT_NE(r.code, 0);
  EXPECT_EQ(r.error()["kind"], "config_error");
  EXPECT_TRUE(r.out.empty());

  r = invoke({"run", "--config", config(), "--set", "projection=1"});
  EXPECT_EQ(r.error()["kind"], "config_error");
  EXPECT_NE(r.error()["message"].get<std::string>().find("ambiguous"), std::string::npos);

  r = invoke({"run", "--config", config(), "--batch_size", "0"});
  EXPECT_EQ(r.error()["kind"], "config_error");

  r = invoke({});
  EXPECT_EQ(r.code, 2);
  EXPECT_EQ(r.error()["kind"], "usage_error");

  r = invoke({"run", "--no-such-flag"});
  EXPECT_EQ(r.code, 2);
  EXPECT_EQ(r.error()["kind"], "usage_error");

  r = invoke({"run", "--config", config(), "--batch_size", "300", "--prompts_per_iteration", "2"});
  EXPECT_EQ(r.error()["kind"], "pool_exhausted");

  r = invoke({"inspect", dir_.file("nowhere")});
  EXPECT_EQ(r.error()["kind"], "io_error");
}

TEST_F(CliTest, HelpExitsCleanly) {
  const auto r = invoke({"run", "--help"});
  EXPECT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("--batch_size"), std::string::npos);
  EXPECT_NE(r.out.find("--seeds.projection"), std::string::npos);
}

TEST_F(CliTest, CompareEmitsSummaryRows) {
  const auto r = invoke({"compare", "--config", config(), "--strategies", "random,active_dpo", "--seeds", "1-3",
                         "--workers", "2", "--out", dir_.file("cmp")});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto rows = r.rows();
  EXPECT_EQ(rows.size(), 2u * 4u);
  for (const auto& row : rows) EXPECT_EQ(row["seeds"], 3);
  EXPECT_FALSE(read_file(dir_.file("cmp") + "/final.csv").empty());
  const auto bad = invoke({"compare", "--config", config(), "--strategies", "random,best"});
  EXPECT_EQ(bad.error()["kind"], "config_error");
}

TEST_F(CliTest, EvalAndInspect) {
  ASSERT_EQ(invoke({"run", "--config", config(), "--out", dir_.file("run")}).code, 0);
  const std::string run = dir_.file("run");

  auto r = invoke({"eval", "--run", run});
  ASSERT_EQ(r.code, 0) << r.err;
  const json latest = r.rows().at(0);
  const auto metrics = invoke({"inspect", run, "--what", "metrics", "--iteration", "3"}).rows();
  ASSERT_EQ(metrics.size(), 1u);
  EXPECT_EQ(latest["mean_true_reward"], metrics[0]["mean_true_reward"]);
  EXPECT_EQ(latest["win_rate"], metrics[0]["win_rate"]);

  r = invoke({"eval", "--config", config(), "--checkpoint", run + "/checkpoints/iter_0000.ckpt"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(r.rows().at(0)["win_rate"], 0.5);

  const auto selections = invoke({"inspect", run, "--iteration", "2"}).rows();
  ASSERT_EQ(selections.size(), 2u);
  EXPECT_EQ(selections[0]["iteration"], 2);
  EXPECT_EQ(selections[0]["pick"], 0);

  const auto features = invoke({"inspect", run, "--what", "features"}).rows();
  ASSERT_EQ(features.size(), 3u);
  EXPECT_EQ(features[0]["dim"], 8);
  EXPECT_LE(features[0]["norm_max"].get<double>(), 4.0);

  const auto state = invoke({"inspect", run, "--what", "state"}).rows();
  EXPECT_EQ(state.at(0)["labels"], 6);
  EXPECT_EQ(invoke({"inspect", run, "--what", "everything"}).error()["kind"], "invalid_argument");
}

}  // namespace
}  // namespace activedpo
