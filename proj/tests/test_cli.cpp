#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <json.hpp>
#include <sstream>
#include <string>

#include "smoothrob/checkpoint.hpp"

namespace fs = std::filesystem;

namespace {

const std::string kBlobs =
    " --data blobs --blob-classes 4 --blob-dim 6 --blob-train-per-class 60 --blob-test-per-class 20"
    " --hidden 12 --epochs 4 --init-scheme fan_in_uniform";

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("smoothrob_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  int run(const std::string& args) const {
    const std::string cmd = std::string(SMOOTHROB_CLI) + " " + args + " --out " + dir_.string() + " >" +
                            (dir_ / "stdout.txt").string() + " 2>" + (dir_ / "stderr.txt").string();
    const int st = std::system(cmd.c_str());
    return WIFEXITED(st) ? WEXITSTATUS(st) : -1;
  }

  std::string slurp(const fs::path& p) const {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), {}};
  }

  fs::path dir_;
};

std::size_t data_rows(const std::string& tsv) {
  std::istringstream is(tsv);
  std::string line;
  std::size_t n = 0;
  bool header = false;
  while (std::getline(is, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (!header) {
      header = true;
      continue;
    }
    ++n;
  }
  return n;
}

}  // namespace

TEST_F(Cli, TrainWritesCheckpointAndManifest) {
  ASSERT_EQ(run("train" + kBlobs + " --alpha 0.3 --name ls"), 0) << slurp(dir_ / "stderr.txt");
  ASSERT_TRUE(fs::exists(dir_ / "ls.ckpt"));
  const auto ck = smoothrob::load_checkpoint(dir_ / "ls.ckpt");
  EXPECT_EQ(ck.meta.at("alpha"), "0.29999999999999999");
  EXPECT_EQ(ck.meta.at("label_mode"), "smoothed");
  const auto man = nlohmann::json::parse(slurp(dir_ / "ls.train.manifest.json"));
  EXPECT_EQ(man["command"], "train");
  EXPECT_EQ(man["config"]["alpha"], "0.29999999999999999");
  EXPECT_FALSE(man["outputs"].empty());
}

TEST_F(Cli, AlphaOutOfRangeIsUsageError) {
  EXPECT_EQ(run("train" + kBlobs + " --alpha 1.5"), 1);
  EXPECT_EQ(run("train" + kBlobs + " --eps -0.1"), 1);
  EXPECT_EQ(run("frobnicate"), 1);
  EXPECT_EQ(run("train" + kBlobs + " --mode sideways"), 1);
}

TEST_F(Cli, RerunIsBitwiseIdentical) {
  ASSERT_EQ(run("train" + kBlobs + " --mode adversarial --adv-eps 0.1 --seed 5 --name a"), 0);
  ASSERT_EQ(run("train" + kBlobs + " --mode adversarial --adv-eps 0.1 --seed 5 --name b"), 0);
  EXPECT_EQ(slurp(dir_ / "a.ckpt"), slurp(dir_ / "b.ckpt"));
  ASSERT_EQ(run("eval --model " + (dir_ / "a.ckpt").string() + " --attack odi --eps 0.1 --workers 3 --name e1"), 0);
  ASSERT_EQ(run("eval --model " + (dir_ / "a.ckpt").string() + " --attack odi --eps 0.1 --workers 1 --name e2"), 0);
  EXPECT_EQ(slurp(dir_ / "e1.examples.tsv"), slurp(dir_ / "e2.examples.tsv"));
}

TEST_F(Cli, EvalProducesSummaryRow) {
  ASSERT_EQ(run("train" + kBlobs + " --name hard"), 0);
  ASSERT_EQ(run("eval --model " + (dir_ / "hard.ckpt").string() + " --attack fgsm --eps 0.05 --name ev"), 0)
      << slurp(dir_ / "stderr.txt");
  EXPECT_EQ(data_rows(slurp(dir_ / "ev.summary.tsv")), 1u);
  EXPECT_EQ(data_rows(slurp(dir_ / "ev.examples.tsv")), 80u);
  const auto j = nlohmann::json::parse(slurp(dir_ / "ev.json"));
  EXPECT_LE(j["robust_accuracy"].get<double>(), j["natural_accuracy"].get<double>());
  EXPECT_TRUE(fs::exists(dir_ / "ev.eval.manifest.json"));
}

TEST_F(Cli, StepsOverrideUsesTwoEpsOverK) {
  ASSERT_EQ(run("train" + kBlobs + " --name hard"), 0);
  ASSERT_EQ(run("eval --model " + (dir_ / "hard.ckpt").string() + " --attack pgd20 --steps 8 --eps 0.1 --name ev"), 0);
  const auto j = nlohmann::json::parse(slurp(dir_ / "ev.json"));
  EXPECT_EQ(j["attack_config"]["steps"], "8");
  EXPECT_EQ(j["attack_config"]["step_size"], "0.025000000000000001");
}

TEST_F(Cli, SweepHasTenRows) {
  ASSERT_EQ(run("sweep" + kBlobs + " --alphas 0.0:0.9:0.1 --attack fgsm --eps 0.05 --name sw"), 0)
      << slurp(dir_ / "stderr.txt");
  EXPECT_EQ(data_rows(slurp(dir_ / "sw.tsv")), 10u);
  EXPECT_EQ(run("sweep" + kBlobs + " --alphas 0.0:1.5:0.5"), 1);
}

TEST_F(Cli, TransferWritesReport) {
  ASSERT_EQ(run("train" + kBlobs + " --name src"), 0);
  ASSERT_EQ(run("train" + kBlobs + " --alpha 0.9 --name tgt"), 0);
  ASSERT_EQ(run("transfer --source " + (dir_ / "src.ckpt").string() + " --target " + (dir_ / "tgt.ckpt").string() +
                " --attack pgd10 --eps 0.05 --name tr"),
            0)
      << slurp(dir_ / "stderr.txt");
  const auto j = nlohmann::json::parse(slurp(dir_ / "tr.json"));
  EXPECT_EQ(j["source"], "src");
  EXPECT_EQ(j["target"], "tgt");
  EXPECT_EQ(data_rows(slurp(dir_ / "tr.summary.tsv")), 1u);
}

TEST_F(Cli, AttackAndAnalyze) {
  ASSERT_EQ(run("train" + kBlobs + " --alpha 0.5 --name m"), 0);
  ASSERT_EQ(run("attack --model " + (dir_ / "m.ckpt").string() + " --index 3 --attack tanh --eps 0.1 --name at"), 0)
      << slurp(dir_ / "stderr.txt");
  const auto a = nlohmann::json::parse(slurp(dir_ / "at.json"));
  EXPECT_EQ(a["x_adv"].size(), 6u);
  ASSERT_EQ(run("analyze --models " + (dir_ / "m.ckpt").string() + " --name an"), 0) << slurp(dir_ / "stderr.txt");
  const auto j = nlohmann::json::parse(slurp(dir_ / "an.json"));
  EXPECT_NEAR(j["models"][0]["optimal_margin"].get<double>(), std::log(2.5 / 0.5), 1e-12);
  EXPECT_TRUE(fs::exists(dir_ / "an.toy.curves.tsv"));
}

TEST_F(Cli, MissingCheckpointIsRuntimeError) {
  EXPECT_EQ(run("eval --model " + (dir_ / "absent.ckpt").string()), 2);
  EXPECT_NE(slurp(dir_ / "stderr.txt").find("absent.ckpt"), std::string::npos);
  EXPECT_EQ(run("eval"), 1);
}

TEST_F(Cli, ConfigFileAndFlagPrecedence) {
  std::ofstream(dir_ / "cfg.ini") << "data=blobs\nblob-classes=4\nblob-dim=6\nblob-train-per-class=60\n"
                                     "blob-test-per-class=20\nhidden=12\nepochs=2\nalpha=0.2\n";
  ASSERT_EQ(run("train --config " + (dir_ / "cfg.ini").string() + " --alpha 0.4 --name c"), 0)
      << slurp(dir_ / "stderr.txt");
  const auto ck = smoothrob::load_checkpoint(dir_ / "c.ckpt");
  EXPECT_EQ(ck.meta.at("alpha"), "0.40000000000000002");
  EXPECT_EQ(ck.meta.at("epochs"), "2");
}
