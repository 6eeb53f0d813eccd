// Process-level tests of the paramine binary: files, exit codes, manifests,
// determinism. The binary path arrives as argv[1] (set by CTest).
#include <gtest/gtest.h>

#include <cstdint>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>

namespace fs = std::filesystem;

namespace {

std::string g_cli;
fs::path g_work;

struct RunResult {
  int exit_code = -1;
  std::string output;
};

RunResult run(const std::string& args) {
  const fs::path out_file = g_work / "cmd_output.txt";
  const std::string cmd = g_cli + " " + args + " > " + out_file.string() + " 2>&1";
  const int status = std::system(cmd.c_str());
  RunResult r;
  r.exit_code = WEXITSTATUS(status);
  std::ifstream in(out_file);
  std::ostringstream buf;
  buf << in.rdbuf();
  r.output = buf.str();
  return r;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file(const fs::path& p, const std::string& text) {
  std::ofstream out(p);
  out << text;
}

fs::path fresh_dir(const std::string& name) {
  const fs::path dir = g_work / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

// Shared tiny dataset for the train/eval tests.
const char* kGenConfig =
    "n_groups = 8\n"
    "dim = 16\n"
    "langs = en,de\n";

const char* kTrainConfig =
    "epochs = 3\n"
    "mini_batch_size = 4\n"
    "mega_batch_m = 2\n";

}  // namespace

TEST(Cli, GenWritesAllArtifacts) {
  const fs::path dir = fresh_dir("gen_basic");
  write_file(g_work / "gen.conf", kGenConfig);
  const RunResult r = run("gen --config " + (g_work / "gen.conf").string() + " --out " +
                          dir.string() + " --seed 7");
  ASSERT_EQ(r.exit_code, 0) << r.output;
  for (const char* name :
       {"sentences.tsv", "pairs.tsv", "embeddings.bin", "embeddings.ids", "manifest.json"}) {
    EXPECT_TRUE(fs::exists(dir / name)) << name;
  }
  // 8 groups x (1 original + 1 paraphrase + 1 hard) x 2 languages.
  EXPECT_NE(r.output.find("48 sentences"), std::string::npos) << r.output;
}

TEST(Cli, GenIsSeedDeterministic) {
  write_file(g_work / "gen.conf", kGenConfig);
  const fs::path a = fresh_dir("gen_a"), b = fresh_dir("gen_b"), c = fresh_dir("gen_c");
  const std::string base = "gen --config " + (g_work / "gen.conf").string();
  ASSERT_EQ(run(base + " --out " + a.string() + " --seed 7").exit_code, 0);
  ASSERT_EQ(run(base + " --out " + b.string() + " --seed 7").exit_code, 0);
  ASSERT_EQ(run(base + " --out " + c.string() + " --seed 8").exit_code, 0);
  EXPECT_EQ(slurp(a / "embeddings.bin"), slurp(b / "embeddings.bin"));
  EXPECT_EQ(slurp(a / "sentences.tsv"), slurp(b / "sentences.tsv"));
  EXPECT_EQ(slurp(a / "pairs.tsv"), slurp(b / "pairs.tsv"));
  EXPECT_NE(slurp(a / "embeddings.bin"), slurp(c / "embeddings.bin"));
}

TEST(Cli, UnknownConfigKeyExitsThreeAndNamesIt) {
  const fs::path dir = fresh_dir("gen_badkey");
  write_file(g_work / "bad.conf", "n_groups = 8\nturbo_mode = on\n");
  const RunResult r =
      run("gen --config " + (g_work / "bad.conf").string() + " --out " + dir.string());
  EXPECT_EQ(r.exit_code, 3);
  EXPECT_NE(r.output.find("turbo_mode"), std::string::npos) << r.output;
}

TEST(Cli, TrainEvalReportPipeline) {
  const fs::path data = fresh_dir("pipe_data");
  const fs::path out = fresh_dir("pipe_run");
  write_file(g_work / "gen.conf", kGenConfig);
  write_file(g_work / "train.conf", kTrainConfig);
  ASSERT_EQ(run("gen --config " + (g_work / "gen.conf").string() + " --out " + data.string() +
                " --seed 7")
                .exit_code,
            0);

  const RunResult train = run("train --data " + data.string() + " --config " +
                              (g_work / "train.conf").string() + " --out " + out.string() +
                              " --seed 7");
  ASSERT_EQ(train.exit_code, 0) << train.output;
  EXPECT_TRUE(fs::exists(out / "head.bin"));
  EXPECT_TRUE(fs::exists(out / "head_best.bin"));
  EXPECT_TRUE(fs::exists(out / "manifest.json"));

  // epochs = 3 -> header + 3 rows.
  std::ifstream hist(out / "history.tsv");
  std::string line;
  int rows = 0;
  std::getline(hist, line);
  EXPECT_EQ(line, "epoch\tloss\tdev_acc\talign\tuniform");
  while (std::getline(hist, line)) rows += line.empty() ? 0 : 1;
  EXPECT_EQ(rows, 3);

  const RunResult eval = run("eval --data " + data.string() + " --head " +
                             (out / "head_best.bin").string() + " --out " + out.string());
  ASSERT_EQ(eval.exit_code, 0) << eval.output;
  EXPECT_TRUE(fs::exists(out / "report.tsv"));
  EXPECT_NE(eval.output.find("overall accuracy"), std::string::npos);

  const RunResult report = run("report --data " + out.string());
  ASSERT_EQ(report.exit_code, 0) << report.output;
  EXPECT_NE(report.output.find("best dev_acc"), std::string::npos);

  // Weighted per-class decomposition surfaced in report.tsv.
  std::ifstream rep(out / "report.tsv");
  double overall = -1.0, weighted = 0.0;
  std::size_t total = 0, class_count = 0;
  std::getline(rep, line);  // header
  while (std::getline(rep, line)) {
    std::istringstream row(line);
    std::string metric, cls, value, count;
    std::getline(row, metric, '\t');
    std::getline(row, cls, '\t');
    std::getline(row, value, '\t');
    std::getline(row, count);
    if (metric != "accuracy") continue;
    if (cls == "overall") {
      overall = std::stod(value);
      total = std::stoul(count);
    } else {
      weighted += std::stod(value) * std::stod(count);
      class_count += std::stoul(count);
    }
  }
  ASSERT_GE(overall, 0.0);
  ASSERT_EQ(class_count, total);
  EXPECT_NEAR(weighted / static_cast<double>(total), overall, 1e-9);
}

TEST(Cli, MiningFlagOverridesAndIsRecorded) {
  const fs::path data = fresh_dir("mine_data");
  write_file(g_work / "gen.conf", kGenConfig);
  write_file(g_work / "train.conf", kTrainConfig);
  ASSERT_EQ(run("gen --config " + (g_work / "gen.conf").string() + " --out " + data.string() +
                " --seed 7")
                .exit_code,
            0);
  for (const std::string mode : {"top_n", "threshold", "none"}) {
    const fs::path out = fresh_dir("mine_" + mode);
    const RunResult r = run("train --data " + data.string() + " --config " +
                            (g_work / "train.conf").string() + " --out " + out.string() +
                            " --seed 7 --mining " + mode);
    ASSERT_EQ(r.exit_code, 0) << r.output;
    const std::string manifest = slurp(out / "manifest.json");
    EXPECT_NE(manifest.find("\"mining\": \"" + mode + "\""), std::string::npos) << manifest;
  }
}

TEST(Cli, TruncatedHeadExitsTwo) {
  const fs::path data = fresh_dir("trunc_data");
  const fs::path out = fresh_dir("trunc_run");
  write_file(g_work / "gen.conf", kGenConfig);
  write_file(g_work / "train.conf", kTrainConfig);
  ASSERT_EQ(run("gen --config " + (g_work / "gen.conf").string() + " --out " + data.string() +
                " --seed 7")
                .exit_code,
            0);
  ASSERT_EQ(run("train --data " + data.string() + " --config " +
                (g_work / "train.conf").string() + " --out " + out.string() + " --seed 7")
                .exit_code,
            0);
  const std::string full = slurp(out / "head.bin");
  std::ofstream trunc(out / "head_trunc.bin", std::ios::binary);
  trunc.write(full.data(), static_cast<std::streamsize>(full.size() / 2));
  trunc.close();
  const RunResult r = run("eval --data " + data.string() + " --head " +
                          (out / "head_trunc.bin").string() + " --out " + out.string());
  EXPECT_EQ(r.exit_code, 2) << r.output;
}

TEST(Cli, MissingDataDirExitsTwo) {
  const fs::path out = fresh_dir("missing_run");
  const RunResult r = run("train --data /nonexistent_dir_42 --out " + out.string());
  EXPECT_EQ(r.exit_code, 2) << r.output;
}

TEST(Cli, DegenerateDataExitsOne) {
  // A dev split with only positive labels cannot be calibrated.
  const fs::path data = fresh_dir("degenerate");
  write_file(data / "sentences.tsv",
             "id\tlang\tgroup_id\ttext\n"
             "s1\ten\tg1\ta\n"
             "s2\ten\tg1\tb\n"
             "s3\ten\tg2\tc\n");
  write_file(data / "pairs.tsv",
             "anchor_id\tcandidate_id\tlabel\tsplit\n"
             "s1\ts2\t1\ttrain\n"
             "s2\ts3\t1\ttrain\n"
             "s1\ts3\t1\tdev\n"
             "s2\ts1\t1\ttest\n");
  // embeddings.bin for 3 ids, dim 4.
  std::ofstream bin(data / "embeddings.bin", std::ios::binary);
  bin.write("EMB1", 4);
  auto put_u32 = [&](std::uint32_t v) {
    char b[4] = {char(v & 0xff), char((v >> 8) & 0xff), char((v >> 16) & 0xff),
                 char((v >> 24) & 0xff)};
    bin.write(b, 4);
  };
  put_u32(3);
  put_u32(4);
  const float rows[3][4] = {{1, 0, 0, 0}, {0.9f, 0.1f, 0, 0}, {0, 1, 0, 0}};
  for (const auto& row : rows) {
    for (float f : row) {
      std::uint32_t bits;
      static_assert(sizeof(bits) == sizeof(f));
      std::memcpy(&bits, &f, 4);
      put_u32(bits);
    }
  }
  bin.close();
  write_file(data / "embeddings.ids", "s1\ns2\ns3\n");

  const fs::path out = fresh_dir("degenerate_run");
  write_file(g_work / "tiny_train.conf", "epochs = 1\nmini_batch_size = 2\n");
  const RunResult train = run("train --data " + data.string() + " --config " +
                              (g_work / "tiny_train.conf").string() + " --out " + out.string());
  EXPECT_EQ(train.exit_code, 1) << train.output;
}

TEST(Cli, BadStrategyExitsThree) {
  const fs::path data = fresh_dir("strategy_data");
  write_file(g_work / "gen.conf", kGenConfig);
  ASSERT_EQ(run("gen --config " + (g_work / "gen.conf").string() + " --out " + data.string() +
                " --seed 7")
                .exit_code,
            0);
  const fs::path out = fresh_dir("strategy_run");
  ASSERT_EQ(run("train --data " + data.string() + " --config " +
                (g_work / "train.conf").string() + " --out " + out.string() + " --seed 7")
                .exit_code,
            0);
  const RunResult r = run("eval --data " + data.string() + " --head " +
                          (out / "head.bin").string() + " --out " + out.string() +
                          " --strategy best_acc");
  EXPECT_EQ(r.exit_code, 3) << r.output;
}

TEST(Cli, EvalStrategiesRun) {
  const fs::path data = fresh_dir("strat_data");
  const fs::path out = fresh_dir("strat_run");
  write_file(g_work / "gen.conf", kGenConfig);
  write_file(g_work / "train.conf", kTrainConfig);
  ASSERT_EQ(run("gen --config " + (g_work / "gen.conf").string() + " --out " + data.string() +
                " --seed 7")
                .exit_code,
            0);
  ASSERT_EQ(run("train --data " + data.string() + " --config " +
                (g_work / "train.conf").string() + " --out " + out.string() + " --seed 7")
                .exit_code,
            0);
  for (const std::string strategy : {"max_acc", "eer", "max_f1"}) {
    const RunResult r = run("eval --data " + data.string() + " --head " +
                            (out / "head_best.bin").string() + " --out " + out.string() +
                            " --strategy " + strategy);
    EXPECT_EQ(r.exit_code, 0) << strategy << ": " << r.output;
  }
}

int run_all(int argc, char** argv) {
  ::testing::InitGoogleTest(&argc, argv);
  if (argc > 1) {
    g_cli = argv[1];
  } else if (const char* env = std::getenv("PARAMINE_BIN")) {
    g_cli = env;
  } else {
    std::fprintf(stderr, "usage: test_cli <path-to-paramine-binary>\n");
    return 2;
  }
  g_work = fs::temp_directory_path() / "paramine_cli_tests";
  fs::create_directories(g_work);
  return RUN_ALL_TESTS();
}

int main(int argc, char** argv) { return run_all(argc, argv); }
