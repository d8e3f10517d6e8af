#include <gtest/gtest.h>

#include <fstream>
#include <map>
#include <sstream>

#include "cli.hpp"
#include "test_util.hpp"

namespace fs = std::filesystem;

namespace {

struct Run {
  int code;
  std::string out, err;
};

Run run(std::vector<std::string> args) {
  args.insert(args.begin(), "phrasecomp");
  std::ostringstream out, err;
  const int code = phrasecomp::cli::run_command(args, out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

}  // namespace

TEST(Cli, ParamCount) {
  const auto r = run({"param-count", "--model", "transweight", "--n", "200", "--t", "100"});
  EXPECT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(r.out, "12020200\n");
}

TEST(Cli, SplitCounts) {
  const auto dir = testutil::scratch_dir("cli_split");
  {
    std::ofstream f(dir / "p.tsv");
    for (int i = 0; i < 100; ++i) f << "a" << i << "\tb" << i << "\ta" << i << "_b" << i << "\n";
  }
  const auto r = run({"split", "--input", (dir / "p.tsv").string(), "--ratio", "7:2:1", "--output",
                      (dir / "out.tsv").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  std::map<std::string, int> counts;
  std::ifstream in(dir / "out.tsv");
  for (std::string line; std::getline(in, line);) ++counts[line.substr(line.rfind('\t') + 1)];
  EXPECT_EQ(counts["train"], 70);
  EXPECT_EQ(counts["test"], 20);
  EXPECT_EQ(counts["dev"], 10);
}

TEST(Cli, CollapseCheckPasses) {
  const auto r = run({"collapse-check", "--n", "8", "--t", "5", "--seed", "3"});
  EXPECT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("PASS"), std::string::npos);
}

TEST(Cli, UsageErrorsExitNonzero) {
  EXPECT_EQ(run({"bogus"}).code, 2);
  EXPECT_EQ(run({}).code, 2);
  EXPECT_EQ(run({"param-count", "--model", "nonsense", "--n", "4"}).code, 2);
  const auto r = run({"evaluate", "--phrases", "/nonexistent/p.tsv", "--model", "addition",
                      "--embeddings", "/nonexistent/e.txt"});
  EXPECT_NE(r.code, 0);
  EXPECT_FALSE(r.err.empty());
}

TEST(Cli, FlagsOverrideConfigFile) {
  const auto dir = testutil::scratch_dir("cli_config");
  ASSERT_EQ(run({"gen-synth", "--n", "6", "--num-phrases", "90", "--ratio", "4:1:1", "--out",
                 (dir / "syn").string()}).code, 0);
  {
    std::ofstream f(dir / "c.cfg");
    f << "learning_rate = 0.5\nmax_epochs = 2\n";
  }
  const auto r = run({"train", "--config", (dir / "c.cfg").string(), "--learning-rate", "0.01",
                      "--embeddings", (dir / "syn/embeddings.txt").string(), "--phrases",
                      (dir / "syn/phrases.tsv").string(), "--model", "matrix", "--out",
                      (dir / "tr").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto meta = slurp(dir / "tr/metadata.json");
  EXPECT_NE(meta.find("\"learning_rate\": \"0.01\""), std::string::npos) << meta;
  EXPECT_NE(meta.find("\"max_epochs\": \"2\""), std::string::npos) << meta;
  // Two epochs logged plus the header.
  const auto log = slurp(dir / "tr/train_log.tsv");
  EXPECT_EQ(std::count(log.begin(), log.end(), '\n'), 3);
}

TEST(Cli, RerunsProduceIdenticalOutputs) {
  const auto dir = testutil::scratch_dir("cli_determinism");
  for (const std::string tag : {"a", "b"}) {
    const auto d = dir / tag;
    ASSERT_EQ(run({"gen-synth", "--n", "6", "--num-phrases", "120", "--ratio", "4:1:1", "--out",
                   (d / "syn").string()}).code, 0);
    ASSERT_EQ(run({"train", "--embeddings", (d / "syn/embeddings.txt").string(), "--phrases",
                   (d / "syn/phrases.tsv").string(), "--model", "transweight", "--t", "4",
                   "--max-epochs", "4", "--dropout-rate", "0.3", "--dropout-site", "H", "--out",
                   (d / "tr").string()}).code, 0);
    ASSERT_EQ(run({"evaluate", "--embeddings", (d / "syn/embeddings.txt").string(), "--phrases",
                   (d / "syn/phrases.tsv").string(), "--checkpoint", (d / "tr/model.ckpt").string(),
                   "--threads", tag == "a" ? "1" : "3", "--out", (d / "ev").string()}).code, 0);
    ASSERT_EQ(run({"dropout-exp", "--embeddings", (d / "syn/embeddings.txt").string(),
                   "--phrases", (d / "syn/phrases.tsv").string(), "--checkpoint",
                   (d / "tr/model.ckpt").string(), "--rates", "0,0.5", "--repeats", "2", "--out",
                   (d / "dx").string()}).code, 0);
  }
  for (const char* f : {"syn/embeddings.txt", "syn/phrases.tsv", "tr/model.ckpt",
                        "tr/train_log.tsv", "ev/report.json", "ev/report.tsv",
                        "dx/dropout_curve.tsv"}) {
    EXPECT_EQ(slurp(dir / "a" / f), slurp(dir / "b" / f)) << f;
    EXPECT_FALSE(slurp(dir / "a" / f).empty()) << f;
  }
}

TEST(Cli, RankSubcommand) {
  const auto dir = testutil::scratch_dir("cli_rank");
  {
    std::ofstream f(dir / "e.txt");
    f << "4 2\na 1 0\nb 0 1\na_b 1 1\nx -1 0\n";
  }
  const auto r = run({"rank", "--embeddings", (dir / "e.txt").string(), "--model", "addition",
                      "--word1", "a", "--word2", "b", "--phrase", "a_b"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("rank\t1"), std::string::npos) << r.out;
}
