#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <sys/wait.h>

#include <gtest/gtest.h>
#include <json.hpp>

#include "keyscore/cli.hpp"

namespace {

namespace fs = std::filesystem;

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("keyscore_cli_" + std::to_string(::testing::UnitTest::GetInstance()->random_seed()) + "_" +
            ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  std::string write(const std::string& name, const std::string& content) const {
    std::ofstream(path(name)) << content;
    return path(name);
  }

  static std::string read(const std::string& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
  }

  int run(std::vector<std::string> args) const {
    args.insert(args.begin(), "keyscore");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    return keyscore::cli::run(static_cast<int>(argv.size()), argv.data());
  }

  // Runs the built binary; returns its exit status.
  int exec(const std::string& args) const {
    const std::string cmd = std::string(KEYSCORE_CLI_PATH) + " " + args + " >" + path("stdout") + " 2>" + path("stderr");
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  }

  // Three documents: perfect prediction, wrong prediction, one of three.
  void write_corpus() {
    docs_ = write("docs.jsonl",
                  R"({"doc_id": "a", "text": "neural networks for vision", "gold": ["neural networks"]})" "\n"
                  R"({"doc_id": "b", "text": "routing with bgp", "gold": ["bgp"]})" "\n"
                  R"({"doc_id": "c", "text": "graph mining of social data", "gold": ["graph mining", "social data", "networks"]})" "\n");
    preds_ = write("preds.jsonl",
                   R"({"doc_id": "a", "tokens": ["neural", "network", "<eos>"], "probs": [1.0, 1.0, 1.0]})" "\n"
                   R"({"doc_id": "b", "tokens": ["ospf", "<eos>"], "probs": [0.25, 1.0]})" "\n"
                   R"({"doc_id": "c", "tokens": ["graph", "mining", "<eos>"], "probs": [1.0, 1.0, 1.0]})" "\n");
  }

  fs::path dir_;
  std::string docs_;
  std::string preds_;
};

TEST_F(CliTest, EvaluateWritesJson) {
  write_corpus();
  ASSERT_EQ(run({"evaluate", "--docs", docs_, "--preds", preds_, "--out", path("r.json")}), 0);
  const auto j = nlohmann::json::parse(read(path("r.json")));
  EXPECT_EQ(j["n_docs"], 3);
  ASSERT_EQ(j["metrics"].size(), 2u);
  EXPECT_TRUE(j["metrics"].contains("F1@M"));
  EXPECT_DOUBLE_EQ(j["metrics"]["F1@M"]["all"]["f"].get<double>(), 0.5);
}

TEST_F(CliTest, CsvAndPlotData) {
  write_corpus();
  ASSERT_EQ(run({"evaluate", "--docs", docs_, "--preds", preds_, "--metric", "f1", "--metric", "kmr", "--format",
                 "csv", "--out", path("r.csv")}),
            0);
  const auto csv = read(path("r.csv"));
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "metric,present_p,present_r,present_f,absent_p,absent_r,absent_f,all_p,all_r,all_f");
  EXPECT_NE(csv.find("F_KMR@M"), std::string::npos);
  ASSERT_EQ(run({"positional", "--docs", docs_, "--preds", preds_, "--format", "plotdata", "--out", path("p.json")}), 0);
  EXPECT_NO_THROW(nlohmann::json::parse(read(path("p.json"))));
}

TEST_F(CliTest, CalibratePerfectlyCalibratedIsZero) {
  docs_ = write("docs.jsonl", R"({"doc_id": "a", "text": "x y", "gold": ["x", "y"]})" "\n");
  preds_ = write("preds.jsonl", R"({"doc_id": "a", "tokens": ["x", ";", "y"], "probs": [1.0, 1.0, 1.0]})" "\n");
  ASSERT_EQ(run({"calibrate", "--docs", docs_, "--preds", preds_, "--out", path("c.json")}), 0);
  const auto j = nlohmann::json::parse(read(path("c.json")));
  EXPECT_NEAR(j["ece_percent"].get<double>(), 0.0, 1e-9);
}

TEST_F(CliTest, CorrelateIdentityIsOne) {
  write_corpus();
  // F1@M per document: a = 1, b = 0, c = 0.5
  const auto human = write("human.jsonl", R"({"doc_id": "a", "score": 1.0})" "\n" R"({"doc_id": "b", "score": 0.0})" "\n"
                                          R"({"doc_id": "c", "score": 0.5})" "\n");
  ASSERT_EQ(run({"correlate", "--docs", docs_, "--preds", preds_, "--human", human, "--out", path("h.json")}), 0);
  const auto j = nlohmann::json::parse(read(path("h.json")));
  EXPECT_NEAR(j["correlations"][0]["pearson_r"].get<double>(), 1.0, 1e-12);
}

TEST_F(CliTest, ConfidenceHistogram) {
  write_corpus();
  ASSERT_EQ(run({"confidence", "--docs", docs_, "--preds", preds_, "--out", path("k.json")}), 0);
  EXPECT_NO_THROW(nlohmann::json::parse(read(path("k.json"))));
}

TEST_F(CliTest, BinaryExitCodes) {
  write_corpus();
  EXPECT_EQ(exec("evaluate --docs " + docs_ + " --preds " + preds_), 0);
  EXPECT_EQ(nlohmann::json::parse(read(path("stdout")))["n_docs"], 3);
  EXPECT_EQ(exec("evaluate --docs " + docs_ + " --preds " + preds_ + " --bogus"), 1);
  EXPECT_EQ(exec("evaluate --docs " + path("missing.jsonl") + " --preds " + preds_), 2);
  EXPECT_NE(read(path("stderr")).find("missing.jsonl"), std::string::npos);
  const auto orphan = write("orphan.jsonl", R"({"doc_id": "zz", "tokens": ["a"], "probs": [0.5]})" "\n");
  EXPECT_EQ(exec("evaluate --docs " + docs_ + " --preds " + orphan), 1);
  EXPECT_NE(read(path("stderr")).find("zz"), std::string::npos);
  EXPECT_EQ(exec("correlate --docs " + docs_ + " --preds " + preds_), 1);
}

TEST_F(CliTest, WorkersDoNotChangeOutput) {
  std::mt19937 rng(4);
  std::ofstream docs(path("docs.jsonl")), preds(path("preds.jsonl"));
  const std::vector<std::string> words{"graph", "neural", "network", "mining", "learning", "bgp", "routing", "model"};
  for (int i = 0; i < 60; ++i) {
    nlohmann::json d{{"doc_id", "d" + std::to_string(i)}, {"text", ""}, {"gold", nlohmann::json::array()}};
    std::string text;
    for (int w = 0; w < 12; ++w) text += words[rng() % words.size()] + " ";
    d["text"] = text;
    d["gold"].push_back(words[rng() % words.size()] + " " + words[rng() % words.size()]);
    d["gold"].push_back("topic" + std::to_string(rng() % 5));
    docs << d.dump() << '\n';
    nlohmann::json p{{"doc_id", d["doc_id"]}, {"tokens", nlohmann::json::array()}, {"probs", nlohmann::json::array()}};
    for (int t = 0; t < 7; ++t) {
      p["tokens"].push_back(t % 3 == 2 ? ";" : words[rng() % words.size()]);
      p["probs"].push_back(0.05 + 0.9 * (rng() % 1000) / 1000.0);
    }
    preds << p.dump() << '\n';
  }
  docs.close();
  preds.close();
  const std::string common = "evaluate --docs " + path("docs.jsonl") + " --preds " + path("preds.jsonl") + " --metric f1 --metric kmr";
  ASSERT_EQ(exec(common + " --workers 1 --out " + path("w1.json")), 0);
  ASSERT_EQ(exec(common + " --workers 4 --out " + path("w4.json")), 0);
  EXPECT_EQ(read(path("w1.json")), read(path("w4.json")));
}

}  // namespace
