#include <unistd.h>

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "damro/cli.hpp"
#include "damro/json_io.hpp"
#include "doctest.h"
#include "support/mini_schema.hpp"

namespace fs = std::filesystem;
using damro::cli::run;

namespace {

const std::string kRoot = DAMRO_SOURCE_DIR;
const std::string kFixtures = DAMRO_FIXTURE_DIR;
const std::string kConfig = kRoot + "/data/toy_model.json";
const std::string kImage = kRoot + "/data/blocks_seed7.json";

struct TempDir {
  fs::path path;
  TempDir() {
    static int counter = 0;
    path = fs::temp_directory_path() / ("damro_cli_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string operator/(const std::string& name) const { return (path / name).string(); }
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::string> csv_lines(const fs::path& p) {
  std::vector<std::string> lines;
  std::istringstream in(slurp(p));
  for (std::string line; std::getline(in, line);) lines.push_back(line);
  return lines;
}

int generate(const std::string& out, std::vector<std::string> extra = {}) {
  std::vector<std::string> args{"damro",        "generate",   "--model-config", kConfig, "--image", kImage,
                                "--prompt-ids", "3,14,15",    "--out",          out};
  args.insert(args.end(), extra.begin(), extra.end());
  return run(args);
}

}  // namespace

TEST_CASE("generate: alpha 0 reproduces the plain run") {
  TempDir tmp;
  REQUIRE(generate(tmp / "damro", {"--damro", "--alpha", "0", "--seed", "42"}) == 0);
  REQUIRE(generate(tmp / "plain", {"--seed", "42"}) == 0);
  CHECK(slurp(tmp / "damro/tokens.json") == slurp(tmp / "plain/tokens.json"));
}

TEST_CASE("generate: missing image exits 2") {
  TempDir tmp;
  CHECK(run({"damro", "generate", "--model-config", kConfig, "--image", "/no/such/image.json", "--prompt-ids", "1",
             "--out", tmp / "x"}) == 2);
  CHECK(run({"damro", "generate", "--model-config", kConfig, "--image", kImage, "--beta", "2", "--out", tmp / "y"}) ==
        2);
  CHECK(run({"damro", "frobnicate"}) == 2);
}

TEST_CASE("generate: trace validates against the published schema") {
  TempDir tmp;
  REQUIRE(generate(tmp / "g", {"--damro", "--max-new-tokens", "40"}) == 0);
  const auto schema = damro::json_io::read_file(kRoot + "/schemas/generation_trace.schema.json");
  const auto trace = damro::json_io::read_file(tmp / "g/trace.json");
  CHECK(testing_support::validate(trace, schema) == "");

  auto broken = trace;
  broken.erase("outliers");
  CHECK(testing_support::validate(broken, schema) != "");

  for (const char* f : {"tokens.json", "attention_encoder.json", "attention_decoder.json",
                        "attention_decoder_steps.jsonl", "manifest.json"})
    CHECK(fs::exists(tmp.path / "g" / f));
  const auto manifest = damro::json_io::read_file(tmp / "g/manifest.json");
  CHECK(manifest.at("command") == "generate --damro");
  CHECK(manifest.at("seed") == 42);
  CHECK(manifest.at("tool_version") == damro::cli::kToolVersion);
  CHECK(manifest.contains("wall_clock_seconds"));
  for (const auto& out : manifest.at("outputs")) CHECK(fs::exists(tmp.path / "g" / out.get<std::string>()));
}

TEST_CASE("analyze: generated dumps and fixtures") {
  TempDir tmp;
  REQUIRE(generate(tmp / "g", {"--damro", "--max-new-tokens", "30"}) == 0);
  const std::string enc = tmp / "g/attention_encoder.json";

  SUBCASE("identical dumps give H_i = 1") {
    REQUIRE(run({"damro", "analyze", "--encoder", enc, "--decoder", enc, "--out", tmp / "same"}) == 0);
    auto lines = csv_lines(tmp / "same/h_curve.csv");
    REQUIRE(lines.size() == 11);
    CHECK(lines[0] == "group,i,H_i");
    for (std::size_t i = 1; i < lines.size(); ++i) CHECK(lines[i] == "all," + std::to_string(i) + ",1");
  }
  SUBCASE("encoder vs decoder") {
    REQUIRE(run({"damro", "analyze", "--encoder", enc, "--decoder", tmp / "g/attention_decoder.json", "--label", "HA",
                 "--out", tmp / "ed"}) == 0);
    const auto rep = damro::json_io::read_file(tmp / "ed/consistency_report.json");
    const double f = rep.at("reports").at(0).at("f_value");
    CHECK(f >= 0.0);
    CHECK(f <= 1.0);
  }
  SUBCASE("length mismatch exits 2") {
    CHECK(run({"damro", "analyze", "--encoder", kFixtures + "/pairs/enc_a.json", "--decoder",
               kFixtures + "/pairs/dec_short.json", "--out", tmp / "bad"}) == 2);
  }
  SUBCASE("labeled pairs give two groups") {
    REQUIRE(run({"damro", "analyze", "--pairs", kFixtures + "/pairs/pairs.jsonl", "--i-max", "5", "--out",
                 tmp / "pairs"}) == 0);
    auto lines = csv_lines(tmp / "pairs/h_curve.csv");
    std::set<std::string> groups;
    for (std::size_t i = 1; i < lines.size(); ++i) groups.insert(lines[i].substr(0, lines[i].find(',')));
    CHECK(groups == std::set<std::string>{"object-level/HA", "object-level/Non-HA"});
    CHECK(lines.size() == 11);
    CHECK(fs::exists(tmp.path / "pairs/concentration.csv"));
  }
}

TEST_CASE("eval command") {
  TempDir tmp;
  SUBCASE("pope fixture") {
    REQUIRE(run({"damro", "eval", "--kind", "pope", "--dataset", kFixtures + "/pope_confusion.jsonl", "--out",
                 tmp / "p"}) == 0);
    const auto rep = damro::json_io::read_file(tmp / "p/eval_report.json");
    CHECK(rep.at("values").at("precision") == 0.75);
    CHECK(rep.at("values").at("recall") == 0.75);
    CHECK(rep.at("values").at("f1") == 0.75);
    CHECK(rep.at("values").at("accuracy") == 0.8);
    CHECK(csv_lines(tmp / "p/eval_summary.csv").at(0) == "Split,Precision,Recall,F1 Score,Accuracy");
  }
  SUBCASE("clean captions") {
    REQUIRE(run({"damro", "eval", "--kind", "caption", "--dataset", kFixtures + "/captions_clean.jsonl", "--lexicon",
                 kFixtures + "/lexicon.json", "--out", tmp / "c"}) == 0);
    const auto rep = damro::json_io::read_file(tmp / "c/eval_report.json");
    CHECK(rep.at("values").at("chair_s") == 0.0);
    CHECK(rep.at("values").at("chair_i") == 0.0);
  }
  SUBCASE("pope on a caption file names the field") {
    CHECK(run({"damro", "eval", "--kind", "pope", "--dataset", kFixtures + "/captions_10.jsonl", "--out",
               tmp / "bad"}) == 2);
  }
  SUBCASE("caption mode needs a lexicon") {
    CHECK(run({"damro", "eval", "--kind", "caption", "--dataset", kFixtures + "/captions_10.jsonl", "--out",
               tmp / "nolex"}) == 2);
  }
}

TEST_CASE("sweep command") {
  TempDir tmp;
  const std::vector<std::string> base{"damro", "sweep", "--model-config", kConfig, "--image", kImage,
                                      "--prompt-ids", "3,14,15", "--max-new-tokens", "16"};
  auto sweep = [&](const std::string& out, std::vector<std::string> extra) {
    auto args = base;
    args.insert(args.end(), extra.begin(), extra.end());
    args.push_back("--out");
    args.push_back(tmp / out);
    return run(args);
  };

  SUBCASE("alpha grid") {
    REQUIRE(sweep("a", {"--alpha-grid", "0.5,1,1.5,2"}) == 0);
    auto lines = csv_lines(tmp / "a/sweep.csv");
    REQUIRE(lines.size() == 5);
    CHECK(lines[1].rfind("damro,0.5,", 0) == 0);
    CHECK(lines[4].rfind("damro,2,", 0) == 0);
    CHECK(fs::exists(tmp.path / "a/manifest.json"));
  }
  SUBCASE("alpha x topk grid") {
    REQUIRE(sweep("ak", {"--alpha-grid", "1,0.5", "--topk-grid", "4,1,2"}) == 0);
    CHECK(csv_lines(tmp / "ak/sweep.csv").size() == 7);
  }
  SUBCASE("keep-only grid with duplicates") {
    REQUIRE(sweep("k", {"--keep-only-grid", "1,2,5,10,all,5,1"}) == 0);
    auto lines = csv_lines(tmp / "k/sweep.csv");
    REQUIRE(lines.size() == 6);
    CHECK(lines[5].rfind("keep_only,,,all,", 0) == 0);
    CHECK(lines[5].substr(lines[5].rfind(',') + 1) == "true");
  }
  SUBCASE("keep-only count n reproduces full logits") {
    REQUIRE(sweep("n", {"--keep-only-grid", "64"}) == 0);
    const auto rep = damro::json_io::read_file(tmp / "n/sweep.json");
    CHECK(rep.at("rows").at(0).at("first_step_logits_identical") == true);
  }
  SUBCASE("jobs do not change the output") {
    REQUIRE(sweep("j1", {"--alpha-grid", "0,1,2", "--jobs", "1"}) == 0);
    REQUIRE(sweep("j3", {"--alpha-grid", "0,1,2", "--jobs", "3"}) == 0);
    CHECK(slurp(tmp / "j1/sweep.csv") == slurp(tmp / "j3/sweep.csv"));
  }
  SUBCASE("empty grid is an error") { CHECK(sweep("e", {}) == 2); }
}

TEST_CASE("make-image writes a loadable fixture") {
  TempDir tmp;
  REQUIRE(run({"damro", "make-image", "--model-config", kConfig, "--pattern", "noise", "--seed", "3", "--out",
               tmp / "img.json"}) == 0);
  REQUIRE(generate(tmp / "g", {"--max-new-tokens", "4"}) == 0);
  CHECK(run({"damro", "make-image", "--model-config", kConfig, "--pattern", "plaid", "--out", tmp / "x.json"}) == 2);
}
