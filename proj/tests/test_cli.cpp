#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <unistd.h>

#include "fitted/class_spaces.hpp"
#include "fitted/space_io.hpp"

namespace fs = std::filesystem;

namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

fs::path scratch() {
  static const fs::path dir =
      fs::temp_directory_path() / ("fitted_cli_test_" + std::to_string(::getpid()));
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Result cli(const std::string& args) {
  static int calls = 0;
  const std::string tag = std::to_string(::getpid()) + "_" + std::to_string(calls++);
  const auto out = scratch() / ("stdout_" + tag + ".txt");
  const auto err = scratch() / ("stderr_" + tag + ".txt");
  const std::string cmd = std::string("\"") + FITTED_CLI + "\" " + args + " >\"" + out.string() +
                          "\" 2>\"" + err.string() + "\"";
  const int status = std::system(cmd.c_str());
  return {WEXITSTATUS(status), slurp(out), slurp(err)};
}

std::string config(const std::string& name) { return std::string(FITTED_CONFIG_DIR) + "/" + name; }

// Every file under `dir` except the manifest's timestamp line.
std::map<std::string, std::string> snapshot(const fs::path& dir) {
  std::map<std::string, std::string> files;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (!e.is_regular_file()) continue;
    std::string text = slurp(e.path());
    if (e.path().filename() == "manifest.json") {
      const auto at = text.find("\"generated_at\"");
      text = text.substr(0, at);
    }
    files[fs::relative(e.path(), dir).string()] = text;
  }
  return files;
}

}  // namespace

TEST(Cli, SpacesConsecutive) {
  const auto r = cli("spaces --n 10 --scheme consecutive --offset 0");
  ASSERT_EQ(r.code, 0) << r.err;
  const auto spec = fitted::parse_spec_text(r.out);
  EXPECT_EQ(spec.sequels[0].spaces()[0], fitted::gen_consecutive_pairs(10, 0));
}

TEST(Cli, SpacesRandomIsDeterministic) {
  const auto a = cli("spaces --n 6 --scheme random --block-size 2 --seed 1");
  const auto b = cli("spaces --n 6 --scheme random --block-size 2 --seed 1");
  ASSERT_EQ(a.code, 0) << a.err;
  EXPECT_EQ(a.out, b.out);
}

TEST(Cli, SpacesOddCountFails) {
  const auto r = cli("spaces --n 5 --scheme consecutive");
  EXPECT_NE(r.code, 0);
  EXPECT_NE(r.err.find("spaces: OddClassCountError"), std::string::npos) << r.err;
}

TEST(Cli, SpacesExplicitToFile) {
  const auto path = scratch() / "explicit.json";
  const auto r = cli("spaces --n 5 --scheme explicit --blocks \"0;1;2;3,4\" --out \"" +
                     path.string() + "\"");
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(fitted::load_spec(path).sequels[0].spaces()[0].blocks(),
            (std::vector<fitted::Block>{{0}, {1}, {2}, {3, 4}}));
}

TEST(Cli, RunDemoIsReproducible) {
  const auto a = scratch() / "run_a";
  const auto b = scratch() / "run_b";
  fs::remove_all(a);
  fs::remove_all(b);
  ASSERT_EQ(cli("run --config \"" + config("demo_run.json") + "\" --out \"" + a.string() + "\"").code, 0);
  ASSERT_EQ(cli("run --config \"" + config("demo_run.json") + "\" --out \"" + b.string() + "\"").code, 0);
  for (const char* f : {"metrics.json", "tables.md", "spaces.json", "manifest.json",
                        "histograms/f-ensemble__held_out.csv"}) {
    EXPECT_TRUE(fs::exists(a / f)) << f;
  }
  const auto metrics = nlohmann::json::parse(slurp(a / "metrics.json"));
  EXPECT_EQ(metrics["detection"].size(), 8u);
  EXPECT_EQ(snapshot(a), snapshot(b));
  const std::string manifest = slurp(a / "manifest.json");
  EXPECT_EQ(manifest.rfind("\"generated_at\""), manifest.find("\"generated_at\""));
}

TEST(Cli, RunIngestedPredictions) {
  const auto out = scratch() / "ingest";
  const auto r = cli("run --config \"" + config("demo_predictions.json") + "\" --out \"" +
                     out.string() + "\" --pretty");
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("Area under ROC curve"), std::string::npos);
  const auto metrics = nlohmann::json::parse(slurp(out / "metrics.json"));
  EXPECT_EQ(metrics["detection"][0]["ood_dataset"], "noise");
}

TEST(Cli, RunErrorIsStagePrefixed) {
  const auto cfg = scratch() / "bad_run.json";
  std::ofstream(cfg) << R"({"seed": 1, "dataset": {"synthetic": {"num_classes": 4}},
                           "held_out_classes": [7]})";
  const auto r = cli("run --config \"" + cfg.string() + "\" --out \"" + (scratch() / "bad").string() + "\"");
  EXPECT_NE(r.code, 0);
  EXPECT_NE(r.err.find("fitted: data: UnknownClassError"), std::string::npos) << r.err;
}

TEST(Cli, SclHalvesFiveRuns) {
  const auto out = scratch() / "scl";
  const auto r = cli("scl --config \"" + config("demo_scl.json") + "\" --out \"" + out.string() + "\"");
  ASSERT_EQ(r.code, 0) << r.err;
  const auto rep = nlohmann::json::parse(slurp(out / "scl_report.json"));
  std::size_t plain = 0;
  for (const auto& rec : rep["results"]) {
    plain += rec["builder"] == "plain" ? 1 : 0;
    EXPECT_LE(rec["scl_accuracy"].get<double>(), rec["routed_accuracy_bound"].get<double>());
  }
  EXPECT_EQ(plain, 5u);
  EXPECT_EQ(rep["results"].size(), 10u);
  EXPECT_NE(slurp(out / "scl_table.md").find("| partition | plain (std) | fitted ensembles (std) |"),
            std::string::npos);
}

TEST(Cli, SclSampledPartitionsAreDeterministic) {
  const auto a = scratch() / "sample_a";
  const auto b = scratch() / "sample_b";
  const std::string args = " --partitions sample --count 20 --seed 3";
  ASSERT_EQ(cli("scl --config \"" + config("sample_scl.json") + "\" --out \"" + a.string() + "\"" + args).code, 0);
  ASSERT_EQ(cli("scl --config \"" + config("sample_scl.json") + "\" --out \"" + b.string() + "\"" + args).code, 0);
  const auto rep = nlohmann::json::parse(slurp(a / "scl_report.json"));
  EXPECT_EQ(rep["partitions"].size(), 20u);
  EXPECT_EQ(snapshot(a), snapshot(b));
}

TEST(Cli, Validate) {
  EXPECT_EQ(cli("validate \"" + config("demo_run.json") + "\"").code, 0);
  EXPECT_EQ(cli("validate \"" + config("demo_predictions.json") + "\"").code, 0);
  const auto cfg = scratch() / "no_seed.json";
  std::ofstream(cfg) << R"({"dataset": {"synthetic": {}}})";
  const auto r = cli("validate \"" + cfg.string() + "\"");
  EXPECT_NE(r.code, 0);
  EXPECT_NE(r.err.find("config: SchemaError"), std::string::npos) << r.err;
  const auto spaces = scratch() / "one_space.json";
  std::ofstream(spaces) << R"({"num_classes": 4, "sequels": [[[[0,3],[1,2]]]]})";
  const auto w = cli("validate \"" + spaces.string() + "\"");
  EXPECT_EQ(w.code, 0);
  EXPECT_NE(w.err.find("does not resolve"), std::string::npos);
}
