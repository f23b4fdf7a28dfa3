#include <gtest/gtest.h>

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "gdsal/config.hpp"
#include "gdsal/image_io.hpp"
#include "gdsal/mask.hpp"
#include "gdsal/pipeline.hpp"

using namespace gdsal;

namespace {

struct CliResult {
  int code = -1;
  std::string out;
};

// Runs the CLI, capturing stdout; stderr goes to err.txt in the work dir.
CliResult cli(const std::string& args, const fs::path& dir) {
  const std::string cmd = "cd '" + dir.string() + "' && " GDSAL_CLI " " + args +
                          " 2> err.txt";
  CliResult r;
  FILE* p = popen(cmd.c_str(), "r");
  if (!p) return r;
  char buf[512];
  while (std::fgets(buf, sizeof buf, p)) r.out += buf;
  const int status = pclose(p);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

fs::path fresh(const std::string& name) {
  const fs::path d = fs::temp_directory_path() / ("gdsal_cli_" + name);
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

std::vector<std::vector<std::string>> read_csv(const fs::path& p) {
  std::ifstream in(p);
  std::vector<std::vector<std::string>> rows;
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) row.push_back(cell);
    if (!line.empty() && line.back() == ',') row.push_back("");
    rows.push_back(row);
  }
  return rows;
}

// One small trained pipeline shared by the tests below.
class CliPipeline : public ::testing::Test {
 protected:
  static fs::path dir;
  static std::string train_stdout;

  static void SetUpTestSuite() {
    dir = fresh("pipeline");
    std::ofstream(dir / "cfg.json") << R"({
      "dataset": {"image_size": 32, "train_count": 24, "test_count": 8},
      "architecture": {"input_size": 32, "conv_channels": [4, 8], "hidden": 16},
      "train": {"epochs": 2, "batch_size": 4},
      "out": "o"
    })";
    ASSERT_EQ(cli("dataset --config cfg.json", dir).code, 0);
    const CliResult t = cli("train --config cfg.json", dir);
    ASSERT_EQ(t.code, 0);
    train_stdout = t.out;
    ASSERT_EQ(cli("saliency --config cfg.json --model cnn23 --model cnn2 --model cnn3", dir).code, 0);
    ASSERT_EQ(cli("segment --config cfg.json --maps o/saliency/cnn23", dir).code, 0);
  }
};

fs::path CliPipeline::dir;
std::string CliPipeline::train_stdout;

}  // namespace

TEST(Cli, ZeroTrainingImagesIsUsageError) {
  const fs::path d = fresh("zero");
  EXPECT_EQ(cli("dataset --train 0 --out o", d).code, 2);
  const std::string err = slurp(d / "err.txt");
  EXPECT_NE(err.find("\"error\""), std::string::npos);
  EXPECT_FALSE(fs::exists(d / "o" / "dataset" / "manifest.json"));
}

TEST(Cli, UnknownFlagOrConfigKeyIsUsageError) {
  const fs::path d = fresh("usage");
  EXPECT_EQ(cli("dataset --bogus", d).code, 2);
  std::ofstream(d / "bad.json") << R"({"train": {"epoch": 3}})";
  EXPECT_EQ(cli("train --config bad.json --out o", d).code, 2);
  EXPECT_EQ(cli("", d).code, 2);
}

TEST(Cli, MissingManifestIsRuntimeError) {
  const fs::path d = fresh("missing");
  EXPECT_EQ(cli("train --out nowhere", d).code, 1);
}

TEST(Cli, DatasetCountAndRerunIsIdentical) {
  const fs::path d = fresh("dataset");
  ASSERT_EQ(cli("dataset --classes 3 --train 300 --test 100 --seed 7 --size 16 --out a", d).code, 0);
  ASSERT_EQ(cli("dataset --classes 3 --train 300 --test 100 --seed 7 --size 16 --out b", d).code, 0);
  EXPECT_EQ(read_manifest(d / "a" / "dataset" / "manifest.json").samples.size(), 400u);
  std::size_t files = 0;
  for (const auto& e : fs::recursive_directory_iterator(d / "a")) {
    if (!e.is_regular_file()) continue;
    const fs::path other = d / "b" / fs::relative(e.path(), d / "a");
    ASSERT_TRUE(fs::exists(other)) << other;
    EXPECT_EQ(slurp(e.path()), slurp(other)) << e.path();
    ++files;
  }
  EXPECT_EQ(files, 2u * 400u + 2u);
}

TEST(Cli, EnvironmentChoosesOutputDirectory) {
  const fs::path d = fresh("env");
  const std::string args = "dataset --train 3 --test 3 --size 16";
  const std::string cmd = "cd '" + d.string() + "' && GDSAL_OUT=envout " GDSAL_CLI " " + args;
  ASSERT_EQ(std::system(cmd.c_str()), 0);
  EXPECT_TRUE(fs::exists(d / "envout" / "dataset" / "manifest.json"));
}

TEST_F(CliPipeline, TrainWritesCheckpointsAndMetrics) {
  const fs::path models = dir / "o" / "models";
  EXPECT_EQ(load_checkpoint(checkpoint_path(models, Variant::cnn3), LabelSpace::dual)
                .label_space(),
            LabelSpace::dual);
  for (Variant v : {Variant::cnn1, Variant::cnn2, Variant::cnn3}) {
    const auto rows = read_csv(metrics_path(models, v));
    ASSERT_EQ(rows.size(), 1u + 2u) << variant_name(v);
    EXPECT_EQ(rows[0][0], "epoch");
    const Json c = read_json_file(models / (std::string(variant_name(v)) + "_config.json"));
    EXPECT_EQ(c["manifest"], "../dataset/manifest.json");
  }
}

TEST_F(CliPipeline, PrintedAccuracyMatchesClassify) {
  const std::string key = "cnn1 test accuracy ";
  const auto at = train_stdout.find(key);
  ASSERT_NE(at, std::string::npos) << train_stdout;
  const double printed = std::stod(train_stdout.substr(at + key.size()));
  const Network net = load_checkpoint(checkpoint_path(dir / "o" / "models", Variant::cnn1),
                                      LabelSpace::plain);
  const Corpus corpus = load_corpus(dir / "o" / "dataset" / "manifest.json");
  std::size_t right = 0;
  const auto test = corpus.split(Split::test);
  for (const LabeledSample* s : test) right += classify(net, s->image).label == s->label;
  EXPECT_DOUBLE_EQ(printed, static_cast<double>(right) / test.size());
}

TEST_F(CliPipeline, CombinedMapIsCombineOfSeparateMaps) {
  const ModelSet models = load_models(dir / "o" / "models", {{MapSource::cnn23, false}});
  const Corpus corpus = load_corpus(dir / "o" / "dataset" / "manifest.json");
  const SaliencyConfig cfg;
  for (const LabeledSample* s : corpus.split(Split::test)) {
    const ImageSaliency a = extract_saliency(models, s->image, {{MapSource::cnn2, false}}, cfg);
    const ImageSaliency b = extract_saliency(models, s->image, {{MapSource::cnn3, false}}, cfg);
    const SaliencyMap both = combine(a.maps[0], b.maps[0], cfg.norm);
    const Image8 written = read_png(dir / "o" / "saliency" / "cnn23" / (s->id + ".png"));
    EXPECT_EQ(written.pixels, quantize(both)) << s->id;
  }
}

TEST_F(CliPipeline, SidecarRecordsIterationsAndThreshold) {
  const Json j = read_json_file(dir / "o" / "saliency" / "cnn23" / "test_00000.json");
  EXPECT_EQ(j["iterations"], 15);
  EXPECT_EQ(j["provenance"], "cnn2+cnn3");
  ASSERT_EQ(j["networks"].size(), 2u);
  for (const Json& n : j["networks"]) {
    EXPECT_EQ(n["cost_trace"].size(), 15u);
    EXPECT_TRUE(n["theta"].is_number());
  }
  EXPECT_TRUE(fs::exists(dir / "o" / "saliency" / "cnn23" / "config.json"));
}

TEST_F(CliPipeline, SelectionJaccardMatchesEmittedMasks) {
  const fs::path seg = dir / "o" / "segment" / "cnn23";
  std::size_t checked = 0;
  for (const auto& e : fs::directory_iterator(seg)) {
    if (e.path().extension() != ".json" || e.path().filename() == "config.json") continue;
    const Json j = read_json_file(e.path());
    const std::string id = j["id"];
    if (j["status"] != "ok") {
      EXPECT_FALSE(fs::exists(seg / (id + "_mask.png")));
      continue;
    }
    const BinaryMask mask = read_mask_png(seg / (id + "_mask.png"));
    const BinaryMask m1 = read_mask_png(seg / (id + "_m1.png"));
    EXPECT_NEAR(jaccard(mask, m1), j["jaccard"].get<double>(), 1e-12) << id;
    ++checked;
  }
  EXPECT_GT(checked, 0u);
}

TEST_F(CliPipeline, SingleRunRefinedMapIsBinary) {
  ASSERT_EQ(cli("segment --config cfg.json --maps o/saliency/cnn23 --runs 1 --seeds 50 --out one "
                "--manifest o/dataset/manifest.json",
                dir)
                .code,
            0);
  for (const auto& e : fs::directory_iterator(dir / "one" / "segment" / "cnn23")) {
    const std::string name = e.path().filename().string();
    if (name.find("_refined.png") == std::string::npos) continue;
    for (std::uint8_t v : read_png(e.path()).pixels) EXPECT_TRUE(v == 0 || v == 255) << name;
  }
}

TEST_F(CliPipeline, GroundTruthAgainstItselfScoresOne) {
  const fs::path gt = dir / "gt_maps";
  fs::create_directories(gt);
  const Corpus corpus = load_corpus(dir / "o" / "dataset" / "manifest.json");
  for (const LabeledSample* s : corpus.split(Split::test)) {
    write_mask_png(gt / (s->id + ".png"), s->mask);
  }
  const CliResult r = cli("eval --config cfg.json --maps truth=gt_maps --out gt_eval "
                    "--manifest o/dataset/manifest.json", dir);
  ASSERT_EQ(r.code, 0);
  const Json summary = read_json_file(dir / "gt_eval" / "eval" / "summary.json");
  EXPECT_EQ(summary["methods"][0]["method"], "truth");
  EXPECT_DOUBLE_EQ(summary["methods"][0]["mean_max_f_beta"].get<double>(), 1.0);
}

TEST_F(CliPipeline, EvalCurvesAndAggregates) {
  const CliResult r = cli(
      "eval --config cfg.json --maps o/saliency/cnn23 --segments o/segment/cnn23 "
      "--compare o/saliency/cnn2 o/saliency/cnn3",
      dir);
  ASSERT_EQ(r.code, 0);
  const fs::path ev = dir / "o" / "eval";
  for (const auto& e : fs::directory_iterator(ev / "cnn23" / "curves")) {
    EXPECT_EQ(read_csv(e.path()).size(), 1u + 256u);
  }
  const auto comparison = read_csv(ev / "comparison.csv");
  ASSERT_EQ(comparison.size(), 1u + 4u);  // cnn23, cnn2, cnn3, gaussian
  for (std::size_t m = 1; m < comparison.size(); ++m) {
    const std::string method = comparison[m][0];
    const auto per = read_csv(ev / method / "per_image.csv");
    double sum = 0.0;
    for (std::size_t i = 1; i < per.size(); ++i) sum += std::stod(per[i][1]);
    EXPECT_NEAR(sum / (per.size() - 1), std::stod(comparison[m][2]), 1e-12) << method;
  }
  EXPECT_TRUE(fs::exists(ev / "pr.svg"));
  EXPECT_TRUE(fs::exists(ev / "fbeta.svg"));
  EXPECT_NE(comparison[1][4], "");
}
