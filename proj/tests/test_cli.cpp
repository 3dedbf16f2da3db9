#include <gtest/gtest.h>
#include <sys/wait.h>

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <regex>

#include "edgemetric/data.hpp"
#include "edgemetric/eval.hpp"
#include "edgemetric/model_io.hpp"
#include "edgemetric/png_io.hpp"
#include "edgemetric/training.hpp"

using namespace edgemetric;
namespace fs = std::filesystem;

namespace {

struct CliRun {
  int code = -1;
  std::string output;  // stdout and stderr
};

CliRun run(const std::string& args) {
  const std::string cmd = std::string(EDGEMETRIC_CLI) + " --threads 1 " + args + " 2>&1";
  CliRun r;
  FILE* pipe = popen(cmd.c_str(), "r");
  if (!pipe) return r;
  std::array<char, 4096> buf;
  std::size_t n;
  while ((n = fread(buf.data(), 1, buf.size(), pipe)) > 0) r.output.append(buf.data(), n);
  const int status = pclose(pipe);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

fs::path fresh_dir(const std::string& name) {
  const fs::path dir = fs::path(EDGEMETRIC_TEST_TMP) / "cli" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string read_text(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

double max_value(const MultiChannelImage& img) {
  double m = 0.0;
  for (double v : img.values()) m = std::max(m, v);
  return m;
}

// Small corpus shared by the train and eval tests.
const fs::path& small_corpus() {
  static const fs::path root = [] {
    const fs::path dir = fresh_dir("corpus");
    const fs::path spec = dir / "spec.json";
    std::ofstream(spec) << R"({"size": 48,
      "counts": {"train": {"brightness_step": 2, "texture_grating": 2},
                 "val": {"brightness_step": 1, "color_step": 1},
                 "test": {"brightness_step": 2, "color_step": 2}},
      "seed": 3})";
    const CliRun r = run("synth --out " + (dir / "data").string() + " --spec " + spec.string());
    EXPECT_EQ(r.code, 0) << r.output;
    return dir / "data";
  }();
  return root;
}

double ods_from_summary(const std::string& csv, const std::string& label) {
  const std::regex row(label + ",([0-9.]+),");
  std::smatch m;
  if (!std::regex_search(csv, m, row)) return -1.0;
  return std::stod(m[1]);
}

}  // namespace

TEST(CliDetect, ConstantImageIsNearZero) {
  const fs::path dir = fresh_dir("constant");
  save_image_png(dir / "flat.png", MultiChannelImage(48, 40, 3, ColorSpace::kRgb, 0.4));
  const CliRun r = run("detect " + (dir / "flat.png").string() + " --mode chi2-equal --out " +
                    dir.string());
  ASSERT_EQ(r.code, 0) << r.output;
  EXPECT_LT(max_value(load_image(dir / "flat_raw.png")), 0.05);
  EXPECT_LT(max_value(load_image(dir / "flat_thin.png")), 0.05);
}

TEST(CliDetect, StepEdgeRecovered) {
  const fs::path dir = fresh_dir("step");
  const SynthSample s = vertical_step(64, 48, 30, 0.25, 0.5);
  save_image_png(dir / "step.png", s.image);
  const CliRun r = run("detect " + (dir / "step.png").string() + " --mode chi2-equal --out " +
                    dir.string());
  ASSERT_EQ(r.code, 0) << r.output;
  const MultiChannelImage thin = load_image(dir / "step_thin.png");
  EXPECT_EQ(thin.color_space(), ColorSpace::kGray);
  RealMap strength(64, 48);
  for (int y = 0; y < 48; ++y)
    for (int x = 0; x < 64; ++x) strength(x, y) = thin.at(x, y, 0);
  const BinaryMap det = binarize(strength, 0.1);
  const MatchResult m = match_boundaries(det, s.boundary, 2.0);
  std::size_t gt = 0;
  for (auto v : s.boundary.values()) gt += v;
  EXPECT_GE(static_cast<double>(m.matches) / gt, 0.9);
}

TEST(CliDetect, MissingModelInLbmMode) {
  const fs::path dir = fresh_dir("nomodel");
  save_image_png(dir / "a.png", MultiChannelImage(16, 16, 3, ColorSpace::kRgb, 0.4));
  const CliRun r = run("detect " + (dir / "a.png").string() + " --mode lbm-rbf");
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.output.find("--model"), std::string::npos) << r.output;
}

TEST(CliDetect, MissingImageIsRuntimeError) {
  const CliRun r = run("detect /nonexistent/image.png --mode chi2-equal --out " +
                    fresh_dir("missing").string());
  EXPECT_EQ(r.code, 1) << r.output;
}

TEST(CliSynth, DefaultSpecAndSeed) {
  const fs::path a = fresh_dir("synth_a"), b = fresh_dir("synth_b");
  ASSERT_EQ(run("synth --out " + a.string() + " --seed 4").code, 0);
  ASSERT_EQ(run("synth --out " + b.string() + " --seed 4").code, 0);
  const auto items = load_dataset(a);
  ASSERT_EQ(items.size(), 90u);
  const auto other = load_dataset(b);
  for (std::size_t i = 0; i < items.size(); ++i) {
    EXPECT_EQ(read_text(items[i].image), read_text(other[i].image));
    EXPECT_EQ(read_text(items[i].annotations[0]), read_text(other[i].annotations[0]));
  }
  // Atomic writes leave no temporaries behind.
  for (const auto& entry : fs::recursive_directory_iterator(a))
    EXPECT_EQ(entry.path().filename().string().find(".tmp"), std::string::npos);
}

TEST(CliSynth, InvalidKindListsValidOnes) {
  const CliRun r = run("synth --out " + fresh_dir("badkind").string() + " --kinds stripes");
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.output.find("brightness_step"), std::string::npos) << r.output;
  EXPECT_NE(r.output.find("texture_grating"), std::string::npos) << r.output;
}

TEST(CliUsage, UnknownFlagIsUsageError) {
  EXPECT_EQ(run("detect --bogus").code, 2);
  EXPECT_EQ(run("").code, 2);
}

TEST(CliTrain, ZeroLearningRateKeepsInitialModel) {
  const fs::path dir = fresh_dir("train_lr0");
  const fs::path model = dir / "m.txt";
  const CliRun r = run("train --data " + small_corpus().string() + " --out " + model.string() +
                    " --lr 0 --epochs 1 --images-per-epoch 1 --sgd-passes 1 --thresholds 5"
                    " --scale single:1 --seed 8");
  ASSERT_EQ(r.code, 0) << r.output;
  EXPECT_NE(r.output.find("warning"), std::string::npos);
  EXPECT_NE(r.output.find("best validation F"), std::string::npos);
  const ModelFile file = load_model(model);
  ASSERT_TRUE(file.metric);
  TrainConfig cfg;
  cfg.seed = 8;
  EXPECT_EQ(*file.metric, init_model(cfg, file.features));
  EXPECT_TRUE(fs::exists(model.string() + ".log.csv"));
}

TEST(CliEval, PerfectDetectionsScoreOne) {
  const fs::path dir = fresh_dir("perfect");
  const auto items = items_in(load_dataset(small_corpus()), Split::kTest);
  fs::create_directories(dir / "det");
  for (const auto& item : items)
    save_binary_png(dir / "det" / (item.id + ".png"), load_item(item).annotations[0]);
  const CliRun r = run("eval --data " + small_corpus().string() + " --detections " +
                    (dir / "det").string() + " --out " + (dir / "out").string());
  ASSERT_EQ(r.code, 0) << r.output;
  const std::string csv = read_text(dir / "out" / "summary.csv");
  EXPECT_DOUBLE_EQ(ods_from_summary(csv, "detections"), 1.0);
  const std::regex ois("detections,[0-9.]+,[0-9.]+,([0-9.]+),");
  std::smatch m;
  ASSERT_TRUE(std::regex_search(csv, m, ois));
  EXPECT_DOUBLE_EQ(std::stod(m[1]), 1.0);
}

TEST(CliEval, EqualAndLearnedChiSquareReports) {
  const fs::path dir = fresh_dir("chi2");
  const fs::path model = dir / "chi.txt";
  ASSERT_EQ(run("train --data " + small_corpus().string() + " --out " + model.string() +
                " --mode chi2-learned").code, 0);
  const CliRun r = run("eval --data " + small_corpus().string() + " --model " + model.string() +
                    " --mode chi2-equal,chi2-learned --out " + (dir / "out").string() +
                    " --thresholds 9");
  ASSERT_EQ(r.code, 0) << r.output;
  EXPECT_TRUE(fs::exists(dir / "out" / "chi2-equal_pr.csv"));
  EXPECT_TRUE(fs::exists(dir / "out" / "chi2-learned_pr.csv"));
  EXPECT_NE(read_text(dir / "out" / "summary.txt").find("ODS difference chi2-learned - chi2-equal"),
            std::string::npos);
}

TEST(CliEval, NoiseLowersOds) {
  const fs::path dir = fresh_dir("noise");
  const std::string base = "eval --data " + small_corpus().string() +
                           " --mode chi2-equal --thresholds 17 --out ";
  ASSERT_EQ(run(base + (dir / "clean").string()).code, 0);
  ASSERT_EQ(run(base + (dir / "noisy").string() + " --noise-var 0.01").code, 0);
  const double clean = ods_from_summary(read_text(dir / "clean" / "summary.csv"), "chi2-equal");
  const double noisy = ods_from_summary(read_text(dir / "noisy" / "summary.csv"), "chi2-equal");
  EXPECT_GT(clean, 0.0);
  EXPECT_LT(noisy, clean);
}

TEST(CliBench, ReportsStagesAndIsStable) {
  const fs::path dir = fresh_dir("bench");
  const fs::path img = dir / "img.png";
  CorpusSpec spec = default_corpus_spec();
  spec.width = 160;
  spec.height = 120;
  std::mt19937_64 rng(2);
  save_image_png(img, synth_image(SynthKind::kMixed, spec, rng).image);
  auto distance_ms = [](const std::string& out) {
    const std::regex row(R"(distance\s+([0-9.]+)\s+([0-9.]+))");
    std::smatch m;
    return std::regex_search(out, m, row) ? std::stod(m[1]) + std::stod(m[2]) : -1.0;
  };
  const CliRun a = run("bench --image " + img.string() + " --runs 5");
  const CliRun b = run("bench --image " + img.string() + " --runs 5");
  ASSERT_EQ(a.code, 0) << a.output;
  for (const char* stage : {"features", "distance", "postproc", "speedup"})
    EXPECT_NE(a.output.find(stage), std::string::npos) << stage;
  const double ta = distance_ms(a.output), tb = distance_ms(b.output);
  ASSERT_GT(ta, 0.0);
  EXPECT_LT(std::abs(ta - tb) / std::max(ta, tb), 0.3) << a.output << b.output;
}
