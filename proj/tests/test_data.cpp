#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <set>

#include "edgemetric/data.hpp"
#include "edgemetric/metric.hpp"
#include "edgemetric/pipeline.hpp"
#include "edgemetric/png_io.hpp"
#include "edgemetric/training.hpp"

using namespace edgemetric;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& name) {
  const fs::path dir = fs::path(EDGEMETRIC_TEST_TMP) / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

void write_item(const fs::path& root, const std::string& split, const std::string& id,
                int w, int h, int annotations, int ann_w = -1) {
  fs::create_directories(root / "images" / split);
  fs::create_directories(root / "groundTruth" / split);
  save_image_png(root / "images" / split / (id + ".png"),
                 MultiChannelImage(w, h, 3, ColorSpace::kRgb, 0.5));
  for (int k = 1; k <= annotations; ++k)
    save_binary_png(root / "groundTruth" / split / (id + "_" + std::to_string(k) + ".png"),
                    BinaryMap(ann_w > 0 ? ann_w : w, h));
}

CorpusSpec small_spec() {
  CorpusSpec spec = default_corpus_spec();
  spec.width = spec.height = 40;
  for (auto& split : spec.counts) split = {1, 1, 1, 1};
  spec.seed = 77;
  return spec;
}

std::string read_bytes(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

}  // namespace

TEST(LoadDataset, EmptyRoot) {
  EXPECT_TRUE(load_dataset(fresh_dir("empty")).empty());
}

TEST(LoadDataset, GroupsAnnotations) {
  const fs::path root = fresh_dir("one_item");
  write_item(root, "train", "img", 12, 10, 3);
  const auto items = load_dataset(root);
  ASSERT_EQ(items.size(), 1u);
  EXPECT_EQ(items[0].id, "img");
  EXPECT_EQ(items[0].split, Split::kTrain);
  ASSERT_EQ(items[0].annotations.size(), 3u);
  EXPECT_EQ(items[0].annotations[0].filename(), "img_1.png");
  EXPECT_EQ(items[0].annotations[2].filename(), "img_3.png");
  const LoadedItem loaded = load_item(items[0]);
  EXPECT_EQ(loaded.annotations.size(), 3u);
  EXPECT_EQ(loaded.image.width(), 12);
}

TEST(LoadDataset, WrongAnnotationSizeNamesFile) {
  const fs::path root = fresh_dir("bad_size");
  write_item(root, "val", "pic", 12, 10, 1, 11);
  try {
    load_dataset(root);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kDataset);
    EXPECT_NE(std::string(e.what()).find("pic_1.png"), std::string::npos);
  }
}

TEST(LoadDataset, ImageWithoutAnnotations) {
  const fs::path root = fresh_dir("no_ann");
  write_item(root, "test", "lonely", 8, 8, 0);
  try {
    load_dataset(root);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kDataset);
  }
}

TEST(LoadDataset, UndecodableImage) {
  const fs::path root = fresh_dir("undecodable");
  write_item(root, "train", "x", 8, 8, 1);
  write_file_atomically(root / "groundTruth" / "train" / "x_1.png", "junk");
  EXPECT_THROW(load_dataset(root), Error);
}

TEST(Synth, VerticalStepBorderColumn) {
  const SynthSample s = vertical_step(20, 16, 9, 0.25, 0.5);
  for (int y = 0; y < 16; ++y)
    for (int x = 0; x < 20; ++x) EXPECT_EQ(s.boundary(x, y), x == 8 ? 1 : 0);
}

TEST(Synth, GratingTransitionNeedsTextons) {
  const SynthSample s = grating_transition(96, 96, 48, 0.5, 0.3, 6);
  const TextonConfig tcfg;
  const TextonCodebook book = learn_texton_codebook(std::span(&s.image, 1), tcfg);
  const CueStack cues = compute_cues(s.image, tcfg.bank(), book, kDefaultCueBins);
  const ScaleConfig cfg = default_scale_config();
  double l_sum = 0.0, t_sum = 0.0;
  int n = 0;
  for (int y = 20; y < 76; y += 4) {
    // Vertical orientation (index 4) at the border column, radius 10.
    const auto d = chi_square_per_cue(half_disk_histograms(cues, 47, y, 4, 2, cfg),
                                      cues.bins);
    l_sum += d[kCueL];
    t_sum += d[kCueTexton];
    ++n;
  }
  EXPECT_LT(l_sum / n, 0.05);
  EXPECT_GT(t_sum / n, 0.3);
}

TEST(Synth, GroundTruthIsThin) {
  const CorpusSpec spec = small_spec();
  std::mt19937_64 rng(5);
  for (SynthKind kind : kAllSynthKinds)
    for (int rep = 0; rep < 3; ++rep) {
      const SynthSample s = synth_image(kind, spec, rng);
      BoundaryMap map{RealMap(spec.width, spec.height),
                      Grid<int>(spec.width, spec.height), 8, true};
      for (int y = 0; y < spec.height; ++y)
        for (int x = 0; x < spec.width; ++x)
          if (s.boundary(x, y)) {
            map.strength(x, y) = 1.0;
            map.orientation(x, y) = annotation_orientation(s.boundary, x, y, 8);
          }
      EXPECT_EQ(count_thinning_violations(map), 0u);
      // No solid 2x2 blocks.
      for (int y = 0; y + 1 < spec.height; ++y)
        for (int x = 0; x + 1 < spec.width; ++x)
          EXPECT_FALSE(s.boundary(x, y) && s.boundary(x + 1, y) &&
                       s.boundary(x, y + 1) && s.boundary(x + 1, y + 1));
    }
}

TEST(Synth, DeterministicCorpus) {
  const CorpusSpec spec = small_spec();
  const fs::path a = fresh_dir("synth_a"), b = fresh_dir("synth_b");
  const auto items_a = synth_generate(spec, a);
  const auto items_b = synth_generate(spec, b);
  ASSERT_EQ(items_a.size(), 12u);
  for (std::size_t i = 0; i < items_a.size(); ++i) {
    EXPECT_EQ(items_a[i].id, items_b[i].id);
    EXPECT_EQ(read_bytes(items_a[i].image), read_bytes(items_b[i].image));
    EXPECT_EQ(read_bytes(items_a[i].annotations[0]), read_bytes(items_b[i].annotations[0]));
  }
}

TEST(Synth, SplitsDisjointAndExhaustive) {
  const CorpusSpec spec = small_spec();
  const fs::path root = fresh_dir("synth_split");
  synth_generate(spec, root);
  const auto items = load_dataset(root);
  EXPECT_EQ(static_cast<int>(items.size()), spec.total());
  std::set<std::string> ids;
  for (const auto& item : items) EXPECT_TRUE(ids.insert(item.id).second) << item.id;
  for (Split s : kAllSplits) EXPECT_EQ(items_in(items, s).size(), 4u);
}

TEST(Synth, DefaultSpecSize) {
  const CorpusSpec spec = default_corpus_spec();
  EXPECT_EQ(spec.total(), 90);
  EXPECT_EQ(spec.width, 96);
  int train = 0;
  for (int c : spec.counts[0]) train += c;
  EXPECT_EQ(train, 50);
}

TEST(CorpusSpec, ParseKeys) {
  const CorpusSpec spec = parse_corpus_spec(
      R"({"size": [64, 48], "counts": {"train": {"mixed": 3}}, "contrast": [0.3, 0.5],
          "noise": 0.0, "seed": 9})");
  EXPECT_EQ(spec.width, 64);
  EXPECT_EQ(spec.height, 48);
  EXPECT_EQ(spec.counts[0][3], 3);
  EXPECT_EQ(spec.seed, 9u);
  EXPECT_DOUBLE_EQ(spec.contrast_min, 0.3);
}

TEST(CorpusSpec, InvalidInput) {
  EXPECT_THROW(parse_corpus_spec(R"({"colour": 1})"), Error);
  EXPECT_THROW(parse_corpus_spec(R"({"counts": {"train": {"stripes": 1}}})"), Error);
  EXPECT_THROW(parse_corpus_spec("not json"), Error);
  try {
    parse_synth_kind("stripes");
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("texture_grating"), std::string::npos);
  }
}
