#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "edgemetric/image.hpp"

namespace edgemetric {

enum class Split { kTrain, kVal, kTest };
inline constexpr std::array<Split, 3> kAllSplits = {Split::kTrain, Split::kVal, Split::kTest};
const char* to_string(Split split);
Split parse_split(const std::string& name);

struct DatasetItem {
  std::string id;
  std::filesystem::path image;
  std::vector<std::filesystem::path> annotations;  // sorted by annotator index
  Split split = Split::kTrain;
};

/// Reads `images/{split}/<id>.png` and `groundTruth/{split}/<id>_<k>.png`.
/// Every annotation is decoded and checked against its image's size.
std::vector<DatasetItem> load_dataset(const std::filesystem::path& root);
std::vector<DatasetItem> items_in(const std::vector<DatasetItem>& items, Split split);

struct LoadedItem {
  MultiChannelImage image;
  std::vector<BinaryMap> annotations;
};
LoadedItem load_item(const DatasetItem& item);

// ---------------------------------------------------------------------------
// Synthetic corpus
// ---------------------------------------------------------------------------

enum class SynthKind { kBrightnessStep, kColorStep, kTextureGrating, kMixed };
inline constexpr std::array<SynthKind, 4> kAllSynthKinds = {
    SynthKind::kBrightnessStep, SynthKind::kColorStep, SynthKind::kTextureGrating,
    SynthKind::kMixed};
const char* to_string(SynthKind kind);
/// Throws kInvalidArgument listing the valid names.
SynthKind parse_synth_kind(const std::string& name);
std::string synth_kind_names();

struct CorpusSpec {
  int width = 96;
  int height = 96;
  /// counts[split][kind]
  std::array<std::array<int, 4>, 3> counts{};
  double contrast_min = 0.25;
  double contrast_max = 0.6;
  double noise_std = 0.02;
  std::uint64_t seed = 1;

  int total() const;
  void validate() const;
};

/// 50 train / 20 val / 20 test at 96x96, kinds spread evenly.
CorpusSpec default_corpus_spec();

/// JSON object with optional keys
///   size      int or [width, height]
///   counts    {split: {kind: count}}
///   contrast  number or [min, max]
///   noise     Gaussian noise std
///   seed      integer
/// Missing keys keep their defaults. Throws kInvalidArgument.
CorpusSpec parse_corpus_spec(const std::string& json_text);
CorpusSpec load_corpus_spec(const std::filesystem::path& path);

struct SynthSample {
  MultiChannelImage image;  // RGB in [0,1]
  LabelMap regions;
  BinaryMap boundary;       // thinned region borders
};

/// Pixels whose region differs from the right or lower neighbour, thinned.
BinaryMap border_map(const LabelMap& regions);

/// Two regions split by the line through (cx, cy) with normal angle `phi`.
LabelMap line_regions(int width, int height, double cx, double cy, double phi);

/// Gray step: left of column `column` has value `base`, the rest base+contrast.
SynthSample vertical_step(int width, int height, int column, double base,
                          double contrast);

/// Two square-wave gratings of equal mean brightness and different
/// orientation on either side of a vertical border at `column`.
SynthSample grating_transition(int width, int height, int column, double mean,
                               double amplitude, int period);

SynthSample synth_image(SynthKind kind, const CorpusSpec& spec, std::mt19937_64& rng);

/// Writes the corpus under `root` (BSDS-like layout, one annotation per image)
/// and returns its items.
std::vector<DatasetItem> synth_generate(const CorpusSpec& spec,
                                        const std::filesystem::path& root);

}  // namespace edgemetric
