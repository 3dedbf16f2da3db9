#pragma once

#include <string>
#include <vector>

#include "edgemetric/data.hpp"
#include "edgemetric/eval.hpp"
#include "edgemetric/model_io.hpp"
#include "edgemetric/pipeline.hpp"
#include "edgemetric/training.hpp"

namespace edgemetric {

/// Decoded images and annotations of one split.
struct LoadedSplit {
  std::vector<std::string> ids;
  std::vector<MultiChannelImage> images;
  std::vector<std::vector<BinaryMap>> annotations;

  std::size_t size() const { return images.size(); }
};

LoadedSplit load_split(const std::vector<DatasetItem>& items, Split split);

/// Independent Gaussian noise per image, seeded by seed + image index.
std::vector<MultiChannelImage> with_noise(const std::vector<MultiChannelImage>& images,
                                          double variance, std::uint64_t seed);

std::vector<CueStack> compute_all_cues(const std::vector<MultiChannelImage>& images,
                                       const TextonConfig& textons,
                                       const TextonCodebook& codebook,
                                       const CueBins& bins);

/// Thinned strength maps.
std::vector<RealMap> detect_all(const Detector& detector,
                                const std::vector<CueStack>& cues);

/// Detector from a model file. A chi-square metric is used when `use_lbm` is
/// false (equal weights unless the file holds learned ones and `learned`).
Detector make_detector(const ModelFile& model, bool use_lbm, bool learned,
                       double smooth_radius = 1.0);

struct LbmTraining {
  ModelFile model;
  TrainResult result;
};

/// Learns the texton codebook on the train images, then trains the metric.
LbmTraining train_lbm(const LoadedSplit& train, const LoadedSplit& val,
                      const FeatureConfig& features, const TextonConfig& textons,
                      const TrainConfig& cfg, double smooth_radius = 1.0,
                      const EpochCallback& on_epoch = {});

/// Learns the texton codebook and the chi-square weights on the train images.
ModelFile train_chi_square(const LoadedSplit& train, const FeatureConfig& features,
                           const TextonConfig& textons, std::uint64_t seed);

}  // namespace edgemetric
