#include "edgemetric/workflow.hpp"

#include "edgemetric/imgproc.hpp"
#include "edgemetric/png_io.hpp"

namespace edgemetric {

LoadedSplit load_split(const std::vector<DatasetItem>& items, Split split) {
  LoadedSplit out;
  for (const auto& item : items) {
    if (item.split != split) continue;
    LoadedItem loaded = load_item(item);
    out.ids.push_back(item.id);
    out.images.push_back(std::move(loaded.image));
    out.annotations.push_back(std::move(loaded.annotations));
  }
  return out;
}

std::vector<MultiChannelImage> with_noise(const std::vector<MultiChannelImage>& images,
                                          double variance, std::uint64_t seed) {
  std::vector<MultiChannelImage> out;
  out.reserve(images.size());
  for (std::size_t i = 0; i < images.size(); ++i)
    out.push_back(add_gaussian_noise(images[i], variance, seed + i));
  return out;
}

std::vector<CueStack> compute_all_cues(const std::vector<MultiChannelImage>& images,
                                       const TextonConfig& textons,
                                       const TextonCodebook& codebook,
                                       const CueBins& bins) {
  const FilterBank bank = textons.bank();
  std::vector<CueStack> out;
  out.reserve(images.size());
  for (const auto& img : images) out.push_back(compute_cues(img, bank, codebook, bins));
  return out;
}

std::vector<RealMap> detect_all(const Detector& detector,
                                const std::vector<CueStack>& cues) {
  std::vector<RealMap> out;
  out.reserve(cues.size());
  for (const auto& c : cues) out.push_back(detector.detect_cues(c).thinned.strength);
  return out;
}

Detector make_detector(const ModelFile& model, bool use_lbm, bool learned,
                       double smooth_radius) {
  require(model.codebook.has_value(), ErrorCode::kIncompatibleModel,
          "model file holds no texton codebook");
  Detector d;
  d.features = model.features;
  d.textons = model.textons.value_or(TextonConfig{});
  d.codebook = *model.codebook;
  d.smooth_radius = smooth_radius;
  if (use_lbm) {
    require(model.metric.has_value(), ErrorCode::kIncompatibleModel,
            "model file holds no learned metric");
    d.metric = *model.metric;
  } else if (learned) {
    require(model.chi_square.has_value() &&
                model.chi_square->mode == ChiSquareModel::Mode::kLearned,
            ErrorCode::kIncompatibleModel, "model file holds no learned chi-square weights");
    d.metric = *model.chi_square;
  } else {
    d.metric = ChiSquareModel::equal(model.features.scales.scales());
  }
  return d;
}

LbmTraining train_lbm(const LoadedSplit& train, const LoadedSplit& val,
                      const FeatureConfig& features, const TextonConfig& textons,
                      const TrainConfig& cfg, double smooth_radius,
                      const EpochCallback& on_epoch) {
  require(train.size() > 0 && val.size() > 0, ErrorCode::kDataset,
          "training needs train and val images");
  LbmTraining out;
  out.model.features = features;
  out.model.textons = textons;
  out.model.codebook = learn_texton_codebook(train.images, textons);

  TrainingCorpus corpus;
  corpus.train_cues = compute_all_cues(train.images, textons, *out.model.codebook, features.bins);
  corpus.train_annotations = train.annotations;
  corpus.val_cues = compute_all_cues(val.images, textons, *out.model.codebook, features.bins);
  corpus.val_annotations = val.annotations;

  out.result = edgemetric::train(corpus, features, cfg, smooth_radius, on_epoch);
  out.model.metric = out.result.model;
  return out;
}

ModelFile train_chi_square(const LoadedSplit& train, const FeatureConfig& features,
                           const TextonConfig& textons, std::uint64_t seed) {
  require(train.size() > 0, ErrorCode::kDataset, "training needs train images");
  ModelFile out;
  out.features = features;
  out.textons = textons;
  out.codebook = learn_texton_codebook(train.images, textons);
  const auto cues = compute_all_cues(train.images, textons, *out.codebook, features.bins);
  const auto samples = chi_square_samples(cues, train.annotations, features.scales, 0.0, seed);
  out.chi_square = fit_chi_square_weights(samples);
  return out;
}

}  // namespace edgemetric
