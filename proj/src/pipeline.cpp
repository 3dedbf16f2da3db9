#include "edgemetric/pipeline.hpp"

#include <algorithm>
#include <cmath>

#include "edgemetric/parallel.hpp"

namespace edgemetric {

TextonCodebook learn_texton_codebook(std::span<const MultiChannelImage> images,
                                     const TextonConfig& cfg) {
  require(!images.empty(), ErrorCode::kInvalidArgument,
          "no images to learn textons from");
  const FilterBank bank = cfg.bank();
  std::vector<MultiChannelImage> responses;
  responses.reserve(images.size());
  for (const auto& img : images) responses.push_back(filter_responses(to_gray(img), bank));
  return learn_codebook(responses, cfg.k, cfg.seed);
}

CueStack compute_cues(const MultiChannelImage& image, const FilterBank& bank,
                      const TextonCodebook& codebook, const CueBins& bins) {
  const MultiChannelImage rgb = to_rgb(image);
  const MultiChannelImage lab = rgb_to_lab(rgb);
  const TextonMap textons =
      assign_textons(filter_responses(to_gray(rgb), bank), codebook);
  return quantize_cues(lab, textons, bins);
}

Detection postprocess(const OrientedResponses& responses, double smooth_radius) {
  Detection det;
  det.raw = smooth(fuse_orientations(responses), smooth_radius);
  det.thinned = oriented_nms(det.raw);
  return det;
}

CueStack Detector::cues(const MultiChannelImage& image) const {
  return compute_cues(image, textons.bank(), codebook, features.bins);
}

OrientedResponses Detector::responses(const CueStack& cues) const {
  if (const auto* chi = std::get_if<ChiSquareModel>(&metric))
    return chi_square_responses(cues, features.scales, *chi);
  const auto& lbm = std::get<MetricModel>(metric);
  require(lbm.features == features, ErrorCode::kIncompatibleModel,
          "metric model was trained for a different feature configuration");
  return lbm_responses(cues, lbm);
}

Detection Detector::detect_cues(const CueStack& cues) const {
  return postprocess(responses(cues), smooth_radius);
}

Detection Detector::detect(const MultiChannelImage& image) const {
  return detect_cues(cues(image));
}

}  // namespace edgemetric
