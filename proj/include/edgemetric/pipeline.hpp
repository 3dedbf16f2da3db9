#pragma once

#include <cstdint>
#include <span>
#include <variant>
#include <vector>

#include "edgemetric/features.hpp"
#include "edgemetric/imgproc.hpp"
#include "edgemetric/metric.hpp"
#include "edgemetric/postproc.hpp"

namespace edgemetric {

/// Texton filter bank and codebook settings.
struct TextonConfig {
  int n_orient = 8;
  std::vector<double> scales = {1.4, 2.8};
  int k = 32;
  std::uint64_t seed = 7;

  FilterBank bank() const { return make_filter_bank(n_orient, scales); }
  friend bool operator==(const TextonConfig&, const TextonConfig&) = default;
};

/// Codebook learned from the pooled filter responses of several RGB or gray
/// images (subsampled to at most 50k pixels).
TextonCodebook learn_texton_codebook(std::span<const MultiChannelImage> images,
                                     const TextonConfig& cfg);

/// Lab + texton cue labels of an RGB or gray image.
CueStack compute_cues(const MultiChannelImage& image, const FilterBank& bank,
                      const TextonCodebook& codebook, const CueBins& bins);

/// Chi-square distance stage: every (cue, scale) histogram pair is pooled
/// from one-hot bin prefix sums, then combined with the model weights.
OrientedResponses chi_square_responses(const CueStack& cues,
                                       const ScaleConfig& cfg,
                                       const ChiSquareModel& model);

/// Learned-metric distance stage. The logistic pre-activation is linear in
/// the histogram, so each scale pools an N-channel per-pixel projection
/// instead of the M histogram bins.
OrientedResponses lbm_responses(const CueStack& cues, const MetricModel& model);

using BoundaryMetric = std::variant<ChiSquareModel, MetricModel>;

struct Detection {
  BoundaryMap raw;      // fused and smoothed
  BoundaryMap thinned;  // after oriented NMS
};

/// Fusion, smoothing and oriented NMS.
Detection postprocess(const OrientedResponses& responses, double smooth_radius);

struct Detector {
  FeatureConfig features;
  TextonConfig textons;
  TextonCodebook codebook;
  BoundaryMetric metric;
  double smooth_radius = 1.0;

  CueStack cues(const MultiChannelImage& image) const;
  OrientedResponses responses(const CueStack& cues) const;
  Detection detect(const MultiChannelImage& image) const;
  Detection detect_cues(const CueStack& cues) const;
};

}  // namespace edgemetric
