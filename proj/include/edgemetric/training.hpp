#pragma once

#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "edgemetric/eval.hpp"
#include "edgemetric/metric.hpp"
#include "edgemetric/pipeline.hpp"

namespace edgemetric {

struct TrainingSample {
  std::vector<std::vector<double>> u;  // per scale, length M
  std::vector<std::vector<double>> v;
  int label = 0;  // 1 = boundary
  int image = -1;
  int x = 0;
  int y = 0;
  int orientation = 0;
};

/// Which loss drives the SGD updates.
///  kCombined: log loss of the scale-averaged distance.
///  kPerScale: each scale's parameters follow the log loss of that scale's
///             own distance, so scales are learned independently.
enum class Objective { kCombined, kPerScale };

struct TrainConfig {
  double learning_rate = 1e-4;
  int n = kDefaultOutputDim;
  double sigma = kDefaultSigma;
  KernelType kernel = KernelType::kRbf;
  double init_range = 1.0;
  int patience = 5;
  int max_epochs = 40;
  int images_per_epoch = 20;
  /// Shuffled SGD passes over each image's samples before the next image.
  int sgd_passes = 16;
  double min_improvement = 0.001;
  double detection_threshold = 0.3;
  /// <= 0 selects default_tolerance per image.
  double tolerance = 0.0;
  std::vector<double> validation_thresholds = default_thresholds();
  Objective objective = Objective::kPerScale;
  std::uint64_t seed = 1;

  void validate() const;
};

/// alpha and beta drawn i.i.d. from U[-init_range, init_range].
MetricModel init_model(const TrainConfig& cfg, const FeatureConfig& features);

/// -[y log d + (1 - y) log(1 - d)] with d clamped to [eps, 1 - eps].
double log_loss(double distance, int label);

/// Per-scale LBM distances of one sample.
std::vector<double> sample_scale_distances(const TrainingSample& sample,
                                           const MetricModel& model);
double sample_distance(const TrainingSample& sample, const MetricModel& model);

/// Sum of log losses of the scale-averaged distance over the samples.
double loss(std::span<const TrainingSample> samples, const MetricModel& model);

/// Value of the chosen objective for one sample (kCombined equals loss()).
double objective_value(const TrainingSample& sample, const MetricModel& model,
                       Objective objective);

/// Parameter-shaped gradient container.
struct ModelGradient {
  std::vector<ScaleParams> scales;
};

/// Analytic gradient of objective_value with respect to every alpha and beta.
ModelGradient gradients(const TrainingSample& sample, const MetricModel& model,
                        Objective objective = Objective::kCombined);

void sgd_step(MetricModel& model, const ModelGradient& grad, double learning_rate);

/// Sample pair of one pixel at one orientation, all scales of `cfg`.
TrainingSample make_sample(const CueStack& cues, const ScaleConfig& cfg, int x,
                           int y, int orientation, int label);

/// Detection pixels (thinned strength >= threshold) and which of them match
/// any annotation within the tolerance.
struct LabelledDetections {
  BinaryMap detections;
  BinaryMap matched;
};
LabelledDetections label_detections(const BoundaryMap& thinned,
                                    const std::vector<BinaryMap>& annotations,
                                    double tolerance, double threshold);

/// Matched detections become positives and unmatched ones negatives, each at
/// the pixel's argmax orientation. Negatives are subsampled to the positive
/// count.
std::vector<TrainingSample> generate_samples(
    const BoundaryMap& thinned, const std::vector<BinaryMap>& annotations,
    double tolerance, double threshold, const CueStack& cues,
    const ScaleConfig& cfg, std::mt19937_64& rng);

/// Orientation index of the annotation curve through (x, y), from the
/// principal axis of annotation pixels within a small radius.
int annotation_orientation(const BinaryMap& annotation, int x, int y, int n_orient);

/// Cold-start sampling: positives at annotation pixels (orientation from the
/// annotation), negatives at random pixels farther than the tolerance from any
/// annotation, at the orientation `negative_orientation` picks.
std::vector<TrainingSample> annotation_samples(
    const std::vector<BinaryMap>& annotations, double tolerance,
    const CueStack& cues, const ScaleConfig& cfg,
    const Grid<int>& negative_orientation, std::mt19937_64& rng,
    std::size_t max_positives = 400);

/// Cue stacks and annotations of the train and validation images.
struct TrainingCorpus {
  std::vector<CueStack> train_cues;
  std::vector<std::vector<BinaryMap>> train_annotations;
  std::vector<CueStack> val_cues;
  std::vector<std::vector<BinaryMap>> val_annotations;
};

struct EpochLog {
  int epoch = 0;
  double mean_loss = 0.0;
  double smoothed_loss = 0.0;  // epoch mean of the 100-sample moving average
  double validation_f = 0.0;
  std::size_t samples = 0;
};

struct TrainResult {
  MetricModel model;          // best validation F
  MetricModel initial_model;
  std::vector<EpochLog> log;  // epoch 0 = initial model, no updates
  std::vector<double> sample_losses;  // loss of every update, in order
  double best_validation_f = 0.0;
  int best_epoch = 0;
};

using EpochCallback = std::function<void(const EpochLog&)>;

/// ODS-F of a model over a set of cue stacks.
double validation_f(const MetricModel& model, const std::vector<CueStack>& cues,
                    const std::vector<std::vector<BinaryMap>>& annotations,
                    double smooth_radius, const TrainConfig& cfg);

/// SGD loop: each step picks a random training image, detects with the current
/// model, generates samples and applies per-sample updates. An epoch is
/// images_per_epoch steps followed by validation; training stops once the
/// validation F has not improved by min_improvement for `patience` epochs.
/// The first epoch (and any image whose detections yield no positives) uses
/// annotation_samples. Validation annotations never feed an update.
TrainResult train(const TrainingCorpus& corpus, const FeatureConfig& features,
                  const TrainConfig& cfg, double smooth_radius = 1.0,
                  const EpochCallback& on_epoch = {});

std::string training_log_csv(const std::vector<EpochLog>& log);

// ---------------------------------------------------------------------------
// Chi-square weights
// ---------------------------------------------------------------------------

struct ChiSquareSample {
  std::vector<double> distances;  // cue-major (cue, scale) grid
  int label = 0;
};

/// Distances of annotation pixels (positives) and random far pixels at their
/// strongest equal-weight orientation (negatives).
std::vector<ChiSquareSample> chi_square_samples(
    const std::vector<CueStack>& cues,
    const std::vector<std::vector<BinaryMap>>& annotations,
    const ScaleConfig& cfg, double tolerance, std::uint64_t seed,
    std::size_t per_image = 200);

/// L2-regularised logistic regression of the labels on the distances. Weights
/// are the coefficients clamped at 0 and renormalised to sum to 1.
ChiSquareModel fit_chi_square_weights(std::span<const ChiSquareSample> samples,
                                      double l2 = 1e-3);

}  // namespace edgemetric
