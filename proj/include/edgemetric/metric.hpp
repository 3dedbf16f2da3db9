#pragma once

#include <span>
#include <vector>

#include "edgemetric/features.hpp"

namespace edgemetric {

// ---------------------------------------------------------------------------
// Chi-square baseline
// ---------------------------------------------------------------------------

/// 1/2 * sum (u - v)^2 / (u + v); bins where u + v == 0 contribute nothing.
double chi_square(std::span<const double> u, std::span<const double> v);

/// Per-(cue, scale) weights, stored cue-major: weights[c * scales + s].
struct ChiSquareModel {
  enum class Mode { kLearned, kEqual };

  Mode mode = Mode::kEqual;
  int scales = 0;
  std::vector<double> weights;

  static ChiSquareModel equal(int scales);
  double weight(int cue, int scale) const {
    return weights[static_cast<std::size_t>(cue) * scales + scale];
  }
  void validate() const;
  friend bool operator==(const ChiSquareModel&, const ChiSquareModel&) = default;
};

/// Weighted sum of the (cue, scale) distance grid laid out like the weights.
double chi_square_combined(std::span<const double> distances,
                           const ChiSquareModel& model);

/// Per-cue chi-square distances of one half-disk pair, cue order L a b texton.
std::array<double, kCueCount> chi_square_per_cue(const HalfDiskPair& pair,
                                                 const CueBins& bins);

// ---------------------------------------------------------------------------
// Learned metric
// ---------------------------------------------------------------------------

enum class KernelType { kRbf, kLinear };

const char* to_string(KernelType kernel);

inline constexpr int kDefaultOutputDim = 16;
inline constexpr double kDefaultSigma = 0.2;
/// Distances entering the log loss are clamped to [eps, 1 - eps].
inline constexpr double kDistanceEps = 1e-12;

/// Logistic layer of one scale: N outputs over M = total histogram bins.
struct ScaleParams {
  std::vector<double> alpha;  // N
  std::vector<double> beta;   // N x M, row-major

  friend bool operator==(const ScaleParams&, const ScaleParams&) = default;
};

struct MetricModel {
  KernelType kernel = KernelType::kRbf;
  double sigma = kDefaultSigma;
  int n = kDefaultOutputDim;
  int m = 0;
  FeatureConfig features;
  std::vector<ScaleParams> scales;  // one per configured radius

  int scale_count() const { return static_cast<int>(scales.size()); }
  /// Throws kCorruptModel when any invariant fails.
  void validate() const;
  friend bool operator==(const MetricModel&, const MetricModel&) = default;
};

/// A model with every parameter zero, sized for `features`.
MetricModel zero_model(const FeatureConfig& features, KernelType kernel,
                       int n = kDefaultOutputDim, double sigma = kDefaultSigma);

/// out_n = 1 / (1 + exp(-alpha_n - sum_m beta_nm * u_m)).
void logistic_transform(std::span<const double> u, std::span<const double> alpha,
                        std::span<const double> beta, std::span<double> out);
std::vector<double> logistic_transform(std::span<const double> u,
                                       std::span<const double> alpha,
                                       std::span<const double> beta);

/// Numerically safe logistic of a pre-activation.
double logistic(double z);

/// RBF: 1 - exp(-|a - b|^2 / (2 sigma^2)). Linear: mean |a_n - b_n|.
double kernel_distance(std::span<const double> a, std::span<const double> b,
                       KernelType kernel, double sigma);
double kernel_distance(std::span<const double> a, std::span<const double> b,
                       const MetricModel& model);

/// Kernel distance between the transformed histograms of one scale.
double lbm_distance(std::span<const double> u, std::span<const double> v,
                    const MetricModel& model, int scale);

/// Mean over scales.
double lbm_combined(std::span<const double> per_scale);

inline double clamp_distance(double d) {
  return d < kDistanceEps ? kDistanceEps
                          : (d > 1.0 - kDistanceEps ? 1.0 - kDistanceEps : d);
}

}  // namespace edgemetric
