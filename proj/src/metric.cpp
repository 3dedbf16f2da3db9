#include "edgemetric/metric.hpp"

#include <cmath>
#include <numeric>
#include <string>

namespace edgemetric {

double chi_square(std::span<const double> u, std::span<const double> v) {
  require(u.size() == v.size(), ErrorCode::kDimensionMismatch,
          "chi_square: histogram lengths differ");
  double d = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    require(u[i] >= 0.0 && v[i] >= 0.0, ErrorCode::kInvalidArgument,
            "chi_square: negative histogram entry");
    const double s = u[i] + v[i];
    if (s > 0.0) {
      const double t = u[i] - v[i];
      d += t * t / s;
    }
  }
  return 0.5 * d;
}

ChiSquareModel ChiSquareModel::equal(int scales) {
  require(scales >= 1, ErrorCode::kInvalidArgument, "need at least one scale");
  ChiSquareModel model;
  model.mode = Mode::kEqual;
  model.scales = scales;
  model.weights.assign(static_cast<std::size_t>(kCueCount) * scales,
                       1.0 / (kCueCount * scales));
  return model;
}

void ChiSquareModel::validate() const {
  require(scales >= 1 &&
              weights.size() == static_cast<std::size_t>(kCueCount) * scales,
          ErrorCode::kCorruptModel, "chi-square weight grid has the wrong size");
  for (double w : weights)
    require(std::isfinite(w) && w >= 0.0, ErrorCode::kCorruptModel,
            "chi-square weights must be finite and >= 0");
  if (mode == Mode::kEqual)
    for (double w : weights)
      require(w == weights.front(), ErrorCode::kCorruptModel,
              "equal-mode weights must be identical");
}

double chi_square_combined(std::span<const double> distances,
                           const ChiSquareModel& model) {
  require(distances.size() == model.weights.size(), ErrorCode::kDimensionMismatch,
          "chi_square_combined: grid size does not match the weights");
  double d = 0.0;
  for (std::size_t i = 0; i < distances.size(); ++i) d += model.weights[i] * distances[i];
  return d;
}

std::array<double, kCueCount> chi_square_per_cue(const HalfDiskPair& pair,
                                                 const CueBins& bins) {
  require(pair.u.size() == static_cast<std::size_t>(total_bins(bins)),
          ErrorCode::kDimensionMismatch, "histogram length does not match bins");
  std::array<double, kCueCount> out{};
  std::size_t off = 0;
  for (int c = 0; c < kCueCount; ++c) {
    const std::size_t len = bins[c];
    out[c] = chi_square(std::span(pair.u).subspan(off, len),
                        std::span(pair.v).subspan(off, len));
    off += len;
  }
  return out;
}

const char* to_string(KernelType kernel) {
  return kernel == KernelType::kRbf ? "rbf" : "linear";
}

void MetricModel::validate() const {
  require(n >= 1, ErrorCode::kCorruptModel, "output dimension N must be >= 1");
  require(std::isfinite(sigma) && sigma > 0.0, ErrorCode::kCorruptModel,
          "sigma must be > 0");
  require(m == features.total_bins(), ErrorCode::kCorruptModel,
          "input dimension M does not match the histogram bins");
  require(scale_count() == features.scales.scales(), ErrorCode::kCorruptModel,
          "parameter sets do not match the configured scales");
  for (const auto& p : scales) {
    require(p.alpha.size() == static_cast<std::size_t>(n) &&
                p.beta.size() == static_cast<std::size_t>(n) * m,
            ErrorCode::kCorruptModel, "logistic parameter shapes are inconsistent");
    for (double a : p.alpha)
      require(std::isfinite(a), ErrorCode::kCorruptModel, "non-finite alpha");
    for (double b : p.beta)
      require(std::isfinite(b), ErrorCode::kCorruptModel, "non-finite beta");
  }
}

MetricModel zero_model(const FeatureConfig& features, KernelType kernel, int n,
                       double sigma) {
  MetricModel model;
  model.kernel = kernel;
  model.sigma = sigma;
  model.n = n;
  model.m = features.total_bins();
  model.features = features;
  model.scales.assign(features.scales.scales(),
                      ScaleParams{std::vector<double>(n, 0.0),
                                  std::vector<double>(static_cast<std::size_t>(n) *
                                                      model.m, 0.0)});
  model.validate();
  return model;
}

double logistic(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

void logistic_transform(std::span<const double> u, std::span<const double> alpha,
                        std::span<const double> beta, std::span<double> out) {
  const std::size_t n = alpha.size();
  const std::size_t m = u.size();
  require(beta.size() == n * m && out.size() == n, ErrorCode::kDimensionMismatch,
          "logistic_transform: parameter dimensions do not match");
  for (std::size_t i = 0; i < n; ++i) {
    const double* row = beta.data() + i * m;
    double z = alpha[i];
    for (std::size_t j = 0; j < m; ++j) z += row[j] * u[j];
    out[i] = logistic(z);
  }
}

std::vector<double> logistic_transform(std::span<const double> u,
                                       std::span<const double> alpha,
                                       std::span<const double> beta) {
  std::vector<double> out(alpha.size());
  logistic_transform(u, alpha, beta, out);
  return out;
}

double kernel_distance(std::span<const double> a, std::span<const double> b,
                       KernelType kernel, double sigma) {
  require(a.size() == b.size() && !a.empty(), ErrorCode::kDimensionMismatch,
          "kernel_distance: vector lengths differ");
  if (kernel == KernelType::kLinear) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += std::abs(a[i] - b[i]);
    return s / static_cast<double>(a.size());
  }
  require(sigma > 0.0, ErrorCode::kInvalidArgument, "kernel sigma must be > 0");
  double q = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double t = a[i] - b[i];
    q += t * t;
  }
  return -std::expm1(-q / (2.0 * sigma * sigma));
}

double kernel_distance(std::span<const double> a, std::span<const double> b,
                       const MetricModel& model) {
  require(a.size() == static_cast<std::size_t>(model.n),
          ErrorCode::kDimensionMismatch, "kernel_distance: expected N values");
  return kernel_distance(a, b, model.kernel, model.sigma);
}

double lbm_distance(std::span<const double> u, std::span<const double> v,
                    const MetricModel& model, int scale) {
  require(scale >= 0 && scale < model.scale_count(), ErrorCode::kOutOfRange,
          "lbm_distance: scale index out of range");
  require(u.size() == static_cast<std::size_t>(model.m) && v.size() == u.size(),
          ErrorCode::kDimensionMismatch, "lbm_distance: expected M-length histograms");
  const ScaleParams& p = model.scales[scale];
  const auto tu = logistic_transform(u, p.alpha, p.beta);
  const auto tv = logistic_transform(v, p.alpha, p.beta);
  return kernel_distance(tu, tv, model);
}

double lbm_combined(std::span<const double> per_scale) {
  require(!per_scale.empty(), ErrorCode::kInvalidArgument,
          "lbm_combined: no scale distances");
  return std::accumulate(per_scale.begin(), per_scale.end(), 0.0) /
         static_cast<double>(per_scale.size());
}

}  // namespace edgemetric
