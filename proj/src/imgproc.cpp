#include "edgemetric/imgproc.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <random>

#include "edgemetric/parallel.hpp"

namespace edgemetric {
namespace {

constexpr double kRgbToXyz[3][3] = {
    {0.4124564, 0.3575761, 0.1804375},
    {0.2126729, 0.7151522, 0.0721750},
    {0.0193339, 0.1191920, 0.9503041},
};

// White point taken as the matrix row sums so that r = g = b lands exactly on
// the neutral axis.
constexpr double kWhite[3] = {
    kRgbToXyz[0][0] + kRgbToXyz[0][1] + kRgbToXyz[0][2],
    kRgbToXyz[1][0] + kRgbToXyz[1][1] + kRgbToXyz[1][2],
    kRgbToXyz[2][0] + kRgbToXyz[2][1] + kRgbToXyz[2][2],
};

double srgb_to_linear(double c) {
  return c <= 0.04045 ? c / 12.92 : std::pow((c + 0.055) / 1.055, 2.4);
}

double lab_f(double t) {
  constexpr double delta = 6.0 / 29.0;
  return t > delta * delta * delta ? std::cbrt(t)
                                   : t / (3.0 * delta * delta) + 4.0 / 29.0;
}

double rescale_chroma(double v) {
  return (std::clamp(v, kLabChromaMin, kLabChromaMax) - kLabChromaMin) /
         (kLabChromaMax - kLabChromaMin);
}

Kernel make_kernel(KernelKind kind, double theta, double sigma,
                   double elongation) {
  Kernel k;
  k.kind = kind;
  k.orientation = theta;
  k.scale = sigma;
  const double sigma_u = kind == KernelKind::kCenterSurround ? sigma
                                                             : sigma * elongation;
  const double support = kind == KernelKind::kCenterSurround
                             ? 3.0 * sigma * std::numbers::sqrt2
                             : 3.0 * std::max(sigma, sigma_u);
  k.radius = static_cast<int>(std::ceil(support));
  const int side = 2 * k.radius + 1;
  k.taps.resize(static_cast<std::size_t>(side) * side);

  const double c = std::cos(theta);
  const double s = std::sin(theta);
  for (int dy = -k.radius; dy <= k.radius; ++dy) {
    for (int dx = -k.radius; dx <= k.radius; ++dx) {
      // u along the orientation, v along its normal; rows grow downward.
      const double u = dx * c - dy * s;
      const double v = -dx * s - dy * c;
      double value = 0.0;
      switch (kind) {
        case KernelKind::kEven: {
          const double g = std::exp(-0.5 * (u * u / (sigma_u * sigma_u) +
                                            v * v / (sigma * sigma)));
          value = g * (v * v / (sigma * sigma) - 1.0);
          break;
        }
        case KernelKind::kOdd: {
          const double g = std::exp(-0.5 * (u * u / (sigma_u * sigma_u) +
                                            v * v / (sigma * sigma)));
          value = -g * v / sigma;
          break;
        }
        case KernelKind::kCenterSurround: {
          const double r2 = u * u + v * v;
          const double outer = sigma * std::numbers::sqrt2;
          value = std::exp(-0.5 * r2 / (sigma * sigma)) / (sigma * sigma) -
                  std::exp(-0.5 * r2 / (outer * outer)) / (outer * outer);
          break;
        }
      }
      k.taps[static_cast<std::size_t>(dy + k.radius) * side + dx + k.radius] = value;
    }
  }

  const double mean =
      std::accumulate(k.taps.begin(), k.taps.end(), 0.0) / k.taps.size();
  for (double& t : k.taps) t -= mean;
  double l1 = 0.0;
  for (double t : k.taps) l1 += std::abs(t);
  for (double& t : k.taps) t /= l1;
  return k;
}

int reflect(int i, int n) {
  // Symmetric extension: -1 -> 0, n -> n-1. Loops for very small images.
  while (i < 0 || i >= n) {
    if (i < 0) i = -i - 1;
    if (i >= n) i = 2 * n - i - 1;
  }
  return i;
}

double squared_distance(const double* a, const double* b, int dim) {
  double d = 0.0;
  for (int i = 0; i < dim; ++i) {
    const double t = a[i] - b[i];
    d += t * t;
  }
  return d;
}

int nearest(const double* point, const std::vector<double>& centroids, int k,
            int dim, double* best_distance = nullptr) {
  int best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (int c = 0; c < k; ++c) {
    const double d =
        squared_distance(point, centroids.data() + static_cast<std::size_t>(c) * dim, dim);
    if (d < best_d) {
      best_d = d;
      best = c;
    }
  }
  if (best_distance) *best_distance = best_d;
  return best;
}

}  // namespace

std::array<double, 3> srgb_to_cielab(double r, double g, double b) {
  const double lin[3] = {srgb_to_linear(r), srgb_to_linear(g), srgb_to_linear(b)};
  double f[3];
  for (int i = 0; i < 3; ++i) {
    const double xyz = kRgbToXyz[i][0] * lin[0] + kRgbToXyz[i][1] * lin[1] +
                       kRgbToXyz[i][2] * lin[2];
    f[i] = lab_f(xyz / kWhite[i]);
  }
  return {116.0 * f[1] - 16.0, 500.0 * (f[0] - f[1]), 200.0 * (f[1] - f[2])};
}

MultiChannelImage rgb_to_lab(const MultiChannelImage& rgb) {
  require(rgb.color_space() == ColorSpace::kRgb && rgb.channels() == 3,
          ErrorCode::kColorSpace,
          std::string("rgb_to_lab expects an RGB image, got ") +
              to_string(rgb.color_space()));
  MultiChannelImage lab(rgb.width(), rgb.height(), 3, ColorSpace::kLab);
  for (int y = 0; y < rgb.height(); ++y) {
    for (int x = 0; x < rgb.width(); ++x) {
      const auto p = rgb.pixel(x, y);
      const auto v = srgb_to_cielab(p[0], p[1], p[2]);
      auto q = lab.pixel(x, y);
      q[0] = std::clamp(v[0] / 100.0, 0.0, 1.0);
      q[1] = rescale_chroma(v[1]);
      q[2] = rescale_chroma(v[2]);
    }
  }
  return lab;
}

MultiChannelImage to_gray(const MultiChannelImage& img) {
  if (img.color_space() == ColorSpace::kGray) return img;
  require(img.color_space() == ColorSpace::kRgb && img.channels() == 3,
          ErrorCode::kColorSpace, "to_gray expects an RGB or gray image");
  MultiChannelImage gray(img.width(), img.height(), 1, ColorSpace::kGray);
  for (int y = 0; y < img.height(); ++y)
    for (int x = 0; x < img.width(); ++x) {
      const auto p = img.pixel(x, y);
      gray.at(x, y, 0) = 0.299 * p[0] + 0.587 * p[1] + 0.114 * p[2];
    }
  return gray;
}

MultiChannelImage to_rgb(const MultiChannelImage& img) {
  if (img.color_space() == ColorSpace::kRgb) return img;
  require(img.color_space() == ColorSpace::kGray && img.channels() == 1,
          ErrorCode::kColorSpace, "to_rgb expects an RGB or gray image");
  MultiChannelImage rgb(img.width(), img.height(), 3, ColorSpace::kRgb);
  for (int y = 0; y < img.height(); ++y)
    for (int x = 0; x < img.width(); ++x)
      for (int c = 0; c < 3; ++c) rgb.at(x, y, c) = img.at(x, y, 0);
  return rgb;
}

int FilterBank::max_radius() const {
  int r = 0;
  for (const auto& k : kernels) r = std::max(r, k.radius);
  return r;
}

FilterBank make_filter_bank(int n_orient, std::span<const double> scales,
                            double elongation) {
  require(n_orient >= 1, ErrorCode::kInvalidArgument, "n_orient must be >= 1");
  require(!scales.empty(), ErrorCode::kInvalidArgument,
          "filter bank needs at least one scale");
  require(elongation > 0.0, ErrorCode::kInvalidArgument,
          "elongation must be positive");
  FilterBank bank;
  for (double sigma : scales) {
    require(sigma > 0.0, ErrorCode::kInvalidArgument, "scales must be positive");
    for (int o = 0; o < n_orient; ++o) {
      const double theta = std::numbers::pi * o / n_orient;
      bank.kernels.push_back(make_kernel(KernelKind::kEven, theta, sigma, elongation));
      bank.kernels.push_back(make_kernel(KernelKind::kOdd, theta, sigma, elongation));
    }
    bank.kernels.push_back(
        make_kernel(KernelKind::kCenterSurround, 0.0, sigma, elongation));
  }
  return bank;
}

MultiChannelImage filter_responses(const MultiChannelImage& gray,
                                   const FilterBank& bank) {
  require(gray.channels() == 1, ErrorCode::kColorSpace,
          "filter_responses expects a single-channel image");
  require(!bank.kernels.empty(), ErrorCode::kInvalidArgument, "empty filter bank");
  const int w = gray.width();
  const int h = gray.height();
  const int pad = bank.max_radius();
  const int pw = w + 2 * pad;
  const int ph = h + 2 * pad;

  std::vector<double> padded(static_cast<std::size_t>(pw) * ph);
  for (int y = 0; y < ph; ++y)
    for (int x = 0; x < pw; ++x)
      padded[static_cast<std::size_t>(y) * pw + x] =
          gray.at(reflect(x - pad, w), reflect(y - pad, h), 0);

  const int n = static_cast<int>(bank.size());
  MultiChannelImage out(w, h, n, ColorSpace::kGeneric);
  parallel_for(0, h, [&](int y) {
    std::vector<double> acc(w);
    for (int k = 0; k < n; ++k) {
      const Kernel& kernel = bank.kernels[k];
      std::fill(acc.begin(), acc.end(), 0.0);
      for (int dy = -kernel.radius; dy <= kernel.radius; ++dy) {
        const double* src = padded.data() +
                            static_cast<std::size_t>(y + dy + pad) * pw + pad;
        for (int dx = -kernel.radius; dx <= kernel.radius; ++dx) {
          const double wgt = kernel(dx, dy);
          const double* s = src + dx;
          for (int x = 0; x < w; ++x) acc[x] += wgt * s[x];
        }
      }
      for (int x = 0; x < w; ++x) out.at(x, y, k) = acc[x];
    }
  });
  return out;
}

TextonCodebook learn_codebook(std::span<const MultiChannelImage> responses,
                              int k, std::uint64_t seed,
                              const KMeansOptions& options) {
  require(k >= 2, ErrorCode::kInvalidArgument, "texton count must be >= 2");
  require(!responses.empty(), ErrorCode::kInvalidArgument,
          "no response images for k-means");
  const int dim = responses.front().channels();
  std::size_t total = 0;
  for (const auto& r : responses) {
    require(r.channels() == dim, ErrorCode::kDimensionMismatch,
            "response images disagree on channel count");
    total += r.pixel_count();
  }
  require(static_cast<std::size_t>(k) <= total, ErrorCode::kInvalidArgument,
          "texton count exceeds pixel count");

  std::mt19937_64 rng(seed);

  // Global pixel indices of the subsample, in increasing order.
  std::vector<std::size_t> picks;
  if (total <= options.max_samples) {
    picks.resize(total);
    std::iota(picks.begin(), picks.end(), std::size_t{0});
  } else {
    std::vector<std::size_t> all(total);
    std::iota(all.begin(), all.end(), std::size_t{0});
    picks.reserve(options.max_samples);
    std::sample(all.begin(), all.end(), std::back_inserter(picks),
                options.max_samples, rng);
  }

  const std::size_t n = picks.size();
  std::vector<double> points(n * dim);
  {
    std::size_t image = 0;
    std::size_t base = 0;
    for (std::size_t i = 0; i < n; ++i) {
      while (picks[i] >= base + responses[image].pixel_count()) {
        base += responses[image].pixel_count();
        ++image;
      }
      const auto values = responses[image].values();
      const std::size_t off = (picks[i] - base) * dim;
      std::copy_n(values.begin() + off, dim, points.begin() + i * dim);
    }
  }
  auto point = [&](std::size_t i) { return points.data() + i * dim; };

  // k-means++ seeding.
  std::vector<double> centroids(static_cast<std::size_t>(k) * dim);
  std::vector<double> nearest_d(n, std::numeric_limits<double>::infinity());
  std::size_t first = std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
  std::copy_n(point(first), dim, centroids.begin());
  for (int c = 1; c < k; ++c) {
    const double* prev = centroids.data() + static_cast<std::size_t>(c - 1) * dim;
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      nearest_d[i] = std::min(nearest_d[i], squared_distance(point(i), prev, dim));
      sum += nearest_d[i];
    }
    std::size_t chosen = 0;
    if (sum > 0.0) {
      double target = std::uniform_real_distribution<double>(0.0, sum)(rng);
      chosen = n - 1;
      for (std::size_t i = 0; i < n; ++i) {
        target -= nearest_d[i];
        if (target < 0.0) {
          chosen = i;
          break;
        }
      }
    } else {
      chosen = std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
    }
    std::copy_n(point(chosen), dim, centroids.begin() + static_cast<std::size_t>(c) * dim);
  }

  // Lloyd iterations.
  std::vector<int> labels(n, -1);
  std::vector<double> sums(centroids.size());
  std::vector<std::size_t> counts(k);
  std::vector<double> dist(n);
  for (int iter = 0; iter < options.max_iterations; ++iter) {
    bool changed = false;
    for (std::size_t i = 0; i < n; ++i) {
      const int l = nearest(point(i), centroids, k, dim, &dist[i]);
      if (l != labels[i]) {
        labels[i] = l;
        changed = true;
      }
    }
    if (!changed) break;

    std::fill(sums.begin(), sums.end(), 0.0);
    std::fill(counts.begin(), counts.end(), 0);
    for (std::size_t i = 0; i < n; ++i) {
      double* s = sums.data() + static_cast<std::size_t>(labels[i]) * dim;
      for (int d = 0; d < dim; ++d) s[d] += point(i)[d];
      ++counts[labels[i]];
    }
    for (int c = 0; c < k; ++c) {
      double* centroid = centroids.data() + static_cast<std::size_t>(c) * dim;
      if (counts[c] > 0) {
        for (int d = 0; d < dim; ++d)
          centroid[d] = sums[static_cast<std::size_t>(c) * dim + d] / counts[c];
      } else {
        // Empty cluster: move it to the point worst served by its centroid.
        const auto far = static_cast<std::size_t>(
            std::max_element(dist.begin(), dist.end()) - dist.begin());
        std::copy_n(point(far), dim, centroid);
        dist[far] = 0.0;
      }
    }
  }

  return TextonCodebook{k, dim, std::move(centroids)};
}

TextonMap assign_textons(const MultiChannelImage& responses,
                         const TextonCodebook& codebook) {
  require(responses.channels() == codebook.dim, ErrorCode::kDimensionMismatch,
          "response dimension does not match the texton codebook");
  TextonMap map{LabelMap(responses.width(), responses.height()), codebook};
  parallel_for(0, responses.height(), [&](int y) {
    for (int x = 0; x < responses.width(); ++x)
      map.labels(x, y) = nearest(responses.pixel(x, y).data(), codebook.centroids,
                                 codebook.k, codebook.dim);
  });
  return map;
}

TextonMap compute_textons(const MultiChannelImage& gray, const FilterBank& bank,
                          int k, std::uint64_t seed, const KMeansOptions& options) {
  require(gray.color_space() == ColorSpace::kGray, ErrorCode::kColorSpace,
          "compute_textons expects a grayscale image");
  require(k >= 2, ErrorCode::kInvalidArgument, "texton count must be >= 2");
  require(static_cast<std::size_t>(k) <= gray.pixel_count(),
          ErrorCode::kInvalidArgument, "texton count exceeds pixel count");
  const MultiChannelImage responses = filter_responses(gray, bank);
  const TextonCodebook codebook =
      learn_codebook(std::span(&responses, 1), k, seed, options);
  return assign_textons(responses, codebook);
}

MultiChannelImage add_gaussian_noise(const MultiChannelImage& img,
                                     double variance, std::uint64_t seed) {
  require(variance >= 0.0 && std::isfinite(variance),
          ErrorCode::kInvalidArgument, "noise variance must be >= 0");
  MultiChannelImage out = img;
  if (variance == 0.0) return out;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, std::sqrt(variance));
  for (double& v : out.values()) v = std::clamp(v + noise(rng), 0.0, 1.0);
  return out;
}

}  // namespace edgemetric
