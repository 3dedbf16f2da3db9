#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "edgemetric/image.hpp"

namespace edgemetric {

// ---------------------------------------------------------------------------
// Color
// ---------------------------------------------------------------------------

/// a* and b* are clamped to this range before rescaling to [0,1]; it covers
/// the sRGB gamut.
inline constexpr double kLabChromaMin = -73.0;
inline constexpr double kLabChromaMax = 95.0;

/// Unscaled CIELAB (L* in [0,100]) of one sRGB triple, D65 white.
std::array<double, 3> srgb_to_cielab(double r, double g, double b);

/// sRGB -> CIELAB with channels rescaled to [0,1]: L/100 and
/// (clamp(v, -73, 95) + 73) / 168 for a and b.
MultiChannelImage rgb_to_lab(const MultiChannelImage& rgb);

/// Rec. 601 luma for RGB input; gray input is returned unchanged.
MultiChannelImage to_gray(const MultiChannelImage& img);

/// Gray input replicated into three RGB channels; RGB input unchanged.
MultiChannelImage to_rgb(const MultiChannelImage& img);

// ---------------------------------------------------------------------------
// Filter bank and textons
// ---------------------------------------------------------------------------

enum class KernelKind { kEven, kOdd, kCenterSurround };

struct Kernel {
  KernelKind kind = KernelKind::kEven;
  double orientation = 0.0;  // radians, counter-clockwise from +x
  double scale = 1.0;        // sigma across the orientation, pixels
  int radius = 0;            // taps span [-radius, radius] in both axes
  std::vector<double> taps;  // row-major, (2*radius+1)^2

  double operator()(int dx, int dy) const {
    const int side = 2 * radius + 1;
    return taps[static_cast<std::size_t>(dy + radius) * side + (dx + radius)];
  }
};

struct FilterBank {
  std::vector<Kernel> kernels;
  int max_radius() const;
  std::size_t size() const { return kernels.size(); }
};

/// Elongation of oriented kernels along their orientation (sigma_u / sigma_v).
inline constexpr double kFilterElongation = 2.0;

/// Even (second derivative) and odd (first derivative) oriented Gaussian
/// kernels for every (orientation, scale) plus one center-surround kernel per
/// scale. Every kernel is zero-mean and L1-normalised.
FilterBank make_filter_bank(int n_orient, std::span<const double> scales,
                            double elongation = kFilterElongation);

/// Per-pixel correlation with every kernel, symmetric border extension.
/// Output has one channel per kernel, color space Generic.
MultiChannelImage filter_responses(const MultiChannelImage& gray,
                                   const FilterBank& bank);

struct TextonCodebook {
  int k = 0;
  int dim = 0;
  std::vector<double> centroids;  // k rows of dim values

  std::span<const double> centroid(int i) const {
    return {centroids.data() + static_cast<std::size_t>(i) * dim,
            static_cast<std::size_t>(dim)};
  }
  friend bool operator==(const TextonCodebook&, const TextonCodebook&) = default;
};

struct TextonMap {
  LabelMap labels;
  TextonCodebook codebook;
  int k() const { return codebook.k; }
};

struct KMeansOptions {
  int max_iterations = 50;
  std::size_t max_samples = 50000;
};

/// k-means++ seeded Lloyd iterations on a random subsample of the pooled
/// per-pixel response vectors. Deterministic for a given seed.
TextonCodebook learn_codebook(std::span<const MultiChannelImage> responses,
                              int k, std::uint64_t seed,
                              const KMeansOptions& options = {});

/// Nearest-centroid labels; ties resolve to the lowest index.
TextonMap assign_textons(const MultiChannelImage& responses,
                         const TextonCodebook& codebook);

/// Per-image codebook + assignment.
TextonMap compute_textons(const MultiChannelImage& gray, const FilterBank& bank,
                          int k, std::uint64_t seed,
                          const KMeansOptions& options = {});

// ---------------------------------------------------------------------------
// Noise
// ---------------------------------------------------------------------------

/// Adds i.i.d. N(0, variance) to every channel value, then clamps to [0,1].
MultiChannelImage add_gaussian_noise(const MultiChannelImage& img,
                                     double variance, std::uint64_t seed);

}  // namespace edgemetric
