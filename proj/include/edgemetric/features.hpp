#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "edgemetric/image.hpp"
#include "edgemetric/imgproc.hpp"

namespace edgemetric {

/// Cue order inside every concatenated histogram: L, a, b, texton.
inline constexpr int kCueCount = 4;
enum Cue : int { kCueL = 0, kCueA = 1, kCueB = 2, kCueTexton = 3 };

const char* cue_name(int cue);

using CueBins = std::array<int, kCueCount>;
inline constexpr CueBins kDefaultCueBins = {25, 25, 25, 32};

int total_bins(const CueBins& bins);

/// Per-pixel discrete labels for the four cues.
struct CueStack {
  std::array<LabelMap, kCueCount> labels;
  CueBins bins{};

  int width() const { return labels[0].width(); }
  int height() const { return labels[0].height(); }
  int total_bins() const { return edgemetric::total_bins(bins); }
  /// Offset of a cue's slice inside the concatenated histogram.
  int offset(int cue) const;
  /// Concatenated bin index of pixel (x, y) for a cue.
  int bin(int cue, int x, int y) const { return offset(cue) + labels[cue](x, y); }
  void validate() const;
};

/// Lab channel values are binned uniformly over [0,1]; 1.0 maps into the last
/// bin. Texton labels pass through and must be < bins[kCueTexton].
int quantize_value(double v, int bins);
CueStack quantize_cues(const MultiChannelImage& lab, const TextonMap& textons,
                       const CueBins& bins = kDefaultCueBins);

struct ScaleConfig {
  std::vector<int> radii;  // strictly increasing, all >= 2
  int n_orient = 8;

  int scales() const { return static_cast<int>(radii.size()); }
  /// Orientation angle in [0, pi).
  double angle(int orient) const;
  void validate() const;
  friend bool operator==(const ScaleConfig&, const ScaleConfig&) = default;
};

ScaleConfig default_scale_config();
/// One scale, taken from the default radii.
ScaleConfig single_scale_config(int scale_index);

/// Everything that fixes the histogram layout; echoed into model files.
struct FeatureConfig {
  CueBins bins = kDefaultCueBins;
  ScaleConfig scales = default_scale_config();

  int total_bins() const { return edgemetric::total_bins(bins); }
  friend bool operator==(const FeatureConfig&, const FeatureConfig&) = default;
};

// ---------------------------------------------------------------------------
// Half-disk geometry
// ---------------------------------------------------------------------------

enum class HalfSide { kU, kV };

/// Membership rule. Offsets (dx, dy) use image axes (rows grow downward) and
/// angles run counter-clockwise from +x. A pixel belongs to the disk when
/// dx^2 + dy^2 <= r^2. The U side is the one whose outward normal points at
/// angle + pi/2; pixels on the diameter belong to U.
bool in_disk(int dx, int dy, int radius);
HalfSide half_side(int dx, int dy, double angle);

/// Each row of a half-disk is one contiguous run of columns.
struct HalfDiskMask {
  struct Run {
    int dy;
    int dx0;
    int dx1;  // inclusive
  };
  int radius = 0;
  double angle = 0.0;
  std::vector<Run> u;
  std::vector<Run> v;
  std::vector<Run> disk;  // u and v together, one run per row
};

HalfDiskMask make_half_disk_mask(int radius, double angle);

/// Masks for every (orientation, scale) of a config, indexed
/// [orient * scales + scale].
std::vector<HalfDiskMask> make_half_disk_masks(const ScaleConfig& cfg);

/// Raw bin counts of the two halves of one disk.
struct HalfDiskCounts {
  std::vector<std::int32_t> u;
  std::vector<std::int32_t> v;
  std::int32_t u_pixels = 0;
  std::int32_t v_pixels = 0;
};

struct HalfDiskPair {
  std::vector<double> u;
  std::vector<double> v;
  int x = 0;
  int y = 0;
  int orientation = 0;
  int scale = 0;
};

/// Divides every cue slice by the pooled pixel count. A half with no pixels
/// inside the image takes the other half's histogram.
HalfDiskPair normalize_counts(const HalfDiskCounts& counts);

HalfDiskCounts half_disk_counts(const CueStack& cues, int x, int y,
                                const HalfDiskMask& mask);

HalfDiskPair half_disk_histograms(const CueStack& cues, int x, int y,
                                  int orient, int scale, const ScaleConfig& cfg);

// ---------------------------------------------------------------------------
// Row prefix sums for dense half-disk pooling
// ---------------------------------------------------------------------------

/// Per-row inclusive-exclusive prefix sums of a W x H x C array:
/// sum over columns [x0, x1] = at(x1 + 1, y) - at(x0, y).
template <typename T>
class RowPrefix {
 public:
  RowPrefix() = default;
  RowPrefix(int width, int height, int channels)
      : width_(width), height_(height), channels_(channels),
        data_(static_cast<std::size_t>(width + 1) * height * channels, T{}) {}

  int width() const { return width_; }
  int height() const { return height_; }
  int channels() const { return channels_; }

  /// Builds the prefix of `values`, a row-major W x H x C array.
  void build(std::span<const T> values);
  /// Builds the prefix of a one-hot channel per label.
  void build_one_hot(const CueStack& cues);

  const T* at(int x, int y) const {
    return data_.data() +
           (static_cast<std::size_t>(y) * (width_ + 1) + x) * channels_;
  }

 private:
  T* mutable_at(int x, int y) {
    return data_.data() +
           (static_cast<std::size_t>(y) * (width_ + 1) + x) * channels_;
  }
  int width_ = 0;
  int height_ = 0;
  int channels_ = 0;
  std::vector<T> data_;
};

/// Sums the channels of one half-disk run list into `out` (zeroed first) and
/// returns the pooled pixel count.
template <typename T>
int pool_runs(const RowPrefix<T>& prefix, int x, int y,
              std::span<const HalfDiskMask::Run> runs, std::span<T> out) {
  std::fill(out.begin(), out.end(), T{});
  int pixels = 0;
  const int w = prefix.width();
  const int h = prefix.height();
  const int c = prefix.channels();
  for (const auto& run : runs) {
    const int yy = y + run.dy;
    if (yy < 0 || yy >= h) continue;
    const int x0 = std::max(0, x + run.dx0);
    const int x1 = std::min(w - 1, x + run.dx1);
    if (x0 > x1) continue;
    pixels += x1 - x0 + 1;
    const T* hi = prefix.at(x1 + 1, yy);
    const T* lo = prefix.at(x0, yy);
    T* o = out.data();
    for (int k = 0; k < c; ++k) o[k] += static_cast<T>(hi[k] - lo[k]);
  }
  return pixels;
}

extern template class RowPrefix<std::uint16_t>;
extern template class RowPrefix<std::int32_t>;
extern template class RowPrefix<float>;
extern template class RowPrefix<double>;

// ---------------------------------------------------------------------------
// Feature stack
// ---------------------------------------------------------------------------

/// Half-disk bin counts for every (pixel, orientation, scale). Counts are kept
/// as integers; pair() normalises on access exactly as half_disk_histograms.
class FeatureStack {
 public:
  FeatureStack(int width, int height, const ScaleConfig& cfg, int total_bins);

  int width() const { return width_; }
  int height() const { return height_; }
  int n_orient() const { return cfg_.n_orient; }
  int scales() const { return cfg_.scales(); }
  int total_bins() const { return bins_; }
  std::size_t entries() const;

  HalfDiskPair pair(int x, int y, int orient, int scale) const;
  HalfDiskCounts counts(int x, int y, int orient, int scale) const;
  void store(int x, int y, int orient, int scale, const HalfDiskCounts& counts);

 private:
  std::size_t slot(int x, int y, int orient, int scale) const;

  int width_;
  int height_;
  ScaleConfig cfg_;
  int bins_;
  std::vector<std::uint16_t> counts_;  // per slot: u bins, v bins
  std::vector<std::int32_t> pixels_;   // per slot: u pixels, v pixels
};

/// Every (pixel, orientation, scale) pair via row-prefix pooling.
FeatureStack extract_feature_stack(const CueStack& cues, const ScaleConfig& cfg);

}  // namespace edgemetric
