#include "edgemetric/features.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <string>

#include "edgemetric/parallel.hpp"

namespace edgemetric {
namespace {

// |normal . offset| below this counts as lying on the diameter.
constexpr double kDiameterEps = 1e-9;

// Keeps uint16 bin counts in FeatureStack exact.
constexpr int kMaxRadius = 140;

}  // namespace

const char* cue_name(int cue) {
  switch (cue) {
    case kCueL: return "L";
    case kCueA: return "a";
    case kCueB: return "b";
    case kCueTexton: return "texton";
  }
  return "?";
}

int total_bins(const CueBins& bins) {
  return std::accumulate(bins.begin(), bins.end(), 0);
}

int CueStack::offset(int cue) const {
  int off = 0;
  for (int c = 0; c < cue; ++c) off += bins[c];
  return off;
}

void CueStack::validate() const {
  for (int c = 0; c < kCueCount; ++c) {
    require(bins[c] >= 1, ErrorCode::kInvalidArgument, "bin counts must be >= 1");
    require(labels[c].same_shape(labels[0]), ErrorCode::kDimensionMismatch,
            "cue label maps differ in size");
    for (int v : labels[c].values())
      require(v >= 0 && v < bins[c], ErrorCode::kOutOfRange,
              std::string("label outside bin range for cue ") + cue_name(c));
  }
}

int quantize_value(double v, int bins) {
  const int b = static_cast<int>(std::floor(std::clamp(v, 0.0, 1.0) * bins));
  return std::min(b, bins - 1);
}

CueStack quantize_cues(const MultiChannelImage& lab, const TextonMap& textons,
                       const CueBins& bins) {
  require(lab.channels() == 3, ErrorCode::kColorSpace,
          "quantize_cues expects a 3-channel Lab image");
  require(lab.width() == textons.labels.width() &&
              lab.height() == textons.labels.height(),
          ErrorCode::kDimensionMismatch, "Lab image and texton map differ in size");
  require(textons.k() <= bins[kCueTexton], ErrorCode::kInvalidArgument,
          "texton count exceeds texton bins");
  for (int b : bins)
    require(b >= 1, ErrorCode::kInvalidArgument, "bin counts must be >= 1");

  CueStack cues;
  cues.bins = bins;
  for (int c = 0; c < 3; ++c) {
    LabelMap map(lab.width(), lab.height());
    for (int y = 0; y < lab.height(); ++y)
      for (int x = 0; x < lab.width(); ++x)
        map(x, y) = quantize_value(lab.at(x, y, c), bins[c]);
    cues.labels[c] = std::move(map);
  }
  cues.labels[kCueTexton] = textons.labels;
  return cues;
}

double ScaleConfig::angle(int orient) const {
  return std::numbers::pi * orient / n_orient;
}

void ScaleConfig::validate() const {
  require(n_orient >= 1, ErrorCode::kInvalidArgument, "n_orient must be >= 1");
  require(!radii.empty(), ErrorCode::kInvalidArgument, "no scales configured");
  for (std::size_t i = 0; i < radii.size(); ++i) {
    require(radii[i] >= 2 && radii[i] <= kMaxRadius, ErrorCode::kInvalidArgument,
            "scale radii must lie in [2, " + std::to_string(kMaxRadius) + "]");
    require(i == 0 || radii[i] > radii[i - 1], ErrorCode::kInvalidArgument,
            "scale radii must be strictly increasing");
  }
}

ScaleConfig default_scale_config() { return ScaleConfig{{3, 5, 10, 20}, 8}; }

ScaleConfig single_scale_config(int scale_index) {
  const ScaleConfig all = default_scale_config();
  require(scale_index >= 0 && scale_index < all.scales(), ErrorCode::kOutOfRange,
          "single-scale index must be in [0, " + std::to_string(all.scales()) + ")");
  return ScaleConfig{{all.radii[scale_index]}, all.n_orient};
}

bool in_disk(int dx, int dy, int radius) {
  return dx * dx + dy * dy <= radius * radius;
}

HalfSide half_side(int dx, int dy, double angle) {
  const double s = -dx * std::sin(angle) - dy * std::cos(angle);
  return s < -kDiameterEps ? HalfSide::kV : HalfSide::kU;
}

HalfDiskMask make_half_disk_mask(int radius, double angle) {
  require(radius >= 1, ErrorCode::kInvalidArgument, "radius must be >= 1");
  HalfDiskMask mask;
  mask.radius = radius;
  mask.angle = angle;
  for (int dy = -radius; dy <= radius; ++dy) {
    for (HalfSide side : {HalfSide::kU, HalfSide::kV}) {
      int lo = radius + 1;
      int hi = -radius - 1;
      int members = 0;
      for (int dx = -radius; dx <= radius; ++dx) {
        if (in_disk(dx, dy, radius) && half_side(dx, dy, angle) == side) {
          lo = std::min(lo, dx);
          hi = std::max(hi, dx);
          ++members;
        }
      }
      if (members == 0) continue;
      // Disk rows and half-planes are convex, so members form one run.
      require(members == hi - lo + 1, ErrorCode::kInvalidArgument,
              "half-disk row is not contiguous");
      (side == HalfSide::kU ? mask.u : mask.v).push_back({dy, lo, hi});
    }
    int span = 0;
    while (in_disk(span + 1, dy, radius)) ++span;
    mask.disk.push_back({dy, -span, span});
  }
  return mask;
}

std::vector<HalfDiskMask> make_half_disk_masks(const ScaleConfig& cfg) {
  cfg.validate();
  std::vector<HalfDiskMask> masks;
  masks.reserve(static_cast<std::size_t>(cfg.n_orient) * cfg.scales());
  for (int o = 0; o < cfg.n_orient; ++o)
    for (int s = 0; s < cfg.scales(); ++s)
      masks.push_back(make_half_disk_mask(cfg.radii[s], cfg.angle(o)));
  return masks;
}

HalfDiskPair normalize_counts(const HalfDiskCounts& counts) {
  HalfDiskPair pair;
  const std::size_t m = counts.u.size();
  pair.u.resize(m);
  pair.v.resize(m);
  const auto& u_src = counts.u_pixels > 0 ? counts.u : counts.v;
  const auto& v_src = counts.v_pixels > 0 ? counts.v : counts.u;
  const double nu = counts.u_pixels > 0 ? counts.u_pixels : counts.v_pixels;
  const double nv = counts.v_pixels > 0 ? counts.v_pixels : counts.u_pixels;
  for (std::size_t i = 0; i < m; ++i) {
    pair.u[i] = u_src[i] / nu;
    pair.v[i] = v_src[i] / nv;
  }
  return pair;
}

HalfDiskCounts half_disk_counts(const CueStack& cues, int x, int y,
                                const HalfDiskMask& mask) {
  HalfDiskCounts counts;
  const int m = cues.total_bins();
  counts.u.assign(m, 0);
  counts.v.assign(m, 0);
  std::array<int, kCueCount> offsets{};
  for (int c = 0; c < kCueCount; ++c) offsets[c] = cues.offset(c);

  auto pool = [&](const std::vector<HalfDiskMask::Run>& runs,
                  std::vector<std::int32_t>& hist) {
    std::int32_t pixels = 0;
    for (const auto& run : runs) {
      const int yy = y + run.dy;
      if (yy < 0 || yy >= cues.height()) continue;
      const int x0 = std::max(0, x + run.dx0);
      const int x1 = std::min(cues.width() - 1, x + run.dx1);
      for (int xx = x0; xx <= x1; ++xx) {
        for (int c = 0; c < kCueCount; ++c)
          ++hist[offsets[c] + cues.labels[c](xx, yy)];
        ++pixels;
      }
    }
    return pixels;
  };
  counts.u_pixels = pool(mask.u, counts.u);
  counts.v_pixels = pool(mask.v, counts.v);
  return counts;
}

HalfDiskPair half_disk_histograms(const CueStack& cues, int x, int y, int orient,
                                  int scale, const ScaleConfig& cfg) {
  cfg.validate();
  require(cues.labels[0].contains(x, y), ErrorCode::kOutOfRange,
          "pixel outside the image");
  require(orient >= 0 && orient < cfg.n_orient, ErrorCode::kOutOfRange,
          "orientation index out of range");
  require(scale >= 0 && scale < cfg.scales(), ErrorCode::kOutOfRange,
          "scale index out of range");
  const HalfDiskMask mask = make_half_disk_mask(cfg.radii[scale], cfg.angle(orient));
  HalfDiskPair pair = normalize_counts(half_disk_counts(cues, x, y, mask));
  pair.x = x;
  pair.y = y;
  pair.orientation = orient;
  pair.scale = scale;
  return pair;
}

template <typename T>
void RowPrefix<T>::build(std::span<const T> values) {
  require(values.size() == static_cast<std::size_t>(width_) * height_ * channels_,
          ErrorCode::kDimensionMismatch, "prefix input has the wrong size");
  for (int y = 0; y < height_; ++y) {
    T* row = mutable_at(0, y);
    std::fill(row, row + channels_, T{});
    for (int x = 0; x < width_; ++x) {
      const T* prev = mutable_at(x, y);
      T* next = mutable_at(x + 1, y);
      const T* v = values.data() +
                   (static_cast<std::size_t>(y) * width_ + x) * channels_;
      for (int c = 0; c < channels_; ++c) next[c] = prev[c] + v[c];
    }
  }
}

template <typename T>
void RowPrefix<T>::build_one_hot(const CueStack& cues) {
  require(channels_ == cues.total_bins() && width_ == cues.width() &&
              height_ == cues.height(),
          ErrorCode::kDimensionMismatch, "prefix shape does not match cue stack");
  std::array<int, kCueCount> offsets{};
  for (int c = 0; c < kCueCount; ++c) offsets[c] = cues.offset(c);
  for (int y = 0; y < height_; ++y) {
    T* row = mutable_at(0, y);
    std::fill(row, row + channels_, T{});
    for (int x = 0; x < width_; ++x) {
      T* next = mutable_at(x + 1, y);
      std::copy_n(mutable_at(x, y), channels_, next);
      for (int c = 0; c < kCueCount; ++c) next[offsets[c] + cues.labels[c](x, y)] += 1;
    }
  }
}

template class RowPrefix<std::uint16_t>;
template class RowPrefix<std::int32_t>;
template class RowPrefix<float>;
template class RowPrefix<double>;

FeatureStack::FeatureStack(int width, int height, const ScaleConfig& cfg,
                           int total_bins)
    : width_(width), height_(height), cfg_(cfg), bins_(total_bins) {
  cfg_.validate();
  counts_.assign(entries() * 2 * bins_, 0);
  pixels_.assign(entries() * 2, 0);
}

std::size_t FeatureStack::entries() const {
  return static_cast<std::size_t>(width_) * height_ * cfg_.n_orient * cfg_.scales();
}

std::size_t FeatureStack::slot(int x, int y, int orient, int scale) const {
  require(x >= 0 && y >= 0 && x < width_ && y < height_, ErrorCode::kOutOfRange,
          "pixel outside the feature stack");
  require(orient >= 0 && orient < cfg_.n_orient && scale >= 0 &&
              scale < cfg_.scales(),
          ErrorCode::kOutOfRange, "orientation or scale index out of range");
  return ((static_cast<std::size_t>(y) * width_ + x) * cfg_.n_orient + orient) *
             cfg_.scales() + scale;
}

void FeatureStack::store(int x, int y, int orient, int scale,
                         const HalfDiskCounts& counts) {
  const std::size_t s = slot(x, y, orient, scale);
  std::uint16_t* dst = counts_.data() + s * 2 * bins_;
  for (int i = 0; i < bins_; ++i) {
    dst[i] = static_cast<std::uint16_t>(counts.u[i]);
    dst[bins_ + i] = static_cast<std::uint16_t>(counts.v[i]);
  }
  pixels_[2 * s] = counts.u_pixels;
  pixels_[2 * s + 1] = counts.v_pixels;
}

HalfDiskCounts FeatureStack::counts(int x, int y, int orient, int scale) const {
  const std::size_t s = slot(x, y, orient, scale);
  HalfDiskCounts counts;
  const std::uint16_t* src = counts_.data() + s * 2 * bins_;
  counts.u.assign(src, src + bins_);
  counts.v.assign(src + bins_, src + 2 * bins_);
  counts.u_pixels = pixels_[2 * s];
  counts.v_pixels = pixels_[2 * s + 1];
  return counts;
}

HalfDiskPair FeatureStack::pair(int x, int y, int orient, int scale) const {
  HalfDiskPair pair = normalize_counts(counts(x, y, orient, scale));
  pair.x = x;
  pair.y = y;
  pair.orientation = orient;
  pair.scale = scale;
  return pair;
}

FeatureStack extract_feature_stack(const CueStack& cues, const ScaleConfig& cfg) {
  cfg.validate();
  cues.validate();
  const int m = cues.total_bins();
  FeatureStack stack(cues.width(), cues.height(), cfg, m);
  RowPrefix<std::int32_t> prefix(cues.width(), cues.height(), m);
  prefix.build_one_hot(cues);
  const auto masks = make_half_disk_masks(cfg);

  parallel_for(0, cues.height(), [&](int y) {
    HalfDiskCounts counts;
    counts.u.resize(m);
    counts.v.resize(m);
    for (int x = 0; x < cues.width(); ++x)
      for (int o = 0; o < cfg.n_orient; ++o)
        for (int s = 0; s < cfg.scales(); ++s) {
          const auto& mask = masks[static_cast<std::size_t>(o) * cfg.scales() + s];
          counts.u_pixels = pool_runs<std::int32_t>(prefix, x, y, mask.u, counts.u);
          counts.v_pixels = pool_runs<std::int32_t>(prefix, x, y, mask.v, counts.v);
          stack.store(x, y, o, s, counts);
        }
  });
  return stack;
}

}  // namespace edgemetric
