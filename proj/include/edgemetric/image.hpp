#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "edgemetric/error.hpp"

namespace edgemetric {

/// Dense row-major 2-D array. Used for label maps, binary annotations and
/// strength maps; the layout matches MultiChannelImage with one channel.
template <typename T>
class Grid {
 public:
  Grid() = default;
  Grid(int width, int height, T fill = T{})
      : width_(width), height_(height),
        data_(static_cast<std::size_t>(width) * height, fill) {
    require(width >= 1 && height >= 1, ErrorCode::kInvalidArgument,
            "grid dimensions must be positive");
  }

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  bool contains(int x, int y) const noexcept {
    return x >= 0 && y >= 0 && x < width_ && y < height_;
  }

  T& operator()(int x, int y) { return data_[index(x, y)]; }
  const T& operator()(int x, int y) const { return data_[index(x, y)]; }

  std::size_t index(int x, int y) const noexcept {
    return static_cast<std::size_t>(y) * width_ + x;
  }

  std::span<T> values() noexcept { return data_; }
  std::span<const T> values() const noexcept { return data_; }
  T* row(int y) noexcept { return data_.data() + index(0, y); }
  const T* row(int y) const noexcept { return data_.data() + index(0, y); }

  bool same_shape(const auto& other) const noexcept {
    return width_ == other.width() && height_ == other.height();
  }

  friend bool operator==(const Grid&, const Grid&) = default;

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<T> data_;
};

using BinaryMap = Grid<std::uint8_t>;
using LabelMap = Grid<int>;
using RealMap = Grid<double>;

enum class ColorSpace { kRgb, kLab, kGray, kGeneric };

const char* to_string(ColorSpace space);

/// H x W raster with interleaved real-valued channels.
class MultiChannelImage {
 public:
  MultiChannelImage() = default;
  MultiChannelImage(int width, int height, int channels, ColorSpace space,
                    double fill = 0.0);

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  int channels() const noexcept { return channels_; }
  ColorSpace color_space() const noexcept { return space_; }
  void set_color_space(ColorSpace space) noexcept { space_ = space; }
  std::size_t pixel_count() const noexcept {
    return static_cast<std::size_t>(width_) * height_;
  }

  double& at(int x, int y, int c) { return data_[offset(x, y) + c]; }
  double at(int x, int y, int c) const { return data_[offset(x, y) + c]; }

  std::span<double> pixel(int x, int y) {
    return {data_.data() + offset(x, y), static_cast<std::size_t>(channels_)};
  }
  std::span<const double> pixel(int x, int y) const {
    return {data_.data() + offset(x, y), static_cast<std::size_t>(channels_)};
  }

  std::span<double> values() noexcept { return data_; }
  std::span<const double> values() const noexcept { return data_; }

  /// Copy of one channel as a grid.
  RealMap channel(int c) const;

  bool same_shape(const MultiChannelImage& other) const noexcept {
    return width_ == other.width_ && height_ == other.height_;
  }

  friend bool operator==(const MultiChannelImage&,
                         const MultiChannelImage&) = default;

 private:
  std::size_t offset(int x, int y) const noexcept {
    return (static_cast<std::size_t>(y) * width_ + x) * channels_;
  }

  int width_ = 0;
  int height_ = 0;
  int channels_ = 0;
  ColorSpace space_ = ColorSpace::kGeneric;
  std::vector<double> data_;
};

}  // namespace edgemetric
