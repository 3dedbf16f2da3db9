#include "edgemetric/image.hpp"

namespace edgemetric {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kIo: return "io";
    case ErrorCode::kUnsupportedFormat: return "unsupported-format";
    case ErrorCode::kInvalidArgument: return "invalid-argument";
    case ErrorCode::kDimensionMismatch: return "dimension-mismatch";
    case ErrorCode::kColorSpace: return "color-space";
    case ErrorCode::kOutOfRange: return "out-of-range";
    case ErrorCode::kIncompatibleModel: return "incompatible-model";
    case ErrorCode::kCorruptModel: return "corrupt-model";
    case ErrorCode::kDataset: return "dataset";
    case ErrorCode::kDegenerateData: return "degenerate-data";
    case ErrorCode::kDivergence: return "divergence";
  }
  return "unknown";
}

const char* to_string(ColorSpace space) {
  switch (space) {
    case ColorSpace::kRgb: return "RGB";
    case ColorSpace::kLab: return "Lab";
    case ColorSpace::kGray: return "Gray";
    case ColorSpace::kGeneric: return "Generic";
  }
  return "unknown";
}

MultiChannelImage::MultiChannelImage(int width, int height, int channels,
                                     ColorSpace space, double fill)
    : width_(width), height_(height), channels_(channels), space_(space) {
  require(width >= 1 && height >= 1, ErrorCode::kInvalidArgument,
          "image dimensions must be positive");
  require(channels >= 1, ErrorCode::kInvalidArgument,
          "image needs at least one channel");
  data_.assign(pixel_count() * channels, fill);
}

RealMap MultiChannelImage::channel(int c) const {
  require(c >= 0 && c < channels_, ErrorCode::kOutOfRange,
          "channel index out of range");
  RealMap out(width_, height_);
  for (int y = 0; y < height_; ++y)
    for (int x = 0; x < width_; ++x) out(x, y) = at(x, y, c);
  return out;
}

}  // namespace edgemetric
