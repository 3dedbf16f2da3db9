#include "edgemetric/png_io.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <csetjmp>
#include <cstdio>
#include <fstream>
#include <memory>
#include <random>
#include <sstream>
#include <vector>

namespace edgemetric {
namespace fs = std::filesystem;
namespace {

struct FileCloser {
  void operator()(std::FILE* f) const { if (f) std::fclose(f); }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

fs::path temp_sibling(const fs::path& path) {
  static thread_local std::mt19937_64 rng{std::random_device{}()};
  std::ostringstream name;
  name << "." << path.filename().string() << ".tmp" << std::hex << rng();
  return path.parent_path() / name.str();
}

void commit(const fs::path& tmp, const fs::path& path) {
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp, ec);
    fail(ErrorCode::kIo, "cannot move temporary file into " + path.string());
  }
}

struct DecodedPng {
  int width = 0;
  int height = 0;
  int channels = 0;
  int bit_depth = 0;
  std::vector<std::uint8_t> bytes;  // big-endian for 16-bit
};

DecodedPng decode_png(const fs::path& path) {
  FilePtr file(std::fopen(path.c_str(), "rb"));
  if (!file) fail(ErrorCode::kIo, "cannot open " + path.string());

  png_byte sig[8];
  if (std::fread(sig, 1, 8, file.get()) != 8 || png_sig_cmp(sig, 0, 8) != 0)
    fail(ErrorCode::kIo, "not a PNG file: " + path.string());

  png_structp png =
      png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_read_struct(&png, &info, nullptr);
    fail(ErrorCode::kIo, "libpng initialisation failed");
  }

  DecodedPng out;
  std::vector<png_bytep> rows;
  volatile bool unsupported = false;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    fail(ErrorCode::kIo, "corrupt PNG data in " + path.string());
  }
  png_init_io(png, file.get());
  png_set_sig_bytes(png, 8);
  png_read_info(png, info);

  const int color_type = png_get_color_type(png, info);
  int depth = png_get_bit_depth(png, info);
  if (color_type == PNG_COLOR_TYPE_PALETTE) {
    png_set_palette_to_rgb(png);
    if (png_get_valid(png, info, PNG_INFO_tRNS)) unsupported = true;
    depth = 8;
  } else if (color_type == PNG_COLOR_TYPE_GRAY && depth < 8) {
    png_set_expand_gray_1_2_4_to_8(png);
    depth = 8;
  }
  if (color_type & PNG_COLOR_MASK_ALPHA) unsupported = true;
  if (png_get_valid(png, info, PNG_INFO_tRNS) && color_type != PNG_COLOR_TYPE_PALETTE)
    unsupported = true;

  if (unsupported) {
    png_destroy_read_struct(&png, &info, nullptr);
    fail(ErrorCode::kUnsupportedFormat,
         "unsupported channel layout (alpha) in " + path.string());
  }

  png_read_update_info(png, info);
  out.width = static_cast<int>(png_get_image_width(png, info));
  out.height = static_cast<int>(png_get_image_height(png, info));
  out.channels = png_get_channels(png, info);
  out.bit_depth = depth;
  const std::size_t stride = png_get_rowbytes(png, info);
  out.bytes.resize(stride * out.height);
  rows.resize(out.height);
  for (int y = 0; y < out.height; ++y) rows[y] = out.bytes.data() + stride * y;
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);

  if (out.channels != 1 && out.channels != 3)
    fail(ErrorCode::kUnsupportedFormat,
         "unsupported channel count in " + path.string());
  return out;
}

double sample(const DecodedPng& png, std::size_t i) {
  if (png.bit_depth == 16) {
    const unsigned v = (png.bytes[2 * i] << 8) | png.bytes[2 * i + 1];
    return v / 65535.0;
  }
  return png.bytes[i] / 255.0;
}

std::string encode_png(int width, int height, int channels, int bit_depth,
                       const std::vector<std::uint8_t>& bytes) {
  png_structp png =
      png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_write_struct(&png, &info);
    fail(ErrorCode::kIo, "libpng initialisation failed");
  }
  std::string buffer;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    fail(ErrorCode::kIo, "PNG encoding failed");
  }
  png_set_write_fn(
      png, &buffer,
      [](png_structp p, png_bytep data, png_size_t n) {
        static_cast<std::string*>(png_get_io_ptr(p))
            ->append(reinterpret_cast<const char*>(data), n);
      },
      nullptr);
  png_set_IHDR(png, info, width, height, bit_depth,
               channels == 3 ? PNG_COLOR_TYPE_RGB : PNG_COLOR_TYPE_GRAY,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  const std::size_t stride =
      static_cast<std::size_t>(width) * channels * (bit_depth / 8);
  for (int y = 0; y < height; ++y)
    png_write_row(png, const_cast<png_bytep>(bytes.data() + stride * y));
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  return buffer;
}

std::uint8_t to_byte(double v) {
  return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
}

}  // namespace

void write_file_atomically(const fs::path& path, const std::string& contents) {
  const fs::path tmp = temp_sibling(path);
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) fail(ErrorCode::kIo, "cannot write " + path.string());
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    out.flush();
    if (!out) {
      std::error_code ec;
      fs::remove(tmp, ec);
      fail(ErrorCode::kIo, "short write to " + path.string());
    }
  }
  commit(tmp, path);
}

MultiChannelImage load_image(const fs::path& path) {
  const DecodedPng png = decode_png(path);
  MultiChannelImage img(png.width, png.height, png.channels,
                        png.channels == 3 ? ColorSpace::kRgb : ColorSpace::kGray);
  auto values = img.values();
  for (std::size_t i = 0; i < values.size(); ++i) values[i] = sample(png, i);
  return img;
}

BinaryMap load_binary_map(const fs::path& path) {
  const DecodedPng png = decode_png(path);
  BinaryMap map(png.width, png.height);
  const std::size_t stride = static_cast<std::size_t>(png.channels);
  auto values = map.values();
  for (std::size_t i = 0; i < values.size(); ++i)
    values[i] = sample(png, i * stride) > 0.0 ? 1 : 0;
  return map;
}

void save_strength_png(const fs::path& path, const RealMap& map) {
  std::vector<std::uint8_t> bytes(map.size() * 2);
  auto values = map.values();
  for (std::size_t i = 0; i < values.size(); ++i) {
    const auto v = static_cast<unsigned>(
        std::lround(std::clamp(values[i], 0.0, 1.0) * 65535.0));
    bytes[2 * i] = static_cast<std::uint8_t>(v >> 8);
    bytes[2 * i + 1] = static_cast<std::uint8_t>(v & 0xff);
  }
  write_file_atomically(path, encode_png(map.width(), map.height(), 1, 16, bytes));
}

void save_image_png(const fs::path& path, const MultiChannelImage& image) {
  require(image.channels() == 1 || image.channels() == 3,
          ErrorCode::kUnsupportedFormat, "only gray or RGB images can be saved");
  std::vector<std::uint8_t> bytes(image.values().size());
  std::transform(image.values().begin(), image.values().end(), bytes.begin(),
                 to_byte);
  write_file_atomically(path, encode_png(image.width(), image.height(),
                                         image.channels(), 8, bytes));
}

void save_binary_png(const fs::path& path, const BinaryMap& map) {
  std::vector<std::uint8_t> bytes(map.size());
  std::transform(map.values().begin(), map.values().end(), bytes.begin(),
                 [](std::uint8_t v) -> std::uint8_t { return v ? 255 : 0; });
  write_file_atomically(path, encode_png(map.width(), map.height(), 1, 8, bytes));
}

}  // namespace edgemetric
