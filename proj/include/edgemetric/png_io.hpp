#pragma once

#include <filesystem>

#include "edgemetric/image.hpp"

namespace edgemetric {

/// Decodes an 8- or 16-bit grayscale or RGB PNG. Values are scaled to [0,1]
/// by the maximum code value (255 or 65535). Palette images expand to RGB.
/// Throws kIo for unreadable files and kUnsupportedFormat for alpha layouts.
MultiChannelImage load_image(const std::filesystem::path& path);

/// Any nonzero sample marks a boundary pixel. Color annotations are accepted
/// and tested on their first channel.
BinaryMap load_binary_map(const std::filesystem::path& path);

/// 16-bit gray, value = round(clamp(v, 0, 1) * 65535). Written atomically.
void save_strength_png(const std::filesystem::path& path, const RealMap& map);

/// 8-bit RGB or gray depending on channel count. Written atomically.
void save_image_png(const std::filesystem::path& path,
                    const MultiChannelImage& image);

/// 8-bit gray, 255 for set pixels. Written atomically.
void save_binary_png(const std::filesystem::path& path, const BinaryMap& map);

/// Writes via a temporary sibling file and renames it into place, so readers
/// never observe a partial file.
void write_file_atomically(const std::filesystem::path& path,
                           const std::string& contents);

}  // namespace edgemetric
