#pragma once

#include <filesystem>
#include <optional>
#include <string>

#include "edgemetric/metric.hpp"
#include "edgemetric/pipeline.hpp"

namespace edgemetric {

inline constexpr const char* kModelMagic = "edgemetric-model v1";

/// Everything a detector needs besides the image. Any of the texton
/// codebook, learned metric and chi-square weights may be absent.
struct ModelFile {
  FeatureConfig features;
  std::optional<TextonConfig> textons;
  std::optional<TextonCodebook> codebook;
  std::optional<MetricModel> metric;
  std::optional<ChiSquareModel> chi_square;

  friend bool operator==(const ModelFile&, const ModelFile&) = default;
};

std::string serialize_model(const ModelFile& model);
/// Throws kCorruptModel on malformed text. When `expected` is given and the
/// stored feature layout differs, throws kIncompatibleModel.
ModelFile parse_model(const std::string& text,
                      const std::optional<FeatureConfig>& expected = std::nullopt);

void save_model(const std::filesystem::path& path, const ModelFile& model);
ModelFile load_model(const std::filesystem::path& path,
                     const std::optional<FeatureConfig>& expected = std::nullopt);

}  // namespace edgemetric
