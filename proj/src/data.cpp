#include "edgemetric/data.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <sstream>

#include "edgemetric/png_io.hpp"
#include "edgemetric/postproc.hpp"

namespace edgemetric {
namespace fs = std::filesystem;
namespace {

using Json = nlohmann::json;

struct Fill {
  std::array<double, 3> color{};  // mean RGB
  double amplitude = 0.0;         // square-wave grating, 0 = flat
  double orientation = 0.0;
  int period = 6;
};

double grating(const Fill& f, int x, int y) {
  if (f.amplitude == 0.0) return 0.0;
  const double t = (x * std::cos(f.orientation) + y * std::sin(f.orientation)) / f.period;
  const double phase = t - std::floor(t);
  return phase < 0.5 ? f.amplitude : -f.amplitude;
}

MultiChannelImage render(const LabelMap& regions, const std::vector<Fill>& fills) {
  MultiChannelImage img(regions.width(), regions.height(), 3, ColorSpace::kRgb);
  for (int y = 0; y < regions.height(); ++y)
    for (int x = 0; x < regions.width(); ++x) {
      const Fill& f = fills[regions(x, y)];
      const double g = grating(f, x, y);
      for (int c = 0; c < 3; ++c) img.at(x, y, c) = std::clamp(f.color[c] + g, 0.0, 1.0);
    }
  return img;
}

Fill gray_fill(double v) { return Fill{{v, v, v}}; }

// Unit vector orthogonal to the gray axis.
std::array<double, 3> chroma_direction(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> angle(0.0, 2.0 * std::numbers::pi);
  const double t = angle(rng);
  const double e1[3] = {1.0 / std::sqrt(2.0), -1.0 / std::sqrt(2.0), 0.0};
  const double e2[3] = {1.0 / std::sqrt(6.0), 1.0 / std::sqrt(6.0), -2.0 / std::sqrt(6.0)};
  return {std::cos(t) * e1[0] + std::sin(t) * e2[0],
          std::cos(t) * e1[1] + std::sin(t) * e2[1],
          std::cos(t) * e1[2] + std::sin(t) * e2[2]};
}

LabelMap voronoi_regions(int w, int h, int n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> ux(0.0, w), uy(0.0, h);
  const double min_sep = std::min(w, h) / 4.0;
  std::vector<std::array<double, 2>> seeds;
  for (int attempt = 0; static_cast<int>(seeds.size()) < n; ++attempt) {
    std::array<double, 2> p{ux(rng), uy(rng)};
    const bool ok = attempt > 1000 ||
                    std::all_of(seeds.begin(), seeds.end(), [&](const auto& s) {
                      return std::hypot(s[0] - p[0], s[1] - p[1]) >= min_sep;
                    });
    if (ok) seeds.push_back(p);
  }
  LabelMap regions(w, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      int best = 0;
      double best_d = 1e300;
      for (int i = 0; i < n; ++i) {
        const double d = std::hypot(x + 0.5 - seeds[i][0], y + 0.5 - seeds[i][1]);
        if (d < best_d) {
          best_d = d;
          best = i;
        }
      }
      regions(x, y) = best;
    }
  return regions;
}

void add_noise(MultiChannelImage& img, double std_dev, std::mt19937_64& rng) {
  if (std_dev <= 0.0) return;
  std::normal_distribution<double> noise(0.0, std_dev);
  for (double& v : img.values()) v = std::clamp(v + noise(rng), 0.0, 1.0);
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  require(static_cast<bool>(in), ErrorCode::kIo, "cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

}  // namespace

const char* to_string(Split split) {
  switch (split) {
    case Split::kTrain: return "train";
    case Split::kVal: return "val";
    case Split::kTest: return "test";
  }
  return "?";
}

Split parse_split(const std::string& name) {
  for (Split s : kAllSplits)
    if (name == to_string(s)) return s;
  fail(ErrorCode::kInvalidArgument, "unknown split '" + name + "' (valid: train, val, test)");
}

std::vector<DatasetItem> load_dataset(const fs::path& root) {
  require(fs::is_directory(root), ErrorCode::kDataset,
          "dataset root is not a directory: " + root.string());
  std::vector<DatasetItem> items;
  for (Split split : kAllSplits) {
    const fs::path image_dir = root / "images" / to_string(split);
    const fs::path gt_dir = root / "groundTruth" / to_string(split);
    if (!fs::is_directory(image_dir)) continue;

    std::map<std::string, std::vector<std::pair<int, fs::path>>> annotations;
    if (fs::is_directory(gt_dir)) {
      for (const auto& entry : fs::directory_iterator(gt_dir)) {
        if (entry.path().extension() != ".png") continue;
        const std::string stem = entry.path().stem().string();
        const auto underscore = stem.rfind('_');
        if (underscore == std::string::npos) continue;
        int k = 0;
        try {
          std::size_t used = 0;
          k = std::stoi(stem.substr(underscore + 1), &used);
          if (used != stem.size() - underscore - 1) continue;
        } catch (const std::exception&) {
          continue;
        }
        annotations[stem.substr(0, underscore)].emplace_back(k, entry.path());
      }
    }

    std::vector<fs::path> images;
    for (const auto& entry : fs::directory_iterator(image_dir))
      if (entry.path().extension() == ".png") images.push_back(entry.path());
    std::sort(images.begin(), images.end());

    for (const auto& path : images) {
      DatasetItem item;
      item.id = path.stem().string();
      item.image = path;
      item.split = split;
      auto it = annotations.find(item.id);
      if (it == annotations.end() || it->second.empty())
        fail(ErrorCode::kDataset, "image has no annotations: " + path.string());
      std::sort(it->second.begin(), it->second.end());
      const MultiChannelImage image = load_image(path);
      for (const auto& [k, gt_path] : it->second) {
        const BinaryMap gt = load_binary_map(gt_path);
        if (gt.width() != image.width() || gt.height() != image.height())
          fail(ErrorCode::kDataset,
               "annotation " + gt_path.string() + " is " + std::to_string(gt.width()) +
                   "x" + std::to_string(gt.height()) + " but its image is " +
                   std::to_string(image.width()) + "x" + std::to_string(image.height()));
        item.annotations.push_back(gt_path);
      }
      items.push_back(std::move(item));
    }
  }
  return items;
}

std::vector<DatasetItem> items_in(const std::vector<DatasetItem>& items, Split split) {
  std::vector<DatasetItem> out;
  for (const auto& item : items)
    if (item.split == split) out.push_back(item);
  return out;
}

LoadedItem load_item(const DatasetItem& item) {
  LoadedItem out{load_image(item.image), {}};
  for (const auto& path : item.annotations) {
    BinaryMap gt = load_binary_map(path);
    require(gt.width() == out.image.width() && gt.height() == out.image.height(),
            ErrorCode::kDataset, "annotation " + path.string() + " has the wrong size");
    out.annotations.push_back(std::move(gt));
  }
  return out;
}

const char* to_string(SynthKind kind) {
  switch (kind) {
    case SynthKind::kBrightnessStep: return "brightness_step";
    case SynthKind::kColorStep: return "color_step";
    case SynthKind::kTextureGrating: return "texture_grating";
    case SynthKind::kMixed: return "mixed";
  }
  return "?";
}

std::string synth_kind_names() {
  std::string out;
  for (SynthKind k : kAllSynthKinds) {
    if (!out.empty()) out += ", ";
    out += to_string(k);
  }
  return out;
}

SynthKind parse_synth_kind(const std::string& name) {
  for (SynthKind k : kAllSynthKinds)
    if (name == to_string(k)) return k;
  fail(ErrorCode::kInvalidArgument,
       "unknown synthetic kind '" + name + "' (valid kinds: " + synth_kind_names() + ")");
}

int CorpusSpec::total() const {
  int n = 0;
  for (const auto& split : counts)
    for (int c : split) n += c;
  return n;
}

void CorpusSpec::validate() const {
  require(width >= 16 && height >= 16 && width <= 4096 && height <= 4096,
          ErrorCode::kInvalidArgument, "image size must be within [16, 4096]");
  for (const auto& split : counts)
    for (int c : split)
      require(c >= 0, ErrorCode::kInvalidArgument, "counts must be >= 0");
  require(total() > 0, ErrorCode::kInvalidArgument, "corpus spec has no images");
  require(contrast_min > 0.0 && contrast_min <= contrast_max && contrast_max <= 1.0,
          ErrorCode::kInvalidArgument, "contrast must satisfy 0 < min <= max <= 1");
  require(noise_std >= 0.0 && noise_std <= 1.0, ErrorCode::kInvalidArgument,
          "noise must be within [0, 1]");
}

CorpusSpec default_corpus_spec() {
  CorpusSpec spec;
  spec.counts[static_cast<int>(Split::kTrain)] = {13, 13, 12, 12};
  spec.counts[static_cast<int>(Split::kVal)] = {5, 5, 5, 5};
  spec.counts[static_cast<int>(Split::kTest)] = {5, 5, 5, 5};
  return spec;
}

CorpusSpec parse_corpus_spec(const std::string& json_text) {
  Json doc;
  try {
    doc = Json::parse(json_text);
  } catch (const Json::parse_error& e) {
    fail(ErrorCode::kInvalidArgument, std::string("corpus spec is not valid JSON: ") + e.what());
  }
  require(doc.is_object(), ErrorCode::kInvalidArgument, "corpus spec must be a JSON object");
  CorpusSpec spec = default_corpus_spec();
  try {
    for (const auto& [key, value] : doc.items()) {
      if (key == "size") {
        if (value.is_array()) {
          require(value.size() == 2, ErrorCode::kInvalidArgument, "size needs [width, height]");
          spec.width = value[0].get<int>();
          spec.height = value[1].get<int>();
        } else {
          spec.width = spec.height = value.get<int>();
        }
      } else if (key == "counts") {
        require(value.is_object(), ErrorCode::kInvalidArgument, "counts must be an object");
        spec.counts = {};
        for (const auto& [split_name, kinds] : value.items()) {
          const Split split = parse_split(split_name);
          require(kinds.is_object(), ErrorCode::kInvalidArgument,
                  "counts." + split_name + " must map kinds to counts");
          for (const auto& [kind_name, n] : kinds.items())
            spec.counts[static_cast<int>(split)][static_cast<int>(parse_synth_kind(kind_name))] =
                n.get<int>();
        }
      } else if (key == "contrast") {
        if (value.is_array()) {
          require(value.size() == 2, ErrorCode::kInvalidArgument, "contrast needs [min, max]");
          spec.contrast_min = value[0].get<double>();
          spec.contrast_max = value[1].get<double>();
        } else {
          spec.contrast_min = spec.contrast_max = value.get<double>();
        }
      } else if (key == "noise") {
        spec.noise_std = value.get<double>();
      } else if (key == "seed") {
        spec.seed = value.get<std::uint64_t>();
      } else {
        fail(ErrorCode::kInvalidArgument, "unknown corpus spec key '" + key + "'");
      }
    }
  } catch (const Json::exception& e) {
    fail(ErrorCode::kInvalidArgument, std::string("corpus spec: ") + e.what());
  }
  spec.validate();
  return spec;
}

CorpusSpec load_corpus_spec(const fs::path& path) {
  return parse_corpus_spec(read_text(path));
}

BinaryMap border_map(const LabelMap& regions) {
  BinaryMap border(regions.width(), regions.height());
  for (int y = 0; y < regions.height(); ++y)
    for (int x = 0; x < regions.width(); ++x) {
      const int r = regions(x, y);
      if ((x + 1 < regions.width() && regions(x + 1, y) != r) ||
          (y + 1 < regions.height() && regions(x, y + 1) != r))
        border(x, y) = 1;
    }
  return thin_binary(border);
}

LabelMap line_regions(int width, int height, double cx, double cy, double phi) {
  LabelMap regions(width, height);
  const double nx = std::cos(phi), ny = std::sin(phi);
  for (int y = 0; y < height; ++y)
    for (int x = 0; x < width; ++x)
      regions(x, y) = (x + 0.5 - cx) * nx + (y + 0.5 - cy) * ny > 0.0 ? 1 : 0;
  return regions;
}

SynthSample vertical_step(int width, int height, int column, double base,
                          double contrast) {
  require(column > 0 && column < width, ErrorCode::kInvalidArgument,
          "step column must lie inside the image");
  LabelMap regions(width, height);
  for (int y = 0; y < height; ++y)
    for (int x = 0; x < width; ++x) regions(x, y) = x >= column ? 1 : 0;
  std::vector<Fill> fills = {gray_fill(base), gray_fill(base + contrast)};
  return {render(regions, fills), regions, border_map(regions)};
}

SynthSample grating_transition(int width, int height, int column, double mean,
                               double amplitude, int period) {
  require(column > 0 && column < width, ErrorCode::kInvalidArgument,
          "border column must lie inside the image");
  LabelMap regions(width, height);
  for (int y = 0; y < height; ++y)
    for (int x = 0; x < width; ++x) regions(x, y) = x >= column ? 1 : 0;
  Fill a = gray_fill(mean), b = gray_fill(mean);
  a.amplitude = b.amplitude = amplitude;
  a.period = b.period = period;
  a.orientation = 0.0;
  b.orientation = std::numbers::pi / 2.0;
  return {render(regions, {a, b}), regions, border_map(regions)};
}

SynthSample synth_image(SynthKind kind, const CorpusSpec& spec, std::mt19937_64& rng) {
  const int w = spec.width, h = spec.height;
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  auto uniform = [&](double lo, double hi) { return lo + (hi - lo) * unit(rng); };
  const double contrast = uniform(spec.contrast_min, spec.contrast_max);

  LabelMap regions(w, h);
  std::vector<Fill> fills;
  if (kind == SynthKind::kMixed) {
    const int n = 3 + static_cast<int>(unit(rng) * 2.0);
    regions = voronoi_regions(w, h, n, rng);
    std::vector<double> levels(n);
    for (int i = 0; i < n; ++i) levels[i] = 0.25 + 0.5 * i / (n - 1);
    std::shuffle(levels.begin(), levels.end(), rng);
    for (int i = 0; i < n; ++i) {
      Fill f = gray_fill(levels[i]);
      const double pick = unit(rng);
      if (pick < 1.0 / 3.0) {
        const auto d = chroma_direction(rng);
        for (int c = 0; c < 3; ++c) f.color[c] += 0.5 * contrast * d[c];
      } else if (pick < 2.0 / 3.0) {
        f.amplitude = std::min(0.5 * contrast, 0.2);
        f.orientation = uniform(0.0, std::numbers::pi);
        f.period = 4 + 2 * static_cast<int>(unit(rng) * 3.0);
      }
      fills.push_back(f);
    }
  } else {
    const double cx = w / 2.0 + uniform(-w / 6.0, w / 6.0);
    const double cy = h / 2.0 + uniform(-h / 6.0, h / 6.0);
    regions = line_regions(w, h, cx, cy, uniform(0.0, std::numbers::pi));
    if (kind == SynthKind::kBrightnessStep) {
      const double base = uniform(0.1, 0.9 - contrast);
      fills = {gray_fill(base), gray_fill(base + contrast)};
      if (unit(rng) < 0.5) std::swap(fills[0], fills[1]);
    } else if (kind == SynthKind::kColorStep) {
      const double g = uniform(0.35, 0.65);
      const auto d = chroma_direction(rng);
      Fill a = gray_fill(g), b = gray_fill(g);
      for (int c = 0; c < 3; ++c) {
        a.color[c] += 0.5 * contrast * d[c];
        b.color[c] -= 0.5 * contrast * d[c];
      }
      fills = {a, b};
    } else {
      const double mean = uniform(0.5 * contrast, 1.0 - 0.5 * contrast);
      Fill a = gray_fill(mean), b = gray_fill(mean);
      a.amplitude = b.amplitude = 0.5 * contrast;
      a.period = b.period = 4 + 2 * static_cast<int>(unit(rng) * 3.0);
      a.orientation = uniform(0.0, std::numbers::pi);
      b.orientation = a.orientation + std::numbers::pi / 2.0;
      fills = {a, b};
    }
  }
  SynthSample out{render(regions, fills), regions, border_map(regions)};
  add_noise(out.image, spec.noise_std, rng);
  return out;
}

std::vector<DatasetItem> synth_generate(const CorpusSpec& spec, const fs::path& root) {
  spec.validate();
  std::vector<DatasetItem> items;
  int index = 0;
  for (Split split : kAllSplits) {
    const fs::path image_dir = root / "images" / to_string(split);
    const fs::path gt_dir = root / "groundTruth" / to_string(split);
    fs::create_directories(image_dir);
    fs::create_directories(gt_dir);
    for (SynthKind kind : kAllSynthKinds) {
      const int count = spec.counts[static_cast<int>(split)][static_cast<int>(kind)];
      for (int i = 0; i < count; ++i, ++index) {
        std::seed_seq seq{static_cast<std::uint32_t>(spec.seed),
                          static_cast<std::uint32_t>(spec.seed >> 32),
                          static_cast<std::uint32_t>(index)};
        std::mt19937_64 rng(seq);
        const SynthSample sample = synth_image(kind, spec, rng);
        char id[64];
        std::snprintf(id, sizeof(id), "%s_%03d", to_string(kind), index);
        DatasetItem item;
        item.id = id;
        item.split = split;
        item.image = image_dir / (item.id + ".png");
        item.annotations = {gt_dir / (item.id + "_1.png")};
        save_image_png(item.image, sample.image);
        save_binary_png(item.annotations.front(), sample.boundary);
        items.push_back(std::move(item));
      }
    }
  }
  return items;
}

}  // namespace edgemetric
