#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <iomanip>
#include <iostream>
#include <sstream>

#include "edgemetric/data.hpp"
#include "edgemetric/eval.hpp"
#include "edgemetric/imgproc.hpp"
#include "edgemetric/model_io.hpp"
#include "edgemetric/parallel.hpp"
#include "edgemetric/png_io.hpp"
#include "edgemetric/workflow.hpp"

namespace fs = std::filesystem;
using namespace edgemetric;

namespace {

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class Mode { kChi2Learned, kChi2Equal, kLbmRbf, kLbmLinear };

const std::map<std::string, Mode> kModes = {{"chi2-learned", Mode::kChi2Learned},
                                            {"chi2-equal", Mode::kChi2Equal},
                                            {"lbm-rbf", Mode::kLbmRbf},
                                            {"lbm-linear", Mode::kLbmLinear}};

bool is_lbm(Mode m) { return m == Mode::kLbmRbf || m == Mode::kLbmLinear; }

std::vector<std::pair<std::string, Mode>> parse_modes(const std::string& text) {
  std::vector<std::pair<std::string, Mode>> out;
  std::stringstream in(text);
  std::string name;
  while (std::getline(in, name, ',')) {
    auto it = kModes.find(name);
    if (it == kModes.end())
      throw UsageError("unknown --mode '" + name +
                       "' (valid: chi2-learned, chi2-equal, lbm-rbf, lbm-linear)");
    out.emplace_back(name, it->second);
  }
  if (out.empty()) throw UsageError("--mode is empty");
  return out;
}

// "multi" or "single:s"; returns the scale index or -1.
int parse_scale(const std::string& text) {
  if (text == "multi") return -1;
  if (text.rfind("single:", 0) == 0) {
    try {
      std::size_t used = 0;
      const int s = std::stoi(text.substr(7), &used);
      if (used == text.size() - 7 && s >= 0) return s;
    } catch (const std::exception&) {
    }
  }
  throw UsageError("--scale must be 'multi' or 'single:<index>'");
}

// Restricts a model to one of its scales.
ModelFile select_scale(ModelFile model, int scale) {
  if (scale < 0) return model;
  const int scales = model.features.scales.scales();
  if (scale >= scales)
    throw UsageError("--scale single:" + std::to_string(scale) + " but the model has " +
                     std::to_string(scales) + " scales");
  model.features.scales.radii = {model.features.scales.radii[scale]};
  if (model.metric) {
    model.metric->features = model.features;
    model.metric->scales = {model.metric->scales[scale]};
  }
  if (model.chi_square) {
    ChiSquareModel c = *model.chi_square;
    std::vector<double> w;
    for (int cue = 0; cue < kCueCount; ++cue) w.push_back(c.weight(cue, scale));
    double total = 0.0;
    for (double v : w) total += v;
    if (total > 0.0)
      for (double& v : w) v /= total;
    c.scales = 1;
    c.weights = w;
    model.chi_square = c;
  }
  return model;
}

FeatureConfig features_for(int scale) {
  FeatureConfig f;
  if (scale >= 0) {
    if (scale >= f.scales.scales())
      throw UsageError("--scale single:" + std::to_string(scale) + " is out of range (0-" +
                       std::to_string(f.scales.scales() - 1) + ")");
    f.scales = single_scale_config(scale);
  }
  return f;
}

void apply_threads(int threads) {
  if (threads < 0) throw UsageError("--threads must be >= 0");
  if (threads > 0) set_thread_count(threads);
}

std::vector<double> thresholds_from(int count) {
  if (count < 1 || count > 99) throw UsageError("--thresholds must be within [1, 99]");
  return default_thresholds(count);
}

// Model for the chosen mode, or a codebook-only model learned from `images`
// when chi2-equal runs without a model file.
ModelFile resolve_model(const std::string& model_path, Mode mode, int scale,
                        const std::vector<MultiChannelImage>& codebook_images) {
  if (model_path.empty()) {
    if (mode != Mode::kChi2Equal)
      throw UsageError("--model is required for this --mode");
    ModelFile m;
    m.features = features_for(scale);
    m.textons = TextonConfig{};
    m.codebook = learn_texton_codebook(codebook_images, *m.textons);
    return m;
  }
  ModelFile m = select_scale(load_model(model_path), scale);
  if (mode == Mode::kLbmRbf || mode == Mode::kLbmLinear) {
    if (!m.metric) throw Error(ErrorCode::kIncompatibleModel, "model file holds no learned metric");
    const KernelType want = mode == Mode::kLbmRbf ? KernelType::kRbf : KernelType::kLinear;
    if (m.metric->kernel != want)
      throw Error(ErrorCode::kIncompatibleModel,
                  std::string("model was trained with the ") + to_string(m.metric->kernel) +
                      " kernel");
  }
  return m;
}

std::string fixed(double v, int digits = 4) {
  std::ostringstream s;
  s << std::fixed << std::setprecision(digits) << v;
  return s.str();
}

// ---------------------------------------------------------------------------

struct SynthArgs {
  std::string out;
  std::string spec;
  std::string kinds;
  std::int64_t seed = -1;
};

int cmd_synth(const SynthArgs& a) {
  CorpusSpec spec;
  try {
    spec = a.spec.empty() ? default_corpus_spec() : load_corpus_spec(a.spec);
    if (!a.kinds.empty()) {
      std::array<bool, 4> keep{};
      std::stringstream in(a.kinds);
      std::string name;
      while (std::getline(in, name, ',')) keep[static_cast<int>(parse_synth_kind(name))] = true;
      for (auto& split : spec.counts)
        for (int k = 0; k < 4; ++k)
          if (!keep[k]) split[k] = 0;
    }
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kInvalidArgument) throw UsageError(e.what());
    throw;
  }
  if (a.seed >= 0) spec.seed = static_cast<std::uint64_t>(a.seed);
  const auto items = synth_generate(spec, a.out);
  std::cout << "wrote " << items.size() << " images with ground truth to " << a.out << "\n";
  return 0;
}

struct DetectArgs {
  std::vector<std::string> images;
  std::string model;
  std::string mode = "lbm-rbf";
  std::string scale = "multi";
  std::string out = ".";
  double smooth = 1.0;
  double noise_var = 0.0;
  std::uint64_t seed = 1;
};

int cmd_detect(const DetectArgs& a) {
  const auto modes = parse_modes(a.mode);
  if (modes.size() != 1) throw UsageError("detect takes a single --mode");
  const Mode mode = modes.front().second;
  const int scale = parse_scale(a.scale);
  if (a.model.empty() && mode != Mode::kChi2Equal)
    throw UsageError("--model is required for --mode " + a.mode);
  if (a.smooth < 0.0) throw UsageError("--smooth must be >= 0");
  if (a.noise_var < 0.0) throw UsageError("--noise-var must be >= 0");

  std::vector<MultiChannelImage> images;
  for (const auto& p : a.images) images.push_back(load_image(p));
  images = with_noise(images, a.noise_var, a.seed);
  const ModelFile model = resolve_model(a.model, mode, scale, images);
  const Detector detector =
      make_detector(model, is_lbm(mode), mode == Mode::kChi2Learned, a.smooth);

  fs::create_directories(a.out);
  for (std::size_t i = 0; i < images.size(); ++i) {
    const Detection det = detector.detect(images[i]);
    const std::string stem = fs::path(a.images[i]).stem().string();
    save_strength_png(fs::path(a.out) / (stem + "_raw.png"), det.raw.strength);
    save_strength_png(fs::path(a.out) / (stem + "_thin.png"), det.thinned.strength);
    double peak = 0.0;
    for (double v : det.thinned.strength.values()) peak = std::max(peak, v);
    std::cout << stem << ": max strength " << fixed(peak) << "\n";
  }
  return 0;
}

struct TrainArgs {
  std::string data;
  std::string out;
  std::string log;
  std::string mode = "lbm-rbf";
  std::string scale = "multi";
  std::string objective = "per-scale";
  double lr = 1e-4;
  int epochs = 40;
  int patience = 5;
  int images_per_epoch = 20;
  int sgd_passes = 16;
  int thresholds = 33;
  double tolerance = 0.0;
  double smooth = 1.0;
  std::uint64_t seed = 1;
};

int cmd_train(const TrainArgs& a) {
  const auto modes = parse_modes(a.mode);
  if (modes.size() != 1) throw UsageError("train takes a single --mode");
  const Mode mode = modes.front().second;
  if (mode == Mode::kChi2Equal) throw UsageError("chi2-equal has nothing to train");
  const FeatureConfig features = features_for(parse_scale(a.scale));

  TrainConfig cfg;
  cfg.learning_rate = a.lr;
  cfg.max_epochs = a.epochs;
  cfg.patience = a.patience;
  cfg.images_per_epoch = a.images_per_epoch;
  cfg.sgd_passes = a.sgd_passes;
  cfg.validation_thresholds = thresholds_from(a.thresholds);
  cfg.tolerance = a.tolerance;
  cfg.seed = a.seed;
  cfg.kernel = mode == Mode::kLbmLinear ? KernelType::kLinear : KernelType::kRbf;
  if (a.objective == "per-scale")
    cfg.objective = Objective::kPerScale;
  else if (a.objective == "combined")
    cfg.objective = Objective::kCombined;
  else
    throw UsageError("--objective must be 'per-scale' or 'combined'");
  try {
    cfg.validate();
  } catch (const Error& e) {
    throw UsageError(e.what());
  }

  const auto items = load_dataset(a.data);
  const LoadedSplit train = load_split(items, Split::kTrain);
  TextonConfig textons;
  textons.seed = a.seed;

  if (mode == Mode::kChi2Learned) {
    const ModelFile model = train_chi_square(train, features, textons, a.seed);
    save_model(a.out, model);
    std::cout << "chi-square weights (cue x scale):\n";
    for (int c = 0; c < kCueCount; ++c) {
      std::cout << "  " << cue_name(c);
      for (int s = 0; s < model.chi_square->scales; ++s)
        std::cout << ' ' << fixed(model.chi_square->weight(c, s));
      std::cout << "\n";
    }
    std::cout << "model written to " << a.out << "\n";
    return 0;
  }

  if (a.lr == 0.0)
    std::cerr << "warning: --lr 0 performs no updates; the model keeps its initial values\n";
  const LoadedSplit val = load_split(items, Split::kVal);
  const LbmTraining trained = train_lbm(
      train, val, features, textons, cfg, a.smooth, [](const EpochLog& e) {
        std::cout << "epoch " << e.epoch << "  samples " << e.samples << "  loss "
                  << fixed(e.mean_loss) << "  smoothed " << fixed(e.smoothed_loss)
                  << "  val F " << fixed(e.validation_f) << std::endl;
      });
  save_model(a.out, trained.model);
  const std::string log = a.log.empty() ? a.out + ".log.csv" : a.log;
  write_file_atomically(log, training_log_csv(trained.result.log));
  std::cout << "best validation F " << fixed(trained.result.best_validation_f)
            << " at epoch " << trained.result.best_epoch << "\n";
  std::cout << "model written to " << a.out << ", log to " << log << "\n";
  return 0;
}

struct EvalArgs {
  std::string data;
  std::string split = "test";
  std::string model;
  std::string mode = "lbm-rbf";
  std::string scale = "multi";
  std::string detections;
  std::string out = ".";
  int thresholds = 33;
  double tolerance = 0.0;
  double noise_var = 0.0;
  double smooth = 1.0;
  std::uint64_t seed = 1;
};

int cmd_eval(const EvalArgs& a) {
  EvalOptions options;
  options.thresholds = thresholds_from(a.thresholds);
  options.tolerance = a.tolerance;
  if (a.noise_var < 0.0) throw UsageError("--noise-var must be >= 0");
  Split split;
  try {
    split = parse_split(a.split);
  } catch (const Error& e) {
    throw UsageError(e.what());
  }

  const auto items = load_dataset(a.data);
  const LoadedSplit data = load_split(items, split);
  if (data.size() == 0) throw Error(ErrorCode::kDataset, "split " + a.split + " is empty");
  fs::create_directories(a.out);

  std::vector<std::pair<std::string, EvalReport>> reports;
  if (!a.detections.empty()) {
    std::vector<RealMap> maps;
    for (const auto& id : data.ids) {
      fs::path p = fs::path(a.detections) / (id + "_thin.png");
      if (!fs::exists(p)) p = fs::path(a.detections) / (id + ".png");
      const MultiChannelImage img = load_image(p);
      RealMap m(img.width(), img.height());
      for (int y = 0; y < img.height(); ++y)
        for (int x = 0; x < img.width(); ++x) m(x, y) = img.at(x, y, 0);
      maps.push_back(std::move(m));
    }
    reports.emplace_back("detections", summarize(pr_curve(maps, data.annotations, options)));
  } else {
    const int scale = parse_scale(a.scale);
    const auto modes = parse_modes(a.mode);
    for (const auto& [name, mode] : modes)
      if (a.model.empty() && mode != Mode::kChi2Equal)
        throw UsageError("--model is required for --mode " + name);
    const auto images = with_noise(data.images, a.noise_var, a.seed);
    std::vector<MultiChannelImage> codebook_images;
    if (a.model.empty()) {
      codebook_images = load_split(items, Split::kTrain).images;
      if (codebook_images.empty()) codebook_images = data.images;
    }
    for (const auto& [name, mode] : modes) {
      const ModelFile model = resolve_model(a.model, mode, scale, codebook_images);
      const Detector detector =
          make_detector(model, is_lbm(mode), mode == Mode::kChi2Learned, a.smooth);
      const auto cues =
          compute_all_cues(images, detector.textons, detector.codebook, detector.features.bins);
      reports.emplace_back(name, summarize(pr_curve(detect_all(detector, cues),
                                                    data.annotations, options)));
    }
  }

  std::string text;
  std::string csv = "label,ods,ods_threshold,ois,ap,max_recall\n";
  for (const auto& [label, report] : reports) {
    write_file_atomically(fs::path(a.out) / (label + "_pr.csv"), pr_csv(report.table.dataset));
    text += summary_text(report, label);
    csv += summary_csv_row(report, label);
  }
  for (std::size_t i = 1; i < reports.size(); ++i)
    text += "ODS difference " + reports[i].first + " - " + reports[0].first + ": " +
            fixed(reports[i].second.ods - reports[0].second.ods) + "\n";
  if (a.noise_var > 0.0) text += "noise variance " + fixed(a.noise_var, 6) + "\n";
  write_file_atomically(fs::path(a.out) / "summary.txt", text);
  write_file_atomically(fs::path(a.out) / "summary.csv", csv);
  std::cout << text;
  return 0;
}

struct BenchArgs {
  std::string image;
  std::string model;
  int runs = 5;
  std::uint64_t seed = 1;
};

template <typename F>
double median_ms(int runs, F&& body) {
  std::vector<double> times;
  for (int i = 0; i < runs; ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    body();
    times.push_back(
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count());
  }
  std::sort(times.begin(), times.end());
  return times[times.size() / 2];
}

int cmd_bench(const BenchArgs& a) {
  if (a.runs < 1) throw UsageError("--runs must be >= 1");
  MultiChannelImage image(1, 1, 3, ColorSpace::kRgb);
  if (a.image.empty()) {
    CorpusSpec spec = default_corpus_spec();
    spec.width = 481;
    spec.height = 321;
    std::mt19937_64 rng(a.seed);
    image = synth_image(SynthKind::kMixed, spec, rng).image;
  } else {
    image = load_image(a.image);
  }

  ModelFile model;
  if (a.model.empty()) {
    model.features = FeatureConfig{};
    model.textons = TextonConfig{};
    model.codebook = learn_texton_codebook(std::span(&image, 1), *model.textons);
    TrainConfig cfg;
    cfg.seed = a.seed;
    model.metric = init_model(cfg, model.features);
  } else {
    model = load_model(a.model);
    if (!model.metric) throw Error(ErrorCode::kIncompatibleModel, "model file holds no learned metric");
  }
  const Detector chi = make_detector(model, false, false);
  const Detector lbm = make_detector(model, true, false);

  CueStack cues;
  const double t_features = median_ms(a.runs, [&] { cues = chi.cues(image); });
  OrientedResponses chi_resp, lbm_resp;
  const double t_chi = median_ms(a.runs, [&] { chi_resp = chi.responses(cues); });
  const double t_lbm = median_ms(a.runs, [&] { lbm_resp = lbm.responses(cues); });
  const double t_post_chi = median_ms(a.runs, [&] { (void)postprocess(chi_resp, 1.0); });
  const double t_post_lbm = median_ms(a.runs, [&] { (void)postprocess(lbm_resp, 1.0); });

  std::cout << "image " << image.width() << "x" << image.height() << ", median of " << a.runs
            << " runs, " << thread_count() << " thread(s)\n";
  std::cout << std::left << std::setw(12) << "stage" << std::right << std::setw(12)
            << "chi2 ms" << std::setw(12) << "lbm ms" << "\n";
  auto row = [](const char* name, double c, double l) {
    std::cout << std::left << std::setw(12) << name << std::right << std::setw(12)
              << fixed(c, 1) << std::setw(12) << fixed(l, 1) << "\n";
  };
  row("features", t_features, t_features);
  row("distance", t_chi, t_lbm);
  row("postproc", t_post_chi, t_post_lbm);
  std::cout << "distance speedup " << fixed(t_chi / t_lbm, 2) << "x\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Boundary detection with a learned histogram metric"};
  app.require_subcommand(1);
  int threads = 0;
  app.add_option("--threads", threads, "Worker threads (0 = EDGEMETRIC_THREADS or all cores)");

  SynthArgs synth;
  auto* s = app.add_subcommand("synth", "Generate a synthetic corpus");
  s->add_option("--out", synth.out, "Output dataset directory")->required();
  s->add_option("--spec", synth.spec, "Corpus spec (JSON)");
  s->add_option("--kinds", synth.kinds, "Comma-separated kinds to keep");
  s->add_option("--seed", synth.seed, "Override the corpus seed");

  DetectArgs detect;
  auto* d = app.add_subcommand("detect", "Detect boundaries in images");
  d->add_option("images", detect.images, "Input PNG images")->required();
  d->add_option("--model", detect.model, "Model file");
  d->add_option("--mode", detect.mode, "chi2-learned | chi2-equal | lbm-rbf | lbm-linear");
  d->add_option("--scale", detect.scale, "multi | single:<index>");
  d->add_option("--out", detect.out, "Output directory");
  d->add_option("--smooth", detect.smooth, "Smoothing radius in pixels");
  d->add_option("--noise-var", detect.noise_var, "Add Gaussian noise of this variance");
  d->add_option("--seed", detect.seed, "Noise seed");

  TrainArgs train;
  auto* t = app.add_subcommand("train", "Train a metric on a dataset");
  t->add_option("--data", train.data, "Dataset root")->required();
  t->add_option("--out", train.out, "Model output path")->required();
  t->add_option("--log", train.log, "Training log CSV (default <out>.log.csv)");
  t->add_option("--mode", train.mode, "lbm-rbf | lbm-linear | chi2-learned");
  t->add_option("--scale", train.scale, "multi | single:<index>");
  t->add_option("--objective", train.objective, "per-scale | combined");
  t->add_option("--lr", train.lr, "SGD learning rate");
  t->add_option("--epochs", train.epochs, "Maximum epochs");
  t->add_option("--patience", train.patience, "Epochs without improvement before stopping");
  t->add_option("--images-per-epoch", train.images_per_epoch, "Images per epoch");
  t->add_option("--sgd-passes", train.sgd_passes, "SGD passes over each image's samples");
  t->add_option("--thresholds", train.thresholds, "Validation threshold count");
  t->add_option("--tolerance", train.tolerance, "Match tolerance in pixels (0 = default)");
  t->add_option("--smooth", train.smooth, "Smoothing radius in pixels");
  t->add_option("--seed", train.seed, "Random seed");

  EvalArgs eval;
  auto* e = app.add_subcommand("eval", "Evaluate detections against ground truth");
  e->add_option("--data", eval.data, "Dataset root")->required();
  e->add_option("--split", eval.split, "train | val | test");
  e->add_option("--model", eval.model, "Model file");
  e->add_option("--mode", eval.mode, "Comma-separated metric modes");
  e->add_option("--scale", eval.scale, "multi | single:<index>");
  e->add_option("--detections", eval.detections, "Directory of precomputed thinned maps");
  e->add_option("--out", eval.out, "Report directory");
  e->add_option("--thresholds", eval.thresholds, "Threshold count");
  e->add_option("--tolerance", eval.tolerance, "Match tolerance in pixels (0 = default)");
  e->add_option("--noise-var", eval.noise_var, "Add Gaussian noise of this variance");
  e->add_option("--smooth", eval.smooth, "Smoothing radius in pixels");
  e->add_option("--seed", eval.seed, "Noise seed");

  BenchArgs bench;
  auto* b = app.add_subcommand("bench", "Time the pipeline stages");
  b->add_option("--image", bench.image, "Image (default: synthetic 481x321)");
  b->add_option("--model", bench.model, "Model file (default: random metric)");
  b->add_option("--runs", bench.runs, "Runs per stage");
  b->add_option("--seed", bench.seed, "Random seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& err) {
    return app.exit(err) == 0 ? 0 : 2;
  }

  try {
    apply_threads(threads);
    if (*s) return cmd_synth(synth);
    if (*d) return cmd_detect(detect);
    if (*t) return cmd_train(train);
    if (*e) return cmd_eval(eval);
    if (*b) return cmd_bench(bench);
  } catch (const UsageError& err) {
    std::cerr << "usage error: " << err.what() << "\n";
    return 2;
  } catch (const Error& err) {
    std::cerr << "error (" << to_string(err.code()) << "): " << err.what() << "\n";
    return 1;
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << "\n";
    return 1;
  }
  return 2;
}
