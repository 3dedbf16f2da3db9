#include "edgemetric/training.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <deque>
#include <iomanip>
#include <numbers>
#include <numeric>
#include <sstream>

namespace edgemetric {
namespace {

constexpr std::size_t kSmoothingWindow = 100;
constexpr int kOrientationRadius = 3;

// dL/dd of the clamped log loss; zero where the clamp is active.
double loss_slope(double d, int label) {
  if (d < kDistanceEps || d > 1.0 - kDistanceEps) return 0.0;
  return label ? -1.0 / d : 1.0 / (1.0 - d);
}

struct ScaleForward {
  std::vector<double> tu, tv;
  double distance = 0.0;
  double rbf_decay = 0.0;  // exp(-q / 2 sigma^2)
};

ScaleForward forward_scale(std::span<const double> u, std::span<const double> v,
                           const ScaleParams& p, const MetricModel& model) {
  ScaleForward f;
  f.tu = logistic_transform(u, p.alpha, p.beta);
  f.tv = logistic_transform(v, p.alpha, p.beta);
  if (model.kernel == KernelType::kRbf) {
    double q = 0.0;
    for (int i = 0; i < model.n; ++i) {
      const double t = f.tu[i] - f.tv[i];
      q += t * t;
    }
    f.rbf_decay = std::exp(-q / (2.0 * model.sigma * model.sigma));
  }
  f.distance = kernel_distance(f.tu, f.tv, model.kernel, model.sigma);
  return f;
}

void check_sample(const TrainingSample& sample, const MetricModel& model) {
  require(sample.u.size() == static_cast<std::size_t>(model.scale_count()) &&
              sample.v.size() == sample.u.size(),
          ErrorCode::kDimensionMismatch, "sample scale count does not match model");
  require(sample.label == 0 || sample.label == 1, ErrorCode::kInvalidArgument,
          "sample label must be 0 or 1");
}

BinaryMap union_of(const std::vector<BinaryMap>& annotations) {
  require(!annotations.empty(), ErrorCode::kInvalidArgument, "no annotations supplied");
  BinaryMap out = annotations.front();
  for (std::size_t a = 1; a < annotations.size(); ++a) {
    require(annotations[a].same_shape(out), ErrorCode::kDimensionMismatch,
            "annotations differ in size");
    for (std::size_t i = 0; i < out.size(); ++i)
      out.values()[i] |= annotations[a].values()[i];
  }
  return out;
}

// Pixels farther than `tolerance` from every set pixel of `map`.
std::vector<int> far_pixels(const BinaryMap& map, double tolerance) {
  const int r = static_cast<int>(std::ceil(tolerance));
  BinaryMap near(map.width(), map.height());
  for (int y = 0; y < map.height(); ++y)
    for (int x = 0; x < map.width(); ++x) {
      if (!map(x, y)) continue;
      for (int dy = -r; dy <= r; ++dy)
        for (int dx = -r; dx <= r; ++dx)
          if (dx * dx + dy * dy <= tolerance * tolerance && near.contains(x + dx, y + dy))
            near(x + dx, y + dy) = 1;
    }
  std::vector<int> out;
  for (int i = 0; i < static_cast<int>(near.size()); ++i)
    if (!near.values()[i]) out.push_back(i);
  return out;
}

template <typename T>
void take_random(std::vector<T>& items, std::size_t count, std::mt19937_64& rng) {
  if (items.size() <= count) return;
  std::shuffle(items.begin(), items.end(), rng);
  items.resize(count);
}

TrainingSample sample_from_masks(const CueStack& cues,
                                 const std::vector<HalfDiskMask>& masks,
                                 int scales, int x, int y, int orientation,
                                 int label) {
  TrainingSample s;
  s.x = x;
  s.y = y;
  s.orientation = orientation;
  s.label = label;
  for (int k = 0; k < scales; ++k) {
    const auto& mask = masks[static_cast<std::size_t>(orientation) * scales + k];
    HalfDiskPair pair = normalize_counts(half_disk_counts(cues, x, y, mask));
    s.u.push_back(std::move(pair.u));
    s.v.push_back(std::move(pair.v));
  }
  return s;
}

}  // namespace

void TrainConfig::validate() const {
  require(learning_rate >= 0.0 && std::isfinite(learning_rate),
          ErrorCode::kInvalidArgument, "learning rate must be >= 0");
  require(n >= 1, ErrorCode::kInvalidArgument, "N must be >= 1");
  require(sigma > 0.0, ErrorCode::kInvalidArgument, "sigma must be > 0");
  require(init_range >= 0.0, ErrorCode::kInvalidArgument, "init range must be >= 0");
  require(patience >= 1, ErrorCode::kInvalidArgument, "patience must be >= 1");
  require(max_epochs >= 1 && images_per_epoch >= 1 && sgd_passes >= 1,
          ErrorCode::kInvalidArgument,
          "epochs, images per epoch and SGD passes must be >= 1");
  require(!validation_thresholds.empty(), ErrorCode::kInvalidArgument,
          "no validation thresholds");
}

MetricModel init_model(const TrainConfig& cfg, const FeatureConfig& features) {
  cfg.validate();
  MetricModel model = zero_model(features, cfg.kernel, cfg.n, cfg.sigma);
  std::mt19937_64 rng(cfg.seed);
  std::uniform_real_distribution<double> dist(-cfg.init_range, cfg.init_range);
  for (auto& p : model.scales) {
    for (double& a : p.alpha) a = cfg.init_range > 0.0 ? dist(rng) : 0.0;
    for (double& b : p.beta) b = cfg.init_range > 0.0 ? dist(rng) : 0.0;
  }
  return model;
}

double log_loss(double distance, int label) {
  const double d = clamp_distance(distance);
  return label ? -std::log(d) : -std::log1p(-d);
}

std::vector<double> sample_scale_distances(const TrainingSample& sample,
                                           const MetricModel& model) {
  check_sample(sample, model);
  std::vector<double> out(model.scale_count());
  for (int s = 0; s < model.scale_count(); ++s)
    out[s] = lbm_distance(sample.u[s], sample.v[s], model, s);
  return out;
}

double sample_distance(const TrainingSample& sample, const MetricModel& model) {
  return lbm_combined(sample_scale_distances(sample, model));
}

double loss(std::span<const TrainingSample> samples, const MetricModel& model) {
  require(!samples.empty(), ErrorCode::kInvalidArgument, "loss of an empty sample list");
  double total = 0.0;
  for (const auto& s : samples) total += log_loss(sample_distance(s, model), s.label);
  return total;
}

double objective_value(const TrainingSample& sample, const MetricModel& model,
                       Objective objective) {
  if (objective == Objective::kCombined)
    return log_loss(sample_distance(sample, model), sample.label);
  double total = 0.0;
  for (double d : sample_scale_distances(sample, model)) total += log_loss(d, sample.label);
  return total;
}

ModelGradient gradients(const TrainingSample& sample, const MetricModel& model,
                        Objective objective) {
  check_sample(sample, model);
  const int scales = model.scale_count();
  const int n = model.n;
  const int m = model.m;

  std::vector<ScaleForward> fwd;
  fwd.reserve(scales);
  double mean = 0.0;
  for (int s = 0; s < scales; ++s) {
    fwd.push_back(forward_scale(sample.u[s], sample.v[s], model.scales[s], model));
    mean += fwd.back().distance;
  }
  mean /= scales;
  const double combined_slope = loss_slope(mean, sample.label) / scales;

  ModelGradient grad;
  grad.scales.resize(scales);
  for (int s = 0; s < scales; ++s) {
    ScaleParams& g = grad.scales[s];
    g.alpha.assign(n, 0.0);
    g.beta.assign(static_cast<std::size_t>(n) * m, 0.0);
    const ScaleForward& f = fwd[s];
    const double slope = objective == Objective::kCombined
                             ? combined_slope
                             : loss_slope(f.distance, sample.label);
    if (slope == 0.0) continue;
    const auto& u = sample.u[s];
    const auto& v = sample.v[s];
    for (int i = 0; i < n; ++i) {
      const double delta = f.tu[i] - f.tv[i];
      double dd;  // dD / d delta_i
      if (model.kernel == KernelType::kRbf) {
        dd = f.rbf_decay * delta / (model.sigma * model.sigma);
      } else {
        dd = (delta > 0.0 ? 1.0 : (delta < 0.0 ? -1.0 : 0.0)) / n;
      }
      const double gi = slope * dd;
      if (gi == 0.0) continue;
      const double gu = f.tu[i] * (1.0 - f.tu[i]);
      const double gv = f.tv[i] * (1.0 - f.tv[i]);
      g.alpha[i] = gi * (gu - gv);
      double* row = g.beta.data() + static_cast<std::size_t>(i) * m;
      const double au = gi * gu;
      const double av = gi * gv;
      for (int j = 0; j < m; ++j) row[j] = au * u[j] - av * v[j];
    }
  }
  return grad;
}

void sgd_step(MetricModel& model, const ModelGradient& grad, double learning_rate) {
  require(grad.scales.size() == model.scales.size(), ErrorCode::kDimensionMismatch,
          "gradient shape does not match the model");
  if (learning_rate == 0.0) return;
  for (std::size_t s = 0; s < grad.scales.size(); ++s) {
    auto& p = model.scales[s];
    const auto& g = grad.scales[s];
    for (std::size_t i = 0; i < p.alpha.size(); ++i) p.alpha[i] -= learning_rate * g.alpha[i];
    for (std::size_t i = 0; i < p.beta.size(); ++i) p.beta[i] -= learning_rate * g.beta[i];
  }
}

TrainingSample make_sample(const CueStack& cues, const ScaleConfig& cfg, int x,
                           int y, int orientation, int label) {
  require(cues.labels[0].contains(x, y), ErrorCode::kOutOfRange, "pixel outside the image");
  require(orientation >= 0 && orientation < cfg.n_orient, ErrorCode::kOutOfRange,
          "orientation index out of range");
  return sample_from_masks(cues, make_half_disk_masks(cfg), cfg.scales(), x, y,
                           orientation, label);
}

LabelledDetections label_detections(const BoundaryMap& thinned,
                                    const std::vector<BinaryMap>& annotations,
                                    double tolerance, double threshold) {
  require(!annotations.empty(), ErrorCode::kInvalidArgument, "no annotations supplied");
  LabelledDetections out{binarize(thinned.strength, threshold),
                         BinaryMap(thinned.width(), thinned.height())};
  for (const auto& gt : annotations) {
    const MatchResult m = match_boundaries(out.detections, gt, tolerance);
    for (std::size_t i = 0; i < out.matched.size(); ++i)
      out.matched.values()[i] |= m.candidate_matched.values()[i];
  }
  return out;
}

std::vector<TrainingSample> generate_samples(
    const BoundaryMap& thinned, const std::vector<BinaryMap>& annotations,
    double tolerance, double threshold, const CueStack& cues,
    const ScaleConfig& cfg, std::mt19937_64& rng) {
  const LabelledDetections labelled =
      label_detections(thinned, annotations, tolerance, threshold);
  std::vector<int> positives, negatives;
  for (int i = 0; i < static_cast<int>(labelled.detections.size()); ++i) {
    if (!labelled.detections.values()[i]) continue;
    (labelled.matched.values()[i] ? positives : negatives).push_back(i);
  }
  take_random(negatives, positives.size(), rng);

  const auto masks = make_half_disk_masks(cfg);
  std::vector<TrainingSample> samples;
  samples.reserve(positives.size() + negatives.size());
  const int w = thinned.width();
  for (int label : {1, 0}) {
    for (int i : label ? positives : negatives) {
      const int x = i % w;
      const int y = i / w;
      samples.push_back(sample_from_masks(cues, masks, cfg.scales(), x, y,
                                          thinned.orientation(x, y), label));
    }
  }
  return samples;
}

int annotation_orientation(const BinaryMap& annotation, int x, int y, int n_orient) {
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (int dy = -kOrientationRadius; dy <= kOrientationRadius; ++dy)
    for (int dx = -kOrientationRadius; dx <= kOrientationRadius; ++dx) {
      if (dx * dx + dy * dy > kOrientationRadius * kOrientationRadius) continue;
      if (!annotation.contains(x + dx, y + dy) || !annotation(x + dx, y + dy)) continue;
      sxx += dx * dx;
      sxy += dx * dy;
      syy += dy * dy;
    }
  // Principal axis in image axes, then flipped to counter-clockwise angles.
  const double phi = 0.5 * std::atan2(2.0 * sxy, sxx - syy);
  double theta = std::fmod(-phi, std::numbers::pi);
  if (theta < 0.0) theta += std::numbers::pi;
  const int o = static_cast<int>(std::lround(theta / (std::numbers::pi / n_orient)));
  return o % n_orient;
}

std::vector<TrainingSample> annotation_samples(
    const std::vector<BinaryMap>& annotations, double tolerance,
    const CueStack& cues, const ScaleConfig& cfg,
    const Grid<int>& negative_orientation, std::mt19937_64& rng,
    std::size_t max_positives) {
  const BinaryMap gt = union_of(annotations);
  require(gt.width() == cues.width() && gt.height() == cues.height(),
          ErrorCode::kDimensionMismatch, "annotations do not match the cue stack");
  std::vector<int> positives;
  for (int i = 0; i < static_cast<int>(gt.size()); ++i)
    if (gt.values()[i]) positives.push_back(i);
  take_random(positives, max_positives, rng);
  std::sort(positives.begin(), positives.end());
  std::vector<int> negatives = far_pixels(gt, tolerance);
  take_random(negatives, positives.size(), rng);
  std::sort(negatives.begin(), negatives.end());

  const auto masks = make_half_disk_masks(cfg);
  const int w = gt.width();
  std::vector<TrainingSample> samples;
  for (int i : positives) {
    const int x = i % w, y = i / w;
    samples.push_back(sample_from_masks(cues, masks, cfg.scales(), x, y,
                                        annotation_orientation(gt, x, y, cfg.n_orient), 1));
  }
  for (int i : negatives) {
    const int x = i % w, y = i / w;
    samples.push_back(sample_from_masks(cues, masks, cfg.scales(), x, y,
                                        negative_orientation(x, y), 0));
  }
  return samples;
}

double validation_f(const MetricModel& model, const std::vector<CueStack>& cues,
                    const std::vector<std::vector<BinaryMap>>& annotations,
                    double smooth_radius, const TrainConfig& cfg) {
  std::vector<RealMap> maps;
  maps.reserve(cues.size());
  for (const auto& c : cues)
    maps.push_back(postprocess(lbm_responses(c, model), smooth_radius).thinned.strength);
  EvalOptions options;
  options.thresholds = cfg.validation_thresholds;
  options.tolerance = cfg.tolerance;
  return summarize(pr_curve(maps, annotations, options)).ods;
}

TrainResult train(const TrainingCorpus& corpus, const FeatureConfig& features,
                  const TrainConfig& cfg, double smooth_radius,
                  const EpochCallback& on_epoch) {
  cfg.validate();
  require(!corpus.train_cues.empty(), ErrorCode::kDataset, "training split is empty");
  require(!corpus.val_cues.empty(), ErrorCode::kDataset, "validation split is empty");
  require(corpus.train_cues.size() == corpus.train_annotations.size() &&
              corpus.val_cues.size() == corpus.val_annotations.size(),
          ErrorCode::kDataset, "every image needs its annotations");

  std::mt19937_64 rng(cfg.seed ^ 0x9e3779b97f4a7c15ULL);
  TrainResult result;
  result.initial_model = init_model(cfg, features);
  MetricModel model = result.initial_model;

  EpochLog initial;
  initial.validation_f = validation_f(model, corpus.val_cues, corpus.val_annotations,
                                      smooth_radius, cfg);
  result.log.push_back(initial);
  if (on_epoch) on_epoch(initial);
  result.model = model;
  result.best_validation_f = initial.validation_f;
  double reference_f = initial.validation_f;
  int stale = 0;

  std::deque<double> window;
  double window_sum = 0.0;
  const ScaleConfig& scales = features.scales;
  std::uniform_int_distribution<std::size_t> pick(0, corpus.train_cues.size() - 1);

  for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    EpochLog entry;
    entry.epoch = epoch;
    double loss_sum = 0.0;
    double smoothed_sum = 0.0;
    for (int step = 0; step < cfg.images_per_epoch; ++step) {
      const std::size_t idx = pick(rng);
      const CueStack& cues = corpus.train_cues[idx];
      const auto& annotations = corpus.train_annotations[idx];
      const double tol = cfg.tolerance > 0.0
                             ? cfg.tolerance
                             : default_tolerance(cues.width(), cues.height());
      const Detection det = postprocess(lbm_responses(cues, model), smooth_radius);

      std::vector<TrainingSample> samples;
      if (epoch > 1)
        samples = generate_samples(det.thinned, annotations, tol,
                                   cfg.detection_threshold, cues, scales, rng);
      const bool has_positive = std::any_of(samples.begin(), samples.end(),
                                            [](const auto& s) { return s.label == 1; });
      if (!has_positive)
        samples = annotation_samples(annotations, tol, cues, scales,
                                     det.raw.orientation, rng);
      for (auto& sample : samples) sample.image = static_cast<int>(idx);

      for (int pass = 0; pass < cfg.sgd_passes; ++pass) {
        std::shuffle(samples.begin(), samples.end(), rng);
        for (const auto& sample : samples) {
          const double l = log_loss(sample_distance(sample, model), sample.label);
          if (!std::isfinite(l))
            fail(ErrorCode::kDivergence,
                 "training loss became non-finite at epoch " + std::to_string(epoch));
          sgd_step(model, gradients(sample, model, cfg.objective), cfg.learning_rate);
          for (const auto& p : model.scales)
            for (double a : p.alpha)
              if (!std::isfinite(a))
                fail(ErrorCode::kDivergence, "model parameters diverged at epoch " +
                                                 std::to_string(epoch));

          result.sample_losses.push_back(l);
          loss_sum += l;
          ++entry.samples;
          window.push_back(l);
          window_sum += l;
          if (window.size() > kSmoothingWindow) {
            window_sum -= window.front();
            window.pop_front();
          }
          smoothed_sum += window_sum / window.size();
        }
      }
    }
    entry.mean_loss = entry.samples ? loss_sum / entry.samples : 0.0;
    entry.smoothed_loss = entry.samples ? smoothed_sum / entry.samples : 0.0;
    entry.validation_f = validation_f(model, corpus.val_cues, corpus.val_annotations,
                                      smooth_radius, cfg);
    result.log.push_back(entry);
    if (on_epoch) on_epoch(entry);

    if (entry.validation_f > result.best_validation_f) {
      result.best_validation_f = entry.validation_f;
      result.best_epoch = epoch;
      result.model = model;
    }
    if (entry.validation_f >= reference_f + cfg.min_improvement) {
      reference_f = entry.validation_f;
      stale = 0;
    } else if (++stale >= cfg.patience) {
      break;
    }
  }
  return result;
}

std::string training_log_csv(const std::vector<EpochLog>& log) {
  std::ostringstream out;
  out << "epoch,mean_loss,smoothed_loss,validation_f,samples\n";
  out << std::setprecision(8);
  for (const auto& e : log)
    out << e.epoch << ',' << e.mean_loss << ',' << e.smoothed_loss << ','
        << e.validation_f << ',' << e.samples << '\n';
  return out.str();
}

std::vector<ChiSquareSample> chi_square_samples(
    const std::vector<CueStack>& cues,
    const std::vector<std::vector<BinaryMap>>& annotations,
    const ScaleConfig& cfg, double tolerance, std::uint64_t seed,
    std::size_t per_image) {
  require(cues.size() == annotations.size(), ErrorCode::kDataset,
          "every image needs its annotations");
  std::mt19937_64 rng(seed);
  const auto masks = make_half_disk_masks(cfg);
  const int scales = cfg.scales();
  const ChiSquareModel equal = ChiSquareModel::equal(scales);

  auto grid_at = [&](const CueStack& c, int x, int y, int o) {
    std::vector<double> grid(static_cast<std::size_t>(kCueCount) * scales);
    for (int s = 0; s < scales; ++s) {
      const auto& mask = masks[static_cast<std::size_t>(o) * scales + s];
      const auto d = chi_square_per_cue(normalize_counts(half_disk_counts(c, x, y, mask)),
                                        c.bins);
      for (int k = 0; k < kCueCount; ++k)
        grid[static_cast<std::size_t>(k) * scales + s] = d[k];
    }
    return grid;
  };

  std::vector<ChiSquareSample> samples;
  for (std::size_t i = 0; i < cues.size(); ++i) {
    const BinaryMap gt = union_of(annotations[i]);
    const double tol =
        tolerance > 0.0 ? tolerance : default_tolerance(gt.width(), gt.height());
    std::vector<int> positives;
    for (int p = 0; p < static_cast<int>(gt.size()); ++p)
      if (gt.values()[p]) positives.push_back(p);
    take_random(positives, per_image / 2, rng);
    std::vector<int> negatives = far_pixels(gt, tol);
    take_random(negatives, per_image / 2, rng);

    const int w = gt.width();
    for (int p : positives) {
      const int x = p % w, y = p / w;
      samples.push_back(
          {grid_at(cues[i], x, y, annotation_orientation(gt, x, y, cfg.n_orient)), 1});
    }
    for (int p : negatives) {
      const int x = p % w, y = p / w;
      std::vector<double> best;
      double best_d = -1.0;
      for (int o = 0; o < cfg.n_orient; ++o) {
        auto grid = grid_at(cues[i], x, y, o);
        const double d = chi_square_combined(grid, equal);
        if (d > best_d) {
          best_d = d;
          best = std::move(grid);
        }
      }
      samples.push_back({std::move(best), 0});
    }
  }
  return samples;
}

ChiSquareModel fit_chi_square_weights(std::span<const ChiSquareSample> samples,
                                      double l2) {
  require(!samples.empty(), ErrorCode::kDegenerateData, "no chi-square samples");
  const std::size_t dim = samples.front().distances.size();
  require(dim % kCueCount == 0 && dim > 0, ErrorCode::kDimensionMismatch,
          "distance grid must hold every cue");
  bool has_pos = false, has_neg = false;
  for (const auto& s : samples) {
    require(s.distances.size() == dim, ErrorCode::kDimensionMismatch,
            "distance grids differ in size");
    (s.label ? has_pos : has_neg) = true;
  }
  require(has_pos && has_neg, ErrorCode::kDegenerateData,
          "chi-square weight fitting needs both boundary and non-boundary samples");

  const Eigen::Index n = static_cast<Eigen::Index>(samples.size());
  const Eigen::Index p = static_cast<Eigen::Index>(dim) + 1;  // + intercept
  Eigen::MatrixXd x(n, p);
  Eigen::VectorXd y(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    x(i, 0) = 1.0;
    for (std::size_t j = 0; j < dim; ++j) x(i, j + 1) = samples[i].distances[j];
    y(i) = samples[i].label;
  }

  Eigen::VectorXd w = Eigen::VectorXd::Zero(p);
  Eigen::VectorXd reg = Eigen::VectorXd::Constant(p, l2 * n);
  reg(0) = 0.0;
  for (int iter = 0; iter < 100; ++iter) {
    const Eigen::VectorXd z = x * w;
    Eigen::VectorXd prob(n), curv(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      prob(i) = logistic(z(i));
      curv(i) = std::max(prob(i) * (1.0 - prob(i)), 1e-12);
    }
    const Eigen::VectorXd grad = x.transpose() * (prob - y) + reg.cwiseProduct(w);
    Eigen::MatrixXd hess = x.transpose() * curv.asDiagonal() * x;
    hess.diagonal() += reg;
    hess.diagonal().array() += 1e-9;
    const Eigen::VectorXd step = hess.ldlt().solve(grad);
    w -= step;
    if (step.lpNorm<Eigen::Infinity>() < 1e-10) break;
  }

  ChiSquareModel model;
  model.mode = ChiSquareModel::Mode::kLearned;
  model.scales = static_cast<int>(dim / kCueCount);
  model.weights.resize(dim);
  double total = 0.0;
  for (std::size_t j = 0; j < dim; ++j) {
    model.weights[j] = std::max(0.0, w(static_cast<Eigen::Index>(j) + 1));
    total += model.weights[j];
  }
  require(total > 0.0, ErrorCode::kDegenerateData,
          "no distance is positively associated with boundaries");
  for (double& v : model.weights) v /= total;
  return model;
}

}  // namespace edgemetric
