// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fail.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <iostream>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <string>

#include "edgemetric/data.hpp"
#include "edgemetric/eval.hpp"
#include "edgemetric/features.hpp"
#include "edgemetric/metric.hpp"
#include "edgemetric/parallel.hpp"
#include "edgemetric/pipeline.hpp"
#include "edgemetric/training.hpp"
#include "edgemetric/workflow.hpp"

using namespace edgemetric;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(double v, int digits = 4) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::vector<double> random_histogram(std::mt19937_64& rng, int m) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> h(m);
  double sum = 0.0;
  for (double& v : h) sum += (v = u(rng) < 0.4 ? 0.0 : u(rng));
  if (sum == 0.0) h[0] = sum = 1.0;
  for (double& v : h) v /= sum;
  return h;
}

// ---------------------------------------------------------------------------
// 1. Gradients against central finite differences.

// Independent objective in extended precision. The central difference of a
// double objective loses about eps*|f|/h to rounding, which for losses near
// 10 is as large as the smallest gradient coordinates. Pre-activations are
// cached so a bump of one parameter only touches the entries it feeds.
class ReferenceObjective {
 public:
  using LD = long double;

  ReferenceObjective(const TrainingSample& s, const MetricModel& model, Objective obj)
      : s_(s), model_(model), obj_(obj) {
    for (int sc = 0; sc < model.scale_count(); ++sc) {
      zu_.push_back(preactivations(s.u[sc], model.scales[sc]));
      zv_.push_back(preactivations(s.v[sc], model.scales[sc]));
      dist_.push_back(distance(zu_[sc], zv_[sc]));
    }
  }

  // Objective with alpha[i] (beta == false) or beta[i] of scale `sc` moved by delta.
  LD bumped(int sc, bool beta, std::size_t i, LD delta) const {
    const int row = beta ? static_cast<int>(i / model_.m) : static_cast<int>(i);
    const int col = static_cast<int>(i % model_.m);
    std::vector<LD> zu = zu_[sc], zv = zv_[sc];
    zu[row] += beta ? delta * s_.u[sc][col] : delta;
    zv[row] += beta ? delta * s_.v[sc][col] : delta;
    std::vector<LD> dist = dist_;
    dist[sc] = distance(zu, zv);
    return objective(dist);
  }

 private:
  std::vector<LD> preactivations(const std::vector<double>& h, const ScaleParams& p) const {
    std::vector<LD> z(model_.n);
    for (int i = 0; i < model_.n; ++i) {
      z[i] = p.alpha[i];
      for (int j = 0; j < model_.m; ++j)
        z[i] += static_cast<LD>(p.beta[static_cast<std::size_t>(i) * model_.m + j]) * h[j];
    }
    return z;
  }

  LD distance(const std::vector<LD>& zu, const std::vector<LD>& zv) const {
    LD acc = 0.0L;
    for (int i = 0; i < model_.n; ++i) {
      const LD t = 1.0L / (1.0L + std::exp(-zu[i])) - 1.0L / (1.0L + std::exp(-zv[i]));
      acc += model_.kernel == KernelType::kLinear ? std::abs(t) : t * t;
    }
    if (model_.kernel == KernelType::kLinear) return acc / model_.n;
    const LD sigma = model_.sigma;
    return -std::expm1(-acc / (2.0L * sigma * sigma));
  }

  LD log_loss_ld(LD d) const {
    d = std::clamp(d, 1e-12L, 1.0L - 1e-12L);
    return s_.label ? -std::log(d) : -std::log1p(-d);
  }

  LD objective(const std::vector<LD>& dist) const {
    if (obj_ == Objective::kCombined)
      return log_loss_ld(std::accumulate(dist.begin(), dist.end(), 0.0L) / dist.size());
    LD total = 0.0L;
    for (LD d : dist) total += log_loss_ld(d);
    return total;
  }

  const TrainingSample& s_;
  const MetricModel& model_;
  Objective obj_;
  std::vector<std::vector<LD>> zu_, zv_;
  std::vector<LD> dist_;
};

Outcome gradient_oracle() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(101);
  const FeatureConfig features;
  double worst = 0.0;
  std::size_t coords = 0;
  int draws = 0;
  for (KernelType kernel : {KernelType::kRbf, KernelType::kLinear})
    for (int label : {0, 1})
      for (int rep = 0; rep < 6; ++rep) {
        TrainConfig cfg;
        cfg.kernel = kernel;
        cfg.seed = rng();
        const MetricModel model = init_model(cfg, features);
        TrainingSample s;
        s.label = label;
        for (int k = 0; k < model.scale_count(); ++k) {
          s.u.push_back(random_histogram(rng, model.m));
          s.v.push_back(random_histogram(rng, model.m));
        }
        const Objective obj = rep % 2 ? Objective::kPerScale : Objective::kCombined;
        const ModelGradient g = gradients(s, model, obj);
        const long double h = 1e-5L;
        const ReferenceObjective ref(s, model, obj);
        for (int sc = 0; sc < model.scale_count(); ++sc)
          for (int which = 0; which < 2; ++which) {
            const auto& analytic = which ? g.scales[sc].beta : g.scales[sc].alpha;
            for (std::size_t i = 0; i < analytic.size(); ++i) {
              const long double fp = ref.bumped(sc, which == 1, i, h);
              const long double fm = ref.bumped(sc, which == 1, i, -h);
              const double fd = static_cast<double>((fp - fm) / (2.0L * h));
              const double denom = std::max({std::abs(fd), std::abs(analytic[i]), 1e-8});
              worst = std::max(worst, std::abs(fd - analytic[i]) / denom);
              ++coords;
            }
          }
        ++draws;
      }
  const double secs = seconds_since(t0);
  return {draws >= 20 && worst < 1e-4 && secs < 10.0,
          std::to_string(draws) + " draws, " + std::to_string(coords) +
              " coordinates, max rel err " + fmt(worst * 1e6, 3) + "e-6, " + fmt(secs, 1) + " s"};
}

// ---------------------------------------------------------------------------
// 2. Metric properties on random histogram pairs.

Outcome metric_properties() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(202);
  std::size_t violations = 0;
  TrainConfig cfg;
  cfg.seed = 5;
  const MetricModel model = init_model(cfg, FeatureConfig{});
  std::vector<std::pair<double, double>> sq_and_d;
  for (int i = 0; i < 1000; ++i) {
    const auto u = random_histogram(rng, model.m);
    const auto v = random_histogram(rng, model.m);
    const double c = chi_square(u, v);
    if (c != chi_square(v, u) || c < 0.0 || c > 1.0) ++violations;
    if (chi_square(u, u) > 1e-12 || c <= 1e-12) ++violations;

    const auto tu = logistic_transform(u, model.scales[0].alpha, model.scales[0].beta);
    const auto tv = logistic_transform(v, model.scales[0].alpha, model.scales[0].beta);
    const double d = kernel_distance(tu, tv, model);
    if (d != kernel_distance(tv, tu, model) || d < 0.0 || d >= 1.0) ++violations;
    if (kernel_distance(tu, tu, model) != 0.0) ++violations;
    double sq = 0.0;
    for (std::size_t n = 0; n < tu.size(); ++n) sq += (tu[n] - tv[n]) * (tu[n] - tv[n]);
    sq_and_d.emplace_back(sq, d);
  }
  // Strict monotonicity in the squared distance of the transformed vectors.
  std::sort(sq_and_d.begin(), sq_and_d.end());
  for (std::size_t i = 1; i < sq_and_d.size(); ++i)
    if (sq_and_d[i].first > sq_and_d[i - 1].first && !(sq_and_d[i].second > sq_and_d[i - 1].second))
      ++violations;
  const double secs = seconds_since(t0);
  return {violations == 0 && secs < 5.0,
          "1000 pairs, " + std::to_string(violations) + " violations, " + fmt(secs, 2) + " s"};
}

// ---------------------------------------------------------------------------
// 3. Pooling against a brute-force membership test.

Outcome pooling_oracle() {
  const auto t0 = Clock::now();
  const ScaleConfig cfg = default_scale_config();
  std::size_t checked = 0, mismatches = 0;
  for (std::uint64_t seed : {1u, 2u}) {
    std::mt19937_64 rng(seed);
    CueStack cues;
    cues.bins = kDefaultCueBins;
    for (int c = 0; c < kCueCount; ++c) {
      cues.labels[c] = LabelMap(32, 32);
      for (int& v : cues.labels[c].values()) v = static_cast<int>(rng() % cues.bins[c]);
    }
    const FeatureStack stack = extract_feature_stack(cues, cfg);
    const int m = cues.total_bins();
    for (int o = 0; o < cfg.n_orient; ++o)
      for (int s = 0; s < cfg.scales(); ++s) {
        const int r = cfg.radii[s];
        const double a = cfg.angle(o);
        const double nx = -std::sin(a), ny = -std::cos(a);
        for (int y = 0; y < 32; ++y)
          for (int x = 0; x < 32; ++x) {
            std::vector<std::int32_t> bu(m, 0), bv(m, 0);
            int pu = 0, pv = 0;
            for (int dy = -r; dy <= r; ++dy)
              for (int dx = -r; dx <= r; ++dx) {
                if (dx * dx + dy * dy > r * r) continue;
                const int xx = x + dx, yy = y + dy;
                if (xx < 0 || yy < 0 || xx >= 32 || yy >= 32) continue;
                const double dot = dx * nx + dy * ny;
                const bool on_u = dot >= -1e-9;
                (on_u ? pu : pv) += 1;
                for (int c = 0; c < kCueCount; ++c) (on_u ? bu : bv)[cues.bin(c, xx, yy)] += 1;
              }
            const HalfDiskCounts counts = stack.counts(x, y, o, s);
            bool ok = counts.u == bu && counts.v == bv && counts.u_pixels == pu &&
                      counts.v_pixels == pv;
            const HalfDiskPair pair = stack.pair(x, y, o, s);
            const double nu = pu > 0 ? pu : pv, nv = pv > 0 ? pv : pu;
            for (int i = 0; i < m && ok; ++i) {
              const double eu = (pu > 0 ? bu[i] : bv[i]) / nu;
              const double ev = (pv > 0 ? bv[i] : bu[i]) / nv;
              ok = std::abs(pair.u[i] - eu) <= 1e-12 && std::abs(pair.v[i] - ev) <= 1e-12;
            }
            mismatches += !ok;
            ++checked;
          }
      }
  }
  const double secs = seconds_since(t0);
  return {mismatches == 0 && secs < 60.0,
          std::to_string(checked) + " (pixel, orientation, scale) entries, " +
              std::to_string(mismatches) + " mismatches, " + fmt(secs, 1) + " s"};
}

// ---------------------------------------------------------------------------
// 4. Matching and PR formulas.

std::size_t exhaustive_max(const std::vector<std::pair<int, int>>& c,
                           const std::vector<std::pair<int, int>>& g, double tol,
                           std::size_t i, std::vector<bool>& used) {
  if (i == c.size()) return 0;
  std::size_t best = exhaustive_max(c, g, tol, i + 1, used);
  for (std::size_t j = 0; j < g.size(); ++j) {
    if (used[j] || std::hypot(c[i].first - g[j].first, c[i].second - g[j].second) > tol)
      continue;
    used[j] = true;
    best = std::max(best, 1 + exhaustive_max(c, g, tol, i + 1, used));
    used[j] = false;
  }
  return best;
}

Outcome matching_oracle() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(404);
  int below_max = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const int w = 2 + static_cast<int>(rng() % 7), h = 2 + static_cast<int>(rng() % 7);
    BinaryMap cand(w, h), gt(w, h);
    for (BinaryMap* m : {&cand, &gt}) {
      const int n = 1 + static_cast<int>(rng() % 8);
      for (int k = 0; k < n; ++k)
        (*m)(static_cast<int>(rng() % w), static_cast<int>(rng() % h)) = 1;
    }
    std::vector<std::pair<int, int>> pc, pg;
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        if (cand(x, y)) pc.emplace_back(x, y);
        if (gt(x, y)) pg.emplace_back(x, y);
      }
    std::vector<bool> used(pg.size(), false);
    if (match_boundaries(cand, gt, 2.0).matches != exhaustive_max(pc, pg, 2.0, 0, used))
      ++below_max;
  }
  // Two annotators: detector equals annotator 1 (column 2), annotator 2 marks
  // column 8; 10 rows each. Hand-computed: P = 10/10, R = 10/20.
  BinaryMap a1(12, 10), a2(12, 10);
  RealMap det(12, 10);
  for (int y = 0; y < 10; ++y) {
    a1(2, y) = 1;
    a2(8, y) = 1;
    det(2, y) = 1.0;
  }
  const PRPoint p = evaluate_threshold(det, {a1, a2}, 0.5, 1.0);
  const bool hand = p.precision == 1.0 && p.recall == 0.5 && std::abs(p.f - 2.0 / 3.0) < 1e-15 &&
                    std::abs(f_measure(0.75, 0.69) - 0.71875) < 1e-12;
  const double secs = seconds_since(t0);
  return {below_max == 0 && hand && secs < 30.0,
          "200 random pairs, " + std::to_string(below_max) + " below the exhaustive maximum; " +
              "two-annotator P=" + fmt(p.precision, 3) + " R=" + fmt(p.recall, 3) + ", " +
              fmt(secs, 2) + " s"};
}

// ---------------------------------------------------------------------------
// 5-8. Synthetic end-to-end run.

struct Metrics {
  double ods = 0.0;
  std::size_t violations = 0;
  std::size_t maps = 0;
};

Metrics score(const Detector& detector, const std::vector<CueStack>& cues,
              const std::vector<std::vector<BinaryMap>>& annotations) {
  Metrics out;
  std::vector<RealMap> maps;
  for (const CueStack& c : cues) {
    const Detection d = detector.detect_cues(c);
    out.violations += count_thinning_violations(d.thinned);
    ++out.maps;
    maps.push_back(d.thinned.strength);
  }
  out.ods = summarize(pr_curve(maps, annotations)).ods;
  return out;
}

double window_mean(const std::vector<double>& xs, std::size_t end, std::size_t window) {
  const std::size_t begin = end > window ? end - window : 0;
  return std::accumulate(xs.begin() + begin, xs.begin() + end, 0.0) / (end - begin);
}

struct EndToEnd {
  Outcome training, thinning, speed, noise;
};

EndToEnd end_to_end() {
  EndToEnd out;
  const auto t0 = Clock::now();
  const fs::path root = fs::path(EDGEMETRIC_TEST_TMP) / "acceptance_corpus";
  fs::remove_all(root);
  const CorpusSpec spec = default_corpus_spec();
  const auto items = synth_generate(spec, root);
  const LoadedSplit train = load_split(items, Split::kTrain);
  const LoadedSplit val = load_split(items, Split::kVal);
  const LoadedSplit test = load_split(items, Split::kTest);

  TrainConfig cfg;  // N = 16, sigma = 0.2, lr = 1e-4, RBF
  const FeatureConfig features;
  const TextonConfig textons;
  const LbmTraining trained = train_lbm(train, val, features, textons, cfg);
  const double train_secs = seconds_since(t0);

  const Detector lbm = make_detector(trained.model, true, false);
  const Detector chi = make_detector(trained.model, false, false);
  const auto test_cues = compute_all_cues(test.images, lbm.textons, lbm.codebook, features.bins);
  const Metrics lbm_clean = score(lbm, test_cues, test.annotations);
  const Metrics chi_clean = score(chi, test_cues, test.annotations);
  const double total_secs = seconds_since(t0);

  // Smoothed loss: moving average over 100 updates, taken at the first full
  // window and at the end of the best epoch.
  const TrainResult& r = trained.result;
  std::size_t best_end = 0;
  for (const EpochLog& e : r.log)
    if (e.epoch >= 1 && e.epoch <= r.best_epoch) best_end += e.samples;
  const double first = window_mean(r.sample_losses, std::min<std::size_t>(100, r.sample_losses.size()), 100);
  const double at_best = best_end > 0 ? window_mean(r.sample_losses, best_end, 100) : first;
  const double drop = first > 0.0 ? (first - at_best) / first : 0.0;
  const double epoch1_mean = r.log.size() > 1 ? r.log[1].smoothed_loss : 0.0;
  const double best_mean = r.log[static_cast<std::size_t>(r.best_epoch)].smoothed_loss;
  const double gap = lbm_clean.ods - chi_clean.ods;
  out.training = {drop >= 0.20 && gap >= 0.02 && total_secs < 600.0,
                  "loss " + fmt(first) + " -> " + fmt(at_best) + " (" + fmt(100 * drop, 1) +
                      "% drop; epoch means " + fmt(epoch1_mean) + " -> " + fmt(best_mean) +
                      "), best epoch " + std::to_string(r.best_epoch) + ", val F " +
                      fmt(r.best_validation_f) + "; test ODS lbm " + fmt(lbm_clean.ods) +
                      " vs chi2-equal " + fmt(chi_clean.ods) + " (+" + fmt(gap) + "); " +
                      fmt(train_secs, 0) + " s training, " + fmt(total_secs, 0) + " s total"};

  // Noise.
  const auto noisy_images = with_noise(test.images, 0.01, 7);
  const auto noisy_cues = compute_all_cues(noisy_images, lbm.textons, lbm.codebook, features.bins);
  const Metrics lbm_noisy = score(lbm, noisy_cues, test.annotations);
  const Metrics chi_noisy = score(chi, noisy_cues, test.annotations);
  out.noise = {lbm_noisy.ods < lbm_clean.ods && chi_noisy.ods < chi_clean.ods &&
                   lbm_noisy.ods >= chi_noisy.ods,
               "lbm " + fmt(lbm_clean.ods) + " -> " + fmt(lbm_noisy.ods) + ", chi2-equal " +
                   fmt(chi_clean.ods) + " -> " + fmt(chi_noisy.ods)};

  const std::size_t violations = lbm_clean.violations + chi_clean.violations +
                                 lbm_noisy.violations + chi_noisy.violations;
  const std::size_t maps = lbm_clean.maps + chi_clean.maps + lbm_noisy.maps + chi_noisy.maps;
  out.thinning = {violations == 0,
                  std::to_string(maps) + " thinned maps, " + std::to_string(violations) +
                      " violations"};

  // Distance-stage timing on a 481x321 image.
  CorpusSpec big = spec;
  big.width = 481;
  big.height = 321;
  std::mt19937_64 rng(11);
  const MultiChannelImage image = synth_image(SynthKind::kMixed, big, rng).image;
  const CueStack cues = lbm.cues(image);
  auto median_ms = [](const std::function<void()>& body) {
    std::vector<double> t;
    for (int i = 0; i < 5; ++i) {
      const auto s = Clock::now();
      body();
      t.push_back(std::chrono::duration<double, std::milli>(Clock::now() - s).count());
    }
    std::sort(t.begin(), t.end());
    return t[2];
  };
  const double t_chi = median_ms([&] { (void)chi.responses(cues); });
  const double t_lbm = median_ms([&] { (void)lbm.responses(cues); });
  const double ratio = t_chi / t_lbm;
  out.speed = {ratio > 1.0, "chi2 " + fmt(t_chi, 0) + " ms, lbm " + fmt(t_lbm, 0) +
                                " ms, ratio " + fmt(ratio, 2) + (ratio >= 2.0 ? "" : " (target 2)")};
  return out;
}

void report(int id, const char* name, const Outcome& o, bool& all) {
  std::cout << (o.pass ? "PASS" : "FAIL") << "  " << id << ". " << name << ": " << o.detail
            << std::endl;
  all = all && o.pass;
}

}  // namespace

// Optional arguments pick criteria by number; 5-8 share one training run.
int main(int argc, char** argv) {
  set_thread_count(1);
  std::set<int> pick;
  for (int i = 1; i < argc; ++i) pick.insert(std::atoi(argv[i]));
  auto wanted = [&](int n) { return pick.empty() || pick.count(n) > 0; };
  bool all = true;
  try {
    if (wanted(1)) report(1, "gradient oracle", gradient_oracle(), all);
    if (wanted(2)) report(2, "metric properties", metric_properties(), all);
    if (wanted(3)) report(3, "pooling oracle", pooling_oracle(), all);
    if (wanted(4)) report(4, "matching and PR oracle", matching_oracle(), all);
    if (wanted(5) || wanted(6) || wanted(7) || wanted(8)) {
      const EndToEnd e = end_to_end();
      report(5, "synthetic end-to-end", e.training, all);
      report(6, "thinning invariant", e.thinning, all);
      report(7, "distance-stage speedup", e.speed, all);
      report(8, "noise robustness", e.noise, all);
    }
  } catch (const std::exception& err) {
    std::cout << "FAIL  acceptance run aborted: " << err.what() << std::endl;
    return 1;
  }
  return all ? 0 : 1;
}
