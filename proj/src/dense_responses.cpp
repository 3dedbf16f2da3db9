#include "edgemetric/pipeline.hpp"

#include <algorithm>
#include <cmath>

#include "edgemetric/parallel.hpp"

// Built with vectorised math; see CMakeLists.txt.

namespace edgemetric {

OrientedResponses chi_square_responses(const CueStack& cues,
                                       const ScaleConfig& cfg,
                                       const ChiSquareModel& model) {
  cfg.validate();
  model.validate();
  require(model.scales == cfg.scales(), ErrorCode::kDimensionMismatch,
          "chi-square weights do not match the scale count");
  const int w = cues.width();
  const int h = cues.height();
  const int m = cues.total_bins();
  const int scales = cfg.scales();
  // Row counts never exceed the width, so 16 bits hold them exactly.
  require(w <= 65535, ErrorCode::kInvalidArgument, "image too wide");
  RowPrefix<std::uint16_t> prefix(w, h, m);
  prefix.build_one_hot(cues);
  const auto masks = make_half_disk_masks(cfg);
  std::array<int, kCueCount + 1> bounds{};
  for (int c = 0; c < kCueCount; ++c) bounds[c + 1] = bounds[c] + cues.bins[c];

  OrientedResponses out(w, h, cfg.n_orient);
  const int n_orient = cfg.n_orient;
  parallel_for(0, h, [&](int y) {
    std::vector<std::uint16_t> full(m), v(m);
    std::vector<std::int32_t> u(m);
    std::vector<double> dists(static_cast<std::size_t>(n_orient) * kCueCount * scales);
    for (int x = 0; x < w; ++x) {
      for (int s = 0; s < scales; ++s) {
        // V is pooled directly and U is the rest of the disk.
        const int nfull = pool_runs<std::uint16_t>(prefix, x, y, masks[s].disk, full);
        for (int o = 0; o < n_orient; ++o) {
          const auto& mask = masks[static_cast<std::size_t>(o) * scales + s];
          const int nv = pool_runs<std::uint16_t>(prefix, x, y, mask.v, v);
          const int nu = nfull - nv;
          for (int b = 0; b < m; ++b) u[b] = full[b] - v[b];
          double* grid = dists.data() + static_cast<std::size_t>(o) * kCueCount * scales;
          for (int c = 0; c < kCueCount; ++c) {
            double d = 0.0;
            if (nu > 0 && nv > 0) {
              for (int b = bounds[c]; b < bounds[c + 1]; ++b) {
                if ((u[b] | v[b]) == 0) continue;
                const double ub = u[b] / static_cast<double>(nu);
                const double vb = v[b] / static_cast<double>(nv);
                const double t = ub - vb;
                d += t * t / (ub + vb);
              }
            }
            grid[static_cast<std::size_t>(c) * scales + s] = 0.5 * d;
          }
        }
      }
      for (int o = 0; o < n_orient; ++o)
        out.at(x, y, o) = chi_square_combined(
            std::span<const double>(dists.data() + static_cast<std::size_t>(o) * kCueCount * scales,
                                    static_cast<std::size_t>(kCueCount) * scales),
            model);
    }
  });
  return out;
}

OrientedResponses lbm_responses(const CueStack& cues, const MetricModel& model) {
  model.validate();
  const ScaleConfig& cfg = model.features.scales;
  require(cues.bins == model.features.bins, ErrorCode::kIncompatibleModel,
          "cue bins do not match the model");
  const int w = cues.width();
  const int h = cues.height();
  const int n = model.n;
  const int m = model.m;
  const int scales = model.scale_count();
  const auto masks = make_half_disk_masks(cfg);
  std::array<int, kCueCount> offsets{};
  for (int c = 0; c < kCueCount; ++c) offsets[c] = cues.offset(c);

  OrientedResponses out(w, h, cfg.n_orient);
  std::vector<float> projection(static_cast<std::size_t>(w) * h * n);
  std::vector<double> columns(static_cast<std::size_t>(m) * n);
  RowPrefix<float> prefix(w, h, n);

  for (int s = 0; s < scales; ++s) {
    const ScaleParams& p = model.scales[s];
    // Column j of beta, contiguous.
    for (int j = 0; j < m; ++j)
      for (int i = 0; i < n; ++i)
        columns[static_cast<std::size_t>(j) * n + i] =
            p.beta[static_cast<std::size_t>(i) * m + j];

    parallel_for(0, h, [&](int y) {
      for (int x = 0; x < w; ++x) {
        float* z = projection.data() + (static_cast<std::size_t>(y) * w + x) * n;
        std::fill(z, z + n, 0.0f);
        for (int c = 0; c < kCueCount; ++c) {
          const double* col =
              columns.data() + static_cast<std::size_t>(offsets[c] + cues.labels[c](x, y)) * n;
          for (int i = 0; i < n; ++i) z[i] += static_cast<float>(col[i]);
        }
      }
    });
    prefix.build(projection);

    const double inv_two_sigma2 = 1.0 / (2.0 * model.sigma * model.sigma);
    const bool rbf = model.kernel == KernelType::kRbf;
    parallel_for(0, h, [&](int y) {
      std::vector<float> full(n), sv(n);
      std::vector<double> tu(n), tv(n);
      const double* alpha = p.alpha.data();
      for (int x = 0; x < w; ++x) {
        const int nfull = pool_runs<float>(prefix, x, y, masks[s].disk, full);
        for (int o = 0; o < cfg.n_orient; ++o) {
          const auto& mask = masks[static_cast<std::size_t>(o) * scales + s];
          const int nv = pool_runs<float>(prefix, x, y, mask.v, sv);
          const int nu = nfull - nv;
          double d = 0.0;
          if (nu > 0 && nv > 0) {
            const double inv_u = 1.0 / nu;
            const double inv_v = 1.0 / nv;
#pragma omp simd
            for (int i = 0; i < n; ++i) {
              const double zu = std::clamp(alpha[i] + (full[i] - sv[i]) * inv_u, -700.0, 700.0);
              const double zv = std::clamp(alpha[i] + sv[i] * inv_v, -700.0, 700.0);
              tu[i] = 1.0 / (1.0 + std::exp(-zu));
              tv[i] = 1.0 / (1.0 + std::exp(-zv));
            }
            double acc = 0.0;
            if (rbf) {
#pragma omp simd reduction(+ : acc)
              for (int i = 0; i < n; ++i) acc += (tu[i] - tv[i]) * (tu[i] - tv[i]);
              d = -std::expm1(-acc * inv_two_sigma2);
            } else {
#pragma omp simd reduction(+ : acc)
              for (int i = 0; i < n; ++i) acc += std::abs(tu[i] - tv[i]);
              d = acc / n;
            }
          }
          out.at(x, y, o) += d / scales;
        }
      }
    });
  }
  return out;
}

}  // namespace edgemetric
