#include "edgemetric/postproc.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "edgemetric/parallel.hpp"

namespace edgemetric {
namespace {

int reflect(int i, int n) {
  while (i < 0 || i >= n) {
    if (i < 0) i = -i - 1;
    if (i >= n) i = 2 * n - i - 1;
  }
  return i;
}

// Unit normal of orientation angle theta in image axes (rows grow downward).
void normal_of(double theta, double& nx, double& ny) {
  nx = -std::sin(theta);
  ny = -std::cos(theta);
}

}  // namespace

double BoundaryMap::angle(int o) const { return std::numbers::pi * o / n_orient; }

BoundaryMap fuse_orientations(const OrientedResponses& responses) {
  require(responses.n_orient >= 1 && responses.width >= 1 && responses.height >= 1,
          ErrorCode::kInvalidArgument, "empty response grid");
  require(responses.values.size() == static_cast<std::size_t>(responses.width) *
                                         responses.height * responses.n_orient,
          ErrorCode::kDimensionMismatch, "incomplete response grid");
  BoundaryMap map{RealMap(responses.width, responses.height),
                  Grid<int>(responses.width, responses.height, 0),
                  responses.n_orient, false};
  for (int y = 0; y < responses.height; ++y)
    for (int x = 0; x < responses.width; ++x) {
      int best = 0;
      double best_v = responses.at(x, y, 0);
      for (int o = 1; o < responses.n_orient; ++o) {
        const double v = responses.at(x, y, o);
        if (v > best_v) {
          best_v = v;
          best = o;
        }
      }
      map.strength(x, y) = best_v;
      map.orientation(x, y) = best;
    }
  return map;
}

BoundaryMap smooth(const BoundaryMap& map, double radius) {
  require(radius >= 0.0, ErrorCode::kInvalidArgument, "smoothing radius must be >= 0");
  if (radius == 0.0) return map;
  const double sigma = radius / 2.0;
  const int half = static_cast<int>(std::ceil(3.0 * sigma));
  std::vector<double> kernel(2 * half + 1);
  double sum = 0.0;
  for (int i = -half; i <= half; ++i) {
    kernel[i + half] = std::exp(-0.5 * i * i / (sigma * sigma));
    sum += kernel[i + half];
  }
  for (double& k : kernel) k /= sum;

  const int w = map.width();
  const int h = map.height();
  RealMap tmp(w, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      double acc = 0.0;
      for (int i = -half; i <= half; ++i)
        acc += kernel[i + half] * map.strength(reflect(x + i, w), y);
      tmp(x, y) = acc;
    }
  BoundaryMap out = map;
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      double acc = 0.0;
      for (int i = -half; i <= half; ++i)
        acc += kernel[i + half] * tmp(x, reflect(y + i, h));
      out.strength(x, y) = std::clamp(acc, 0.0, 1.0);
    }
  return out;
}

double sample_bilinear(const RealMap& map, double x, double y) {
  x = std::clamp(x, 0.0, static_cast<double>(map.width() - 1));
  y = std::clamp(y, 0.0, static_cast<double>(map.height() - 1));
  const int x0 = static_cast<int>(std::floor(x));
  const int y0 = static_cast<int>(std::floor(y));
  const int x1 = std::min(x0 + 1, map.width() - 1);
  const int y1 = std::min(y0 + 1, map.height() - 1);
  const double fx = x - x0;
  const double fy = y - y0;
  const double top = map(x0, y0) + fx * (map(x1, y0) - map(x0, y0));
  const double bottom = map(x0, y1) + fx * (map(x1, y1) - map(x0, y1));
  return top + fy * (bottom - top);
}

BoundaryMap oriented_nms(const BoundaryMap& map) {
  BoundaryMap out = map;
  out.thinned = true;
  std::vector<double> nx(map.n_orient), ny(map.n_orient);
  for (int o = 0; o < map.n_orient; ++o) normal_of(map.angle(o), nx[o], ny[o]);
  parallel_for(0, map.height(), [&](int y) {
    for (int x = 0; x < map.width(); ++x) {
      const double s = map.strength(x, y);
      if (s <= 0.0) continue;
      const int o = map.orientation(x, y);
      const double a = sample_bilinear(map.strength, x + nx[o], y + ny[o]);
      const double b = sample_bilinear(map.strength, x - nx[o], y - ny[o]);
      if (s < a || s < b) out.strength(x, y) = 0.0;
    }
  });
  return out;
}

std::size_t count_thinning_violations(const BoundaryMap& map) {
  std::size_t violations = 0;
  for (int y = 0; y < map.height(); ++y)
    for (int x = 0; x < map.width(); ++x) {
      const double s = map.strength(x, y);
      if (s <= 0.0) continue;
      double nx = 0.0, ny = 0.0;
      normal_of(map.angle(map.orientation(x, y)), nx, ny);
      if (sample_bilinear(map.strength, x + nx, y + ny) > s ||
          sample_bilinear(map.strength, x - nx, y - ny) > s)
        ++violations;
    }
  return violations;
}

BinaryMap binarize(const RealMap& strength, double threshold) {
  BinaryMap out(strength.width(), strength.height());
  auto src = strength.values();
  auto dst = out.values();
  for (std::size_t i = 0; i < src.size(); ++i)
    dst[i] = (src[i] > 0.0 && src[i] >= threshold) ? 1 : 0;
  return out;
}

BinaryMap thin_binary(const BinaryMap& map) {
  BinaryMap img = map;
  const int w = img.width();
  const int h = img.height();
  auto at = [&](int x, int y) -> int {
    return (x >= 0 && y >= 0 && x < w && y < h && img(x, y)) ? 1 : 0;
  };
  std::vector<std::size_t> remove;
  bool changed = true;
  while (changed) {
    changed = false;
    for (int pass = 0; pass < 2; ++pass) {
      remove.clear();
      for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
          if (!img(x, y)) continue;
          // Guo-Hall. Zhang-Suen erases two-pixel diagonal bands entirely.
          const int p2 = at(x, y - 1), p3 = at(x + 1, y - 1), p4 = at(x + 1, y),
                    p5 = at(x + 1, y + 1), p6 = at(x, y + 1), p7 = at(x - 1, y + 1),
                    p8 = at(x - 1, y), p9 = at(x - 1, y - 1);
          const int c = ((1 - p2) & (p3 | p4)) + ((1 - p4) & (p5 | p6)) +
                        ((1 - p6) & (p7 | p8)) + ((1 - p8) & (p9 | p2));
          const int n1 = (p9 | p2) + (p3 | p4) + (p5 | p6) + (p7 | p8);
          const int n2 = (p2 | p3) + (p4 | p5) + (p6 | p7) + (p8 | p9);
          const int n = std::min(n1, n2);
          const int m = pass == 0 ? ((p6 | p7 | (1 - p9)) & p8) : ((p2 | p3 | (1 - p5)) & p4);
          const bool cond = c == 1 && n >= 2 && n <= 3 && m == 0;
          if (cond) remove.push_back(img.index(x, y));
        }
      for (std::size_t i : remove) img.values()[i] = 0;
      if (!remove.empty()) changed = true;
    }
  }

  // The parallel passes keep staircase corners on diagonals. Remove them one at a
  // time (raster order) while they stay 8-simple.
  changed = true;
  while (changed) {
    changed = false;
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        if (!img(x, y)) continue;
        // N, NE, E, SE, S, SW, W, NW
        const int p[8] = {at(x, y - 1), at(x + 1, y - 1), at(x + 1, y),
                          at(x + 1, y + 1), at(x, y + 1), at(x - 1, y + 1),
                          at(x - 1, y), at(x - 1, y - 1)};
        // Only corners: a horizontal and a vertical neighbour that already
        // touch diagonally. Anything else would shorten the line.
        const bool corner = (p[0] && p[2]) || (p[2] && p[4]) || (p[4] && p[6]) ||
                            (p[6] && p[0]);
        if (!corner) continue;
        int c8 = 0;  // Yokoi connectivity number, 8-connected foreground
        for (int k = 0; k < 8; k += 2) {
          const int a = 1 - p[k], b = 1 - p[k + 1], c = 1 - p[(k + 2) % 8];
          c8 += a - a * b * c;
        }
        if (c8 != 1) continue;
        img(x, y) = 0;
        changed = true;
      }
  }
  return img;
}

}  // namespace edgemetric
