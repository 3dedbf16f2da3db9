#pragma once

#include <span>
#include <vector>

#include "edgemetric/image.hpp"

namespace edgemetric {

/// Distances for every (pixel, orientation), orientation-minor:
/// values[(y * width + x) * n_orient + o].
struct OrientedResponses {
  int width = 0;
  int height = 0;
  int n_orient = 0;
  std::vector<double> values;

  OrientedResponses() = default;
  OrientedResponses(int w, int h, int orients)
      : width(w), height(h), n_orient(orients),
        values(static_cast<std::size_t>(w) * h * orients, 0.0) {}

  double& at(int x, int y, int o) {
    return values[(static_cast<std::size_t>(y) * width + x) * n_orient + o];
  }
  double at(int x, int y, int o) const {
    return values[(static_cast<std::size_t>(y) * width + x) * n_orient + o];
  }
};

struct BoundaryMap {
  RealMap strength;
  Grid<int> orientation;
  int n_orient = 8;
  bool thinned = false;

  int width() const { return strength.width(); }
  int height() const { return strength.height(); }
  /// Angle of orientation index o, counter-clockwise from +x.
  double angle(int o) const;
};

/// strength = max over orientations, orientation = argmax (lowest index wins).
BoundaryMap fuse_orientations(const OrientedResponses& responses);

/// Isotropic Gaussian smoothing of the strengths with sigma = radius / 2,
/// truncated at ceil(3 sigma), symmetric borders, output clamped to [0,1].
/// Radius 0 returns the input unchanged.
BoundaryMap smooth(const BoundaryMap& map, double radius);

/// Bilinear sample of a strength map; coordinates clamp to the image.
double sample_bilinear(const RealMap& map, double x, double y);

/// Keeps a pixel only where its strength is >= both bilinear samples taken one
/// pixel away along the normal of its orientation; ties are kept.
BoundaryMap oriented_nms(const BoundaryMap& map);

/// Number of set pixels having a strictly greater normal neighbour.
std::size_t count_thinning_violations(const BoundaryMap& map);

/// strength >= threshold (and > 0).
BinaryMap binarize(const RealMap& strength, double threshold);

/// Guo-Hall skeletonisation to 8-connected one-pixel-wide curves.
BinaryMap thin_binary(const BinaryMap& map);

}  // namespace edgemetric
