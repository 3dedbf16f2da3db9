#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "edgemetric/image.hpp"

namespace edgemetric {

struct MatchResult {
  BinaryMap candidate_matched;
  BinaryMap gt_matched;
  std::size_t matches = 0;
};

/// One-to-one matching of candidate and ground-truth pixels whose Euclidean
/// distance is <= tolerance. Pairs are first taken greedily by increasing
/// distance (row-major tie-break), then augmenting paths raise the matching to
/// maximum cardinality.
MatchResult match_boundaries(const BinaryMap& candidate, const BinaryMap& gt,
                             double tolerance);

/// Default matching radius: 0.75% of the image diagonal, at least 1 px.
double default_tolerance(int width, int height);

/// n evenly spaced thresholds strictly inside (0,1): i / (n + 1).
std::vector<double> default_thresholds(int n = 33);

struct PRPoint {
  double threshold = 0.0;
  double precision = 1.0;
  double recall = 0.0;
  double f = 0.0;
  std::size_t matched_detections = 0;
  std::size_t detections = 0;
  std::size_t matched_gt = 0;
  std::size_t gt = 0;
};

/// Precision is 1 with no detections; recall is 1 with no ground truth.
PRPoint make_pr_point(double threshold, std::size_t matched_detections,
                      std::size_t detections, std::size_t matched_gt,
                      std::size_t gt);

double f_measure(double precision, double recall);

struct PRTable {
  std::vector<std::vector<PRPoint>> per_image;  // [image][threshold]
  std::vector<PRPoint> dataset;                 // counts summed over images
};

struct EvalOptions {
  std::vector<double> thresholds = default_thresholds();
  /// <= 0 selects default_tolerance per image.
  double tolerance = 0.0;
};

/// Counts for one image at one threshold: binarise, thin, then match against
/// every annotation separately. A detection counts as correct when it matches
/// any annotation; recall sums matched pixels over all annotations.
PRPoint evaluate_threshold(const RealMap& strength,
                           const std::vector<BinaryMap>& annotations,
                           double threshold, double tolerance);

PRTable pr_curve(const std::vector<RealMap>& maps,
                 const std::vector<std::vector<BinaryMap>>& annotations,
                 const EvalOptions& options = {});

struct EvalReport {
  PRTable table;
  double ods = 0.0;
  double ods_threshold = 0.0;
  double ois = 0.0;
  double ap = 0.0;
  double max_recall = 0.0;
};

/// ODS: best dataset F over thresholds. OIS: F of the counts pooled at every
/// image's own best threshold. AP: trapezoidal area under the dataset points
/// sorted by recall.
EvalReport summarize(const PRTable& table);

std::string pr_csv(const std::vector<PRPoint>& points);
std::string summary_text(const EvalReport& report, const std::string& label);
std::string summary_csv_row(const EvalReport& report, const std::string& label);

}  // namespace edgemetric
