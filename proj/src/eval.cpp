#include "edgemetric/eval.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <queue>
#include <sstream>

#include "edgemetric/parallel.hpp"
#include "edgemetric/postproc.hpp"

namespace edgemetric {
namespace {

struct Edge {
  int to;
  int dist2;
};

// Hopcroft-Karp on a bipartite graph whose left side is already partially
// matched. Adjacency lists are ordered by distance, so augmenting paths prefer
// close partners.
class BipartiteMatcher {
 public:
  BipartiteMatcher(const std::vector<std::vector<Edge>>& adj, int right_size,
                   std::vector<int>& match_left, std::vector<int>& match_right)
      : adj_(adj), match_left_(match_left), match_right_(match_right),
        dist_(adj.size()) {
    (void)right_size;
  }

  void run() {
    while (bfs()) {
      std::vector<std::size_t> cursor(adj_.size(), 0);
      cursor_ = &cursor;
      for (std::size_t u = 0; u < adj_.size(); ++u)
        if (match_left_[u] < 0) dfs(static_cast<int>(u));
    }
  }

 private:
  static constexpr int kInf = std::numeric_limits<int>::max();

  bool bfs() {
    std::queue<int> q;
    for (std::size_t u = 0; u < adj_.size(); ++u) {
      if (match_left_[u] < 0) {
        dist_[u] = 0;
        q.push(static_cast<int>(u));
      } else {
        dist_[u] = kInf;
      }
    }
    bool found = false;
    while (!q.empty()) {
      const int u = q.front();
      q.pop();
      for (const Edge& e : adj_[u]) {
        const int w = match_right_[e.to];
        if (w < 0) {
          found = true;
        } else if (dist_[w] == kInf) {
          dist_[w] = dist_[u] + 1;
          q.push(w);
        }
      }
    }
    return found;
  }

  bool dfs(int u) {
    auto& cursor = (*cursor_)[u];
    for (; cursor < adj_[u].size(); ++cursor) {
      const int v = adj_[u][cursor].to;
      const int w = match_right_[v];
      if (w < 0 || (dist_[w] == dist_[u] + 1 && dfs(w))) {
        match_left_[u] = v;
        match_right_[v] = u;
        ++cursor;
        return true;
      }
    }
    dist_[u] = kInf;
    return false;
  }

  const std::vector<std::vector<Edge>>& adj_;
  std::vector<int>& match_left_;
  std::vector<int>& match_right_;
  std::vector<int> dist_;
  std::vector<std::size_t>* cursor_ = nullptr;
};

}  // namespace

MatchResult match_boundaries(const BinaryMap& candidate, const BinaryMap& gt,
                             double tolerance) {
  require(candidate.same_shape(gt), ErrorCode::kDimensionMismatch,
          "match_boundaries: maps differ in size");
  require(tolerance >= 0.0, ErrorCode::kInvalidArgument, "tolerance must be >= 0");
  const int w = candidate.width();
  const int h = candidate.height();

  std::vector<int> cand_pixels;
  std::vector<int> gt_index(candidate.size(), -1);
  std::vector<int> gt_pixels;
  for (int i = 0; i < static_cast<int>(candidate.size()); ++i) {
    if (candidate.values()[i]) cand_pixels.push_back(i);
    if (gt.values()[i]) {
      gt_index[i] = static_cast<int>(gt_pixels.size());
      gt_pixels.push_back(i);
    }
  }

  const int reach = static_cast<int>(std::floor(tolerance));
  const double tol2 = tolerance * tolerance;
  std::vector<std::vector<Edge>> adj(cand_pixels.size());
  struct Pair {
    int dist2, cand, gt;
  };
  std::vector<Pair> pairs;
  for (std::size_t c = 0; c < cand_pixels.size(); ++c) {
    const int cx = cand_pixels[c] % w;
    const int cy = cand_pixels[c] / w;
    for (int dy = -reach; dy <= reach; ++dy) {
      const int y = cy + dy;
      if (y < 0 || y >= h) continue;
      for (int dx = -reach; dx <= reach; ++dx) {
        const int x = cx + dx;
        if (x < 0 || x >= w) continue;
        const int d2 = dx * dx + dy * dy;
        if (d2 > tol2) continue;
        const int g = gt_index[static_cast<std::size_t>(y) * w + x];
        if (g < 0) continue;
        adj[c].push_back({g, d2});
        pairs.push_back({d2, static_cast<int>(c), g});
      }
    }
    std::sort(adj[c].begin(), adj[c].end(), [](const Edge& a, const Edge& b) {
      return a.dist2 != b.dist2 ? a.dist2 < b.dist2 : a.to < b.to;
    });
  }

  std::vector<int> match_left(cand_pixels.size(), -1);
  std::vector<int> match_right(gt_pixels.size(), -1);
  std::sort(pairs.begin(), pairs.end(), [](const Pair& a, const Pair& b) {
    if (a.dist2 != b.dist2) return a.dist2 < b.dist2;
    if (a.cand != b.cand) return a.cand < b.cand;
    return a.gt < b.gt;
  });
  for (const Pair& p : pairs) {
    if (match_left[p.cand] < 0 && match_right[p.gt] < 0) {
      match_left[p.cand] = p.gt;
      match_right[p.gt] = p.cand;
    }
  }
  BipartiteMatcher(adj, static_cast<int>(gt_pixels.size()), match_left, match_right)
      .run();

  MatchResult result{BinaryMap(w, h), BinaryMap(w, h), 0};
  for (std::size_t c = 0; c < cand_pixels.size(); ++c) {
    if (match_left[c] < 0) continue;
    result.candidate_matched.values()[cand_pixels[c]] = 1;
    result.gt_matched.values()[gt_pixels[match_left[c]]] = 1;
    ++result.matches;
  }
  return result;
}

double default_tolerance(int width, int height) {
  return std::max(1.0, 0.0075 * std::hypot(width, height));
}

std::vector<double> default_thresholds(int n) {
  require(n >= 1, ErrorCode::kInvalidArgument, "need at least one threshold");
  std::vector<double> t(n);
  for (int i = 0; i < n; ++i) t[i] = (i + 1.0) / (n + 1.0);
  return t;
}

double f_measure(double precision, double recall) {
  const double s = precision + recall;
  return s > 0.0 ? 2.0 * precision * recall / s : 0.0;
}

PRPoint make_pr_point(double threshold, std::size_t matched_detections,
                      std::size_t detections, std::size_t matched_gt,
                      std::size_t gt) {
  PRPoint p;
  p.threshold = threshold;
  p.matched_detections = matched_detections;
  p.detections = detections;
  p.matched_gt = matched_gt;
  p.gt = gt;
  p.precision = detections ? static_cast<double>(matched_detections) / detections : 1.0;
  p.recall = gt ? static_cast<double>(matched_gt) / gt : 1.0;
  p.f = f_measure(p.precision, p.recall);
  return p;
}

PRPoint evaluate_threshold(const RealMap& strength,
                           const std::vector<BinaryMap>& annotations,
                           double threshold, double tolerance) {
  require(!annotations.empty(), ErrorCode::kInvalidArgument,
          "every image needs at least one annotation");
  const BinaryMap detections = thin_binary(binarize(strength, threshold));
  BinaryMap matched_any(detections.width(), detections.height());
  std::size_t matched_gt = 0;
  std::size_t gt_total = 0;
  for (const BinaryMap& gt : annotations) {
    require(gt.same_shape(detections), ErrorCode::kDimensionMismatch,
            "annotation size differs from the boundary map");
    const MatchResult m = match_boundaries(detections, gt, tolerance);
    for (std::size_t i = 0; i < matched_any.size(); ++i)
      matched_any.values()[i] |= m.candidate_matched.values()[i];
    matched_gt += m.matches;
    gt_total += std::count(gt.values().begin(), gt.values().end(), 1);
  }
  const auto n_det = static_cast<std::size_t>(
      std::count(detections.values().begin(), detections.values().end(), 1));
  const auto n_matched = static_cast<std::size_t>(
      std::count(matched_any.values().begin(), matched_any.values().end(), 1));
  return make_pr_point(threshold, n_matched, n_det, matched_gt, gt_total);
}

PRTable pr_curve(const std::vector<RealMap>& maps,
                 const std::vector<std::vector<BinaryMap>>& annotations,
                 const EvalOptions& options) {
  require(!options.thresholds.empty(), ErrorCode::kInvalidArgument,
          "empty threshold list");
  require(maps.size() == annotations.size(), ErrorCode::kDimensionMismatch,
          "one annotation list per map required");
  const std::size_t nt = options.thresholds.size();
  PRTable table;
  table.per_image.assign(maps.size(), std::vector<PRPoint>(nt));
  const int jobs = static_cast<int>(maps.size() * nt);
  parallel_for(0, jobs, [&](int job) {
    const std::size_t i = job / nt;
    const std::size_t t = job % nt;
    const double tol = options.tolerance > 0.0
                           ? options.tolerance
                           : default_tolerance(maps[i].width(), maps[i].height());
    table.per_image[i][t] =
        evaluate_threshold(maps[i], annotations[i], options.thresholds[t], tol);
  });

  table.dataset.resize(nt);
  for (std::size_t t = 0; t < nt; ++t) {
    std::size_t md = 0, d = 0, mg = 0, g = 0;
    for (const auto& image : table.per_image) {
      md += image[t].matched_detections;
      d += image[t].detections;
      mg += image[t].matched_gt;
      g += image[t].gt;
    }
    table.dataset[t] = make_pr_point(options.thresholds[t], md, d, mg, g);
  }
  return table;
}

EvalReport summarize(const PRTable& table) {
  require(!table.dataset.empty(), ErrorCode::kInvalidArgument, "empty PR table");
  EvalReport report;
  report.table = table;

  for (const PRPoint& p : table.dataset) {
    if (p.f > report.ods) {
      report.ods = p.f;
      report.ods_threshold = p.threshold;
    }
    if (p.detections > 0) report.max_recall = std::max(report.max_recall, p.recall);
  }

  std::size_t md = 0, d = 0, mg = 0, g = 0;
  for (const auto& image : table.per_image) {
    const auto best = std::max_element(
        image.begin(), image.end(),
        [](const PRPoint& a, const PRPoint& b) { return a.f < b.f; });
    md += best->matched_detections;
    d += best->detections;
    mg += best->matched_gt;
    g += best->gt;
  }
  report.ois = table.per_image.empty() ? report.ods
                                       : make_pr_point(0.0, md, d, mg, g).f;

  std::vector<PRPoint> sorted = table.dataset;
  std::stable_sort(sorted.begin(), sorted.end(),
                   [](const PRPoint& a, const PRPoint& b) { return a.recall < b.recall; });
  for (std::size_t i = 1; i < sorted.size(); ++i)
    report.ap += (sorted[i].recall - sorted[i - 1].recall) *
                 (sorted[i].precision + sorted[i - 1].precision) / 2.0;
  return report;
}

std::string pr_csv(const std::vector<PRPoint>& points) {
  std::ostringstream out;
  out << "threshold,precision,recall,f\n" << std::setprecision(6) << std::fixed;
  for (const auto& p : points)
    out << p.threshold << ',' << p.precision << ',' << p.recall << ',' << p.f << '\n';
  return out.str();
}

std::string summary_text(const EvalReport& report, const std::string& label) {
  std::ostringstream out;
  out << std::fixed << std::setprecision(4);
  out << label << ": ODS=" << report.ods << " (t=" << report.ods_threshold
      << ") OIS=" << report.ois << " AP=" << report.ap
      << " maxR=" << report.max_recall << '\n';
  return out.str();
}

std::string summary_csv_row(const EvalReport& report, const std::string& label) {
  std::ostringstream out;
  out << std::fixed << std::setprecision(6) << label << ',' << report.ods << ','
      << report.ods_threshold << ',' << report.ois << ',' << report.ap << ','
      << report.max_recall << '\n';
  return out.str();
}

}  // namespace edgemetric
