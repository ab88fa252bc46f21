#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "sinusseg/core/grid.hpp"

namespace sinusseg::metrics {

struct ConfusionCounts {
  std::uint64_t tp = 0;
  std::uint64_t fp = 0;
  std::uint64_t fn = 0;
  std::uint64_t tn = 0;

  std::uint64_t total() const noexcept { return tp + fp + fn + tn; }
  friend bool operator==(const ConfusionCounts&, const ConfusionCounts&) = default;
};

/// Pixelwise counts; masks must have the same shape.
ConfusionCounts confusion(const BinaryMask& pred, const BinaryMask& gt);

struct Overlap {
  double dice = 0;
  double recall = 0;
  double precision = 0;
};

/// Dice, recall and precision. When both masks are empty all three are 1;
/// any other 0/0 gives 0 for the affected metric.
Overlap overlap_metrics(const ConfusionCounts& c);

struct Point {
  std::int32_t row = 0;
  std::int32_t col = 0;
  friend bool operator==(const Point&, const Point&) = default;
};

struct PointSet {
  std::vector<Point> points;
  bool empty() const noexcept { return points.empty(); }
  std::size_t size() const noexcept { return points.size(); }
};

enum class PointMode {
  Foreground,  // every foreground pixel
  Boundary,    // foreground pixels with a background 4-neighbour
};

PointSet extract_points(const BinaryMask& mask, PointMode mode = PointMode::Foreground);

double image_diagonal(int width, int height);

/// q-th quantile (q in [0, 1]) with linear interpolation between order
/// statistics at position q * (n - 1). `values` must be nonempty.
double percentile(std::vector<double> values, double q);

/// Directed distances: for each point of `from`, the Euclidean distance to
/// the nearest point of `to` (nonempty).
std::vector<double> directed_distances(const PointSet& from, const PointSet& to);

/// 95th-percentile Hausdorff distance: the larger of the two directed P95s.
/// One empty set gives `image_diagonal`; two empty sets give 0.
double hd95(const PointSet& u, const PointSet& v, double image_diagonal);

/// Classical (maximum) Hausdorff distance with the same empty-set rules.
double hausdorff(const PointSet& u, const PointSet& v, double image_diagonal);

/// hd95 between two masks via a distance transform. Agrees with
/// hd95(extract_points(a), extract_points(b), diagonal) up to rounding.
double hd95_masks(const BinaryMask& a, const BinaryMask& b, PointMode mode = PointMode::Foreground);

struct ImageMetrics {
  double dice = 0;
  double recall = 0;
  double precision = 0;
  double hd95 = 0;             // pixels
  double hd95_normalized = 0;  // hd95 / image diagonal
  friend bool operator==(const ImageMetrics&, const ImageMetrics&) = default;
};

ImageMetrics evaluate_pair(const BinaryMask& pred, const BinaryMask& gt, PointMode mode = PointMode::Foreground);

struct Provenance {
  std::string config_hash;
  std::uint64_t seed = 0;
  std::string checkpoint_id;
  friend bool operator==(const Provenance&, const Provenance&) = default;
};

struct MetricReport {
  std::map<std::string, ImageMetrics> per_image;
  ImageMetrics aggregate;  // arithmetic means over per_image
  Provenance provenance;

  /// Recomputes `aggregate` from `per_image`.
  void finalize();
  friend bool operator==(const MetricReport&, const MetricReport&) = default;
};

void to_json(nlohmann::json& j, const ImageMetrics& m);
void from_json(const nlohmann::json& j, ImageMetrics& m);
void to_json(nlohmann::json& j, const MetricReport& r);
void from_json(const nlohmann::json& j, MetricReport& r);

void save_report(const MetricReport& report, const std::filesystem::path& path);
MetricReport load_report(const std::filesystem::path& path);

/// Pairs <id>.png files by name across the two directories and scores each
/// pair. Any file without a partner raises a pairing error listing them.
MetricReport evaluate_dataset(const std::filesystem::path& pred_dir, const std::filesystem::path& gt_dir,
                              PointMode mode = PointMode::Foreground);

}  // namespace sinusseg::metrics
