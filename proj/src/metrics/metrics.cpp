#include "sinusseg/metrics/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>

#include <nlohmann/json.hpp>

#include "sinusseg/core/error.hpp"
#include "sinusseg/core/mask_ops.hpp"
#include "sinusseg/data/image_io.hpp"
#include "sinusseg/simd/kernels.hpp"

namespace sinusseg::metrics {

ConfusionCounts confusion(const BinaryMask& pred, const BinaryMask& gt) {
  require_same_shape(pred, gt, "confusion");
  const auto t = simd::kernels().confusion(pred.data(), gt.data(), pred.size());
  return {t.tp, t.fp, t.fn, pred.size() - t.tp - t.fp - t.fn};
}

namespace {
double ratio(std::uint64_t num, std::uint64_t den) { return den == 0 ? 0.0 : double(num) / double(den); }
}  // namespace

Overlap overlap_metrics(const ConfusionCounts& c) {
  if (c.tp == 0 && c.fp == 0 && c.fn == 0) return {1.0, 1.0, 1.0};
  return {ratio(2 * c.tp, 2 * c.tp + c.fp + c.fn), ratio(c.tp, c.tp + c.fn), ratio(c.tp, c.tp + c.fp)};
}

PointSet extract_points(const BinaryMask& mask, PointMode mode) {
  const BinaryMask& src = mode == PointMode::Boundary ? boundary_of(mask) : mask;
  PointSet out;
  for (int r = 0; r < src.height(); ++r)
    for (int c = 0; c < src.width(); ++c)
      if (src.at(r, c)) out.points.push_back({r, c});
  return out;
}

double image_diagonal(int width, int height) { return std::hypot(double(width), double(height)); }

double percentile(std::vector<double> values, double q) {
  if (values.empty()) raise(ErrorKind::Argument, "percentile of an empty sample");
  if (!(q >= 0.0 && q <= 1.0)) raise(ErrorKind::Argument, "quantile must lie in [0, 1]");
  const double pos = q * double(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  std::nth_element(values.begin(), values.begin() + lo, values.end());
  const double a = values[lo];
  if (hi == lo) return a;
  const double b = *std::min_element(values.begin() + lo + 1, values.end());
  return a + (pos - double(lo)) * (b - a);
}

std::vector<double> directed_distances(const PointSet& from, const PointSet& to) {
  if (to.empty()) raise(ErrorKind::Argument, "directed distance to an empty set");
  auto split = [](const PointSet& s, std::vector<std::int32_t>& rows, std::vector<std::int32_t>& cols) {
    rows.reserve(s.size());
    cols.reserve(s.size());
    for (const auto& p : s.points) {
      rows.push_back(p.row);
      cols.push_back(p.col);
    }
  };
  std::vector<std::int32_t> fr, fc, tr, tc;
  split(from, fr, fc);
  split(to, tr, tc);
  std::vector<std::int32_t> d2(from.size());
  simd::kernels().min_sq_distances(fr.data(), fc.data(), fr.size(), tr.data(), tc.data(), tr.size(), d2.data());
  std::vector<double> out(d2.size());
  std::transform(d2.begin(), d2.end(), out.begin(), [](std::int32_t v) { return std::sqrt(double(v)); });
  return out;
}

namespace {
template <class Reduce>
double symmetric(const PointSet& u, const PointSet& v, double diagonal, Reduce reduce) {
  if (u.empty() && v.empty()) return 0.0;
  if (u.empty() || v.empty()) return diagonal;
  return std::max(reduce(directed_distances(u, v)), reduce(directed_distances(v, u)));
}
}  // namespace

double hd95(const PointSet& u, const PointSet& v, double diagonal) {
  return symmetric(u, v, diagonal, [](std::vector<double> d) { return percentile(std::move(d), 0.95); });
}

double hausdorff(const PointSet& u, const PointSet& v, double diagonal) {
  return symmetric(u, v, diagonal, [](const std::vector<double>& d) { return *std::max_element(d.begin(), d.end()); });
}

double hd95_masks(const BinaryMask& a, const BinaryMask& b, PointMode mode) {
  require_same_shape(a, b, "hd95");
  const BinaryMask sa = mode == PointMode::Boundary ? boundary_of(a) : a;
  const BinaryMask sb = mode == PointMode::Boundary ? boundary_of(b) : b;
  const std::size_t na = foreground_count(sa), nb = foreground_count(sb);
  if (na == 0 && nb == 0) return 0.0;
  if (na == 0 || nb == 0) return image_diagonal(a.width(), a.height());
  auto directed = [](const BinaryMask& from, const BinaryMask& to) {
    const auto d2 = squared_distance_to(to);
    std::vector<double> d;
    for (std::size_t i = 0; i < from.size(); ++i)
      if (from[i]) d.push_back(std::sqrt(d2[i]));
    return percentile(std::move(d), 0.95);
  };
  return std::max(directed(sa, sb), directed(sb, sa));
}

ImageMetrics evaluate_pair(const BinaryMask& pred, const BinaryMask& gt, PointMode mode) {
  const auto o = overlap_metrics(confusion(pred, gt));
  const double h = hd95_masks(pred, gt, mode);
  return {o.dice, o.recall, o.precision, h, h / image_diagonal(gt.width(), gt.height())};
}

void MetricReport::finalize() {
  ImageMetrics sum;
  for (const auto& [id, m] : per_image) {
    sum.dice += m.dice;
    sum.recall += m.recall;
    sum.precision += m.precision;
    sum.hd95 += m.hd95;
    sum.hd95_normalized += m.hd95_normalized;
  }
  const double n = per_image.empty() ? 1.0 : double(per_image.size());
  aggregate = {sum.dice / n, sum.recall / n, sum.precision / n, sum.hd95 / n, sum.hd95_normalized / n};
}

void to_json(nlohmann::json& j, const ImageMetrics& m) {
  j = {{"dice", m.dice},
       {"recall", m.recall},
       {"precision", m.precision},
       {"hd95", m.hd95},
       {"hd95_normalized", m.hd95_normalized}};
}

void from_json(const nlohmann::json& j, ImageMetrics& m) {
  m.dice = j.at("dice").get<double>();
  m.recall = j.at("recall").get<double>();
  m.precision = j.at("precision").get<double>();
  m.hd95 = j.at("hd95").get<double>();
  m.hd95_normalized = j.at("hd95_normalized").get<double>();
}

void to_json(nlohmann::json& j, const MetricReport& r) {
  j = {{"per_image", r.per_image},
       {"aggregate", r.aggregate},
       {"provenance",
        {{"config_hash", r.provenance.config_hash},
         {"seed", r.provenance.seed},
         {"checkpoint_id", r.provenance.checkpoint_id}}}};
}

void from_json(const nlohmann::json& j, MetricReport& r) {
  r.per_image = j.at("per_image").get<std::map<std::string, ImageMetrics>>();
  r.aggregate = j.at("aggregate").get<ImageMetrics>();
  const auto& p = j.at("provenance");
  r.provenance = {p.at("config_hash").get<std::string>(), p.at("seed").get<std::uint64_t>(),
                  p.at("checkpoint_id").get<std::string>()};
}

void save_report(const MetricReport& report, const std::filesystem::path& path) {
  std::error_code ec;
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
  std::ofstream out(path);
  if (!out) raise(ErrorKind::Io, "cannot write " + path.string());
  out << nlohmann::json(report).dump(2) << '\n';
}

MetricReport load_report(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) raise(ErrorKind::Io, "cannot read " + path.string());
  try {
    return nlohmann::json::parse(in).get<MetricReport>();
  } catch (const nlohmann::json::exception& e) {
    raise(ErrorKind::Format, path.string() + ": " + e.what());
  }
}

namespace {
std::set<std::string> png_names(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) raise(ErrorKind::Io, "not a directory: " + dir.string());
  std::set<std::string> names;
  for (const auto& e : std::filesystem::directory_iterator(dir))
    if (e.is_regular_file() && e.path().extension() == ".png") names.insert(e.path().filename().string());
  return names;
}
}  // namespace

MetricReport evaluate_dataset(const std::filesystem::path& pred_dir, const std::filesystem::path& gt_dir,
                              PointMode mode) {
  const auto preds = png_names(pred_dir);
  const auto gts = png_names(gt_dir);
  std::string missing;
  for (const auto& n : preds)
    if (!gts.count(n)) missing += "\n  no ground truth for " + n;
  for (const auto& n : gts)
    if (!preds.count(n)) missing += "\n  no prediction for " + n;
  if (!missing.empty()) raise(ErrorKind::Pairing, "unmatched files between " + pred_dir.string() + " and " +
                                                      gt_dir.string() + ":" + missing);
  if (preds.empty()) raise(ErrorKind::Empty, "no PNG masks in " + pred_dir.string());

  MetricReport report;
  for (const auto& name : preds) {
    const auto pred = data::load_mask(pred_dir / name);
    const auto gt = data::load_mask(gt_dir / name);
    report.per_image[std::filesystem::path(name).stem().string()] = evaluate_pair(pred, gt, mode);
  }
  report.finalize();
  return report;
}

}  // namespace sinusseg::metrics
