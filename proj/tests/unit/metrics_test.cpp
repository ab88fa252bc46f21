#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "sinusseg/core/error.hpp"
#include "sinusseg/core/mask_ops.hpp"
#include "sinusseg/data/image_io.hpp"
#include "sinusseg/metrics/metrics.hpp"
#include "test_util.hpp"

namespace sinusseg::metrics {
namespace {

// O(N*M) reference: sorted directed distances, interpolated quantile.
double oracle_directed_p95(const BinaryMask& from, const BinaryMask& to) {
  std::vector<double> d;
  for (int r = 0; r < from.height(); ++r)
    for (int c = 0; c < from.width(); ++c) {
      if (!from.at(r, c)) continue;
      double best = INFINITY;
      for (int r2 = 0; r2 < to.height(); ++r2)
        for (int c2 = 0; c2 < to.width(); ++c2)
          if (to.at(r2, c2)) best = std::min(best, std::sqrt(double((r - r2) * (r - r2) + (c - c2) * (c - c2))));
      d.push_back(best);
    }
  std::sort(d.begin(), d.end());
  const double pos = 0.95 * double(d.size() - 1);
  const std::size_t lo = std::size_t(pos);
  const double frac = pos - double(lo);
  return lo + 1 < d.size() ? d[lo] * (1 - frac) + d[lo + 1] * frac : d[lo];
}

double oracle_hd95(const BinaryMask& a, const BinaryMask& b) {
  return std::max(oracle_directed_p95(a, b), oracle_directed_p95(b, a));
}

PointSet points(std::initializer_list<Point> p) { return PointSet{std::vector<Point>(p)}; }

TEST(Confusion, OneByFourExample) {
  BinaryMask pred(4, 1), gt(4, 1);
  pred[0] = pred[1] = 1;
  gt[1] = gt[2] = 1;
  EXPECT_EQ(confusion(pred, gt), (ConfusionCounts{1, 1, 1, 1}));
}

TEST(Confusion, IdentityAndEmptyPrediction) {
  std::mt19937_64 rng(3);
  const auto gt = testing::random_mask(16, 16, 0.4, rng);
  const auto k = foreground_count(gt);
  EXPECT_EQ(confusion(gt, gt), (ConfusionCounts{k, 0, 0, 256 - k}));
  EXPECT_EQ(confusion(BinaryMask(16, 16), gt), (ConfusionCounts{0, 0, k, 256 - k}));
}

TEST(Confusion, ShapeMismatchIsShapeError) {
  try {
    confusion(BinaryMask(4, 4), BinaryMask(4, 5));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Shape);
  }
}

TEST(Overlap, SubstitutionAndConventions) {
  const auto half = overlap_metrics({1, 1, 1, 1});
  EXPECT_DOUBLE_EQ(half.dice, 0.5);
  EXPECT_DOUBLE_EQ(half.recall, 0.5);
  EXPECT_DOUBLE_EQ(half.precision, 0.5);
  const auto both_empty = overlap_metrics({0, 0, 0, 9});
  EXPECT_EQ(both_empty.dice, 1.0);
  EXPECT_EQ(both_empty.recall, 1.0);
  EXPECT_EQ(both_empty.precision, 1.0);
  const auto empty_pred = overlap_metrics({0, 0, 5, 4});
  EXPECT_EQ(empty_pred.dice, 0.0);
  EXPECT_EQ(empty_pred.precision, 0.0);
  const auto same = overlap_metrics({7, 0, 0, 2});
  EXPECT_EQ(same.dice, 1.0);
}

TEST(Hd95, SinglePointPair) {
  EXPECT_DOUBLE_EQ(hd95(points({{0, 0}}), points({{3, 4}}), 100.0), 5.0);
}

TEST(Hd95, IdenticalAndEmptySets) {
  const auto u = points({{1, 2}, {5, 5}, {0, 9}});
  EXPECT_EQ(hd95(u, u, 10.0), 0.0);
  EXPECT_EQ(hd95(u, PointSet{}, 12.5), 12.5);
  EXPECT_EQ(hd95(PointSet{}, u, 12.5), 12.5);
  EXPECT_EQ(hd95(PointSet{}, PointSet{}, 12.5), 0.0);
}

TEST(Hd95, PercentileInterpolates) {
  EXPECT_DOUBLE_EQ(percentile({0, 10}, 0.95), 9.5);
  EXPECT_DOUBLE_EQ(percentile({4, 1, 3, 2, 0}, 0.5), 2.0);
  EXPECT_DOUBLE_EQ(percentile({7}, 0.95), 7.0);
  EXPECT_THROW(percentile({}, 0.5), Error);
}

TEST(Hd95, MatchesBruteForceOnRandomPairs) {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 20; ++trial) {
    const auto a = trial % 2 ? testing::random_blobs(40, 40, 3, rng) : testing::random_mask(40, 40, 0.1, rng);
    const auto b = testing::random_blobs(40, 40, 3, rng);
    if (!foreground_count(a) || !foreground_count(b)) continue;
    const double expected = oracle_hd95(a, b);
    const double diag = image_diagonal(40, 40);
    EXPECT_NEAR(hd95(extract_points(a), extract_points(b), diag), expected, 1e-9);
    EXPECT_NEAR(hd95_masks(a, b), expected, 1e-9);
  }
}

TEST(Hd95, BoundaryModeUsesBoundaryPixels) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 10; ++trial) {
    const auto a = testing::random_blobs(32, 32, 2, rng);
    const auto b = testing::random_blobs(32, 32, 2, rng);
    if (!foreground_count(a) || !foreground_count(b)) continue;
    EXPECT_NEAR(hd95_masks(a, b, PointMode::Boundary), oracle_hd95(boundary_of(a), boundary_of(b)), 1e-9);
  }
}

TEST(MetricProperties, SymmetryAndBoundedByHausdorff) {
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 30; ++trial) {
    const auto u = extract_points(testing::random_blobs(32, 32, 2, rng));
    const auto v = extract_points(testing::random_mask(32, 32, 0.05, rng));
    const double diag = image_diagonal(32, 32);
    EXPECT_EQ(hd95(u, v, diag), hd95(v, u, diag));
    EXPECT_LE(hd95(u, v, diag), hausdorff(u, v, diag));
  }
}

TEST(MetricProperties, DilationNeverDecreasesRecall) {
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 20; ++trial) {
    const auto gt = testing::random_blobs(48, 48, 3, rng);
    const auto pred = testing::random_blobs(48, 48, 3, rng);
    const auto base = overlap_metrics(confusion(pred, gt));
    EXPECT_GE(overlap_metrics(confusion(dilate(pred, 1.0), gt)).recall, base.recall);
  }
}

TEST(MetricProperties, ErosionNeverDecreasesPrecisionOfOverSegmentation) {
  // Over-segmented predictions (a dilated target plus speckle): erosion by one
  // pixel keeps the target covered, so only false positives are removed.
  std::mt19937_64 rng(22);
  for (int trial = 0; trial < 20; ++trial) {
    const auto gt = testing::random_blobs(48, 48, 3, rng);
    const auto pred = mask_union(dilate(gt, 1 + trial % 4), testing::random_mask(48, 48, 0.05, rng));
    const auto base = overlap_metrics(confusion(pred, gt));
    EXPECT_GE(overlap_metrics(confusion(erode(pred, 1.0), gt)).precision, base.precision);
  }
}

BinaryMask shift(const BinaryMask& m, int dr, int dc) {
  BinaryMask out(m.width(), m.height());
  for (int r = 0; r < m.height(); ++r)
    for (int c = 0; c < m.width(); ++c)
      if (m.at(r, c)) out.at(r + dr, c + dc) = 1;
  return out;
}

TEST(MetricProperties, TranslationInvariance) {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 10; ++trial) {
    BinaryMask a(48, 48), b(48, 48);
    const auto sa = testing::random_blobs(32, 32, 2, rng), sb = testing::random_blobs(32, 32, 2, rng);
    for (int r = 0; r < 32; ++r)
      for (int c = 0; c < 32; ++c) {
        a.at(r, c) = sa.at(r, c);
        b.at(r, c) = sb.at(r, c);
      }
    const auto m0 = evaluate_pair(a, b);
    const auto m1 = evaluate_pair(shift(a, 9, 13), shift(b, 9, 13));
    EXPECT_EQ(m0, m1);
  }
}

TEST(MetricProperties, DiceIsHarmonicMeanOfPrecisionAndRecall) {
  std::mt19937_64 rng(12);
  for (int trial = 0; trial < 20; ++trial) {
    const auto o = overlap_metrics(confusion(testing::random_blobs(32, 32, 3, rng), testing::random_blobs(32, 32, 3, rng)));
    if (o.precision + o.recall == 0) continue;
    EXPECT_NEAR(o.dice, 2 * o.precision * o.recall / (o.precision + o.recall), 1e-12);
  }
}

class EvaluateDataset : public ::testing::Test {
 protected:
  testing::TempDir dir;
  std::filesystem::path pred = dir / "pred", gt = dir / "gt";
};

TEST_F(EvaluateDataset, IdenticalDirectoriesScorePerfect) {
  std::mt19937_64 rng(1);
  for (int i = 0; i < 3; ++i) {
    const auto m = testing::random_blobs(24, 24, 2, rng);
    data::save_mask(m, gt / ("s" + std::to_string(i) + ".png"));
    data::save_mask(m, pred / ("s" + std::to_string(i) + ".png"));
  }
  const auto report = evaluate_dataset(pred, gt);
  EXPECT_EQ(report.per_image.size(), 3u);
  EXPECT_EQ(report.aggregate.dice, 1.0);
  EXPECT_EQ(report.aggregate.hd95, 0.0);
}

TEST_F(EvaluateDataset, AggregateIsMeanOfPerImage) {
  std::mt19937_64 rng(2);
  for (int i = 0; i < 3; ++i) {
    data::save_mask(testing::random_blobs(24, 24, 2, rng), gt / ("s" + std::to_string(i) + ".png"));
    data::save_mask(testing::random_blobs(24, 24, 2, rng), pred / ("s" + std::to_string(i) + ".png"));
  }
  auto report = evaluate_dataset(pred, gt);
  double dice = 0, hd = 0;
  for (const auto& [id, m] : report.per_image) {
    dice += m.dice;
    hd += m.hd95;
  }
  EXPECT_NEAR(report.aggregate.dice, dice / 3, 1e-12);
  EXPECT_NEAR(report.aggregate.hd95, hd / 3, 1e-12);

  report.provenance = {"abc123", 7, "ckpt_0"};
  save_report(report, dir / "report.json");
  const auto loaded = load_report(dir / "report.json");
  EXPECT_EQ(loaded.provenance, report.provenance);
  EXPECT_NEAR(loaded.aggregate.dice, report.aggregate.dice, 1e-15);
}

TEST_F(EvaluateDataset, MissingGroundTruthIsPairingError) {
  data::save_mask(BinaryMask(8, 8), gt / "a.png");
  data::save_mask(BinaryMask(8, 8), pred / "a.png");
  data::save_mask(BinaryMask(8, 8), pred / "orphan.png");
  try {
    evaluate_dataset(pred, gt);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Pairing);
    EXPECT_NE(std::string(e.what()).find("orphan.png"), std::string::npos);
  }
}

}  // namespace
}  // namespace sinusseg::metrics
