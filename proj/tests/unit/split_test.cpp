#include <gtest/gtest.h>

#include <set>

#include "sinusseg/core/error.hpp"
#include "sinusseg/data/split.hpp"
#include "test_util.hpp"

namespace sinusseg::data {
namespace {

std::vector<SampleRecord> labeled_records(std::size_t n) {
  std::vector<SampleRecord> out;
  for (std::size_t i = 0; i < n; ++i) {
    SampleRecord r;
    r.image_id = "img_" + std::to_string(i);
    r.image_path = "images/" + r.image_id + ".png";
    r.mask_path = "masks/" + r.image_id + ".png";
    r.labeled = true;
    out.push_back(r);
  }
  return out;
}

TEST(Split, ClinicalProtocolCounts) {
  const auto m = build_split_manifest(labeled_records(2511), {626.0 / 2091.0, 210, 210}, 1);
  EXPECT_EQ(m.counts.train_labeled + m.counts.train_unlabeled, 2091u);
  EXPECT_EQ(m.counts.train_labeled, 626u);
  EXPECT_EQ(m.counts.train_unlabeled, 1465u);
  EXPECT_EQ(m.counts.val, 210u);
  EXPECT_EQ(m.counts.test, 210u);
}

TEST(Split, DeterministicForFixedSeed) {
  const SplitRatios ratios{0.3, 10, 10};
  const auto a = build_split_manifest(labeled_records(100), ratios, 42);
  const auto b = build_split_manifest(labeled_records(100), ratios, 42);
  EXPECT_EQ(a, b);
  // Input order does not matter.
  auto shuffled = labeled_records(100);
  std::reverse(shuffled.begin(), shuffled.end());
  EXPECT_EQ(build_split_manifest(shuffled, ratios, 42), a);
  // A different seed gives a different assignment.
  EXPECT_NE(build_split_manifest(labeled_records(100), ratios, 43), a);
}

TEST(Split, InsufficientRecordsIsCountError) {
  try {
    build_split_manifest(labeled_records(10), {0.5, 0, 20}, 1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Count);
  }
}

TEST(Split, HeldOutSplitsOnlyUseAnnotatedRecords) {
  auto records = labeled_records(30);
  for (std::size_t i = 0; i < 20; ++i) {  // 20 without masks, 10 with
    records[i].mask_path.reset();
    records[i].labeled = false;
  }
  const auto m = build_split_manifest(records, {0.1, 4, 4}, 3);
  for (const auto& r : m.records) {
    if (r.split != Split::Train) EXPECT_TRUE(r.labeled);
  }
  EXPECT_EQ(m.counts.val, 4u);
  EXPECT_EQ(m.counts.test, 4u);
  EXPECT_EQ(m.counts.train_labeled, 2u);  // round(0.1 * 22)
  // Asking for more held-out records than have masks fails.
  EXPECT_THROW(build_split_manifest(records, {0.0, 6, 6}, 3), Error);
}

TEST(Split, PropertyDisjointAndTallied) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto m = build_split_manifest(labeled_records(100), {0.25, 10, 15}, seed);
    std::set<std::string> ids;
    for (const auto& r : m.records) {
      EXPECT_TRUE(ids.insert(r.image_id).second);
      EXPECT_EQ(r.labeled, r.mask_path.has_value());
    }
    EXPECT_EQ(ids.size(), 100u);
    EXPECT_EQ(SplitManifest::tally(m.records), m.counts);
    EXPECT_NO_THROW(m.validate());
  }
}

TEST(Split, ManifestJsonRoundTrip) {
  testing::TempDir dir;
  auto records = labeled_records(12);
  records[0].metadata.age = 45;
  records[0].metadata.sex = Sex::Female;
  const auto m = build_split_manifest(records, {0.5, 2, 2}, 5);
  save_manifest(m, dir / "split.json");
  EXPECT_EQ(load_manifest(dir / "split.json"), m);
}

}  // namespace
}  // namespace sinusseg::data
