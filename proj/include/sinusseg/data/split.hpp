#pragma once

#include <cstdint>
#include <vector>

#include "sinusseg/data/records.hpp"

namespace sinusseg::data {

struct SplitRatios {
  double labeled_fraction = 1.0;  // share of the training split that keeps its mask
  std::size_t val_count = 0;
  std::size_t test_count = 0;
};

/// Deterministic train/val/test and labeled/unlabeled partition.
///
/// Records are ordered by image_id and shuffled with a seeded generator, so
/// the result depends only on (record set, ratios, seed). Validation and test
/// draw only from records that have a mask; the labeled share of the training
/// split is round(labeled_fraction * train_count). Training records outside
/// the labeled share lose their mask reference.
SplitManifest build_split_manifest(std::vector<SampleRecord> records, const SplitRatios& ratios, std::uint64_t seed);

}  // namespace sinusseg::data
