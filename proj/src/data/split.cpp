#include "sinusseg/data/split.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <set>

#include "sinusseg/core/error.hpp"

namespace sinusseg::data {

SplitManifest build_split_manifest(std::vector<SampleRecord> records, const SplitRatios& ratios, std::uint64_t seed) {
  if (ratios.labeled_fraction < 0.0 || ratios.labeled_fraction > 1.0) {
    raise(ErrorKind::Argument, "labeled_fraction must lie in [0, 1]");
  }
  std::sort(records.begin(), records.end(),
            [](const SampleRecord& a, const SampleRecord& b) { return a.image_id < b.image_id; });
  for (std::size_t i = 1; i < records.size(); ++i) {
    if (records[i].image_id == records[i - 1].image_id) {
      raise(ErrorKind::Format, "duplicate image_id '" + records[i].image_id + "'");
    }
  }

  const std::size_t held_out = ratios.val_count + ratios.test_count;
  if (records.size() < held_out + 1) {
    raise(ErrorKind::Count, "need more than " + std::to_string(held_out) + " records for val+test, have " +
                                std::to_string(records.size()));
  }

  std::mt19937_64 rng(seed);
  std::shuffle(records.begin(), records.end(), rng);
  // Masked records first (stable), so held-out splits and the labeled share
  // draw from them while the shuffled order is otherwise preserved.
  std::stable_partition(records.begin(), records.end(), [](const SampleRecord& r) { return r.mask_path.has_value(); });
  const auto masked = static_cast<std::size_t>(
      std::count_if(records.begin(), records.end(), [](const SampleRecord& r) { return r.mask_path.has_value(); }));
  if (masked < held_out) {
    raise(ErrorKind::Count, "val+test need " + std::to_string(held_out) + " annotated records, have " +
                                std::to_string(masked));
  }

  const std::size_t train_count = records.size() - held_out;
  const auto labeled_count = static_cast<std::size_t>(std::llround(ratios.labeled_fraction * double(train_count)));
  if (held_out + labeled_count > masked) {
    raise(ErrorKind::Count, "labeled share needs " + std::to_string(labeled_count) + " annotated training records, have " +
                                std::to_string(masked - held_out));
  }

  SplitManifest manifest;
  manifest.seed = seed;
  manifest.records.reserve(records.size());
  for (std::size_t i = 0; i < records.size(); ++i) {
    SampleRecord r = std::move(records[i]);
    if (i < ratios.test_count) {
      r.split = Split::Test;
      r.labeled = true;
    } else if (i < held_out) {
      r.split = Split::Val;
      r.labeled = true;
    } else if (i < held_out + labeled_count) {
      r.split = Split::Train;
      r.labeled = true;
    } else {
      r.split = Split::Train;
      r.labeled = false;
      r.mask_path.reset();
    }
    manifest.records.push_back(std::move(r));
  }
  std::sort(manifest.records.begin(), manifest.records.end(),
            [](const SampleRecord& a, const SampleRecord& b) { return a.image_id < b.image_id; });
  manifest.counts = SplitManifest::tally(manifest.records);
  manifest.validate();
  return manifest;
}

}  // namespace sinusseg::data
