#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "sinusseg/core/grid.hpp"
#include "sinusseg/data/records.hpp"

namespace sinusseg::distill {

struct Sample {
  std::string id;
  GrayImage image;
  std::optional<BinaryMask> mask;
};

struct Dataset {
  std::vector<Sample> labeled;    // training, with masks
  std::vector<Sample> unlabeled;  // training, masks withheld
  std::vector<Sample> val;
  std::vector<Sample> test;
};

/// Reads every record of the manifest, resolving relative paths against
/// `root` and resizing (nearest neighbour) to size x size. Missing files are
/// an Io error listing the affected ids.
Dataset load_dataset(const data::SplitManifest& manifest, const std::filesystem::path& root, int size);

}  // namespace sinusseg::distill
