#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "sinusseg/core/grid.hpp"
#include "sinusseg/data/records.hpp"

namespace sinusseg::data {

struct PhantomSample {
  GrayImage image;
  BinaryMask mask;
};

/// One synthetic radiograph: two dark quasi-elliptical cavities (left and
/// right of the midline) under low-frequency sinusoidal bands and Gaussian
/// noise. Sample `index` of a given seed is independent of how many samples
/// are drawn. `size` >= 64.
PhantomSample make_phantom(int size, std::uint64_t seed, std::size_t index);

std::string phantom_id(std::size_t index);

/// Writes out_dir/images/<id>.png and out_dir/masks/<id>.png for n samples
/// and returns a manifest with every record labeled in the training split.
SplitManifest generate_phantom_dataset(std::size_t n, int size, std::uint64_t seed,
                                       const std::filesystem::path& out_dir);

}  // namespace sinusseg::data
