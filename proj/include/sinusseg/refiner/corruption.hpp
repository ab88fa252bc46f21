#pragma once

#include <cstdint>

#include "sinusseg/core/grid.hpp"

namespace sinusseg::refiner {

/// Synthetic pseudo-label noise: the boundary moves by a smooth random
/// offset of at most `jitter_px`, then `salt_fraction` of all pixels are set
/// to foreground.
struct CorruptionSpec {
  double jitter_px = 3.0;
  double salt_fraction = 0.01;
  int field_waves = 4;        // sinusoids summed into the offset field
  double max_frequency = 4.0; // cycles per image side
};

BinaryMask corrupt_mask(const BinaryMask& mask, const CorruptionSpec& spec, std::uint64_t seed);

/// Signed Euclidean distance to the boundary: negative inside, positive
/// outside, +-0.5 on pixels adjacent to the other class.
Grid<double> signed_distance(const BinaryMask& mask);

}  // namespace sinusseg::refiner
