#pragma once

#include <cstdint>
#include <vector>

#include "sinusseg/core/grid.hpp"

namespace sinusseg {

/// Exact squared Euclidean distance from every pixel to the nearest pixel
/// where `sites` is nonzero (separable lower-envelope transform). Pixels are
/// +inf when there are no sites.
Grid<double> squared_distance_to(const BinaryMask& sites);

/// Foreground pixels within Euclidean distance `radius` of the mask.
BinaryMask dilate(const BinaryMask& mask, double radius);

/// Foreground pixels whose distance to the background exceeds `radius`.
/// Pixels outside the image count as background.
BinaryMask erode(const BinaryMask& mask, double radius);

/// Foreground pixels with at least one 4-neighbour that is background or
/// outside the image.
BinaryMask boundary_of(const BinaryMask& mask);

struct Components {
  Grid<std::int32_t> labels;       // 0 = background, 1..count
  std::vector<std::size_t> sizes;  // sizes[label - 1]
  std::size_t count() const noexcept { return sizes.size(); }
};

/// 8-connected component labelling in raster order.
Components connected_components(const BinaryMask& mask);

/// Number of single-pixel 8-connected components.
std::size_t isolated_pixel_count(const BinaryMask& mask);

/// Pixelwise union; shapes must match.
BinaryMask mask_union(const BinaryMask& a, const BinaryMask& b);

}  // namespace sinusseg
