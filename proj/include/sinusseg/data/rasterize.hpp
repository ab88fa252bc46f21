#pragma once

#include <string>
#include <vector>

#include "sinusseg/core/grid.hpp"
#include "sinusseg/data/via_csv.hpp"

namespace sinusseg::data {

struct RasterResult {
  BinaryMask mask;
  std::vector<std::string> warnings;
};

/// Pixel (row i, col j) is foreground iff its centre (j + 0.5, i + 0.5) is
/// inside the polygon under the even-odd rule. Vertices outside
/// [0, width] x [0, height] are clamped onto the image box with a warning.
RasterResult rasterize_polygon(const PolygonAnnotation& poly, int width, int height);

/// Union of several polygons belonging to one image.
RasterResult rasterize_polygons(const std::vector<PolygonAnnotation>& polys, int width, int height);

}  // namespace sinusseg::data
