#include "sinusseg/data/rasterize.hpp"

#include <algorithm>

#include <spdlog/spdlog.h>

#include "sinusseg/core/error.hpp"

namespace sinusseg::data {

RasterResult rasterize_polygon(const PolygonAnnotation& poly, int width, int height) {
  if (width <= 0 || height <= 0) raise(ErrorKind::Shape, "raster size must be positive");
  if (poly.vertices.size() < 3) {
    raise(ErrorKind::Degenerate, "polygon on '" + poly.image_id + "' has " + std::to_string(poly.vertices.size()) +
                                     " vertices (need at least 3)");
  }

  RasterResult result{BinaryMask(width, height), {}};
  std::vector<Vertex> pts = poly.vertices;
  std::size_t clipped = 0;
  for (auto& p : pts) {
    const Vertex before = p;
    p.x = std::clamp(p.x, 0.0, static_cast<double>(width));
    p.y = std::clamp(p.y, 0.0, static_cast<double>(height));
    clipped += !(p == before);
  }
  if (clipped > 0) {
    result.warnings.push_back("polygon on '" + poly.image_id + "': " + std::to_string(clipped) +
                              " vertices outside the image were clipped");
    spdlog::warn("{}", result.warnings.back());
  }

  // Scanline crossing test at each row's pixel-centre height.
  std::vector<double> crossings;
  const std::size_t n = pts.size();
  for (int row = 0; row < height; ++row) {
    const double cy = row + 0.5;
    crossings.clear();
    for (std::size_t a = 0, b = n - 1; a < n; b = a++) {
      const Vertex& pa = pts[a];
      const Vertex& pb = pts[b];
      if ((pa.y > cy) != (pb.y > cy)) {
        crossings.push_back(pa.x + (cy - pa.y) * (pb.x - pa.x) / (pb.y - pa.y));
      }
    }
    if (crossings.empty()) continue;
    std::sort(crossings.begin(), crossings.end());
    // Inside iff an odd number of crossings lie strictly to the right of the centre.
    std::size_t at_or_left = 0;
    for (int col = 0; col < width; ++col) {
      const double cx = col + 0.5;
      while (at_or_left < crossings.size() && crossings[at_or_left] <= cx) ++at_or_left;
      if ((crossings.size() - at_or_left) % 2 == 1) result.mask.at(row, col) = 1;
    }
  }
  return result;
}

RasterResult rasterize_polygons(const std::vector<PolygonAnnotation>& polys, int width, int height) {
  RasterResult out{BinaryMask(width, height), {}};
  for (const auto& p : polys) {
    auto one = rasterize_polygon(p, width, height);
    for (std::size_t i = 0; i < out.mask.size(); ++i) out.mask[i] |= one.mask[i];
    out.warnings.insert(out.warnings.end(), one.warnings.begin(), one.warnings.end());
  }
  return out;
}

}  // namespace sinusseg::data
