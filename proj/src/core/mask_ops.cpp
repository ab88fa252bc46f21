#include "sinusseg/core/mask_ops.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

namespace sinusseg {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Lower envelope of parabolas (q - p)^2 + f(p) over the finite entries of f.
void envelope_1d(const double* f, int n, std::ptrdiff_t stride, double* out, std::vector<int>& v,
                 std::vector<double>& z) {
  v.clear();
  z.clear();
  for (int q = 0; q < n; ++q) {
    const double fq = f[q * stride];
    if (!std::isfinite(fq)) continue;
    while (!v.empty()) {
      const int p = v.back();
      const double fp = f[p * stride];
      const double s = ((fq + double(q) * q) - (fp + double(p) * p)) / (2.0 * q - 2.0 * p);
      if (s <= z.back()) {
        v.pop_back();
        z.pop_back();
      } else {
        v.push_back(q);
        z.push_back(s);
        break;
      }
    }
    if (v.empty()) {
      v.push_back(q);
      z.push_back(-kInf);
    }
  }
  if (v.empty()) {
    for (int q = 0; q < n; ++q) out[q] = kInf;
    return;
  }
  std::size_t k = 0;
  for (int q = 0; q < n; ++q) {
    while (k + 1 < v.size() && z[k + 1] < q) ++k;
    const double d = q - v[k];
    out[q] = d * d + f[v[k] * stride];
  }
}

}  // namespace

Grid<double> squared_distance_to(const BinaryMask& sites) {
  const int w = sites.width();
  const int h = sites.height();
  Grid<double> cols(w, h, kInf);
  for (std::size_t i = 0; i < sites.size(); ++i) cols[i] = sites[i] ? 0.0 : kInf;

  std::vector<int> v;
  std::vector<double> z;
  std::vector<double> buf(static_cast<std::size_t>(std::max(w, h)));
  // Columns first, then rows.
  for (int c = 0; c < w; ++c) {
    envelope_1d(cols.data() + c, h, w, buf.data(), v, z);
    for (int r = 0; r < h; ++r) cols.at(r, c) = buf[r];
  }
  Grid<double> out(w, h);
  for (int r = 0; r < h; ++r) envelope_1d(cols.data() + static_cast<std::size_t>(r) * w, w, 1, out.data() + static_cast<std::size_t>(r) * w, v, z);
  return out;
}

BinaryMask dilate(const BinaryMask& mask, double radius) {
  const auto d2 = squared_distance_to(mask);
  const double r2 = radius * radius;
  BinaryMask out(mask.width(), mask.height());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = d2[i] <= r2 ? 1 : 0;
  return out;
}

BinaryMask erode(const BinaryMask& mask, double radius) {
  // Pad by one pixel of background so the image border counts as background.
  BinaryMask padded_bg(mask.width() + 2, mask.height() + 2, 1);
  for (int r = 0; r < mask.height(); ++r)
    for (int c = 0; c < mask.width(); ++c) padded_bg.at(r + 1, c + 1) = mask.at(r, c) ? 0 : 1;
  const auto d2 = squared_distance_to(padded_bg);
  const double r2 = radius * radius;
  BinaryMask out(mask.width(), mask.height());
  for (int r = 0; r < mask.height(); ++r)
    for (int c = 0; c < mask.width(); ++c) out.at(r, c) = d2.at(r + 1, c + 1) > r2 ? 1 : 0;
  return out;
}

BinaryMask boundary_of(const BinaryMask& mask) {
  BinaryMask out(mask.width(), mask.height());
  constexpr std::array<std::array<int, 2>, 4> kNeighbours{{{-1, 0}, {1, 0}, {0, -1}, {0, 1}}};
  for (int r = 0; r < mask.height(); ++r) {
    for (int c = 0; c < mask.width(); ++c) {
      if (!mask.at(r, c)) continue;
      for (const auto& [dr, dc] : kNeighbours) {
        if (!mask.contains(r + dr, c + dc) || !mask.at(r + dr, c + dc)) {
          out.at(r, c) = 1;
          break;
        }
      }
    }
  }
  return out;
}

Components connected_components(const BinaryMask& mask) {
  Components result{Grid<std::int32_t>(mask.width(), mask.height(), 0), {}};
  std::vector<std::pair<int, int>> stack;
  for (int r = 0; r < mask.height(); ++r) {
    for (int c = 0; c < mask.width(); ++c) {
      if (!mask.at(r, c) || result.labels.at(r, c) != 0) continue;
      const auto label = static_cast<std::int32_t>(result.sizes.size() + 1);
      std::size_t size = 0;
      stack.assign(1, {r, c});
      result.labels.at(r, c) = label;
      while (!stack.empty()) {
        const auto [cr, cc] = stack.back();
        stack.pop_back();
        ++size;
        for (int dr = -1; dr <= 1; ++dr) {
          for (int dc = -1; dc <= 1; ++dc) {
            const int nr = cr + dr, nc = cc + dc;
            if ((dr || dc) && mask.contains(nr, nc) && mask.at(nr, nc) && result.labels.at(nr, nc) == 0) {
              result.labels.at(nr, nc) = label;
              stack.emplace_back(nr, nc);
            }
          }
        }
      }
      result.sizes.push_back(size);
    }
  }
  return result;
}

std::size_t isolated_pixel_count(const BinaryMask& mask) {
  const auto comps = connected_components(mask);
  return static_cast<std::size_t>(std::count(comps.sizes.begin(), comps.sizes.end(), std::size_t{1}));
}

BinaryMask mask_union(const BinaryMask& a, const BinaryMask& b) {
  require_same_shape(a, b, "mask union");
  BinaryMask out(a.width(), a.height());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = (a[i] || b[i]) ? 1 : 0;
  return out;
}

}  // namespace sinusseg
