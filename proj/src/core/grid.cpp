#include "sinusseg/core/grid.hpp"

#include <algorithm>
#include <cmath>

namespace sinusseg {

std::size_t foreground_count(const BinaryMask& mask) noexcept {
  return static_cast<std::size_t>(std::count_if(mask.values().begin(), mask.values().end(),
                                                [](std::uint8_t v) { return v != 0; }));
}

BinaryMask binarize(const ProbabilityMap& probs, double threshold) {
  BinaryMask out(probs.width(), probs.height());
  for (std::size_t i = 0; i < probs.size(); ++i) out[i] = probs[i] >= threshold ? 1 : 0;
  return out;
}

BinaryMask binarize_logits(const LogitMap& logits, double threshold) {
  // sigmoid(z) >= t  <=>  z >= logit(t)
  const double cut = std::log(threshold / (1.0 - threshold));
  BinaryMask out(logits.width(), logits.height());
  for (std::size_t i = 0; i < logits.size(); ++i) out[i] = logits[i] >= cut ? 1 : 0;
  return out;
}

BinaryMask resize_nearest(const BinaryMask& mask, int width, int height) {
  if (width <= 0 || height <= 0) raise(ErrorKind::Shape, "resize target must be positive");
  if (width == mask.width() && height == mask.height()) return mask;
  BinaryMask out(width, height);
  for (int r = 0; r < height; ++r) {
    const int sr = std::min(mask.height() - 1, static_cast<int>((r + 0.5) * mask.height() / height));
    for (int c = 0; c < width; ++c) {
      const int sc = std::min(mask.width() - 1, static_cast<int>((c + 0.5) * mask.width() / width));
      out.at(r, c) = mask.at(sr, sc);
    }
  }
  return out;
}

}  // namespace sinusseg
