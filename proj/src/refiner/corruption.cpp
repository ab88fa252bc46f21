#include "sinusseg/refiner/corruption.hpp"

#include <cmath>
#include <numbers>
#include <random>

#include "sinusseg/core/error.hpp"
#include "sinusseg/core/mask_ops.hpp"

namespace sinusseg::refiner {

Grid<double> signed_distance(const BinaryMask& mask) {
  BinaryMask background(mask.width(), mask.height());
  for (std::size_t i = 0; i < mask.size(); ++i) background[i] = mask[i] ? 0 : 1;
  const auto to_fg = squared_distance_to(mask);
  const auto to_bg = squared_distance_to(background);
  Grid<double> sd(mask.width(), mask.height());
  for (std::size_t i = 0; i < mask.size(); ++i)
    sd[i] = mask[i] ? -(std::sqrt(to_bg[i]) - 0.5) : std::sqrt(to_fg[i]) - 0.5;
  return sd;
}

BinaryMask corrupt_mask(const BinaryMask& mask, const CorruptionSpec& spec, std::uint64_t seed) {
  if (spec.jitter_px < 0 || spec.salt_fraction < 0 || spec.salt_fraction > 1 || spec.field_waves < 1)
    raise(ErrorKind::Argument, "invalid corruption parameters");
  std::mt19937_64 rng(seed);
  const int w = mask.width(), h = mask.height();

  Grid<double> field(w, h, 0.0);
  std::uniform_real_distribution<double> freq(-spec.max_frequency, spec.max_frequency), phase(0, 2 * std::numbers::pi),
      amp(0.5, 1.0);
  for (int k = 0; k < spec.field_waves; ++k) {
    const double fu = freq(rng) / h, fv = freq(rng) / w, ph = phase(rng), a = amp(rng);
    for (int r = 0; r < h; ++r)
      for (int c = 0; c < w; ++c) field.at(r, c) += a * std::sin(2 * std::numbers::pi * (fu * r + fv * c) + ph);
  }
  double peak = 0;
  for (double v : field.values()) peak = std::max(peak, std::abs(v));
  const double scale = peak > 0 ? spec.jitter_px / peak : 0.0;

  BinaryMask out(w, h);
  if (foreground_count(mask) > 0 && foreground_count(mask) < mask.size()) {
    const auto sd = signed_distance(mask);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = sd[i] + scale * field[i] < 0 ? 1 : 0;
  } else {
    out = mask;
  }

  const auto salt = static_cast<std::size_t>(std::llround(spec.salt_fraction * double(out.size())));
  std::uniform_int_distribution<std::size_t> pick(0, out.size() - 1);
  for (std::size_t k = 0; k < salt; ++k) out[pick(rng)] = 1;
  return out;
}

}  // namespace sinusseg::refiner
