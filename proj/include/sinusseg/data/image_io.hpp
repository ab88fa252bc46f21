#pragma once

#include <array>
#include <cstdint>
#include <filesystem>

#include "sinusseg/core/grid.hpp"

namespace sinusseg::data {

/// 8-bit single-channel PNG -> mask; any nonzero value is foreground.
/// Colour, alpha, palette or 16-bit files are rejected with a format error.
BinaryMask load_mask(const std::filesystem::path& path);

/// Writes {0, 255} 8-bit grayscale.
void save_mask(const BinaryMask& mask, const std::filesystem::path& path);

/// 8-bit single-channel PNG.
GrayImage load_gray_image(const std::filesystem::path& path);
void save_gray_image(const GrayImage& image, const std::filesystem::path& path);

using Rgb = std::array<std::uint8_t, 3>;
using RgbImage = Grid<Rgb>;

void save_rgb_image(const RgbImage& image, const std::filesystem::path& path);

/// Width and height of a PNG without decoding pixels.
std::pair<int, int> png_dimensions(const std::filesystem::path& path);

}  // namespace sinusseg::data
