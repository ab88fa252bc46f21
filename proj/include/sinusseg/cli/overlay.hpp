#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "sinusseg/core/grid.hpp"
#include "sinusseg/data/image_io.hpp"

namespace sinusseg::cli {

inline constexpr data::Rgb kPredictionColour{230, 40, 40};
inline constexpr data::Rgb kGroundTruthColour{40, 210, 60};
inline constexpr data::Rgb kSharedColour{250, 220, 40};

/// Grayscale image with the prediction and ground-truth contours drawn in
/// separate colours (shared contour pixels in a third).
data::RgbImage overlay_image(const GrayImage& image, const BinaryMask& pred, const BinaryMask& gt);

/// One PNG per id, <out_dir>/<id>.png. The three maps must have the same ids
/// and each triple the same shape, otherwise a Pairing error.
std::vector<std::filesystem::path> render_overlays(const std::map<std::string, GrayImage>& images,
                                                   const std::map<std::string, BinaryMask>& preds,
                                                   const std::map<std::string, BinaryMask>& gts,
                                                   const std::filesystem::path& out_dir);

}  // namespace sinusseg::cli
