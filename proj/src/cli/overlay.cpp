#include "sinusseg/cli/overlay.hpp"

#include "sinusseg/core/error.hpp"
#include "sinusseg/core/mask_ops.hpp"

namespace sinusseg::cli {

data::RgbImage overlay_image(const GrayImage& image, const BinaryMask& pred, const BinaryMask& gt) {
  require_same_shape(image, pred, "overlay prediction");
  require_same_shape(image, gt, "overlay ground truth");
  const auto pb = boundary_of(pred), gb = boundary_of(gt);
  data::RgbImage out(image.width(), image.height());
  for (std::size_t i = 0; i < image.size(); ++i) {
    if (pb[i] && gb[i]) out[i] = kSharedColour;
    else if (pb[i]) out[i] = kPredictionColour;
    else if (gb[i]) out[i] = kGroundTruthColour;
    else out[i] = {image[i], image[i], image[i]};
  }
  return out;
}

std::vector<std::filesystem::path> render_overlays(const std::map<std::string, GrayImage>& images,
                                                   const std::map<std::string, BinaryMask>& preds,
                                                   const std::map<std::string, BinaryMask>& gts,
                                                   const std::filesystem::path& out_dir) {
  std::string problems;
  for (const auto& [id, img] : images) {
    if (!preds.count(id)) problems += " no prediction for " + id + ";";
    if (!gts.count(id)) problems += " no ground truth for " + id + ";";
  }
  for (const auto& [id, m] : preds)
    if (!images.count(id)) problems += " no image for prediction " + id + ";";
  for (const auto& [id, m] : gts)
    if (!images.count(id)) problems += " no image for ground truth " + id + ";";
  if (!problems.empty()) raise(ErrorKind::Pairing, "overlay inputs are misaligned:" + problems);

  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) raise(ErrorKind::Io, "cannot create " + out_dir.string() + ": " + ec.message());
  std::vector<std::filesystem::path> paths;
  for (const auto& [id, img] : images) {
    const auto& pred = preds.at(id);
    const auto& gt = gts.at(id);
    if (pred.width() != img.width() || pred.height() != img.height() || gt.width() != img.width() ||
        gt.height() != img.height())
      raise(ErrorKind::Pairing, "overlay inputs for " + id + " differ in size");
    paths.push_back(out_dir / (id + ".png"));
    data::save_rgb_image(overlay_image(img, pred, gt), paths.back());
  }
  return paths;
}

}  // namespace sinusseg::cli
