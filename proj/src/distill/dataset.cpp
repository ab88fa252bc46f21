#include "sinusseg/distill/dataset.hpp"

#include "sinusseg/core/error.hpp"
#include "sinusseg/data/image_io.hpp"

namespace sinusseg::distill {

Dataset load_dataset(const data::SplitManifest& manifest, const std::filesystem::path& root, int size) {
  manifest.validate();
  auto resolve = [&](const std::filesystem::path& p) { return p.is_absolute() ? p : root / p; };
  std::vector<std::string> missing;
  for (const auto& r : manifest.records) {
    if (!std::filesystem::exists(resolve(r.image_path)) ||
        (r.mask_path && !std::filesystem::exists(resolve(*r.mask_path))))
      missing.push_back(r.image_id);
  }
  if (!missing.empty()) {
    std::string list;
    for (std::size_t i = 0; i < missing.size() && i < 20; ++i) list += (i ? ", " : "") + missing[i];
    if (missing.size() > 20) list += ", ... (" + std::to_string(missing.size()) + " total)";
    raise(ErrorKind::Io, "missing image or mask files for: " + list);
  }

  Dataset d;
  for (const auto& r : manifest.records) {
    Sample s{r.image_id, resize_nearest(data::load_gray_image(resolve(r.image_path)), size, size), std::nullopt};
    if (r.mask_path) s.mask = resize_nearest(data::load_mask(resolve(*r.mask_path)), size, size);
    switch (r.split) {
      case data::Split::Train:
        (r.labeled ? d.labeled : d.unlabeled).push_back(std::move(s));
        break;
      case data::Split::Val:
        d.val.push_back(std::move(s));
        break;
      case data::Split::Test:
        d.test.push_back(std::move(s));
        break;
    }
  }
  return d;
}

}  // namespace sinusseg::distill
