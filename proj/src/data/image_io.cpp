#include "sinusseg/data/image_io.hpp"

#include <png.h>

#include <cstring>
#include <vector>

#include "sinusseg/core/error.hpp"

namespace sinusseg::data {
namespace {

struct PngReader {
  png_image image{};

  explicit PngReader(const std::filesystem::path& path) {
    std::memset(&image, 0, sizeof image);
    image.version = PNG_IMAGE_VERSION;
    if (!std::filesystem::exists(path)) raise(ErrorKind::Io, "no such file " + path.string());
    if (!png_image_begin_read_from_file(&image, path.string().c_str())) {
      raise(ErrorKind::Format, path.string() + ": " + image.message);
    }
  }
  ~PngReader() { png_image_free(&image); }
  PngReader(const PngReader&) = delete;
  PngReader& operator=(const PngReader&) = delete;
};

GrayImage read_gray8(const std::filesystem::path& path) {
  PngReader reader(path);
  png_image& img = reader.image;
  if ((img.format & PNG_FORMAT_FLAG_COLOR) != 0 || (img.format & PNG_FORMAT_FLAG_COLORMAP) != 0) {
    raise(ErrorKind::Format, path.string() + ": expected a single-channel PNG");
  }
  if ((img.format & PNG_FORMAT_FLAG_ALPHA) != 0) {
    raise(ErrorKind::Format, path.string() + ": expected a single-channel PNG without alpha");
  }
  if ((img.format & PNG_FORMAT_FLAG_LINEAR) != 0) {
    raise(ErrorKind::Format, path.string() + ": expected 8-bit samples, found 16-bit");
  }
  img.format = PNG_FORMAT_GRAY;
  GrayImage out(static_cast<int>(img.width), static_cast<int>(img.height));
  if (!png_image_finish_read(&img, nullptr, out.data(), 0, nullptr)) {
    raise(ErrorKind::Format, path.string() + ": " + img.message);
  }
  return out;
}

void write_png(const std::filesystem::path& path, int width, int height, png_uint_32 format, const void* pixels) {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
    if (ec) raise(ErrorKind::Io, "cannot create " + path.parent_path().string() + ": " + ec.message());
  }
  png_image img{};
  std::memset(&img, 0, sizeof img);
  img.version = PNG_IMAGE_VERSION;
  img.width = static_cast<png_uint_32>(width);
  img.height = static_cast<png_uint_32>(height);
  img.format = format;
  if (!png_image_write_to_file(&img, path.string().c_str(), 0, pixels, 0, nullptr)) {
    const std::string msg = img.message;
    png_image_free(&img);
    raise(ErrorKind::Io, "cannot write " + path.string() + ": " + msg);
  }
  png_image_free(&img);
}

}  // namespace

BinaryMask load_mask(const std::filesystem::path& path) {
  GrayImage raw = read_gray8(path);
  for (auto& v : raw.values()) v = v != 0 ? 1 : 0;
  return raw;
}

void save_mask(const BinaryMask& mask, const std::filesystem::path& path) {
  std::vector<std::uint8_t> bytes(mask.size());
  for (std::size_t i = 0; i < mask.size(); ++i) bytes[i] = mask[i] ? 255 : 0;
  write_png(path, mask.width(), mask.height(), PNG_FORMAT_GRAY, bytes.data());
}

GrayImage load_gray_image(const std::filesystem::path& path) { return read_gray8(path); }

void save_gray_image(const GrayImage& image, const std::filesystem::path& path) {
  write_png(path, image.width(), image.height(), PNG_FORMAT_GRAY, image.data());
}

void save_rgb_image(const RgbImage& image, const std::filesystem::path& path) {
  static_assert(sizeof(Rgb) == 3);
  write_png(path, image.width(), image.height(), PNG_FORMAT_RGB, image.data());
}

std::pair<int, int> png_dimensions(const std::filesystem::path& path) {
  PngReader reader(path);
  return {static_cast<int>(reader.image.width), static_cast<int>(reader.image.height)};
}

}  // namespace sinusseg::data
