#include <gtest/gtest.h>

#include <png.h>

#include <cstring>

#include "sinusseg/core/error.hpp"
#include "sinusseg/core/mask_ops.hpp"
#include "sinusseg/data/image_io.hpp"
#include "sinusseg/data/phantom.hpp"
#include "test_util.hpp"

namespace sinusseg::data {
namespace {

TEST(Phantom, SameSeedIsByteIdentical) {
  testing::TempDir a, b;
  const auto ma = generate_phantom_dataset(3, 128, 7, a.path());
  const auto mb = generate_phantom_dataset(3, 128, 7, b.path());
  ASSERT_EQ(ma.records.size(), 3u);
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_EQ(testing::read_bytes(ma.records[i].image_path), testing::read_bytes(mb.records[i].image_path));
    EXPECT_EQ(testing::read_bytes(*ma.records[i].mask_path), testing::read_bytes(*mb.records[i].mask_path));
  }
  EXPECT_EQ(ma.counts.train_labeled, 3u);
}

TEST(Phantom, DifferentSeedsDiffer) {
  EXPECT_NE(make_phantom(64, 1, 0).mask, make_phantom(64, 2, 0).mask);
  EXPECT_NE(make_phantom(64, 1, 0).image, make_phantom(64, 1, 1).image);
}

TEST(Phantom, MasksHaveTwoComponentsAndBoundedArea) {
  for (int size : {64, 128}) {
    for (std::size_t i = 0; i < 100; ++i) {
      const auto s = make_phantom(size, 11, i);
      const auto comps = connected_components(s.mask);
      ASSERT_EQ(comps.count(), 2u) << "size " << size << " sample " << i;
      const double frac = double(foreground_count(s.mask)) / double(s.mask.size());
      EXPECT_GE(frac, 0.02);
      EXPECT_LE(frac, 0.20);
    }
  }
}

TEST(Phantom, CavitiesAreDarkerThanSurroundings) {
  double inside = 0, outside = 0;
  std::size_t ni = 0, no = 0;
  for (std::size_t i = 0; i < 10; ++i) {
    const auto s = make_phantom(128, 3, i);
    for (std::size_t p = 0; p < s.mask.size(); ++p) {
      (s.mask[p] ? inside : outside) += s.image[p];
      (s.mask[p] ? ni : no) += 1;
    }
  }
  EXPECT_LT(inside / ni + 30.0, outside / no);
}

TEST(Phantom, RejectsSmallSizeAndUnwritableDir) {
  EXPECT_THROW(make_phantom(32, 0, 0), Error);
  testing::TempDir dir;
  testing::write_text(dir / "blocker", "x");
  try {
    generate_phantom_dataset(1, 64, 0, dir / "blocker" / "sub");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Io);
  }
}

TEST(MaskPng, RoundTripIsLossless) {
  std::mt19937_64 rng(5);
  testing::TempDir dir;
  const auto m = testing::random_mask(64, 64, 0.3, rng);
  save_mask(m, dir / "m.png");
  EXPECT_EQ(load_mask(dir / "m.png"), m);
  // Stored as {0, 255}.
  const auto raw = load_gray_image(dir / "m.png");
  for (std::size_t i = 0; i < raw.size(); ++i) EXPECT_EQ(raw[i], m[i] ? 255 : 0);
}

TEST(MaskPng, NonzeroValuesAreForeground) {
  testing::TempDir dir;
  GrayImage img(2, 1);
  img[0] = 0;
  img[1] = 128;
  save_gray_image(img, dir / "g.png");
  const auto m = load_mask(dir / "g.png");
  EXPECT_EQ(m[0], 0);
  EXPECT_EQ(m[1], 1);
}

TEST(MaskPng, ThreeChannelIsFormatError) {
  testing::TempDir dir;
  save_rgb_image(RgbImage(4, 4, Rgb{1, 2, 3}), dir / "rgb.png");
  try {
    load_mask(dir / "rgb.png");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Format);
  }
}

TEST(MaskPng, SixteenBitIsFormatError) {
  testing::TempDir dir;
  const auto path = (dir / "deep.png").string();
  png_image img;
  std::memset(&img, 0, sizeof img);
  img.version = PNG_IMAGE_VERSION;
  img.width = 4;
  img.height = 4;
  img.format = PNG_FORMAT_LINEAR_Y;
  std::vector<png_uint_16> px(16, 1000);
  ASSERT_TRUE(png_image_write_to_file(&img, path.c_str(), 0, px.data(), 0, nullptr));
  png_image_free(&img);
  try {
    load_mask(path);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Format);
  }
}

TEST(MaskPng, MissingFileIsIoError) {
  try {
    load_mask("/nonexistent/none.png");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Io);
  }
}

}  // namespace
}  // namespace sinusseg::data
