#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <random>

#include "sinusseg/core/mask_ops.hpp"
#include "test_util.hpp"

namespace sinusseg {
namespace {

Grid<double> brute_sq_distance(const BinaryMask& sites) {
  Grid<double> out(sites.width(), sites.height(), std::numeric_limits<double>::infinity());
  for (int r = 0; r < sites.height(); ++r)
    for (int c = 0; c < sites.width(); ++c)
      for (int sr = 0; sr < sites.height(); ++sr)
        for (int sc = 0; sc < sites.width(); ++sc)
          if (sites.at(sr, sc)) {
            const double d = double(r - sr) * (r - sr) + double(c - sc) * (c - sc);
            out.at(r, c) = std::min(out.at(r, c), d);
          }
  return out;
}

TEST(MaskOps, DistanceTransformMatchesBruteForce) {
  std::mt19937_64 rng(1);
  for (int trial = 0; trial < 20; ++trial) {
    const auto m = testing::random_mask(13 + trial, 9 + trial % 5, 0.05, rng);
    EXPECT_EQ(squared_distance_to(m), brute_sq_distance(m)) << "trial " << trial;
  }
}

TEST(MaskOps, DistanceWithoutSitesIsInfinite) {
  const auto d = squared_distance_to(BinaryMask(5, 4));
  for (double v : d.values()) EXPECT_TRUE(std::isinf(v));
}

TEST(MaskOps, DilateErodeSingleDisc) {
  BinaryMask dot(11, 11);
  dot.at(5, 5) = 1;
  const auto disc = dilate(dot, 2.0);
  EXPECT_EQ(foreground_count(disc), 13u);  // lattice points with d^2 <= 4
  EXPECT_EQ(erode(disc, 1.0), dilate(dot, 1.0));  // the 4-neighbour rim is removed
}

TEST(MaskOps, ErodeTreatsBorderAsBackground) {
  BinaryMask full(5, 5, 1);
  const auto e = erode(full, 1.0);
  EXPECT_EQ(foreground_count(e), 9u);
}

TEST(MaskOps, BoundaryOfSquare) {
  BinaryMask sq(6, 6);
  for (int r = 1; r < 5; ++r)
    for (int c = 1; c < 5; ++c) sq.at(r, c) = 1;
  EXPECT_EQ(foreground_count(boundary_of(sq)), 12u);
}

TEST(MaskOps, ComponentsUseEightConnectivity) {
  BinaryMask m(5, 5);
  m.at(0, 0) = m.at(1, 1) = 1;  // diagonal neighbours join
  m.at(4, 4) = 1;
  const auto comps = connected_components(m);
  ASSERT_EQ(comps.count(), 2u);
  EXPECT_EQ(comps.sizes[0], 2u);
  EXPECT_EQ(comps.sizes[1], 1u);
  EXPECT_EQ(isolated_pixel_count(m), 1u);
}

TEST(MaskOps, UnionRequiresSameShape) {
  EXPECT_THROW(mask_union(BinaryMask(2, 2), BinaryMask(3, 2)), std::exception);
}

}  // namespace
}  // namespace sinusseg
