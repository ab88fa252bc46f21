#include <gtest/gtest.h>

#include <cmath>
#include <functional>
#include <random>

#include "sinusseg/core/error.hpp"
#include "sinusseg/losses/losses.hpp"

namespace sinusseg::losses {
namespace {

constexpr double kTol = 1e-5;
const double kLn2 = std::log(2.0);

using Vec = std::vector<double>;

// Naive two-class KL with explicit softmax probabilities.
double naive_kl(double zt, double zs, double t) {
  auto softmax_fg = [](double z) { return std::exp(z) / (1.0 + std::exp(z)); };
  const double pt = softmax_fg(zt / t), ps = softmax_fg(zs / t);
  return pt * std::log(pt / ps) + (1 - pt) * std::log((1 - pt) / (1 - ps));
}

Vec central_difference(const std::function<double(const Vec&)>& f, Vec x, double h = 1e-4) {
  Vec g(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double keep = x[i];
    x[i] = keep + h;
    const double up = f(x);
    x[i] = keep - h;
    const double down = f(x);
    x[i] = keep;
    g[i] = (up - down) / (2 * h);
  }
  return g;
}

double relative_error(const Vec& a, const Vec& b) {
  double diff = 0, na = 0, nb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    diff += (a[i] - b[i]) * (a[i] - b[i]);
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  const double scale = std::max(std::sqrt(na), std::sqrt(nb));
  return scale == 0 ? 0 : std::sqrt(diff) / scale;
}

Vec uniform(std::mt19937_64& rng, std::size_t n, double lo, double hi) {
  std::uniform_real_distribution<double> u(lo, hi);
  Vec v(n);
  for (auto& x : v) x = u(rng);
  return v;
}

Vec binary(std::mt19937_64& rng, std::size_t n) {
  std::bernoulli_distribution coin(0.5);
  Vec v(n);
  for (auto& x : v) x = coin(rng) ? 1.0 : 0.0;
  return v;
}

TEST(LossParams, Defaults) {
  const LossParams p;
  EXPECT_EQ(p.alpha, 0.5);
  EXPECT_EQ(p.beta, 1e-6);
  EXPECT_EQ(p.lambda_cycle, 10.0);
  EXPECT_EQ(p.temperature, 2.0);
  EXPECT_EQ(p.threshold, 0.5);
  EXPECT_EQ(p.dice_eps, 1e-6);
  EXPECT_NEAR(p.tau_for(128, 128), std::hypot(128.0, 128.0) / 20, 1e-12);
  EXPECT_NO_THROW(p.validate());
  LossParams bad;
  bad.temperature = 1.0;
  EXPECT_THROW(bad.validate(), Error);
}

TEST(Bce, ClosedForms) {
  EXPECT_NEAR(bce_loss(Vec{0, 0, 0}, Vec{1, 0, 1}), kLn2, kTol);
  EXPECT_NEAR(bce_loss(Vec{2}, Vec{1}), std::log(1 + std::exp(-2.0)), kTol);
  EXPECT_NEAR(bce_loss(Vec{100}, Vec{1}), 0.0, 1e-12);
  EXPECT_TRUE(std::isfinite(bce_loss(Vec{-100, 100}, Vec{1, 0})));
  EXPECT_THROW(bce_loss(Vec{0, 0}, Vec{0}), Error);
}

TEST(Dice, ClosedForms) {
  EXPECT_NEAR(dice_loss(Vec{0.5, 0.5, 0.5, 0.5}, Vec{1, 1, 0, 0}, 1), 1.0 / 3.0, kTol);
  EXPECT_NEAR(dice_loss(Vec{1, 0, 1, 0}, Vec{1, 0, 1, 0}, 1), 0.0, 1e-6);
  EXPECT_NEAR(dice_loss(Vec{0, 0, 0, 0}, Vec{1, 0, 1, 0}, 1), 1.0, 1e-6);
  // Batch of two: mean of per-sample losses.
  EXPECT_NEAR(dice_loss(Vec{1, 0, 0, 0}, Vec{1, 0, 1, 0}, 2), 0.5, 1e-6);
}

TEST(Dice, ZeroOnlyForExactBinaryMatch) {
  std::mt19937_64 rng(1);
  for (int trial = 0; trial < 20; ++trial) {
    const auto y = binary(rng, 9);
    auto p = y;
    EXPECT_LT(dice_loss(p, y, 1), 1e-6);
    p[trial % 9] = 1 - p[trial % 9];
    EXPECT_GT(dice_loss(p, y, 1), 0.05);
  }
}

TEST(Supervised, ClosedFormAndComposition) {
  EXPECT_NEAR(supervised_loss(Vec{0, 0, 0, 0}, Vec{1, 1, 0, 0}, 1), 1.0 / 3.0 + kLn2, kTol);
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 10; ++trial) {
    const auto z = uniform(rng, 16, -4, 4);
    const auto y = binary(rng, 16);
    Vec p(z.size());
    for (std::size_t i = 0; i < z.size(); ++i) p[i] = 1 / (1 + std::exp(-z[i]));
    EXPECT_NEAR(supervised_loss(z, y, 2), dice_loss(p, y, 2) + bce_loss(z, y), 1e-12);
  }
}

TEST(Soften, ClosedForms) {
  auto [bg0, fg0] = soften(0.0, 2.0);
  EXPECT_NEAR(bg0, 0.5, kTol);
  EXPECT_NEAR(fg0, 0.5, kTol);
  auto [bg1, fg1] = soften(2.0, 2.0);
  EXPECT_NEAR(bg1, 0.26894, kTol);
  EXPECT_NEAR(fg1, 0.73106, kTol);
  auto [bg2, fg2] = soften(4.0, 2.0);
  EXPECT_NEAR(bg2, 0.11920, kTol);
  EXPECT_NEAR(fg2, 0.88080, kTol);
  LogitMap z(3, 1);
  z[0] = -50;
  z[1] = 0.3;
  z[2] = 50;
  const auto soft = soften(z, 2.0);
  for (const auto& [b, f] : soft.values()) {
    EXPECT_NEAR(b + f, 1.0, 1e-6);
    EXPECT_GE(b, 0.0);
    EXPECT_GE(f, 0.0);
  }
}

TEST(KdWeights, ClosedForms) {
  const double tau = 7.5;
  for (double w : kd_weights(Vec{3, 3, 3}, tau)) EXPECT_EQ(w, 1.0);
  auto w = kd_weights(Vec{0, tau}, tau);
  EXPECT_NEAR(w[0], 1.0, kTol);
  EXPECT_NEAR(w[1], std::exp(-1.0), kTol);
  w = kd_weights(Vec{tau, 3 * tau}, tau);
  EXPECT_NEAR(w[0], 1.0, kTol);
  EXPECT_NEAR(w[1], std::exp(-2.0), kTol);
  EXPECT_THROW(kd_weights(Vec{}, tau), Error);
}

TEST(KdWeights, ShiftInvariantAndBounded) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    const auto h = uniform(rng, 6, 0, 40);
    auto shifted = h;
    for (auto& v : shifted) v += 13.25;
    const auto a = kd_weights(h, 9.0), b = kd_weights(shifted, 9.0);
    double top = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
      EXPECT_NEAR(a[i], b[i], 1e-12);
      EXPECT_GT(a[i], 0.0);
      EXPECT_LE(a[i], 1.0);
      top = std::max(top, a[i]);
    }
    EXPECT_EQ(top, 1.0);
  }
}

TEST(WeightedKd, ClosedForms) {
  EXPECT_NEAR(weighted_kd_loss(Vec{1.5, -2}, Vec{1.5, -2}, Vec{1}, 2.0), 0.0, 1e-15);
  // KL((0.26894, 0.73106) || (0.5, 0.5)) = 0.1109441; T^2 * KL = 0.4437763.
  const double oracle = 4 * naive_kl(2.0, 0.0, 2.0);
  EXPECT_NEAR(oracle, 0.4437763, 1e-6);
  EXPECT_NEAR(weighted_kd_loss(Vec{2}, Vec{0}, Vec{1}, 2.0), oracle, kTol);
  // Linear in the weights.
  const Vec t{1, -1, 3, 0.5}, s{0, 2, -1, 0.5};
  EXPECT_NEAR(weighted_kd_loss(t, s, Vec{0.6, 0.2}, 2.0), 0.5 * weighted_kd_loss(t, s, Vec{1.2, 0.4}, 2.0), 1e-15);
}

TEST(WeightedKd, AllOnesEqualsUnweightedKd) {
  std::mt19937_64 rng(4);
  const auto t = uniform(rng, 24, -5, 5), s = uniform(rng, 24, -5, 5);
  const double temp = 2.0;
  double expected = 0;
  for (std::size_t b = 0; b < 3; ++b) {
    double kl = 0;
    for (std::size_t i = 0; i < 8; ++i) kl += naive_kl(t[b * 8 + i], s[b * 8 + i], temp);
    expected += kl / 8;
  }
  expected *= temp * temp / 3;
  EXPECT_NEAR(weighted_kd_loss(t, s, Vec{1, 1, 1}, temp), expected, 1e-12);
}

TEST(WeightedKd, BatchMismatchIsShapeError) {
  EXPECT_THROW(weighted_kd_loss(Vec{1, 2, 3}, Vec{1, 2, 3}, Vec{1, 1}, 2.0), Error);
  EXPECT_THROW(weighted_kd_loss(Vec{1, 2}, Vec{1, 2, 3, 4}, Vec{1, 1}, 2.0), Error);
}

TEST(Unsup, ClosedFormsAndMasking) {
  EXPECT_EQ(unsup_loss(Vec{0.3, -2}, Vec{0, 0}), 0.0);
  EXPECT_NEAR(unsup_loss(Vec{0, 5, -5}, Vec{1, 0, 0}), kLn2, kTol);
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 10; ++trial) {
    auto z = uniform(rng, 9, -3, 3);
    const auto y = binary(rng, 9);
    const double before = unsup_loss(z, y);
    for (std::size_t i = 0; i < z.size(); ++i)
      if (y[i] == 0) z[i] += uniform(rng, 1, -50, 50)[0];
    EXPECT_EQ(unsup_loss(z, y), before);
  }
}

TEST(TotalLoss, ClosedForms) {
  const LossParams p;
  EXPECT_NEAR(total_loss(1.0, 0.5, 0.2, p), 0.6000005, kTol);
  LossParams only_sup;
  only_sup.alpha = 1.0;
  EXPECT_DOUBLE_EQ(total_loss(2.0, 3.0, 100.0, only_sup), 2.0 + 3e-6);
}

TEST(Lsgan, ClosedForms) {
  EXPECT_NEAR(lsgan_discriminator_loss(Vec{1, 1}, Vec{0, 0}), 0.0, kTol);
  EXPECT_NEAR(lsgan_discriminator_loss(Vec{0.5, 0.5}, Vec{0.5, 0.5}), 0.5, kTol);
  EXPECT_NEAR(lsgan_generator_loss(Vec{1, 1, 1}), 0.0, kTol);
}

TEST(Cycle, ClosedForms) {
  const Vec a{0, 1, 1, 0}, b{1, 1, 0, 0};
  EXPECT_EQ(cycle_loss(a, a, b, b), 0.0);
  EXPECT_NEAR(cycle_loss(Vec{1, 1, 1, 0}, a, b, b), 0.25, kTol);
  EXPECT_EQ(cycle_loss(Vec{0.2, 0.9, 0.4, 0.1}, a, Vec{0.7, 0.3, 0.6, 0.5}, b),
            cycle_loss(Vec{0.7, 0.3, 0.6, 0.5}, b, Vec{0.2, 0.9, 0.4, 0.1}, a));
}

TEST(Correction, ClosedFormsAndComposition) {
  EXPECT_NEAR(correction_loss(Vec{0, 0}, Vec{1, 0}, Vec{0, 0}, Vec{0, 1}), 2 * kLn2, kTol);
  EXPECT_NEAR(correction_loss(Vec{60, -60}, Vec{1, 0}, Vec{-60, 60}, Vec{0, 1}), 0.0, 1e-12);
  std::mt19937_64 rng(6);
  for (int trial = 0; trial < 10; ++trial) {
    const auto ab = uniform(rng, 9, -4, 4), ba = uniform(rng, 9, -4, 4);
    const auto tb = binary(rng, 9), ta = binary(rng, 9);
    EXPECT_DOUBLE_EQ(correction_loss(ab, tb, ba, ta), bce_loss(ab, tb) + bce_loss(ba, ta));
  }
}

TEST(RefinerTotal, ClosedForms) {
  EXPECT_EQ(refiner_total_loss(0, 0, 0, 0, 10), 0.0);
  EXPECT_NEAR(refiner_total_loss(0.5, 0.5, 0.1, 0.2, LossParams{}.lambda_cycle), 2.2, kTol);
}

TEST(LossProperties, FiniteAndNonNegativeForLargeLogits) {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 20; ++trial) {
    const auto z = uniform(rng, 9, -100, 100), t = uniform(rng, 9, -100, 100);
    const auto y = binary(rng, 9);
    for (double v : {bce_loss(z, y), supervised_loss(z, y, 1), unsup_loss(z, y),
                     weighted_kd_loss(t, z, Vec{1}, 2.0), correction_loss(z, y, t, y)}) {
      EXPECT_TRUE(std::isfinite(v));
      EXPECT_GE(v, 0.0);
    }
  }
}

// Analytic vs central-difference gradients on 3x3 inputs.
class GradientCheck : public ::testing::Test {
 protected:
  std::mt19937_64 rng{11};
  void expect_close(const Vec& analytic, const Vec& numeric) { EXPECT_LT(relative_error(analytic, numeric), 1e-3); }
};

TEST_F(GradientCheck, Bce) {
  for (int trial = 0; trial < 5; ++trial) {
    const auto z = uniform(rng, 9, -3, 3), y = binary(rng, 9);
    expect_close(bce_loss_grad(z, y).grad, central_difference([&](const Vec& x) { return bce_loss(x, y); }, z));
  }
}

TEST_F(GradientCheck, Dice) {
  for (int trial = 0; trial < 5; ++trial) {
    const auto p = uniform(rng, 9, 0.05, 0.95), y = binary(rng, 9);
    expect_close(dice_loss_grad(p, y, 1).grad, central_difference([&](const Vec& x) { return dice_loss(x, y, 1); }, p));
  }
}

TEST_F(GradientCheck, Supervised) {
  for (int trial = 0; trial < 5; ++trial) {
    const auto z = uniform(rng, 9, -3, 3), y = binary(rng, 9);
    expect_close(supervised_loss_grad(z, y, 1).grad,
                 central_difference([&](const Vec& x) { return supervised_loss(x, y, 1); }, z));
  }
}

TEST_F(GradientCheck, WeightedKd) {
  for (int trial = 0; trial < 5; ++trial) {
    const auto t = uniform(rng, 9, -3, 3), s = uniform(rng, 9, -3, 3);
    const Vec w{uniform(rng, 1, 0.1, 1)[0]};
    expect_close(weighted_kd_loss_grad(t, s, w, 2.0).grad,
                 central_difference([&](const Vec& x) { return weighted_kd_loss(t, x, w, 2.0); }, s));
  }
}

TEST_F(GradientCheck, Unsup) {
  for (int trial = 0; trial < 5; ++trial) {
    const auto z = uniform(rng, 9, -3, 3);
    auto y = binary(rng, 9);
    y[0] = 1;
    expect_close(unsup_loss_grad(z, y).grad, central_difference([&](const Vec& x) { return unsup_loss(x, y); }, z));
  }
}

TEST_F(GradientCheck, Cycle) {
  for (int trial = 0; trial < 5; ++trial) {
    const auto ra = uniform(rng, 9, 0.01, 0.99), rb = uniform(rng, 9, 0.01, 0.99);
    const auto oa = binary(rng, 9), ob = binary(rng, 9);
    const auto g = cycle_loss_grad(ra, oa, rb, ob);
    expect_close(g.grad_a, central_difference([&](const Vec& x) { return cycle_loss(x, oa, rb, ob); }, ra));
    expect_close(g.grad_b, central_difference([&](const Vec& x) { return cycle_loss(ra, oa, x, ob); }, rb));
  }
}

TEST_F(GradientCheck, Lsgan) {
  const auto real = uniform(rng, 9, -1, 2), fake = uniform(rng, 9, -1, 2);
  const auto d = lsgan_discriminator_loss_grad(real, fake);
  expect_close(d.grad_real, central_difference([&](const Vec& x) { return lsgan_discriminator_loss(x, fake); }, real));
  expect_close(d.grad_fake, central_difference([&](const Vec& x) { return lsgan_discriminator_loss(real, x); }, fake));
  expect_close(lsgan_generator_loss_grad(fake).grad,
               central_difference([&](const Vec& x) { return lsgan_generator_loss(x); }, fake));
}

}  // namespace
}  // namespace sinusseg::losses
