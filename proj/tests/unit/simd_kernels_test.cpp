#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <vector>

#include "sinusseg/simd/kernels.hpp"

namespace sinusseg::simd {
namespace {

std::vector<float> random_floats(std::size_t n, std::mt19937& rng) {
  std::uniform_real_distribution<float> dist(-1.0f, 1.0f);
  std::vector<float> v(n);
  for (auto& x : v) x = dist(rng);
  return v;
}

class SimdEquivalence : public ::testing::Test {
 protected:
  void SetUp() override {
    if (!isa_supported(Isa::Avx2)) GTEST_SKIP() << "AVX2 not available on this host";
  }
  const KernelTable& ref = kernels_for(Isa::Scalar);
  const KernelTable& vec = kernels_for(Isa::Avx2);
};

// Dot-product style bound: |error| <= tol * sum_k |a_ik| |b_kj|.
void expect_gemm_close(const std::vector<float>& got, const std::vector<float>& want, const std::vector<float>& bound) {
  ASSERT_EQ(got.size(), want.size());
  for (std::size_t i = 0; i < got.size(); ++i) {
    ASSERT_NEAR(got[i], want[i], 1e-5 * bound[i] + 1e-6) << "index " << i;
  }
}

TEST_F(SimdEquivalence, GemmNnMatchesScalarOnRaggedShapes) {
  std::mt19937 rng(11);
  const int shapes[][3] = {{1, 1, 1}, {3, 7, 5}, {4, 24, 8}, {5, 31, 130}, {17, 100, 9}, {16, 517, 257}, {2, 8, 0}};
  for (const auto& s : shapes) {
    const int m = s[0], n = s[1], k = s[2];
    for (bool accumulate : {false, true}) {
      auto a = random_floats(static_cast<std::size_t>(m) * (k + 3), rng);  // lda = k + 3
      auto b = random_floats(static_cast<std::size_t>(k) * (n + 2), rng);  // ldb = n + 2
      auto c0 = random_floats(static_cast<std::size_t>(m) * n, rng);
      auto c_ref = c0, c_vec = c0;
      ref.gemm_nn(m, n, k, a.data(), k + 3, b.data(), n + 2, c_ref.data(), n, accumulate);
      vec.gemm_nn(m, n, k, a.data(), k + 3, b.data(), n + 2, c_vec.data(), n, accumulate);
      std::vector<float> bound(c0.size(), 1.0f);
      for (int i = 0; i < m; ++i)
        for (int j = 0; j < n; ++j) {
          float acc = accumulate ? std::abs(c0[i * n + j]) : 0.0f;
          for (int p = 0; p < k; ++p) acc += std::abs(a[i * (k + 3) + p] * b[p * (n + 2) + j]);
          bound[i * n + j] = acc;
        }
      expect_gemm_close(c_vec, c_ref, bound);
    }
  }
}

TEST_F(SimdEquivalence, GemmNtMatchesScalarOnRaggedShapes) {
  std::mt19937 rng(12);
  const int shapes[][3] = {{1, 1, 1}, {2, 4, 8}, {3, 5, 7}, {16, 144, 4099}, {9, 3, 33}};
  for (const auto& s : shapes) {
    const int m = s[0], n = s[1], k = s[2];
    for (bool accumulate : {false, true}) {
      auto a = random_floats(static_cast<std::size_t>(m) * k, rng);
      auto b = random_floats(static_cast<std::size_t>(n) * k, rng);
      auto c0 = random_floats(static_cast<std::size_t>(m) * n, rng);
      auto c_ref = c0, c_vec = c0;
      ref.gemm_nt(m, n, k, a.data(), k, b.data(), k, c_ref.data(), n, accumulate);
      vec.gemm_nt(m, n, k, a.data(), k, b.data(), k, c_vec.data(), n, accumulate);
      std::vector<float> bound(c0.size());
      for (int i = 0; i < m; ++i)
        for (int j = 0; j < n; ++j) {
          float acc = accumulate ? std::abs(c0[i * n + j]) : 0.0f;
          for (int p = 0; p < k; ++p) acc += std::abs(a[i * k + p] * b[j * k + p]);
          bound[i * n + j] = acc;
        }
      expect_gemm_close(c_vec, c_ref, bound);
    }
  }
}

TEST_F(SimdEquivalence, AdamWIsBitExact) {
  std::mt19937 rng(13);
  const std::size_t n = 1003;
  auto param = random_floats(n, rng);
  auto grad = random_floats(n, rng);
  std::vector<float> m(n, 0.0f), v(n, 0.0f);
  auto p_ref = param, p_vec = param, m_ref = m, m_vec = m, v_ref = v, v_vec = v;
  for (int t = 1; t <= 5; ++t) {
    const AdamWParams hp{1e-3f, 0.9f, 0.999f, 1e-8f, 1e-2f, static_cast<float>(1.0 - std::pow(0.9, t)),
                         static_cast<float>(1.0 - std::pow(0.999, t))};
    ref.adamw_step(n, p_ref.data(), grad.data(), m_ref.data(), v_ref.data(), hp);
    vec.adamw_step(n, p_vec.data(), grad.data(), m_vec.data(), v_vec.data(), hp);
  }
  EXPECT_EQ(p_ref, p_vec);
  EXPECT_EQ(m_ref, m_vec);
  EXPECT_EQ(v_ref, v_vec);
}

TEST_F(SimdEquivalence, MinSquaredDistancesAreExact) {
  std::mt19937 rng(14);
  std::uniform_int_distribution<int> coord(0, 511);
  for (std::size_t nr : {1u, 7u, 8u, 9u, 300u}) {
    std::vector<std::int32_t> qr(97), qc(97), rr(nr), rc(nr);
    for (auto* v : {&qr, &qc, &rr, &rc})
      for (auto& x : *v) x = coord(rng);
    std::vector<std::int32_t> out_ref(97), out_vec(97);
    ref.min_sq_distances(qr.data(), qc.data(), qr.size(), rr.data(), rc.data(), nr, out_ref.data());
    vec.min_sq_distances(qr.data(), qc.data(), qr.size(), rr.data(), rc.data(), nr, out_vec.data());
    EXPECT_EQ(out_ref, out_vec) << "ref_count " << nr;
  }
}

TEST_F(SimdEquivalence, ConfusionCountsAreExact) {
  std::mt19937 rng(15);
  std::bernoulli_distribution coin(0.4);
  for (std::size_t n : {0u, 1u, 31u, 32u, 33u, 4097u}) {
    std::vector<std::uint8_t> p(n), g(n);
    for (std::size_t i = 0; i < n; ++i) {
      p[i] = coin(rng) ? 1 : 0;
      g[i] = coin(rng) ? 1 : 0;
    }
    const auto a = ref.confusion(p.data(), g.data(), n);
    const auto b = vec.confusion(p.data(), g.data(), n);
    EXPECT_EQ(a.tp, b.tp);
    EXPECT_EQ(a.fp, b.fp);
    EXPECT_EQ(a.fn, b.fn);
  }
}

TEST(SimdDispatch, ScalarAlwaysAvailable) {
  EXPECT_TRUE(isa_supported(Isa::Scalar));
  EXPECT_EQ(kernels_for(Isa::Scalar).isa, Isa::Scalar);
  // The selected table is one of the two known variants.
  const Isa active = kernels().isa;
  EXPECT_TRUE(active == Isa::Scalar || active == Isa::Avx2);
}

TEST(SimdReference, GemmNnSmallKnownProduct) {
  const float a[] = {1, 2, 3, 4, 5, 6};        // 2x3
  const float b[] = {7, 8, 9, 10, 11, 12};     // 3x2
  float c[4] = {};
  kernels_for(Isa::Scalar).gemm_nn(2, 2, 3, a, 3, b, 2, c, 2, false);
  EXPECT_FLOAT_EQ(c[0], 58);
  EXPECT_FLOAT_EQ(c[1], 64);
  EXPECT_FLOAT_EQ(c[2], 139);
  EXPECT_FLOAT_EQ(c[3], 154);
}

}  // namespace
}  // namespace sinusseg::simd
