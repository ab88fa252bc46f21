#include <algorithm>
#include <cmath>
#include <limits>

#include "sinusseg/simd/kernels.hpp"

namespace sinusseg::simd {
namespace {

void gemm_nn(int m, int n, int k, const float* a, int lda, const float* b, int ldb, float* c, int ldc,
             bool accumulate) {
  for (int i = 0; i < m; ++i) {
    float* crow = c + static_cast<std::size_t>(i) * ldc;
    if (!accumulate) std::fill(crow, crow + n, 0.0f);
    const float* arow = a + static_cast<std::size_t>(i) * lda;
    for (int p = 0; p < k; ++p) {
      const float av = arow[p];
      const float* brow = b + static_cast<std::size_t>(p) * ldb;
      for (int j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

void gemm_nt(int m, int n, int k, const float* a, int lda, const float* b, int ldb, float* c, int ldc,
             bool accumulate) {
  for (int i = 0; i < m; ++i) {
    const float* arow = a + static_cast<std::size_t>(i) * lda;
    for (int j = 0; j < n; ++j) {
      const float* brow = b + static_cast<std::size_t>(j) * ldb;
      float acc = 0.0f;
      for (int p = 0; p < k; ++p) acc += arow[p] * brow[p];
      float& out = c[static_cast<std::size_t>(i) * ldc + j];
      out = accumulate ? out + acc : acc;
    }
  }
}

void adamw_step(std::size_t n, float* param, const float* grad, float* m, float* v, const AdamWParams& p) {
  const float decay = 1.0f - p.lr * p.weight_decay;
  const float step = p.lr / p.bias_correction1;
  const float inv_sqrt_bc2 = 1.0f / std::sqrt(p.bias_correction2);
  for (std::size_t i = 0; i < n; ++i) {
    const float g = grad[i];
    m[i] = p.beta1 * m[i] + (1.0f - p.beta1) * g;
    v[i] = p.beta2 * v[i] + (1.0f - p.beta2) * g * g;
    const float denom = std::sqrt(v[i]) * inv_sqrt_bc2 + p.eps;
    param[i] = param[i] * decay - step * m[i] / denom;
  }
}

void min_sq_distances(const std::int32_t* qr, const std::int32_t* qc, std::size_t nq, const std::int32_t* rr,
                      const std::int32_t* rc, std::size_t nr, std::int32_t* out) {
  for (std::size_t i = 0; i < nq; ++i) {
    std::int32_t best = std::numeric_limits<std::int32_t>::max();
    for (std::size_t j = 0; j < nr; ++j) {
      const std::int32_t dr = qr[i] - rr[j];
      const std::int32_t dc = qc[i] - rc[j];
      best = std::min(best, dr * dr + dc * dc);
    }
    out[i] = best;
  }
}

ConfusionTally confusion(const std::uint8_t* pred, const std::uint8_t* truth, std::size_t n) {
  ConfusionTally t;
  for (std::size_t i = 0; i < n; ++i) {
    const bool p = pred[i] != 0;
    const bool g = truth[i] != 0;
    t.tp += p && g;
    t.fp += p && !g;
    t.fn += !p && g;
  }
  return t;
}

constexpr KernelTable kScalar{Isa::Scalar, gemm_nn, gemm_nt, adamw_step, min_sq_distances, confusion};

}  // namespace

namespace detail {
const KernelTable& scalar_table() noexcept { return kScalar; }
}  // namespace detail

}  // namespace sinusseg::simd
