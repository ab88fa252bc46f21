// Compiled with -mavx2 -mfma -mpopcnt; only reached after a CPUID check.

#include <immintrin.h>

#include <algorithm>
#include <cmath>
#include <limits>

#include "sinusseg/simd/kernels.hpp"

namespace sinusseg::simd {
namespace {

constexpr int kBlockK = 128;
constexpr int kBlockN = 512;

inline float hsum(__m256 v) {
  __m128 lo = _mm_add_ps(_mm256_castps256_ps128(v), _mm256_extractf128_ps(v, 1));
  __m128 sh = _mm_movehdup_ps(lo);
  __m128 s = _mm_add_ps(lo, sh);
  sh = _mm_movehl_ps(sh, s);
  s = _mm_add_ss(s, sh);
  return _mm_cvtss_f32(s);
}

// R rows of C against a kb x nb panel of B.
template <int R>
void nn_rows(int kb, int nb, const float* a, int lda, const float* b, int ldb, float* c, int ldc, bool accumulate) {
  int j = 0;
  for (; j + 24 <= nb; j += 24) {
    __m256 acc[R][3];
    for (int r = 0; r < R; ++r) {
      for (int v = 0; v < 3; ++v) {
        acc[r][v] = accumulate ? _mm256_loadu_ps(c + static_cast<std::size_t>(r) * ldc + j + 8 * v)
                               : _mm256_setzero_ps();
      }
    }
    const float* bp = b + j;
    for (int p = 0; p < kb; ++p, bp += ldb) {
      const __m256 b0 = _mm256_loadu_ps(bp);
      const __m256 b1 = _mm256_loadu_ps(bp + 8);
      const __m256 b2 = _mm256_loadu_ps(bp + 16);
      for (int r = 0; r < R; ++r) {
        const __m256 av = _mm256_broadcast_ss(a + static_cast<std::size_t>(r) * lda + p);
        acc[r][0] = _mm256_fmadd_ps(av, b0, acc[r][0]);
        acc[r][1] = _mm256_fmadd_ps(av, b1, acc[r][1]);
        acc[r][2] = _mm256_fmadd_ps(av, b2, acc[r][2]);
      }
    }
    for (int r = 0; r < R; ++r) {
      for (int v = 0; v < 3; ++v) _mm256_storeu_ps(c + static_cast<std::size_t>(r) * ldc + j + 8 * v, acc[r][v]);
    }
  }
  for (; j + 8 <= nb; j += 8) {
    __m256 acc[R];
    for (int r = 0; r < R; ++r) {
      acc[r] = accumulate ? _mm256_loadu_ps(c + static_cast<std::size_t>(r) * ldc + j) : _mm256_setzero_ps();
    }
    const float* bp = b + j;
    for (int p = 0; p < kb; ++p, bp += ldb) {
      const __m256 bv = _mm256_loadu_ps(bp);
      for (int r = 0; r < R; ++r) {
        acc[r] = _mm256_fmadd_ps(_mm256_broadcast_ss(a + static_cast<std::size_t>(r) * lda + p), bv, acc[r]);
      }
    }
    for (int r = 0; r < R; ++r) _mm256_storeu_ps(c + static_cast<std::size_t>(r) * ldc + j, acc[r]);
  }
  for (; j < nb; ++j) {
    for (int r = 0; r < R; ++r) {
      float acc = accumulate ? c[static_cast<std::size_t>(r) * ldc + j] : 0.0f;
      for (int p = 0; p < kb; ++p) acc += a[static_cast<std::size_t>(r) * lda + p] * b[static_cast<std::size_t>(p) * ldb + j];
      c[static_cast<std::size_t>(r) * ldc + j] = acc;
    }
  }
}

void gemm_nn(int m, int n, int k, const float* a, int lda, const float* b, int ldb, float* c, int ldc,
             bool accumulate) {
  if (k == 0) {
    if (!accumulate) {
      for (int i = 0; i < m; ++i) std::fill(c + static_cast<std::size_t>(i) * ldc, c + static_cast<std::size_t>(i) * ldc + n, 0.0f);
    }
    return;
  }
  for (int j0 = 0; j0 < n; j0 += kBlockN) {
    const int nb = std::min(kBlockN, n - j0);
    for (int p0 = 0; p0 < k; p0 += kBlockK) {
      const int kb = std::min(kBlockK, k - p0);
      const bool acc = accumulate || p0 > 0;
      const float* bpanel = b + static_cast<std::size_t>(p0) * ldb + j0;
      int i = 0;
      for (; i + 4 <= m; i += 4) {
        nn_rows<4>(kb, nb, a + static_cast<std::size_t>(i) * lda + p0, lda, bpanel, ldb,
                   c + static_cast<std::size_t>(i) * ldc + j0, ldc, acc);
      }
      const float* ap = a + static_cast<std::size_t>(i) * lda + p0;
      float* cp = c + static_cast<std::size_t>(i) * ldc + j0;
      switch (m - i) {
        case 3: nn_rows<3>(kb, nb, ap, lda, bpanel, ldb, cp, ldc, acc); break;
        case 2: nn_rows<2>(kb, nb, ap, lda, bpanel, ldb, cp, ldc, acc); break;
        case 1: nn_rows<1>(kb, nb, ap, lda, bpanel, ldb, cp, ldc, acc); break;
        default: break;
      }
    }
  }
}

// RI x RJ block of dot products over contiguous rows of A and B.
template <int RI, int RJ>
void nt_tile(int k, const float* a, int lda, const float* b, int ldb, float* c, int ldc, bool accumulate) {
  __m256 acc[RI][RJ];
  for (int i = 0; i < RI; ++i)
    for (int j = 0; j < RJ; ++j) acc[i][j] = _mm256_setzero_ps();
  int p = 0;
  for (; p + 8 <= k; p += 8) {
    __m256 av[RI];
    for (int i = 0; i < RI; ++i) av[i] = _mm256_loadu_ps(a + static_cast<std::size_t>(i) * lda + p);
    for (int j = 0; j < RJ; ++j) {
      const __m256 bv = _mm256_loadu_ps(b + static_cast<std::size_t>(j) * ldb + p);
      for (int i = 0; i < RI; ++i) acc[i][j] = _mm256_fmadd_ps(av[i], bv, acc[i][j]);
    }
  }
  for (int i = 0; i < RI; ++i) {
    for (int j = 0; j < RJ; ++j) {
      float s = hsum(acc[i][j]);
      for (int q = p; q < k; ++q) s += a[static_cast<std::size_t>(i) * lda + q] * b[static_cast<std::size_t>(j) * ldb + q];
      float& out = c[static_cast<std::size_t>(i) * ldc + j];
      out = accumulate ? out + s : s;
    }
  }
}

template <int RI>
void nt_row_block(int n, int k, const float* a, int lda, const float* b, int ldb, float* c, int ldc, bool accumulate) {
  int j = 0;
  for (; j + 4 <= n; j += 4) nt_tile<RI, 4>(k, a, lda, b + static_cast<std::size_t>(j) * ldb, ldb, c + j, ldc, accumulate);
  for (; j < n; ++j) nt_tile<RI, 1>(k, a, lda, b + static_cast<std::size_t>(j) * ldb, ldb, c + j, ldc, accumulate);
}

void gemm_nt(int m, int n, int k, const float* a, int lda, const float* b, int ldb, float* c, int ldc,
             bool accumulate) {
  int i = 0;
  for (; i + 2 <= m; i += 2) {
    nt_row_block<2>(n, k, a + static_cast<std::size_t>(i) * lda, lda, b, ldb, c + static_cast<std::size_t>(i) * ldc, ldc,
                    accumulate);
  }
  if (i < m) {
    nt_row_block<1>(n, k, a + static_cast<std::size_t>(i) * lda, lda, b, ldb, c + static_cast<std::size_t>(i) * ldc, ldc,
                    accumulate);
  }
}

// Same operation order as the scalar reference and no contraction, so the
// two paths agree bit for bit.
void adamw_step(std::size_t n, float* param, const float* grad, float* m, float* v, const AdamWParams& p) {
  const float decay = 1.0f - p.lr * p.weight_decay;
  const float step = p.lr / p.bias_correction1;
  const float inv_sqrt_bc2 = 1.0f / std::sqrt(p.bias_correction2);
  const __m256 vb1 = _mm256_set1_ps(p.beta1);
  const __m256 vb1c = _mm256_set1_ps(1.0f - p.beta1);
  const __m256 vb2 = _mm256_set1_ps(p.beta2);
  const __m256 vb2c = _mm256_set1_ps(1.0f - p.beta2);
  const __m256 veps = _mm256_set1_ps(p.eps);
  const __m256 vdecay = _mm256_set1_ps(decay);
  const __m256 vstep = _mm256_set1_ps(step);
  const __m256 vbc2 = _mm256_set1_ps(inv_sqrt_bc2);
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    const __m256 g = _mm256_loadu_ps(grad + i);
    const __m256 mv = _mm256_add_ps(_mm256_mul_ps(vb1, _mm256_loadu_ps(m + i)), _mm256_mul_ps(vb1c, g));
    const __m256 vv =
        _mm256_add_ps(_mm256_mul_ps(vb2, _mm256_loadu_ps(v + i)), _mm256_mul_ps(_mm256_mul_ps(vb2c, g), g));
    _mm256_storeu_ps(m + i, mv);
    _mm256_storeu_ps(v + i, vv);
    const __m256 denom = _mm256_add_ps(_mm256_mul_ps(_mm256_sqrt_ps(vv), vbc2), veps);
    const __m256 upd = _mm256_div_ps(_mm256_mul_ps(vstep, mv), denom);
    _mm256_storeu_ps(param + i, _mm256_sub_ps(_mm256_mul_ps(_mm256_loadu_ps(param + i), vdecay), upd));
  }
  for (; i < n; ++i) {
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
    const __m256i vr = _mm256_set1_epi32(qr[i]);
    const __m256i vc = _mm256_set1_epi32(qc[i]);
    __m256i best = _mm256_set1_epi32(std::numeric_limits<std::int32_t>::max());
    std::size_t j = 0;
    for (; j + 8 <= nr; j += 8) {
      const __m256i dr = _mm256_sub_epi32(vr, _mm256_loadu_si256(reinterpret_cast<const __m256i*>(rr + j)));
      const __m256i dc = _mm256_sub_epi32(vc, _mm256_loadu_si256(reinterpret_cast<const __m256i*>(rc + j)));
      const __m256i d = _mm256_add_epi32(_mm256_mullo_epi32(dr, dr), _mm256_mullo_epi32(dc, dc));
      best = _mm256_min_epi32(best, d);
    }
    __m128i m4 = _mm_min_epi32(_mm256_castsi256_si128(best), _mm256_extracti128_si256(best, 1));
    m4 = _mm_min_epi32(m4, _mm_shuffle_epi32(m4, _MM_SHUFFLE(1, 0, 3, 2)));
    m4 = _mm_min_epi32(m4, _mm_shuffle_epi32(m4, _MM_SHUFFLE(2, 3, 0, 1)));
    std::int32_t b = _mm_cvtsi128_si32(m4);
    for (; j < nr; ++j) {
      const std::int32_t dr = qr[i] - rr[j];
      const std::int32_t dc = qc[i] - rc[j];
      b = std::min(b, dr * dr + dc * dc);
    }
    out[i] = b;
  }
}

ConfusionTally confusion(const std::uint8_t* pred, const std::uint8_t* truth, std::size_t n) {
  ConfusionTally t;
  const __m256i zero = _mm256_setzero_si256();
  std::size_t i = 0;
  for (; i + 32 <= n; i += 32) {
    const __m256i p = _mm256_loadu_si256(reinterpret_cast<const __m256i*>(pred + i));
    const __m256i g = _mm256_loadu_si256(reinterpret_cast<const __m256i*>(truth + i));
    const auto pz = static_cast<std::uint32_t>(_mm256_movemask_epi8(_mm256_cmpeq_epi8(p, zero)));
    const auto gz = static_cast<std::uint32_t>(_mm256_movemask_epi8(_mm256_cmpeq_epi8(g, zero)));
    const std::uint32_t pm = ~pz;
    const std::uint32_t gm = ~gz;
    t.tp += static_cast<std::uint64_t>(_mm_popcnt_u32(pm & gm));
    t.fp += static_cast<std::uint64_t>(_mm_popcnt_u32(pm & gz));
    t.fn += static_cast<std::uint64_t>(_mm_popcnt_u32(pz & gm));
  }
  for (; i < n; ++i) {
    const bool p = pred[i] != 0;
    const bool g = truth[i] != 0;
    t.tp += p && g;
    t.fp += p && !g;
    t.fn += !p && g;
  }
  return t;
}

constexpr KernelTable kAvx2{Isa::Avx2, gemm_nn, gemm_nt, adamw_step, min_sq_distances, confusion};

}  // namespace

namespace detail {
const KernelTable* avx2_table() noexcept { return &kAvx2; }
}  // namespace detail

}  // namespace sinusseg::simd
