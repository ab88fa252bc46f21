#pragma once

// Data-parallel inner loops. Each kernel has a portable scalar reference
// implementation and an AVX2/FMA variant; the active table is chosen once at
// startup from CPUID, and can be pinned with SINUSSEG_ISA=scalar|avx2.

#include <cstddef>
#include <cstdint>
#include <string_view>

namespace sinusseg::simd {

enum class Isa { Scalar, Avx2 };

std::string_view to_string(Isa isa) noexcept;

struct ConfusionTally {
  std::uint64_t tp = 0;
  std::uint64_t fp = 0;
  std::uint64_t fn = 0;
};

struct AdamWParams {
  float lr;
  float beta1;
  float beta2;
  float eps;
  float weight_decay;
  float bias_correction1;  // 1 - beta1^t
  float bias_correction2;  // 1 - beta2^t
};

struct KernelTable {
  Isa isa;

  /// C[m x n] (+)= A[m x k] * B[k x n]; all row-major with leading dimensions.
  void (*gemm_nn)(int m, int n, int k, const float* a, int lda, const float* b, int ldb, float* c, int ldc,
                  bool accumulate);

  /// C[m x n] (+)= A[m x k] * B[n x k]^T.
  void (*gemm_nt)(int m, int n, int k, const float* a, int lda, const float* b, int ldb, float* c, int ldc,
                  bool accumulate);

  /// Decoupled-weight-decay Adam step over n parameters, in place.
  void (*adamw_step)(std::size_t n, float* param, const float* grad, float* m, float* v, const AdamWParams& p);

  /// For every query point, the minimum squared Euclidean distance to the
  /// reference set. Coordinates must lie in [0, 16384). `ref_count` > 0.
  void (*min_sq_distances)(const std::int32_t* query_rows, const std::int32_t* query_cols, std::size_t query_count,
                           const std::int32_t* ref_rows, const std::int32_t* ref_cols, std::size_t ref_count,
                           std::int32_t* out);

  /// TP/FP/FN counts between two {0,1} byte masks of length n.
  ConfusionTally (*confusion)(const std::uint8_t* pred, const std::uint8_t* truth, std::size_t n);
};

/// The table selected for this process.
const KernelTable& kernels() noexcept;

/// A specific table; falls back to scalar when `isa` is unsupported here.
const KernelTable& kernels_for(Isa isa) noexcept;

bool isa_supported(Isa isa) noexcept;

namespace detail {
const KernelTable& scalar_table() noexcept;
const KernelTable* avx2_table() noexcept;  // nullptr when not compiled in
}  // namespace detail

}  // namespace sinusseg::simd
