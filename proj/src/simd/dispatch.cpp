#include <cstdlib>
#include <string>

#include "sinusseg/simd/kernels.hpp"

namespace sinusseg::simd {

#if !defined(SINUSSEG_HAVE_AVX2)
namespace detail {
const KernelTable* avx2_table() noexcept { return nullptr; }
}  // namespace detail
#endif

std::string_view to_string(Isa isa) noexcept {
  switch (isa) {
    case Isa::Scalar: return "scalar";
    case Isa::Avx2: return "avx2";
  }
  return "unknown";
}

bool isa_supported(Isa isa) noexcept {
  switch (isa) {
    case Isa::Scalar: return true;
    case Isa::Avx2:
#if defined(SINUSSEG_HAVE_AVX2) && (defined(__GNUC__) || defined(__clang__))
      return detail::avx2_table() != nullptr && __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma") &&
             __builtin_cpu_supports("popcnt");
#else
      return false;
#endif
  }
  return false;
}

const KernelTable& kernels_for(Isa isa) noexcept {
  if (isa == Isa::Avx2 && isa_supported(Isa::Avx2)) return *detail::avx2_table();
  return detail::scalar_table();
}

namespace {

const KernelTable& select() noexcept {
  if (const char* forced = std::getenv("SINUSSEG_ISA")) {
    const std::string name(forced);
    if (name == "scalar") return detail::scalar_table();
    if (name == "avx2") return kernels_for(Isa::Avx2);
  }
  return kernels_for(Isa::Avx2);
}

}  // namespace

const KernelTable& kernels() noexcept {
  static const KernelTable& table = select();
  return table;
}

}  // namespace sinusseg::simd
