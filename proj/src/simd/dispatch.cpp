#include <cstdlib>
#include <string>

#include "mvocab/simd/kernels.hpp"

namespace mvocab::simd {

#if defined(MVOCAB_HAVE_AVX2)
const KernelTable& avx2_table();
#endif
#if defined(__aarch64__) || defined(__ARM_NEON)
const KernelTable& neon_table();
#endif

std::string_view to_string(Isa isa) {
  switch (isa) {
    case Isa::kScalar: return "scalar";
    case Isa::kAvx2: return "avx2";
    case Isa::kNeon: return "neon";
  }
  return "unknown";
}

const KernelTable* avx2_kernels() {
#if defined(MVOCAB_HAVE_AVX2) && (defined(__GNUC__) || defined(__clang__))
  static const bool supported =
      __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
  return supported ? &avx2_table() : nullptr;
#else
  return nullptr;
#endif
}

const KernelTable* neon_kernels() {
#if defined(__aarch64__) || defined(__ARM_NEON)
  return &neon_table();
#else
  return nullptr;
#endif
}

std::vector<const KernelTable*> available_kernels() {
  std::vector<const KernelTable*> out{&scalar_kernels()};
  if (auto* t = avx2_kernels()) out.push_back(t);
  if (auto* t = neon_kernels()) out.push_back(t);
  return out;
}

const KernelTable& active() {
  static const KernelTable& table = [] () -> const KernelTable& {
    if (const char* forced = std::getenv("MVOCAB_ISA")) {
      const std::string want(forced);
      for (const auto* t : available_kernels()) {
        if (to_string(t->isa) == want) return *t;
      }
      return scalar_kernels();
    }
    if (auto* t = avx2_kernels()) return *t;
    if (auto* t = neon_kernels()) return *t;
    return scalar_kernels();
  }();
  return table;
}

}  // namespace mvocab::simd
