#include "sinai/kernels.hpp"

#include <cstdlib>
#include <string>

namespace sinai::kernels {

std::string_view to_string(Isa isa) {
  switch (isa) {
    case Isa::scalar: return "scalar";
    case Isa::avx2: return "avx2";
    case Isa::neon: return "neon";
  }
  return "unknown";
}

bool available(Isa isa) {
  switch (isa) {
    case Isa::scalar:
      return true;
    case Isa::avx2:
#if defined(SINAI_HAVE_AVX2)
      return __builtin_cpu_supports("avx2");
#else
      return false;
#endif
    case Isa::neon:
#if defined(SINAI_HAVE_NEON)
      return true;
#else
      return false;
#endif
  }
  return false;
}

Isa detected() {
  if (available(Isa::avx2)) return Isa::avx2;
  if (available(Isa::neon)) return Isa::neon;
  return Isa::scalar;
}

Isa active() {
  static const Isa chosen = [] {
    if (const char* name = std::getenv("SINAI_ISA")) {
      for (Isa isa : {Isa::scalar, Isa::avx2, Isa::neon}) {
        if (to_string(isa) == name && available(isa)) return isa;
      }
    }
    return detected();
  }();
  return chosen;
}

const StepKernels& table(Isa isa) {
  static const StepKernels scalar_table{&scalar::forward, &scalar::backward};
#if defined(SINAI_HAVE_AVX2)
  static const StepKernels avx2_table{&avx2::forward, &avx2::backward};
  if (isa == Isa::avx2 && available(Isa::avx2)) return avx2_table;
#endif
#if defined(SINAI_HAVE_NEON)
  static const StepKernels neon_table{&neon::forward, &neon::backward};
  if (isa == Isa::neon) return neon_table;
#endif
  return scalar_table;
}

}  // namespace sinai::kernels
