#pragma once

#include <cstddef>
#include <string_view>

/// Data-parallel stencils for propagating a law (or an intensity) of the
/// walk one step, and their adjoint.
///
/// Arrays use a padded layout: a window of n sites lives at indices 1..n of
/// buffers of length n + 2, and slots 0 and n + 1 are zero guards. With
/// right[j] = alpha_j and left[j] = 1 - alpha_j:
///
///   forward:  out[j] = right[j-1] * in[j-1] + left[j+1] * in[j+1]
///   backward: out[j] = right[j] * in[j+1] + left[j] * in[j-1]
///
/// for j in [first, last]. Every variant performs the same two products and
/// one sum per site, so all of them produce bit-identical results.
namespace sinai::kernels {

enum class Isa { scalar, avx2, neon };

std::string_view to_string(Isa isa);

using StepFn = void (*)(const double* right, const double* left, const double* in, double* out,
                        std::size_t first, std::size_t last);

struct StepKernels {
  StepFn forward;
  StepFn backward;
};

/// True if the variant was compiled in and the CPU supports it.
bool available(Isa isa);

/// Best variant for this CPU.
Isa detected();

/// Variant used by default: detected(), unless the SINAI_ISA environment
/// variable names another available one ("scalar", "avx2", "neon").
Isa active();

const StepKernels& table(Isa isa);
inline const StepKernels& table() { return table(active()); }

// Individual variants, exposed for equivalence tests.
namespace scalar {
void forward(const double* right, const double* left, const double* in, double* out,
             std::size_t first, std::size_t last);
void backward(const double* right, const double* left, const double* in, double* out,
              std::size_t first, std::size_t last);
}  // namespace scalar

namespace avx2 {
void forward(const double* right, const double* left, const double* in, double* out,
             std::size_t first, std::size_t last);
void backward(const double* right, const double* left, const double* in, double* out,
              std::size_t first, std::size_t last);
}  // namespace avx2

namespace neon {
void forward(const double* right, const double* left, const double* in, double* out,
             std::size_t first, std::size_t last);
void backward(const double* right, const double* left, const double* in, double* out,
              std::size_t first, std::size_t last);
}  // namespace neon

}  // namespace sinai::kernels
