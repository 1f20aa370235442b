#include <arm_neon.h>

#include "sinai/kernels.hpp"

namespace sinai::kernels::neon {

void forward(const double* right, const double* left, const double* in, double* out,
             std::size_t first, std::size_t last) {
  std::size_t j = first;
  for (; j + 1 <= last; j += 2) {
    const float64x2_t a = vmulq_f64(vld1q_f64(right + j - 1), vld1q_f64(in + j - 1));
    const float64x2_t b = vmulq_f64(vld1q_f64(left + j + 1), vld1q_f64(in + j + 1));
    vst1q_f64(out + j, vaddq_f64(a, b));
  }
  for (; j <= last; ++j) {
    const double from_left = right[j - 1] * in[j - 1];
    const double from_right = left[j + 1] * in[j + 1];
    out[j] = from_left + from_right;
  }
}

void backward(const double* right, const double* left, const double* in, double* out,
              std::size_t first, std::size_t last) {
  std::size_t j = first;
  for (; j + 1 <= last; j += 2) {
    const float64x2_t a = vmulq_f64(vld1q_f64(right + j), vld1q_f64(in + j + 1));
    const float64x2_t b = vmulq_f64(vld1q_f64(left + j), vld1q_f64(in + j - 1));
    vst1q_f64(out + j, vaddq_f64(a, b));
  }
  for (; j <= last; ++j) {
    const double up = right[j] * in[j + 1];
    const double down = left[j] * in[j - 1];
    out[j] = up + down;
  }
}

}  // namespace sinai::kernels::neon
