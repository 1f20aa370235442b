#include <immintrin.h>

#include "sinai/kernels.hpp"

namespace sinai::kernels::avx2 {

void forward(const double* right, const double* left, const double* in, double* out,
             std::size_t first, std::size_t last) {
  std::size_t j = first;
  for (; j + 3 <= last; j += 4) {
    const __m256d a = _mm256_mul_pd(_mm256_loadu_pd(right + j - 1), _mm256_loadu_pd(in + j - 1));
    const __m256d b = _mm256_mul_pd(_mm256_loadu_pd(left + j + 1), _mm256_loadu_pd(in + j + 1));
    _mm256_storeu_pd(out + j, _mm256_add_pd(a, b));
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
  for (; j + 3 <= last; j += 4) {
    const __m256d a = _mm256_mul_pd(_mm256_loadu_pd(right + j), _mm256_loadu_pd(in + j + 1));
    const __m256d b = _mm256_mul_pd(_mm256_loadu_pd(left + j), _mm256_loadu_pd(in + j - 1));
    _mm256_storeu_pd(out + j, _mm256_add_pd(a, b));
  }
  for (; j <= last; ++j) {
    const double up = right[j] * in[j + 1];
    const double down = left[j] * in[j - 1];
    out[j] = up + down;
  }
}

}  // namespace sinai::kernels::avx2
