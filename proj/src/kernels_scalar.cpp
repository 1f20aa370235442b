#include "sinai/kernels.hpp"

namespace sinai::kernels::scalar {

void forward(const double* right, const double* left, const double* in, double* out,
             std::size_t first, std::size_t last) {
  for (std::size_t j = first; j <= last; ++j) {
    const double from_left = right[j - 1] * in[j - 1];
    const double from_right = left[j + 1] * in[j + 1];
    out[j] = from_left + from_right;
  }
}

void backward(const double* right, const double* left, const double* in, double* out,
              std::size_t first, std::size_t last) {
  for (std::size_t j = first; j <= last; ++j) {
    const double up = right[j] * in[j + 1];
    const double down = left[j] * in[j - 1];
    out[j] = up + down;
  }
}

}  // namespace sinai::kernels::scalar
