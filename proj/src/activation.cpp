#include "activation.hpp"

#include <cmath>

namespace cerl::nn::detail {

void elu_inplace(std::span<double> v) {
  double* p = v.data();
  const std::size_t n = v.size();
#pragma omp simd
  for (std::size_t i = 0; i < n; ++i) {
    const double x = p[i];
    const double e = std::exp(std::fmin(x, 0.0)) - 1.0;
    p[i] = x > 0.0 ? x : e;
  }
}

}  // namespace cerl::nn::detail
