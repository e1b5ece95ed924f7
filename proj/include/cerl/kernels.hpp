#pragma once

// Dense-layer kernels. `serial` is the straightforward reference, kept for
// tests and benchmarks; `parallel` is the OpenMP/SIMD version used by the
// network code. Both produce identical results up to floating-point
// reassociation, and each output element is accumulated by exactly one thread
// in a fixed order, so `parallel` is deterministic for any thread count.

#include <cstddef>
#include <span>

#include "cerl/matrix.hpp"

namespace cerl::kernels {

namespace serial {

/// y = x * w + bias (bias broadcast over rows).
void affine(const Matrix& x, const WeightMatrix& w, std::span<const double> bias, Matrix& y);

/// dx = dy * w^T.
void backprop_input(const Matrix& dy, const WeightMatrix& w, Matrix& dx);

/// dw += x^T * dy, dbias += column sums of dy.
void accumulate_weight_grad(const Matrix& x, const Matrix& dy, WeightMatrix& dw,
                            std::span<double> dbias);

}  // namespace serial

namespace parallel {

void affine(const Matrix& x, const WeightMatrix& w, std::span<const double> bias, Matrix& y);
void backprop_input(const Matrix& dy, const WeightMatrix& w, Matrix& dx);
void accumulate_weight_grad(const Matrix& x, const Matrix& dy, WeightMatrix& dw,
                            std::span<double> dbias);

}  // namespace parallel

// Multiply-adds below which the parallel kernels stay on the calling thread.
inline constexpr std::size_t kParallelThreshold = 1u << 18;

}  // namespace cerl::kernels
