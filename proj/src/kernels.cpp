#include "cerl/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include <vector>

#include "cerl/error.hpp"

namespace cerl::kernels {

namespace {

void check_affine(const Matrix& x, const WeightMatrix& w, std::span<const double> bias,
                  const Matrix& y) {
  if (x.cols() != w.rows() || bias.size() != w.cols() || y.rows() != x.rows() ||
      y.cols() != w.cols()) {
    throw ShapeError("affine: x " + std::to_string(x.rows()) + "x" + std::to_string(x.cols()) +
                     ", w " + std::to_string(w.rows()) + "x" + std::to_string(w.cols()));
  }
}

void check_backprop(const Matrix& dy, const WeightMatrix& w, const Matrix& dx) {
  if (dy.cols() != w.cols() || dx.rows() != dy.rows() || dx.cols() != w.rows()) {
    throw ShapeError("backprop_input: shape mismatch");
  }
}

void check_weight_grad(const Matrix& x, const Matrix& dy, const WeightMatrix& dw,
                       std::span<double> dbias) {
  if (x.rows() != dy.rows() || dw.rows() != x.cols() || dw.cols() != dy.cols() ||
      dbias.size() != dy.cols()) {
    throw ShapeError("accumulate_weight_grad: shape mismatch");
  }
}

}  // namespace

namespace serial {

void affine(const Matrix& x, const WeightMatrix& w, std::span<const double> bias, Matrix& y) {
  check_affine(x, w, bias, y);
  for (std::size_t t = 0; t < x.rows(); ++t) {
    for (std::size_t o = 0; o < w.cols(); ++o) {
      double acc = bias[o];
      for (std::size_t i = 0; i < w.rows(); ++i) acc += x(t, i) * w(i, o);
      y(t, o) = acc;
    }
  }
}

void backprop_input(const Matrix& dy, const WeightMatrix& w, Matrix& dx) {
  check_backprop(dy, w, dx);
  for (std::size_t t = 0; t < dy.rows(); ++t) {
    for (std::size_t i = 0; i < w.rows(); ++i) {
      double acc = 0.0;
      for (std::size_t o = 0; o < w.cols(); ++o) acc += dy(t, o) * w(i, o);
      dx(t, i) = acc;
    }
  }
}

void accumulate_weight_grad(const Matrix& x, const Matrix& dy, WeightMatrix& dw,
                            std::span<double> dbias) {
  check_weight_grad(x, dy, dw, dbias);
  for (std::size_t i = 0; i < dw.rows(); ++i) {
    for (std::size_t o = 0; o < dw.cols(); ++o) {
      double acc = 0.0;
      for (std::size_t t = 0; t < x.rows(); ++t) acc += x(t, i) * dy(t, o);
      dw(i, o) += acc;
    }
  }
  for (std::size_t o = 0; o < dy.cols(); ++o) {
    double acc = 0.0;
    for (std::size_t t = 0; t < dy.rows(); ++t) acc += dy(t, o);
    dbias[o] += acc;
  }
}

}  // namespace serial

namespace parallel {

namespace {

enum class Init { zero, bias, accumulate };

// C = init + A * B for an m x k operand A addressed as a[r * ars + p * acs]
// and row-major B (k x n). Register tiles of 4 x 16 outputs; each output is
// owned by one thread and summed over p in order.
void gemm(std::size_t m, std::size_t n, std::size_t k, const double* a, std::size_t ars,
          std::size_t acs, const double* b, std::size_t ldb, double* c, std::size_t ldc, Init init,
          const double* bias) {
  constexpr std::size_t MR = 4;
  constexpr std::size_t NR = 16;
  const std::size_t mblocks = (m + MR - 1) / MR;
  const bool go_parallel = m * n * k >= kParallelThreshold;
#pragma omp parallel for schedule(static) if (go_parallel)
  for (std::size_t mb = 0; mb < mblocks; ++mb) {
    const std::size_t r0 = mb * MR;
    const std::size_t rows = std::min(MR, m - r0);
    for (std::size_t c0 = 0; c0 < n; c0 += NR) {
      const std::size_t cols = std::min(NR, n - c0);
      if (rows == MR && cols == NR) {
        double acc[MR][NR];
        for (std::size_t r = 0; r < MR; ++r) {
          for (std::size_t j = 0; j < NR; ++j) {
            acc[r][j] = init == Init::zero       ? 0.0
                        : init == Init::bias     ? bias[c0 + j]
                                                 : c[(r0 + r) * ldc + c0 + j];
          }
        }
        for (std::size_t p = 0; p < k; ++p) {
          const double* br = b + p * ldb + c0;
          for (std::size_t r = 0; r < MR; ++r) {
            const double av = a[(r0 + r) * ars + p * acs];
#pragma omp simd
            for (std::size_t j = 0; j < NR; ++j) acc[r][j] = std::fma(av, br[j], acc[r][j]);
          }
        }
        for (std::size_t r = 0; r < MR; ++r) {
          for (std::size_t j = 0; j < NR; ++j) c[(r0 + r) * ldc + c0 + j] = acc[r][j];
        }
      } else {
        for (std::size_t r = r0; r < r0 + rows; ++r) {
          for (std::size_t j = c0; j < c0 + cols; ++j) {
            double s = init == Init::zero ? 0.0 : init == Init::bias ? bias[j] : c[r * ldc + j];
            for (std::size_t p = 0; p < k; ++p) s = std::fma(a[r * ars + p * acs], b[p * ldb + j], s);
            c[r * ldc + j] = s;
          }
        }
      }
    }
  }
}

}  // namespace

void affine(const Matrix& x, const WeightMatrix& w, std::span<const double> bias, Matrix& y) {
  check_affine(x, w, bias, y);
  gemm(x.rows(), w.cols(), w.rows(), x.data(), x.cols(), 1, w.data(), w.cols(), y.data(), y.cols(),
       Init::bias, bias.data());
}

void backprop_input(const Matrix& dy, const WeightMatrix& w, Matrix& dx) {
  check_backprop(dy, w, dx);
  const std::size_t in = w.rows();
  const std::size_t out = w.cols();
  std::vector<double> wt(in * out);
  for (std::size_t i = 0; i < in; ++i) {
    for (std::size_t o = 0; o < out; ++o) wt[o * in + i] = w(i, o);
  }
  gemm(dy.rows(), in, out, dy.data(), out, 1, wt.data(), in, dx.data(), in, Init::zero, nullptr);
}

void accumulate_weight_grad(const Matrix& x, const Matrix& dy, WeightMatrix& dw,
                            std::span<double> dbias) {
  check_weight_grad(x, dy, dw, dbias);
  const std::size_t rows = x.rows();
  const std::size_t in = dw.rows();
  const std::size_t out = dw.cols();
  // dw += x^T dy: A(i, t) = x(t, i)
  gemm(in, out, rows, x.data(), 1, in, dy.data(), out, dw.data(), out, Init::accumulate, nullptr);
  for (std::size_t t = 0; t < rows; ++t) {
    const double* dyr = dy.data() + t * out;
#pragma omp simd
    for (std::size_t o = 0; o < out; ++o) dbias[o] += dyr[o];
  }
}

}  // namespace parallel

}  // namespace cerl::kernels
