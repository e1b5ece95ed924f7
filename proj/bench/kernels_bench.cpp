// Serial vs OpenMP dense kernels at actor/critic layer sizes.
#include <benchmark/benchmark.h>

#include "cerl/kernels.hpp"
#include "cerl/matrix.hpp"
#include "cerl/rng.hpp"

namespace {

cerl::Matrix random_matrix(std::size_t r, std::size_t c, cerl::Rng& rng) {
  cerl::Matrix m(r, c);
  for (double& v : m.values()) v = cerl::gaussian(rng, 1.0);
  return m;
}

struct Operands {
  cerl::Matrix x, w, dy, y, dx, dw;
  std::vector<double> bias, dbias;
};

Operands make_operands(const benchmark::State& state) {
  const auto batch = static_cast<std::size_t>(state.range(0));
  const auto in = static_cast<std::size_t>(state.range(1));
  const auto out = static_cast<std::size_t>(state.range(2));
  cerl::Rng rng(7);
  Operands o{random_matrix(batch, in, rng), random_matrix(in, out, rng), random_matrix(batch, out, rng),
             cerl::Matrix(batch, out), cerl::Matrix(batch, in), cerl::Matrix(in, out),
             std::vector<double>(out, 0.1), std::vector<double>(out, 0.0)};
  return o;
}

template <bool Parallel>
void BM_affine(benchmark::State& state) {
  Operands o = make_operands(state);
  for (auto _ : state) {
    if constexpr (Parallel) cerl::kernels::parallel::affine(o.x, o.w, o.bias, o.y);
    else cerl::kernels::serial::affine(o.x, o.w, o.bias, o.y);
    benchmark::DoNotOptimize(o.y.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0) * state.range(1) * state.range(2));
}

template <bool Parallel>
void BM_backprop_input(benchmark::State& state) {
  Operands o = make_operands(state);
  for (auto _ : state) {
    if constexpr (Parallel) cerl::kernels::parallel::backprop_input(o.dy, o.w, o.dx);
    else cerl::kernels::serial::backprop_input(o.dy, o.w, o.dx);
    benchmark::DoNotOptimize(o.dx.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0) * state.range(1) * state.range(2));
}

template <bool Parallel>
void BM_weight_grad(benchmark::State& state) {
  Operands o = make_operands(state);
  for (auto _ : state) {
    o.dw.fill(0.0);
    std::fill(o.dbias.begin(), o.dbias.end(), 0.0);
    if constexpr (Parallel) cerl::kernels::parallel::accumulate_weight_grad(o.x, o.dy, o.dw, o.dbias);
    else cerl::kernels::serial::accumulate_weight_grad(o.x, o.dy, o.dw, o.dbias);
    benchmark::DoNotOptimize(o.dw.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0) * state.range(1) * state.range(2));
}

void shapes(benchmark::internal::Benchmark* b) {
  b->Args({256, 6, 64})->Args({256, 64, 64})->Args({256, 400, 300})->Args({1024, 400, 300});
}

}  // namespace

BENCHMARK(BM_affine<false>)->Apply(shapes);
BENCHMARK(BM_affine<true>)->Apply(shapes);
BENCHMARK(BM_backprop_input<false>)->Apply(shapes);
BENCHMARK(BM_backprop_input<true>)->Apply(shapes);
BENCHMARK(BM_weight_grad<false>)->Apply(shapes);
BENCHMARK(BM_weight_grad<true>)->Apply(shapes);

BENCHMARK_MAIN();
