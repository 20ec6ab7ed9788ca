// Parallel kernels against the serial reference loops.

#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "saec/kernels.hpp"

using namespace saec::kernels;

namespace {

std::vector<double> random_values(std::size_t n, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<double> v(n);
  for (auto& x : v) x = u(rng);
  return v;
}

ConvGeometry encoder_layer(std::size_t batch) {
  ConvGeometry g;
  g.batch = batch;
  g.in_channels = 16;
  g.in_h = g.in_w = 32;
  g.out_channels = 32;
  g.kernel_h = g.kernel_w = 3;
  g.padding = 1;
  return g;
}

ConvGeometry output_layer(std::size_t batch) {
  ConvGeometry g = encoder_layer(batch);
  g.out_channels = 1;
  return g;
}

void BM_MatmulParallel(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  auto a = random_values(n * n, 1), b = random_values(n * n, 2);
  std::vector<double> out(n * n);
  for (auto _ : state) {
    gemm(a, b, out, n, n, n);
    benchmark::DoNotOptimize(out.data());
  }
}

void BM_MatmulReference(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  auto a = random_values(n * n, 1), b = random_values(n * n, 2);
  std::vector<double> out(n * n);
  for (auto _ : state) {
    reference::matmul(a, b, out, n, n, n);
    benchmark::DoNotOptimize(out.data());
  }
}

void BM_ConvParallel(benchmark::State& state) {
  const ConvGeometry g = encoder_layer(static_cast<std::size_t>(state.range(0)));
  auto in = random_values(g.in_size(), 3), k = random_values(g.kernel_size(), 4);
  std::vector<double> out(g.out_size()), cols;
  for (auto _ : state) {
    conv2d_forward(in, k, g, out, cols);
    benchmark::DoNotOptimize(out.data());
  }
}

void BM_ConvReference(benchmark::State& state) {
  const ConvGeometry g = encoder_layer(static_cast<std::size_t>(state.range(0)));
  auto in = random_values(g.in_size(), 3), k = random_values(g.kernel_size(), 4);
  std::vector<double> out(g.out_size());
  for (auto _ : state) {
    reference::conv2d(in, k, g, out);
    benchmark::DoNotOptimize(out.data());
  }
}

void BM_ConvDirect(benchmark::State& state) {
  const ConvGeometry g = output_layer(static_cast<std::size_t>(state.range(0)));
  auto in = random_values(g.in_size(), 5), k = random_values(g.kernel_size(), 6);
  std::vector<double> out(g.out_size());
  for (auto _ : state) {
    conv2d_direct_forward(in, k, g, out);
    benchmark::DoNotOptimize(out.data());
  }
}

void BM_ConvDirectReference(benchmark::State& state) {
  const ConvGeometry g = output_layer(static_cast<std::size_t>(state.range(0)));
  auto in = random_values(g.in_size(), 5), k = random_values(g.kernel_size(), 6);
  std::vector<double> out(g.out_size());
  for (auto _ : state) {
    reference::conv2d(in, k, g, out);
    benchmark::DoNotOptimize(out.data());
  }
}

void BM_ConvTransposeParallel(benchmark::State& state) {
  const ConvGeometry g = encoder_layer(static_cast<std::size_t>(state.range(0)));
  auto in = random_values(g.out_size(), 7), k = random_values(g.kernel_size(), 8);
  std::vector<double> out(g.in_size());
  for (auto _ : state) {
    conv2d_transpose_forward(in, k, g, out);
    benchmark::DoNotOptimize(out.data());
  }
}

void BM_ConvTransposeReference(benchmark::State& state) {
  const ConvGeometry g = encoder_layer(static_cast<std::size_t>(state.range(0)));
  auto in = random_values(g.out_size(), 7), k = random_values(g.kernel_size(), 8);
  std::vector<double> out(g.in_size());
  for (auto _ : state) {
    reference::conv2d_transpose(in, k, g, out);
    benchmark::DoNotOptimize(out.data());
  }
}

void BM_PoolParallel(benchmark::State& state) {
  const auto planes = static_cast<std::size_t>(state.range(0)) * 16;
  auto in = random_values(planes * 32 * 32, 9);
  std::vector<double> out(planes * 16 * 16);
  std::vector<std::size_t> arg(out.size());
  for (auto _ : state) {
    max_pool2x2_forward(in, planes, 32, 32, out, arg);
    benchmark::DoNotOptimize(out.data());
  }
}

void BM_PoolReference(benchmark::State& state) {
  const auto planes = static_cast<std::size_t>(state.range(0)) * 16;
  auto in = random_values(planes * 32 * 32, 9);
  std::vector<double> out(planes * 16 * 16);
  for (auto _ : state) {
    reference::max_pool2x2(in, planes, 32, 32, out);
    benchmark::DoNotOptimize(out.data());
  }
}

}  // namespace

BENCHMARK(BM_MatmulParallel)->Arg(64)->Arg(256);
BENCHMARK(BM_MatmulReference)->Arg(64)->Arg(256);
BENCHMARK(BM_ConvParallel)->Arg(1)->Arg(32);
BENCHMARK(BM_ConvReference)->Arg(1)->Arg(32);
BENCHMARK(BM_ConvDirect)->Arg(1)->Arg(32);
BENCHMARK(BM_ConvDirectReference)->Arg(1)->Arg(32);
BENCHMARK(BM_ConvTransposeParallel)->Arg(1)->Arg(32);
BENCHMARK(BM_ConvTransposeReference)->Arg(1)->Arg(32);
BENCHMARK(BM_PoolParallel)->Arg(1)->Arg(32);
BENCHMARK(BM_PoolReference)->Arg(1)->Arg(32);

BENCHMARK_MAIN();
