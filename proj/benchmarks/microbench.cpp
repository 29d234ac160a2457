#include <numeric>
#include <random>

#include <benchmark/benchmark.h>

#include "cgt/cg_long_conv.hpp"
#include "cgt/so3_tables.hpp"
#include "cgt/tensor_product.hpp"

namespace {

cgt::EquivariantFeature random_feature(const cgt::IrrepsSignature& sig, std::size_t tokens, std::uint64_t seed) {
  cgt::EquivariantFeature f(sig, tokens);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (auto& v : f.data()) v = normal(rng);
  return f;
}

cgt::IrrepsSignature degrees_up_to(int L) {
  std::vector<cgt::Irrep> e;
  for (int l = 0; l <= L; ++l) e.push_back({l, 1});
  return cgt::IrrepsSignature::make(e, 1);
}

std::vector<int> range_to(int L) {
  std::vector<int> v(static_cast<std::size_t>(L + 1));
  std::iota(v.begin(), v.end(), 0);
  return v;
}

template <bool Fft>
void BM_Conv(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  auto sig = cgt::IrrepsSignature::make({{1, 1}}, 1);
  auto conv = cgt::make_conv_config(sig, sig, {1}, cgt::ChannelMode::full);
  auto q = random_feature(sig, n, 1), k = random_feature(sig, n, 2);
  for (auto _ : state) {
    if constexpr (Fft) benchmark::DoNotOptimize(cgt::conv_fft(conv, q, k));
    else benchmark::DoNotOptimize(cgt::conv_direct(conv, q, k));
  }
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_Conv<true>)->Name("conv_fft")->RangeMultiplier(4)->Range(256, 16384)->Complexity(benchmark::oNLogN);
BENCHMARK(BM_Conv<false>)->Name("conv_direct")->RangeMultiplier(4)->Range(256, 4096)->Complexity(benchmark::oNSquared);

template <bool Sparse>
void BM_Contract(benchmark::State& state) {
  const int L = static_cast<int>(state.range(0));
  auto sig = degrees_up_to(L);
  auto plan = cgt::plan_product(sig, sig, range_to(L), cgt::ChannelMode::full);
  auto a = random_feature(sig, 64, 1), b = random_feature(sig, 64, 2);
  for (auto _ : state) {
    if constexpr (Sparse) benchmark::DoNotOptimize(cgt::contract_sparse(plan, a, b));
    else benchmark::DoNotOptimize(cgt::contract_dense(plan, a, b));
  }
  state.counters["flops"] = static_cast<double>(Sparse ? plan.sparse_flops() : plan.dense_flops());
}
BENCHMARK(BM_Contract<false>)->Name("contract_dense")->DenseRange(2, 8, 2);
BENCHMARK(BM_Contract<true>)->Name("contract_sparse")->DenseRange(2, 8, 2);

void BM_TableBuild(benchmark::State& state) {
  const int L = static_cast<int>(state.range(0));
  for (auto _ : state) {
    for (int J = 0; J <= L; ++J)
      for (int l = 0; l <= L; ++l)
        for (int lp = 0; lp <= L; ++lp)
          if (cgt::satisfies_triangle(J, l, lp)) benchmark::DoNotOptimize(cgt::cg_real(J, l, lp));
  }
}
BENCHMARK(BM_TableBuild)->Name("cg_real_tables")->DenseRange(2, 8, 3);

}  // namespace

BENCHMARK_MAIN();
