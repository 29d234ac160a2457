#pragma once

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "cgt/tensor_product.hpp"

namespace cgt::bench {

enum class Suite { equivariance, oracle, scaling_n, scaling_l, memory, permutation, flops, all };

Suite parse_suite(const std::string& name);
std::string to_string(Suite suite);

struct BenchConfig {
  Suite suite = Suite::all;
  std::vector<std::size_t> n_list{256, 512, 1024, 2048, 4096, 8192, 16384};
  std::vector<int> l_list{2, 3, 4, 5, 6, 7, 8};
  ChannelMode mode = ChannelMode::full;
  int heads = 1;
  std::uint64_t seed = 7;
  int repetitions = 5;
  bool parallel = false;
  unsigned threads = 1;
  bool fault_inject = false;
  std::optional<std::string> graph_path;
};

/// Least-squares slope of log(y) against log(x). Throws InvalidArgument for
/// fewer than two points or non-positive values.
double loglog_slope(const std::vector<double>& x, const std::vector<double>& y);

/// Median of `repetitions` timed calls after one discarded warmup, in ms.
template <class Fn>
double median_ms(Fn&& fn, int repetitions) {
  fn();
  std::vector<double> ms;
  for (int r = 0; r < repetitions; ++r) {
    const auto t0 = std::chrono::steady_clock::now();
    fn();
    ms.push_back(std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count());
  }
  std::sort(ms.begin(), ms.end());
  return ms[ms.size() / 2];
}

/// `N,ms_fft,ms_direct` for the (1,1)->1 long convolution, then `#fit` rows.
void run_scaling_n(const BenchConfig& cfg, std::ostream& os);
/// `L,dense_flops,sparse_flops,ms_dense,ms_sparse`, then `#fit` rows.
void run_scaling_l(const BenchConfig& cfg, std::ostream& os);
/// `L,dense_bytes,sparse_bytes` from table storage accounting.
void run_memory(const BenchConfig& cfg, std::ostream& os);
/// `L,mode,dense_flops,sparse_flops,ratio` for the full plan at each L.
void run_flops(const BenchConfig& cfg, std::ostream& os);

struct MemoryRow {
  int L = 0;
  std::uint64_t dense_bytes = 0;
  std::uint64_t sparse_bytes = 0;
};
MemoryRow memory_row(int L);

struct FlopRow {
  int L = 0;
  std::uint64_t dense = 0;
  std::uint64_t sparse = 0;
};
/// Degrees 0..L on both inputs, outputs 0..L, one channel, one head.
FlopRow flop_row(int L, ChannelMode mode);

struct CaseResult {
  std::string suite;
  std::string name;
  std::string metric;
  double value = 0.0;
  double threshold = 0.0;
  bool pass = false;
};

/// Runs the selected correctness suites and writes one JSON object per case.
/// Returns true when every case passes.
bool run_suites(const BenchConfig& cfg, std::ostream& os, std::vector<CaseResult>* results = nullptr);

}  // namespace cgt::bench
