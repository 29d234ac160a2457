#include "bench.hpp"

#include <atomic>
#include <cmath>
#include <fstream>
#include <functional>
#include <iomanip>
#include <mutex>
#include <new>
#include <numeric>
#include <ostream>
#include <random>
#include <thread>

#include <nlohmann/json.hpp>

#include "cgt/attention_block.hpp"
#include "cgt/cg_long_conv.hpp"
#include "cgt/oracles.hpp"
#include "cgt/so3_tables.hpp"
#include "cgt/spectral_graph.hpp"

namespace cgt::bench {

namespace {

EquivariantFeature random_feature(const IrrepsSignature& sig, std::size_t tokens, std::uint64_t seed) {
  EquivariantFeature f(sig, tokens);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (auto& v : f.data()) v = normal(rng);
  return f;
}

IrrepsSignature degrees_up_to(int L, int mult, int heads) {
  std::vector<Irrep> e;
  for (int l = 0; l <= L; ++l) e.push_back({l, mult});
  return IrrepsSignature::make(e, heads);
}

std::vector<int> range_to(int L) {
  std::vector<int> v(static_cast<std::size_t>(L + 1));
  std::iota(v.begin(), v.end(), 0);
  return v;
}

void check_fit_points(std::size_t n, const char* what) {
  if (n < 2) throw Error(ErrorCode::InvalidArgument, std::string("need at least two ") + what + " values to fit a slope");
}

void write_fit(std::ostream& os, const std::string& name, double slope) {
  os << "#fit," << name << ',' << std::setprecision(6) << slope << '\n';
}

// Sign flip on one coefficient of the first multi-entry path: a basis bug
// that the equivariance checks must catch.
void corrupt(ProductPlan& plan) {
  for (auto& p : plan.paths) {
    if (p.packed.size() < 2) continue;
    p.packed[0].value = -p.packed[0].value;
    const auto& e = p.packed[0];
    const std::size_t idx = (static_cast<std::size_t>(e.M) * (2 * p.l + 1) + e.m) * (2 * p.lp + 1) + e.mp;
    p.dense[idx] = -p.dense[idx];
    return;
  }
}

using Case = std::function<CaseResult()>;

CaseResult below(std::string suite, std::string name, std::string metric, double value, double threshold) {
  return {std::move(suite), std::move(name), std::move(metric), value, threshold, value < threshold};
}

void equivariance_cases(const BenchConfig& cfg, std::vector<Case>& cases) {
  const bool fault = cfg.fault_inject;
  for (int L : {1, 3, 5}) {
    for (auto mode : {ChannelMode::full, ChannelMode::elementwise}) {
      for (int h : {1, 4}) {
        cases.push_back([=] {
          auto sig = degrees_up_to(L, 2, h);
          auto plan = plan_product(sig, sig, range_to(L), mode);
          if (fault) corrupt(plan);
          auto a = random_feature(sig, 4, cfg.seed + 1), b = random_feature(sig, 4, cfg.seed + 2);
          auto R = oracles::random_rotation(cfg.seed + static_cast<std::uint64_t>(10 * L + h));
          auto lhs = contract_sparse(plan, rotate(a, wigner_d(sig, R)), rotate(b, wigner_d(sig, R)));
          auto rhs = rotate(contract_sparse(plan, a, b), wigner_d(plan.out, R));
          const std::string name = "contract L=" + std::to_string(L) + (mode == ChannelMode::full ? " full" : " elementwise") +
                                   " h=" + std::to_string(h);
          return below("equivariance", name, "rel_error", relative_error(lhs, rhs), 1e-9);
        });
      }
    }
  }
  for (int L : {2, 4}) {
    for (auto mode : {ChannelMode::full, ChannelMode::elementwise}) {
      cases.push_back([=] {
        auto sig = degrees_up_to(L, 2, 2);
        auto conv = make_conv_config(sig, sig, range_to(L), mode);
        if (fault) corrupt(conv.plan);
        auto q = random_feature(sig, 32, cfg.seed + 3), k = random_feature(sig, 32, cfg.seed + 4);
        auto R = oracles::random_rotation(cfg.seed + 100 + static_cast<std::uint64_t>(L));
        auto lhs = conv_fft(conv, rotate(q, wigner_d(sig, R)), rotate(k, wigner_d(sig, R)));
        auto rhs = rotate(conv_fft(conv, q, k), wigner_d(conv.plan.out, R));
        const std::string name = "conv_fft L=" + std::to_string(L) + (mode == ChannelMode::full ? " full" : " elementwise");
        return below("equivariance", name, "rel_error", relative_error(lhs, rhs), 1e-9);
      });
    }
  }
  for (auto mode : {ChannelMode::full, ChannelMode::elementwise}) {
    cases.push_back([=] {
      BlockConfig bc;
      bc.signature = degrees_up_to(3, 2, 2);
      bc.max_out_degree = 3;
      bc.channel_mode = mode;
      bc.seed = cfg.seed;
      AttentionBlock block(bc);
      auto f = random_feature(bc.signature, 16, cfg.seed + 5);
      auto rep = wigner_d(bc.signature, oracles::random_rotation(cfg.seed + 200));
      const double err = relative_error(block.attend(rotate(f, rep)), rotate(block.attend(f), rep));
      return below("equivariance", std::string("attend L=3 N=16") + (mode == ChannelMode::full ? " full" : " elementwise"),
                   "rel_error", err, 1e-9);
    });
  }
}

void oracle_cases(const BenchConfig& cfg, std::vector<Case>& cases) {
  cases.push_back([] {
    auto r = cross_product_check();
    return below("oracle", "cross_product", "max_error", r.max_error, 1e-13);
  });
  cases.push_back([cfg] {
    double worst = 0.0;
    for (std::uint64_t c = 0; c < 20; ++c) {
      const int L = static_cast<int>(c % 7);
      auto sig = degrees_up_to(L, 1 + static_cast<int>(c % 2), 1);
      auto plan = plan_product(sig, sig, range_to(6), c % 2 ? ChannelMode::elementwise : ChannelMode::full);
      auto a = random_feature(sig, 2, cfg.seed + c), b = random_feature(sig, 2, cfg.seed + 50 + c);
      auto dense = contract_dense(plan, a, b);
      auto ref = oracles::reference_product([](int J, int l, int lp) { return cg_real(J, l, lp); }, a, b, range_to(6),
                                            plan.mode == ChannelMode::elementwise);
      worst = std::max({worst, max_abs_diff(contract_sparse(plan, a, b), dense), max_abs_diff(dense, ref)});
    }
    return below("oracle", "sparse_dense_reference", "max_abs_diff", worst, 1e-12);
  });
  cases.push_back([cfg] {
    double worst = 0.0;
    std::uint64_t seed = cfg.seed;
    for (std::size_t n : {3u, 4u, 8u, 17u, 64u}) {
      for (auto boundary : {Boundary::circular, Boundary::linear}) {
        auto sig = degrees_up_to(2, 1, 1);
        auto conv = make_conv_config(sig, sig, range_to(2), ChannelMode::full, boundary);
        auto q = random_feature(sig, n, ++seed), k = random_feature(sig, n, ++seed);
        worst = std::max(worst, relative_error(conv_fft(conv, q, k), conv_direct(conv, q, k)));
      }
    }
    return below("oracle", "fft_direct", "rel_error", worst, 1e-10);
  });
  for (int band = 1; band <= 4; ++band) {
    cases.push_back([cfg, band] {
      oracles::SphereGrid grid(2 * band);
      const std::size_t n = static_cast<std::size_t>((band + 1) * (band + 1));
      std::mt19937_64 rng(cfg.seed + static_cast<std::uint64_t>(band));
      std::normal_distribution<double> normal(0.0, 1.0);
      std::vector<double> f(n), g(n);
      for (auto& v : f) v = normal(rng);
      for (auto& v : g) v = normal(rng);
      auto r = oracles::sphere_product_check(grid, [](int J, int l, int lp) { return cg_real(J, l, lp); }, band, f, g);
      return below("oracle", "sphere_product band=" + std::to_string(band), "rel_error", r.rel_error, 1e-8);
    });
  }
  cases.push_back([] {
    double worst = 0.0;
    for (int l = 0; l <= 8; ++l) {
      for (int lp = 0; lp <= 8; ++lp) {
        const std::size_t cols = static_cast<std::size_t>((2 * l + 1) * (2 * lp + 1));
        Matrix stacked(cols, cols);
        std::size_t row = 0;
        for (int J = std::abs(l - lp); J <= l + lp; ++J) {
          auto p = projection_matrix(cg_real(J, l, lp));
          for (std::size_t r = 0; r < p.rows(); ++r, ++row)
            for (std::size_t c = 0; c < cols; ++c) stacked(row, c) = p(r, c);
        }
        worst = std::max(worst, max_abs_diff(stacked * stacked.transpose(), Matrix::identity(cols)));
      }
    }
    return below("oracle", "cg_orthonormality L<=8", "max_abs_diff", worst, 1e-12);
  });
  cases.push_back([cfg] {
    BlockConfig bc;
    bc.signature = degrees_up_to(2, 2, 1);
    bc.max_out_degree = 2;
    bc.gate_hidden = 8;
    bc.seed = cfg.seed;
    AttentionBlock block(bc);
    auto f = random_feature(bc.signature, 8, cfg.seed + 1);
    auto g = random_feature(bc.signature, 8, cfg.seed + 2);
    auto d = random_feature(bc.signature, 8, cfg.seed + 3);
    auto grads = block.attend_adjoint(g, f);
    auto fn = [&](std::span<const double> x) {
      return dot(g, block.attend(EquivariantFeature(bc.signature, 8, {x.begin(), x.end()})));
    };
    const double fd = oracles::finite_diff(fn, f.storage(), d.storage(), 1e-5);
    const double an = dot(grads.input, d);
    return below("oracle", "attend_adjoint_fd N=8 L=2", "rel_error", std::abs(fd - an) / std::abs(an), 1e-6);
  });
}

Matrix bench_graph(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> w(0.2, 2.0), coin(0.0, 1.0);
  Matrix a(n, n);
  for (std::size_t i = 0; i + 1 < n; ++i) a(i, i + 1) = a(i + 1, i) = w(rng);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 2; j < n; ++j)
      if (coin(rng) < 0.3) a(i, j) = a(j, i) = w(rng);
  return a;
}

void permutation_cases(const BenchConfig& cfg, std::vector<Case>& cases) {
  std::vector<std::pair<std::string, Matrix>> graphs;
  if (cfg.graph_path) {
    std::ifstream in(*cfg.graph_path);
    if (!in) throw Error(ErrorCode::InvalidArgument, "cannot open graph file " + *cfg.graph_path);
    graphs.emplace_back(*cfg.graph_path, read_edge_list(in));
  } else {
    for (std::uint64_t g = 0; g < 5; ++g) graphs.emplace_back("random n=12 #" + std::to_string(g), bench_graph(12, cfg.seed + g));
  }
  for (const auto& [name, adjacency] : graphs) {
    cases.push_back([cfg, name, adjacency] {
      auto spectrum = build_spectrum(adjacency);
      const std::size_t n = spectrum.n;
      auto sig = degrees_up_to(2, 1, 1);
      auto plan = plan_product(sig, sig, range_to(2), ChannelMode::full);
      auto q = random_feature(sig, n, cfg.seed + 1), k = random_feature(sig, n, cfg.seed + 2);
      std::vector<std::size_t> perm(n);
      std::iota(perm.begin(), perm.end(), 0);
      std::shuffle(perm.begin(), perm.end(), std::mt19937_64(cfg.seed));
      if (!spectrum.simple()) {
        return CaseResult{"permutation", "spectral " + name, "degenerate_spectrum", spectrum.min_gap(), 1e-8, false};
      }
      auto r = permutation_check(spectrum, plan, q, k, perm);
      return below("permutation", "spectral " + name, "rel_error", r.error, r.tolerance);
    });
  }
  cases.push_back([cfg] {
    auto sig = degrees_up_to(2, 1, 1);
    auto conv = make_conv_config(sig, sig, range_to(2), ChannelMode::full);
    auto q = random_feature(sig, 12, cfg.seed + 1), k = random_feature(sig, 12, cfg.seed + 2);
    std::vector<std::size_t> perm(12);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), std::mt19937_64(cfg.seed));
    auto r = fft_permutation_check(conv, q, k, perm);
    return CaseResult{"permutation", "fft_path_breaks_permutation", "rel_error", r.error, 1e-2, r.error > 1e-2};
  });
}

std::vector<CaseResult> execute(const std::vector<Case>& cases, bool parallel, unsigned threads) {
  std::vector<CaseResult> out(cases.size());
  auto run_one = [&](std::size_t i) {
    try {
      out[i] = cases[i]();
    } catch (const std::exception& e) {
      out[i] = CaseResult{"error", e.what(), "exception", 1.0, 0.0, false};
    }
  };
  if (!parallel || threads <= 1) {
    for (std::size_t i = 0; i < cases.size(); ++i) run_one(i);
    return out;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  for (unsigned t = 0; t < threads; ++t) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < cases.size(); i = next++) run_one(i);
    });
  }
  for (auto& th : pool) th.join();
  return out;
}

}  // namespace

Suite parse_suite(const std::string& name) {
  if (name == "equivariance") return Suite::equivariance;
  if (name == "oracle") return Suite::oracle;
  if (name == "scaling-N") return Suite::scaling_n;
  if (name == "scaling-L") return Suite::scaling_l;
  if (name == "memory") return Suite::memory;
  if (name == "permutation") return Suite::permutation;
  if (name == "flops") return Suite::flops;
  if (name == "all") return Suite::all;
  throw Error(ErrorCode::InvalidArgument, "unknown suite '" + name + "'");
}

std::string to_string(Suite suite) {
  switch (suite) {
    case Suite::equivariance: return "equivariance";
    case Suite::oracle: return "oracle";
    case Suite::scaling_n: return "scaling-N";
    case Suite::scaling_l: return "scaling-L";
    case Suite::memory: return "memory";
    case Suite::permutation: return "permutation";
    case Suite::flops: return "flops";
    case Suite::all: return "all";
  }
  return "?";
}

double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size()) throw Error(ErrorCode::InvalidArgument, "fit needs matching x and y");
  check_fit_points(x.size(), "points");
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  const double n = static_cast<double>(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(x[i] > 0.0) || !(y[i] > 0.0)) throw Error(ErrorCode::InvalidArgument, "log-log fit needs positive values");
    const double lx = std::log(x[i]), ly = std::log(y[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  const double denom = n * sxx - sx * sx;
  if (denom <= 0.0) throw Error(ErrorCode::InvalidArgument, "fit needs at least two distinct x values");
  return (n * sxy - sx * sy) / denom;
}

void run_scaling_n(const BenchConfig& cfg, std::ostream& os) {
  check_fit_points(cfg.n_list.size(), "N");
  os << "# type (1,1)->1, heads=" << cfg.heads << ", median of " << cfg.repetitions << " runs after 1 warmup\n";
  if (cfg.n_list.size() < 4) os << "# warning: fewer than 4 N values\n";
  os << "N,ms_fft,ms_direct\n";
  auto sig = IrrepsSignature::make({{1, 1}}, cfg.heads);
  auto conv = make_conv_config(sig, sig, {1}, ChannelMode::full);
  std::vector<double> nf, tf, nd, td;
  for (std::size_t n : cfg.n_list) {
    os << n;
    try {
      auto q = random_feature(sig, n, cfg.seed), k = random_feature(sig, n, cfg.seed + 1);
      const double fft = median_ms([&] { conv_fft(conv, q, k); }, cfg.repetitions);
      os << ',' << fft;
      nf.push_back(static_cast<double>(n));
      tf.push_back(fft);
      const double direct = median_ms([&] { conv_direct(conv, q, k); }, cfg.repetitions);
      os << ',' << direct;
      nd.push_back(static_cast<double>(n));
      td.push_back(direct);
    } catch (const std::bad_alloc&) {
      os << ",OOM";
    }
    os << '\n' << std::flush;
  }
  if (nf.size() >= 2) write_fit(os, "slope_fft", loglog_slope(nf, tf));
  if (nd.size() >= 2) write_fit(os, "slope_direct", loglog_slope(nd, td));
}

FlopRow flop_row(int L, ChannelMode mode) {
  auto sig = degrees_up_to(L, 1, 1);
  auto plan = plan_product(sig, sig, range_to(L), mode);
  return {L, plan.dense_flops(), plan.sparse_flops()};
}

void run_scaling_l(const BenchConfig& cfg, std::ostream& os) {
  check_fit_points(cfg.l_list.size(), "L");
  for (int L : cfg.l_list) {
    if (L < 2 || L > 10) throw Error(ErrorCode::InvalidArgument, "scaling-L degrees must lie in [2, 10]");
  }
  const std::size_t tokens = 64;
  os << "# degrees 0..L in and out, one channel, heads=" << cfg.heads << ", N=" << tokens << ", median of "
     << cfg.repetitions << " runs after 1 warmup\n";
  os << "L,dense_flops,sparse_flops,ms_dense,ms_sparse\n";
  std::vector<double> l, band, dense, sparse, md, ms;
  for (int L : cfg.l_list) {
    auto sig = degrees_up_to(L, 1, cfg.heads);
    auto plan = plan_product(sig, sig, range_to(L), cfg.mode);
    auto a = random_feature(sig, tokens, cfg.seed), b = random_feature(sig, tokens, cfg.seed + 1);
    const double t_dense = median_ms([&] { contract_dense(plan, a, b); }, cfg.repetitions);
    const double t_sparse = median_ms([&] { contract_sparse(plan, a, b); }, cfg.repetitions);
    os << L << ',' << plan.dense_flops() << ',' << plan.sparse_flops() << ',' << t_dense << ',' << t_sparse << '\n';
    l.push_back(L);
    band.push_back(L + 1);
    dense.push_back(static_cast<double>(plan.dense_flops()));
    sparse.push_back(static_cast<double>(plan.sparse_flops()));
    md.push_back(t_dense);
    ms.push_back(t_sparse);
  }
  write_fit(os, "dense_flops_vs_bandwidth", loglog_slope(band, dense));
  write_fit(os, "sparse_flops_vs_bandwidth", loglog_slope(band, sparse));
  write_fit(os, "dense_flops_vs_L", loglog_slope(l, dense));
  write_fit(os, "sparse_flops_vs_L", loglog_slope(l, sparse));
  write_fit(os, "ms_dense_vs_bandwidth", loglog_slope(band, md));
  write_fit(os, "ms_sparse_vs_bandwidth", loglog_slope(band, ms));
}

MemoryRow memory_row(int L) {
  MemoryRow row{L, 0, 0};
  for (int J = 0; J <= L; ++J)
    for (int l = 0; l <= L; ++l)
      for (int lp = 0; lp <= L; ++lp) {
        if (!satisfies_triangle(J, l, lp)) continue;
        const auto& t = shared_cg_real(J, l, lp);
        row.dense_bytes += t.dense_size() * sizeof(double);
        row.sparse_bytes += t.entries.size() * sizeof(CGEntry);
      }
  return row;
}

void run_memory(const BenchConfig& cfg, std::ostream& os) {
  os << "# real-basis tables for J, l, l' <= L; dense = cells * " << sizeof(double) << " B, sparse = entries * "
     << sizeof(CGEntry) << " B\n";
  os << "L,dense_bytes,sparse_bytes\n";
  for (int L : cfg.l_list) {
    const auto row = memory_row(L);
    os << row.L << ',' << row.dense_bytes << ',' << row.sparse_bytes << '\n';
  }
}

void run_flops(const BenchConfig& cfg, std::ostream& os) {
  os << "L,mode,dense_flops,sparse_flops,ratio\n";
  for (int L : cfg.l_list) {
    const auto row = flop_row(L, cfg.mode);
    os << L << ',' << (cfg.mode == ChannelMode::full ? "full" : "elementwise") << ',' << row.dense << ','
       << row.sparse << ',' << static_cast<double>(row.sparse) / static_cast<double>(row.dense) << '\n';
  }
}

bool run_suites(const BenchConfig& cfg, std::ostream& os, std::vector<CaseResult>* results) {
  std::vector<Case> cases;
  const bool all = cfg.suite == Suite::all;
  if (all || cfg.suite == Suite::equivariance) equivariance_cases(cfg, cases);
  if (all || cfg.suite == Suite::oracle) oracle_cases(cfg, cases);
  if (all || cfg.suite == Suite::permutation) permutation_cases(cfg, cases);
  const auto out = execute(cases, cfg.parallel, cfg.threads);
  bool ok = true;
  for (const auto& r : out) {
    nlohmann::json line{{"suite", r.suite}, {"case", r.name},   {"metric", r.metric},
                        {"value", r.value}, {"threshold", r.threshold}, {"pass", r.pass}};
    os << line.dump() << '\n';
    ok = ok && r.pass;
  }
  if (results) *results = out;
  return ok;
}

}  // namespace cgt::bench
