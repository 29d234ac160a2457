// cgbench: correctness suites (JSON lines) and scaling tables (CSV).
//
//   cgbench --suite oracle
//   cgbench --suite scaling-N --n 256,1024,4096 --out n.csv
//   cgbench --suite permutation --graph edges.txt
//
// Exit codes: 0 pass, 1 suite failure, 2 usage error.

#include <CLI11.hpp>

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <memory>
#include <random>
#include <thread>

#include "bench.hpp"
#include "cgt/attention_block.hpp"
#include "cgt/oracles.hpp"
#include "cgt/so3_tables.hpp"

namespace {

unsigned worker_cap() {
  unsigned n = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("CGBENCH_THREADS")) {
    const long cap = std::strtol(env, nullptr, 10);
    if (cap > 0) n = std::min(n, static_cast<unsigned>(cap));
  }
  return n;
}

cgt::BlockConfig params_config(const cgt::bench::BenchConfig& cfg) {
  cgt::BlockConfig bc;
  bc.signature = cgt::IrrepsSignature::make({{0, 2}, {1, 2}, {2, 2}, {3, 2}}, cfg.heads);
  bc.max_out_degree = 3;
  bc.channel_mode = cfg.mode;
  bc.seed = cfg.seed;
  return bc;
}

// Rotation check on a loaded block, reported like a suite case.
bool check_loaded(const cgt::AttentionBlock& block, std::uint64_t seed, std::ostream& os) {
  const auto& sig = block.config().signature;
  cgt::EquivariantFeature f(sig, 16);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (auto& v : f.data()) v = normal(rng);
  auto rep = cgt::wigner_d(sig, cgt::oracles::random_rotation(seed));
  const double err = cgt::relative_error(block.attend(cgt::rotate(f, rep)), cgt::rotate(block.attend(f), rep));
  const bool pass = err < 1e-9;
  os << R"({"suite":"params","case":"loaded block )" << sig.to_string() << R"(","metric":"rel_error","value":)" << err
     << R"(,"threshold":1e-09,"pass":)" << (pass ? "true" : "false") << "}\n";
  return pass;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Clebsch-Gordan attention kernel benchmarks and correctness suites"};
  std::string suite = "all";
  std::vector<std::size_t> n_list;
  std::vector<int> l_list;
  std::string mode = "full";
  std::string out_path, dump_path, load_path, graph_path;
  cgt::bench::BenchConfig cfg;

  app.add_option("--suite", suite, "equivariance|oracle|scaling-N|scaling-L|memory|permutation|flops|all")
      ->capture_default_str();
  app.add_option("--n", n_list, "token counts for scaling-N")->delimiter(',');
  app.add_option("--l", l_list, "degrees for scaling-L / memory / flops")->delimiter(',');
  app.add_option("--mode", mode, "full|elementwise")->check(CLI::IsMember({"full", "elementwise"}))->capture_default_str();
  app.add_option("--heads", cfg.heads, "head count")->check(CLI::PositiveNumber)->capture_default_str();
  app.add_option("--seed", cfg.seed, "random seed")->capture_default_str();
  app.add_option("--reps", cfg.repetitions, "timed repetitions per cell")->check(CLI::PositiveNumber)->capture_default_str();
  app.add_option("--out", out_path, "output file (default stdout)");
  app.add_option("--dump-params", dump_path, "write a seeded block as CGB1");
  app.add_option("--load-params", load_path, "read a CGB1 block and check it");
  app.add_option("--graph", graph_path, "edge list for the permutation suite");
  app.add_flag("--parallel", cfg.parallel, "run correctness cases on worker threads");
  app.add_flag("--fault-inject", cfg.fault_inject, "corrupt one CG coefficient (negative control)");

  try {
    app.parse(argc, argv);
    cfg.suite = cgt::bench::parse_suite(suite);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  } catch (const cgt::Error& e) {
    std::cerr << "cgbench: " << e.what() << '\n';
    return 2;
  }
  if (!n_list.empty()) cfg.n_list = n_list;
  if (!l_list.empty()) cfg.l_list = l_list;
  cfg.mode = mode == "full" ? cgt::ChannelMode::full : cgt::ChannelMode::elementwise;
  if (!graph_path.empty()) cfg.graph_path = graph_path;
  cfg.threads = worker_cap();

  std::ofstream file;
  if (!out_path.empty()) {
    file.open(out_path);
    if (!file) {
      std::cerr << "cgbench: cannot open " << out_path << '\n';
      return 2;
    }
  }
  std::ostream& os = out_path.empty() ? std::cout : file;

  using cgt::bench::Suite;
  try {
    bool ok = true;
    if (!dump_path.empty()) {
      std::ofstream bin(dump_path, std::ios::binary);
      if (!bin) throw cgt::Error(cgt::ErrorCode::InvalidArgument, "cannot open " + dump_path);
      cgt::save_params(bin, cgt::AttentionBlock(params_config(cfg)));
    }
    if (!load_path.empty()) {
      std::ifstream bin(load_path, std::ios::binary);
      if (!bin) throw cgt::Error(cgt::ErrorCode::InvalidArgument, "cannot open " + load_path);
      ok = check_loaded(cgt::load_params(bin), cfg.seed, os) && ok;
    }
    const bool all = cfg.suite == Suite::all;
    if (all || cfg.suite == Suite::equivariance || cfg.suite == Suite::oracle || cfg.suite == Suite::permutation) {
      ok = cgt::bench::run_suites(cfg, os) && ok;
    }
    if (all || cfg.suite == Suite::flops) {
      if (all) os << "# suite flops\n";
      cgt::bench::run_flops(cfg, os);
    }
    if (all || cfg.suite == Suite::memory) {
      if (all) os << "# suite memory\n";
      cgt::bench::run_memory(cfg, os);
    }
    if (all || cfg.suite == Suite::scaling_l) {
      if (all) os << "# suite scaling-L\n";
      cgt::bench::run_scaling_l(cfg, os);
    }
    if (all || cfg.suite == Suite::scaling_n) {
      if (all) os << "# suite scaling-N\n";
      cgt::bench::run_scaling_n(cfg, os);
    }
    return ok ? 0 : 1;
  } catch (const cgt::Error& e) {
    std::cerr << "cgbench: " << e.what() << '\n';
    return e.code() == cgt::ErrorCode::InvalidArgument || e.code() == cgt::ErrorCode::ParseError ? 2 : 1;
  }
}
