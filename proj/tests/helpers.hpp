#pragma once

#include <cstdint>
#include <random>

#include "cgt/irreps.hpp"
#include "cgt/oracles.hpp"
#include "cgt/so3_tables.hpp"

namespace cgt::testing {

inline EquivariantFeature random_feature(const IrrepsSignature& sig, std::size_t tokens, std::uint64_t seed) {
  EquivariantFeature f(sig, tokens);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (auto& v : f.data()) v = normal(rng);
  return f;
}

inline std::vector<double> random_vector(std::size_t n, std::uint64_t seed) {
  std::vector<double> v(n);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (auto& x : v) x = normal(rng);
  return v;
}

/// Every degree 0..L with multiplicity m.
inline IrrepsSignature full_signature(int L, int m, int heads) {
  std::vector<Irrep> e;
  for (int l = 0; l <= L; ++l) e.push_back({l, m});
  return IrrepsSignature::make(e, heads);
}

inline EquivariantFeature rotated(const EquivariantFeature& f, std::uint64_t seed) {
  return rotate(f, wigner_d(f.signature(), oracles::random_rotation(seed)));
}

inline oracles::TableProvider real_tables() {
  return [](int J, int l, int lp) { return cg_real(J, l, lp); };
}

}  // namespace cgt::testing
