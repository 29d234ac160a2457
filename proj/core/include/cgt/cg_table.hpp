#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

namespace cgt {

enum class Basis : std::uint8_t { complex, real };

/// Component labels are signed (-l..l); array index is label + degree.
struct CGEntry {
  std::int16_t M = 0;
  std::int16_t m = 0;
  std::int16_t mp = 0;
  double value = 0.0;
};

/// Sparse Clebsch-Gordan coefficients projecting l (x) lp onto J.
struct CGTable {
  int J = 0;
  int l = 0;
  int lp = 0;
  Basis basis = Basis::real;
  std::vector<CGEntry> entries;

  bool empty() const { return entries.empty(); }
  std::size_t rows() const { return static_cast<std::size_t>(2 * J + 1); }
  std::size_t cols() const { return static_cast<std::size_t>((2 * l + 1) * (2 * lp + 1)); }
  std::size_t dense_size() const { return rows() * cols(); }

  std::size_t index(int M, int m, int mp) const {
    return (static_cast<std::size_t>(M + J) * static_cast<std::size_t>(2 * l + 1) +
            static_cast<std::size_t>(m + l)) *
               static_cast<std::size_t>(2 * lp + 1) +
           static_cast<std::size_t>(mp + lp);
  }

  /// Row-major [M][m][mp] array.
  std::vector<double> dense() const {
    std::vector<double> out(dense_size(), 0.0);
    for (const auto& e : entries) out[index(e.M, e.m, e.mp)] = e.value;
    return out;
  }
};

}  // namespace cgt
