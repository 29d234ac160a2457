#pragma once

#include <complex>
#include <cstdint>
#include <span>
#include <vector>

#include "cgt/cg_table.hpp"
#include "cgt/irreps.hpp"

namespace cgt {

enum class ChannelMode : std::uint8_t {
  full,         ///< every channel of a with every channel of b (m * m' outputs)
  elementwise,  ///< channel c of a with channel c of b (requires m == m')
};

enum class PathParity : std::uint8_t {
  all,        ///< every triangle-admissible path
  even_only,  ///< drop paths with l + l' + J odd
};

/// One (l, l', J) contraction of a product plan.
struct ProductPath {
  int l = 0;
  int lp = 0;
  int J = 0;
  int channels = 0;       ///< output channels produced by this path
  int out_channel0 = 0;   ///< first output channel inside the J block
  CGTable table;          ///< real basis
  std::vector<double> dense;
  std::uint64_t dense_flops = 0;   ///< per (token, head)
  std::uint64_t sparse_flops = 0;  ///< per (token, head)

  // Resolved layout, filled by plan_product.
  struct PackedEntry {
    std::uint16_t M, m, mp;
    double value;
  };
  std::vector<PackedEntry> packed;
  std::size_t a_offset = 0;
  std::size_t b_offset = 0;
  std::size_t out_offset = 0;
  int a_channels = 0;
  int b_channels = 0;
};

struct ProductPlan {
  IrrepsSignature in_a;
  IrrepsSignature in_b;
  IrrepsSignature out;  ///< empty when no path is admissible
  ChannelMode mode = ChannelMode::full;
  PathParity parity = PathParity::all;
  std::vector<ProductPath> paths;  ///< sorted by (l, l'), then J

  std::uint64_t dense_flops() const;   ///< per (token, head)
  std::uint64_t sparse_flops() const;  ///< per (token, head)
};

/// Enumerates every admissible path. Multiple paths into the same J are
/// concatenated along channels in (l, l') order. Throws HeadMismatch,
/// ChannelMismatch (elementwise mode with m_l(a) != m_l'(b) on some path).
ProductPlan plan_product(const IrrepsSignature& a, const IrrepsSignature& b, const std::vector<int>& out_degrees,
                         ChannelMode mode, PathParity parity = PathParity::all);

/// Accumulates flop counts from the closed-form model.
struct FlopCounter {
  std::uint64_t dense = 0;
  std::uint64_t sparse = 0;
};

EquivariantFeature contract_dense(const ProductPlan& plan, const EquivariantFeature& a, const EquivariantFeature& b,
                                  FlopCounter* counter = nullptr);
EquivariantFeature contract_sparse(const ProductPlan& plan, const EquivariantFeature& a, const EquivariantFeature& b,
                                   FlopCounter* counter = nullptr);

/// Per-slice kernels. `out` is accumulated into (+=). Shared with the Fourier
/// and spectral convolution paths.
void contract_slice(const ProductPlan& plan, std::span<const double> a, std::span<const double> b,
                    std::span<double> out);
void contract_slice(const ProductPlan& plan, std::span<const std::complex<double>> a,
                    std::span<const std::complex<double>> b, std::span<std::complex<double>> out);

/// Transposed kernels of the bilinear map out = P(a, b):
///   grad_a += d<g, P(a, b)>/da with b fixed, grad_b likewise.
void contract_slice_adjoint_a(const ProductPlan& plan, std::span<const double> g, std::span<const double> b,
                              std::span<double> grad_a);
void contract_slice_adjoint_b(const ProductPlan& plan, std::span<const double> g, std::span<const double> a,
                              std::span<double> grad_b);
void contract_slice_adjoint_a(const ProductPlan& plan, std::span<const std::complex<double>> g,
                              std::span<const std::complex<double>> b, std::span<std::complex<double>> grad_a);
void contract_slice_adjoint_b(const ProductPlan& plan, std::span<const std::complex<double>> g,
                              std::span<const std::complex<double>> a, std::span<std::complex<double>> grad_b);

struct ProductGradients {
  EquivariantFeature grad_a;
  EquivariantFeature grad_b;
};
ProductGradients contract_adjoint(const ProductPlan& plan, const EquivariantFeature& grad_out,
                                  const EquivariantFeature& a, const EquivariantFeature& b);

struct CrossProductReport {
  std::size_t cases = 0;
  double max_error = 0.0;
  double tolerance = 1e-13;
  bool passed = false;
};

/// Checks sqrt(2) * C^1_11 (q (x) k) == q x k on random vectors in the
/// (y, z, x) component order.
CrossProductReport cross_product_check(std::size_t cases = 100, std::uint64_t seed = 7);

}  // namespace cgt
