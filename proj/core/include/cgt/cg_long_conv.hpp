#pragma once

#include <cstdint>

#include "cgt/irreps.hpp"
#include "cgt/tensor_product.hpp"

namespace cgt {

enum class Boundary : std::uint8_t {
  circular,  ///< k_{i-j} indexed mod N
  linear,    ///< i-j outside [0, N) contributes zero
};

/// Long convolution (q * k)^J_i = sum_j C^J (q_j (x) k_{i-j}).
struct ConvConfig {
  ProductPlan plan;
  Boundary boundary = Boundary::circular;

  /// N for circular, the next power of two >= 2N-1 for linear.
  std::size_t fft_size(std::size_t tokens) const;
};

ConvConfig make_conv_config(const IrrepsSignature& q, const IrrepsSignature& k, const std::vector<int>& out_degrees,
                            ChannelMode mode, Boundary boundary = Boundary::circular,
                            PathParity parity = PathParity::all);

/// O(N^2) reference: explicit double loop over (i, j).
EquivariantFeature conv_direct(const ConvConfig& cfg, const EquivariantFeature& q, const EquivariantFeature& k);

/// O(N log N): FFT every lane along tokens, contract at each frequency,
/// inverse FFT. Throws NumericalConsistency if the imaginary residue of the
/// inverse transform exceeds 1e-10 of the output norm.
EquivariantFeature conv_fft(const ConvConfig& cfg, const EquivariantFeature& q, const EquivariantFeature& k);

struct ConvGradients {
  EquivariantFeature grad_q;
  EquivariantFeature grad_k;
};

/// Reverse-mode pass of conv_fft. Both gradients are correlations of
/// grad_out with the other operand through the transposed CG array.
ConvGradients conv_adjoint(const ConvConfig& cfg, const EquivariantFeature& grad_out, const EquivariantFeature& q,
                           const EquivariantFeature& k);

/// Token-axis transforms of every lane. `size` >= f.tokens(); shorter inputs
/// are zero padded.
ComplexFeature lane_fft(const EquivariantFeature& f, std::size_t size);
/// Inverse of lane_fft keeping the first `tokens` outputs. The 2-norm of the
/// discarded imaginary parts is written to `imag_norm` when given.
EquivariantFeature lane_ifft(ComplexFeature spectrum, std::size_t tokens, double* imag_norm = nullptr);

/// Cyclic token shift: out_{(i + shift) mod N} = f_i.
EquivariantFeature shift_tokens(const EquivariantFeature& f, std::size_t shift);

}  // namespace cgt
