#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "cgt/cg_long_conv.hpp"
#include "cgt/irreps.hpp"
#include "cgt/linalg.hpp"
#include "cgt/tensor_product.hpp"

namespace cgt {

/// Per-degree channel mixing W^l (x) I_{2l+1}. Degrees of `out` that are
/// absent from `in` produce zeros (plus bias for l = 0).
struct EquivariantLinear {
  IrrepsSignature in;
  IrrepsSignature out;
  std::vector<Matrix> weights;  ///< one per out entry: m_out x m_in (0 columns if absent)
  std::vector<double> bias;     ///< m_out(0) values when enabled, else empty

  static EquivariantLinear zeros(const IrrepsSignature& in, const IrrepsSignature& out, bool with_bias);
  static EquivariantLinear identity(const IrrepsSignature& in, const IrrepsSignature& out);

  EquivariantFeature apply(const EquivariantFeature& x) const;
  /// Returns dL/dx; accumulates parameter gradients into `grad` (same shape).
  EquivariantFeature backward(const EquivariantFeature& grad_out, const EquivariantFeature& x,
                              EquivariantLinear& grad) const;
};

/// Two pointwise affine stages with SiLU between and a logistic squash,
/// mapping per-channel norms of a feature to per-channel gates in (0, 1).
struct GateNetwork {
  IrrepsSignature signature;  ///< the gated feature's layout
  Matrix w1;                  ///< hidden x channels
  std::vector<double> b1;
  Matrix w2;  ///< channels x hidden
  std::vector<double> b2;

  static GateNetwork zeros(const IrrepsSignature& signature, int hidden);

  std::size_t channels() const { return w1.cols(); }
  /// Rotation-invariant inputs: Euclidean norm of every (token, head, degree,
  /// channel) block, laid out [token][head][channel].
  std::vector<double> invariants(const EquivariantFeature& u) const;
  /// Gate values with the same layout as invariants().
  std::vector<double> gates(const EquivariantFeature& u) const;
  EquivariantFeature apply(const EquivariantFeature& u) const;
};

enum class GatingMode : std::uint8_t {
  cg,      ///< value tensor product C(u (x) v)
  concat,  ///< channel concatenation of u and v
};

struct BlockConfig {
  IrrepsSignature signature;
  int max_out_degree = 2;
  ChannelMode channel_mode = ChannelMode::full;
  GatingMode gating_mode = GatingMode::cg;
  Boundary boundary = Boundary::circular;
  PathParity parity = PathParity::all;
  int gate_hidden = 16;
  std::uint64_t seed = 0;
};

struct NamedSpan {
  std::string name;
  std::span<double> values;
};

struct BlockParams {
  EquivariantLinear wq;
  EquivariantLinear wk;
  EquivariantLinear wv;
  GateNetwork gate;
  EquivariantLinear mixer;  ///< conv output -> value-product operand
  EquivariantLinear out;    ///< product output -> input multiplicities

  /// Every parameter array in declaration order. Spans alias this object.
  std::vector<NamedSpan> groups();
  BlockParams zeros_like() const;
};

/// One Clebsch-Gordan attention layer:
///   f -> center type-1 -> (q, k, v) -> u = conv_fft(q, k) -> gate(u)
///     -> mixer -> C(u (x) v) or [u, v] -> out linear -> + residual + mean.
class AttentionBlock {
 public:
  /// Seeded initialization: linear maps U(-1/sqrt(m_in), 1/sqrt(m_in)),
  /// gate output bias +4. Throws ChannelMismatch for elementwise mode on a
  /// signature with non-uniform multiplicities.
  explicit AttentionBlock(BlockConfig config);

  const BlockConfig& config() const { return config_; }
  const BlockParams& params() const { return params_; }
  BlockParams& params() { return params_; }
  const ConvConfig& conv() const { return conv_; }
  const ProductPlan& value_plan() const { return value_plan_; }
  const IrrepsSignature& product_signature() const { return product_sig_; }

  struct QKV {
    EquivariantFeature q, k, v;
  };
  QKV project_qkv(const EquivariantFeature& f) const;
  EquivariantFeature gate(const EquivariantFeature& u) const { return params_.gate.apply(u); }
  EquivariantFeature attend(const EquivariantFeature& f_in) const;

  struct Gradients {
    EquivariantFeature input;
    BlockParams params;
  };
  /// Reverse-mode pass. Not defined when a local branch is attached
  /// (throws InvalidArgument).
  Gradients attend_adjoint(const EquivariantFeature& grad_out, const EquivariantFeature& f_in) const;

  /// External local model whose output (same signature) is summed into the
  /// attention output before the residual.
  using LocalBranch = std::function<EquivariantFeature(const EquivariantFeature&)>;
  void set_local_branch(LocalBranch branch) { local_ = std::move(branch); }

  void zero_parameters();
  /// Output bias of the gate network large enough that every gate is 1.0.
  void saturate_gates();

 private:
  struct Forward;
  Forward run(const EquivariantFeature& f_in) const;

  BlockConfig config_;
  ConvConfig conv_;
  IrrepsSignature mid_sig_;
  ProductPlan value_plan_;
  IrrepsSignature product_sig_;
  BlockParams params_;
  LocalBranch local_;
};

/// Sequential application. Throws SignatureMismatch when adjacent blocks or
/// the input disagree.
EquivariantFeature stack(std::span<const AttentionBlock> blocks, const EquivariantFeature& f_in);

/// "CGB1" container: magic, version, seed, config, then every parameter group
/// in declaration order as 64-bit little-endian floats.
void save_params(std::ostream& os, const AttentionBlock& block);
AttentionBlock load_params(std::istream& is);

}  // namespace cgt
