#include "cgt/attention_block.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <istream>
#include <ostream>
#include <random>

namespace cgt {

namespace {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }
double silu(double x) { return x * sigmoid(x); }
double silu_grad(double x) {
  const double s = sigmoid(x);
  return s * (1.0 + x * (1.0 - s));
}

void fill_uniform(std::span<double> values, double bound, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> dist(-bound, bound);
  for (auto& v : values) v = dist(rng);
}

void check_signature(const EquivariantFeature& f, const IrrepsSignature& sig, const char* what) {
  if (!(f.signature() == sig)) {
    throw Error(ErrorCode::ShapeMismatch, std::string(what) + ": expected signature " + sig.to_string() + " got " +
                                              f.signature().to_string());
  }
}

// Per-degree channel concatenation [a, b].
IrrepsSignature concat_signature(const IrrepsSignature& a, const IrrepsSignature& b) {
  std::vector<Irrep> entries;
  for (int l = 0; l <= std::max(a.max_degree(), b.max_degree()); ++l) {
    const int m = a.multiplicity(l) + b.multiplicity(l);
    if (m > 0) entries.push_back({l, m});
  }
  return IrrepsSignature::make(entries, a.heads());
}

EquivariantFeature concat_channels(const IrrepsSignature& sig, const EquivariantFeature& a,
                                   const EquivariantFeature& b) {
  EquivariantFeature out(sig, a.tokens());
  for (std::size_t t = 0; t < a.tokens(); ++t) {
    for (int h = 0; h < a.heads(); ++h) {
      auto dst = out.slice(t, h);
      for (const auto& e : sig.entries()) {
        const int ma = a.signature().multiplicity(e.degree);
        const std::size_t dim = irrep_dim(e.degree);
        const std::size_t base = sig.degree_offset(e.degree);
        if (ma > 0) {
          auto src = a.slice(t, h).subspan(a.signature().degree_offset(e.degree), static_cast<std::size_t>(ma) * dim);
          std::copy(src.begin(), src.end(), dst.begin() + static_cast<std::ptrdiff_t>(base));
        }
        const int mb = b.signature().multiplicity(e.degree);
        if (mb > 0) {
          auto src = b.slice(t, h).subspan(b.signature().degree_offset(e.degree), static_cast<std::size_t>(mb) * dim);
          std::copy(src.begin(), src.end(), dst.begin() + static_cast<std::ptrdiff_t>(base + static_cast<std::size_t>(ma) * dim));
        }
      }
    }
  }
  return out;
}

void split_channels(const EquivariantFeature& g, EquivariantFeature& ga, EquivariantFeature& gb) {
  const auto& sig = g.signature();
  for (std::size_t t = 0; t < g.tokens(); ++t) {
    for (int h = 0; h < g.heads(); ++h) {
      auto src = g.slice(t, h);
      for (const auto& e : sig.entries()) {
        const int ma = ga.signature().multiplicity(e.degree);
        const int mb = gb.signature().multiplicity(e.degree);
        const std::size_t dim = irrep_dim(e.degree);
        const std::size_t base = sig.degree_offset(e.degree);
        if (ma > 0) {
          auto dst = ga.slice(t, h).subspan(ga.signature().degree_offset(e.degree), static_cast<std::size_t>(ma) * dim);
          std::copy_n(src.begin() + static_cast<std::ptrdiff_t>(base), dst.size(), dst.begin());
        }
        if (mb > 0) {
          auto dst = gb.slice(t, h).subspan(gb.signature().degree_offset(e.degree), static_cast<std::size_t>(mb) * dim);
          std::copy_n(src.begin() + static_cast<std::ptrdiff_t>(base + static_cast<std::size_t>(ma) * dim), dst.size(),
                      dst.begin());
        }
      }
    }
  }
}

void add_into(EquivariantFeature& dst, const EquivariantFeature& src) {
  auto d = dst.data();
  auto s = src.data();
  for (std::size_t i = 0; i < d.size(); ++i) d[i] += s[i];
}

// Adjoint of token-mean removal on the degree-1 lanes: itself.
EquivariantFeature center_gradient(const EquivariantFeature& g) {
  if (!g.signature().has_degree(1)) return g;
  return subtract_mean(g, 1).centered;
}

}  // namespace

// ---------------------------------------------------------------------------
// EquivariantLinear

EquivariantLinear EquivariantLinear::zeros(const IrrepsSignature& in, const IrrepsSignature& out, bool with_bias) {
  if (in.heads() != out.heads()) throw Error(ErrorCode::HeadMismatch, "linear map across different head counts");
  EquivariantLinear lin{in, out, {}, {}};
  for (const auto& e : out.entries()) {
    lin.weights.emplace_back(static_cast<std::size_t>(e.multiplicity),
                             static_cast<std::size_t>(in.multiplicity(e.degree)));
  }
  if (with_bias && out.has_degree(0)) lin.bias.assign(static_cast<std::size_t>(out.multiplicity(0)), 0.0);
  return lin;
}

EquivariantLinear EquivariantLinear::identity(const IrrepsSignature& in, const IrrepsSignature& out) {
  auto lin = zeros(in, out, false);
  for (auto& w : lin.weights) {
    for (std::size_t i = 0; i < std::min(w.rows(), w.cols()); ++i) w(i, i) = 1.0;
  }
  return lin;
}

EquivariantFeature EquivariantLinear::apply(const EquivariantFeature& x) const {
  check_signature(x, in, "EquivariantLinear::apply");
  EquivariantFeature y(out, x.tokens());
  const auto out_entries = out.entries();
  for (std::size_t t = 0; t < x.tokens(); ++t) {
    for (int h = 0; h < x.heads(); ++h) {
      auto xs = x.slice(t, h);
      auto ys = y.slice(t, h);
      for (std::size_t idx = 0; idx < out_entries.size(); ++idx) {
        const auto& e = out_entries[idx];
        const Matrix& w = weights[idx];
        const std::size_t dim = irrep_dim(e.degree);
        const std::size_t ybase = out.degree_offset(e.degree);
        if (w.cols() > 0) {
          const std::size_t xbase = in.degree_offset(e.degree);
          for (std::size_t o = 0; o < w.rows(); ++o) {
            for (std::size_t i = 0; i < w.cols(); ++i) {
              const double wi = w(o, i);
              for (std::size_t c = 0; c < dim; ++c) ys[ybase + o * dim + c] += wi * xs[xbase + i * dim + c];
            }
          }
        }
        if (e.degree == 0 && !bias.empty()) {
          for (std::size_t o = 0; o < bias.size(); ++o) ys[ybase + o] += bias[o];
        }
      }
    }
  }
  return y;
}

EquivariantFeature EquivariantLinear::backward(const EquivariantFeature& grad_out, const EquivariantFeature& x,
                                               EquivariantLinear& grad) const {
  check_signature(grad_out, out, "EquivariantLinear::backward");
  check_signature(x, in, "EquivariantLinear::backward input");
  EquivariantFeature gx(in, x.tokens());
  const auto out_entries = out.entries();
  for (std::size_t t = 0; t < x.tokens(); ++t) {
    for (int h = 0; h < x.heads(); ++h) {
      auto xs = x.slice(t, h);
      auto gs = grad_out.slice(t, h);
      auto gxs = gx.slice(t, h);
      for (std::size_t idx = 0; idx < out_entries.size(); ++idx) {
        const auto& e = out_entries[idx];
        const Matrix& w = weights[idx];
        Matrix& gw = grad.weights[idx];
        const std::size_t dim = irrep_dim(e.degree);
        const std::size_t ybase = out.degree_offset(e.degree);
        if (w.cols() > 0) {
          const std::size_t xbase = in.degree_offset(e.degree);
          for (std::size_t o = 0; o < w.rows(); ++o) {
            for (std::size_t i = 0; i < w.cols(); ++i) {
              double acc = 0.0;
              const double wi = w(o, i);
              for (std::size_t c = 0; c < dim; ++c) {
                acc += gs[ybase + o * dim + c] * xs[xbase + i * dim + c];
                gxs[xbase + i * dim + c] += wi * gs[ybase + o * dim + c];
              }
              gw(o, i) += acc;
            }
          }
        }
        if (e.degree == 0 && !bias.empty()) {
          for (std::size_t o = 0; o < bias.size(); ++o) grad.bias[o] += gs[ybase + o];
        }
      }
    }
  }
  return gx;
}

// ---------------------------------------------------------------------------
// GateNetwork

GateNetwork GateNetwork::zeros(const IrrepsSignature& signature, int hidden) {
  std::size_t channels = 0;
  for (const auto& e : signature.entries()) channels += static_cast<std::size_t>(e.multiplicity);
  const auto h = static_cast<std::size_t>(hidden);
  return GateNetwork{signature, Matrix(h, channels), std::vector<double>(h, 0.0), Matrix(channels, h),
                     std::vector<double>(channels, 0.0)};
}

std::vector<double> GateNetwork::invariants(const EquivariantFeature& u) const {
  check_signature(u, signature, "GateNetwork");
  const std::size_t C = channels();
  std::vector<double> norms(u.tokens() * static_cast<std::size_t>(u.heads()) * C);
  std::size_t idx = 0;
  for (std::size_t t = 0; t < u.tokens(); ++t) {
    for (int h = 0; h < u.heads(); ++h) {
      auto s = u.slice(t, h);
      std::size_t off = 0;
      for (const auto& e : signature.entries()) {
        const std::size_t dim = irrep_dim(e.degree);
        for (int c = 0; c < e.multiplicity; ++c) {
          double sq = 0.0;
          for (std::size_t k = 0; k < dim; ++k) sq += s[off + k] * s[off + k];
          norms[idx++] = std::sqrt(sq);
          off += dim;
        }
      }
    }
  }
  return norms;
}

std::vector<double> GateNetwork::gates(const EquivariantFeature& u) const {
  const std::size_t C = channels();
  const std::size_t H = w1.rows();
  auto inv = invariants(u);
  std::vector<double> out(inv.size());
  std::vector<double> hidden(H);
  for (std::size_t s = 0; s * C < inv.size(); ++s) {
    const double* n = inv.data() + s * C;
    for (std::size_t j = 0; j < H; ++j) {
      double a = b1[j];
      for (std::size_t c = 0; c < C; ++c) a += w1(j, c) * n[c];
      hidden[j] = silu(a);
    }
    for (std::size_t c = 0; c < C; ++c) {
      double z = b2[c];
      for (std::size_t j = 0; j < H; ++j) z += w2(c, j) * hidden[j];
      out[s * C + c] = sigmoid(z);
    }
  }
  return out;
}

EquivariantFeature GateNetwork::apply(const EquivariantFeature& u) const {
  const auto g = gates(u);
  EquivariantFeature out = u;
  const std::size_t C = channels();
  std::size_t s = 0;
  for (std::size_t t = 0; t < u.tokens(); ++t) {
    for (int h = 0; h < u.heads(); ++h, ++s) {
      auto dst = out.slice(t, h);
      std::size_t off = 0, c = 0;
      for (const auto& e : signature.entries()) {
        const std::size_t dim = irrep_dim(e.degree);
        for (int ch = 0; ch < e.multiplicity; ++ch, ++c) {
          for (std::size_t k = 0; k < dim; ++k) dst[off + k] *= g[s * C + c];
          off += dim;
        }
      }
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// BlockParams

std::vector<NamedSpan> BlockParams::groups() {
  std::vector<NamedSpan> spans;
  auto add_linear = [&spans](const std::string& prefix, EquivariantLinear& lin) {
    const auto entries = lin.out.entries();
    for (std::size_t i = 0; i < entries.size(); ++i) {
      if (lin.weights[i].data().empty()) continue;
      spans.push_back({prefix + ".l" + std::to_string(entries[i].degree), lin.weights[i].data()});
    }
    if (!lin.bias.empty()) spans.push_back({prefix + ".bias", lin.bias});
  };
  add_linear("wq", wq);
  add_linear("wk", wk);
  add_linear("wv", wv);
  spans.push_back({"gate.w1", gate.w1.data()});
  spans.push_back({"gate.b1", gate.b1});
  spans.push_back({"gate.w2", gate.w2.data()});
  spans.push_back({"gate.b2", gate.b2});
  add_linear("mixer", mixer);
  add_linear("out", out);
  return spans;
}

BlockParams BlockParams::zeros_like() const {
  return BlockParams{EquivariantLinear::zeros(wq.in, wq.out, !wq.bias.empty()),
                     EquivariantLinear::zeros(wk.in, wk.out, !wk.bias.empty()),
                     EquivariantLinear::zeros(wv.in, wv.out, !wv.bias.empty()),
                     GateNetwork::zeros(gate.signature, static_cast<int>(gate.w1.rows())),
                     EquivariantLinear::zeros(mixer.in, mixer.out, !mixer.bias.empty()),
                     EquivariantLinear::zeros(out.in, out.out, !out.bias.empty())};
}

// ---------------------------------------------------------------------------
// AttentionBlock

struct AttentionBlock::Forward {
  EquivariantFeature centered;
  std::vector<double> mean;
  EquivariantFeature q, k, v;
  EquivariantFeature u;
  EquivariantFeature gated;
  EquivariantFeature mixed;
  EquivariantFeature product;
  EquivariantFeature output;
};

AttentionBlock::AttentionBlock(BlockConfig config) : config_(std::move(config)) {
  const auto& sig = config_.signature;
  if (sig.empty()) throw Error(ErrorCode::InvalidArgument, "block signature is empty");
  if (config_.max_out_degree < 0) throw Error(ErrorCode::InvalidArgument, "negative max_out_degree");
  if (config_.gate_hidden < 1) throw Error(ErrorCode::InvalidArgument, "gate_hidden must be positive");
  int max_mult = 0;
  bool uniform = true;
  for (const auto& e : sig.entries()) {
    if (max_mult != 0 && e.multiplicity != max_mult) uniform = false;
    max_mult = std::max(max_mult, e.multiplicity);
  }
  if (config_.channel_mode == ChannelMode::elementwise && !uniform) {
    throw Error(ErrorCode::ChannelMismatch, "elementwise mode needs one multiplicity for every degree");
  }

  std::vector<int> conv_out;
  for (int J = 0; J <= config_.max_out_degree; ++J) conv_out.push_back(J);
  conv_ = make_conv_config(sig, sig, conv_out, config_.channel_mode, config_.boundary, config_.parity);
  const auto& u_sig = conv_.plan.out;
  if (u_sig.empty()) throw Error(ErrorCode::InvalidArgument, "no admissible query/key paths");

  std::vector<Irrep> mid;
  for (const auto& e : u_sig.entries()) {
    mid.push_back({e.degree, sig.has_degree(e.degree) ? sig.multiplicity(e.degree) : max_mult});
  }
  mid_sig_ = IrrepsSignature::make(mid, sig.heads());

  if (config_.gating_mode == GatingMode::cg) {
    value_plan_ = plan_product(mid_sig_, sig, sig.degrees(), config_.channel_mode, config_.parity);
    product_sig_ = value_plan_.out;
    if (product_sig_.empty()) throw Error(ErrorCode::InvalidArgument, "no admissible value paths");
  } else {
    product_sig_ = concat_signature(mid_sig_, sig);
  }

  params_.wq = EquivariantLinear::zeros(sig, sig, false);
  params_.wk = EquivariantLinear::zeros(sig, sig, false);
  params_.wv = EquivariantLinear::zeros(sig, sig, false);
  params_.gate = GateNetwork::zeros(u_sig, config_.gate_hidden);
  params_.mixer = EquivariantLinear::zeros(u_sig, mid_sig_, false);
  params_.out = EquivariantLinear::zeros(product_sig_, sig, true);

  std::mt19937_64 rng(config_.seed);
  auto init_linear = [&rng](EquivariantLinear& lin) {
    for (auto& w : lin.weights) {
      if (w.cols() > 0) fill_uniform(w.data(), 1.0 / std::sqrt(static_cast<double>(w.cols())), rng);
    }
  };
  init_linear(params_.wq);
  init_linear(params_.wk);
  init_linear(params_.wv);
  fill_uniform(params_.gate.w1.data(), 1.0 / std::sqrt(static_cast<double>(params_.gate.w1.cols())), rng);
  fill_uniform(params_.gate.w2.data(), 1.0 / std::sqrt(static_cast<double>(params_.gate.w2.cols())), rng);
  std::fill(params_.gate.b2.begin(), params_.gate.b2.end(), 4.0);
  init_linear(params_.mixer);
  init_linear(params_.out);
}

AttentionBlock::QKV AttentionBlock::project_qkv(const EquivariantFeature& f) const {
  check_signature(f, config_.signature, "project_qkv");
  return {params_.wq.apply(f), params_.wk.apply(f), params_.wv.apply(f)};
}

AttentionBlock::Forward AttentionBlock::run(const EquivariantFeature& f_in) const {
  check_signature(f_in, config_.signature, "attend");
  Forward fw;
  if (config_.signature.has_degree(1)) {
    auto split = subtract_mean(f_in, 1);
    fw.centered = std::move(split.centered);
    fw.mean = std::move(split.mean);
  } else {
    fw.centered = f_in;
  }
  auto qkv = project_qkv(fw.centered);
  fw.q = std::move(qkv.q);
  fw.k = std::move(qkv.k);
  fw.v = std::move(qkv.v);
  fw.u = conv_fft(conv_, fw.q, fw.k);
  fw.gated = params_.gate.apply(fw.u);
  fw.mixed = params_.mixer.apply(fw.gated);
  if (config_.gating_mode == GatingMode::cg) {
    fw.product = contract_sparse(value_plan_, fw.mixed, fw.v);
  } else {
    fw.product = concat_channels(product_sig_, fw.mixed, fw.v);
  }
  fw.output = params_.out.apply(fw.product);
  return fw;
}

EquivariantFeature AttentionBlock::attend(const EquivariantFeature& f_in) const {
  auto fw = run(f_in);
  EquivariantFeature out = std::move(fw.output);
  if (local_) {
    auto extra = local_(fw.centered);
    check_signature(extra, config_.signature, "local branch");
    add_into(out, extra);
  }
  // centered + attention, then re-add the type-1 mean: equals f_in + attention.
  add_into(out, fw.centered);
  if (!fw.mean.empty()) add_mean(out, 1, fw.mean);
  return out;
}

AttentionBlock::Gradients AttentionBlock::attend_adjoint(const EquivariantFeature& grad_out,
                                                         const EquivariantFeature& f_in) const {
  if (local_) throw Error(ErrorCode::InvalidArgument, "attend_adjoint does not differentiate a local branch");
  check_signature(grad_out, config_.signature, "attend_adjoint");
  const auto fw = run(f_in);
  Gradients g{EquivariantFeature(config_.signature, f_in.tokens()), params_.zeros_like()};

  // out = centered + out_linear(product) + mean
  auto g_product = params_.out.backward(grad_out, fw.product, g.params.out);

  EquivariantFeature g_mixed(mid_sig_, f_in.tokens());
  EquivariantFeature g_v(config_.signature, f_in.tokens());
  if (config_.gating_mode == GatingMode::cg) {
    auto pg = contract_adjoint(value_plan_, g_product, fw.mixed, fw.v);
    g_mixed = std::move(pg.grad_a);
    g_v = std::move(pg.grad_b);
  } else {
    split_channels(g_product, g_mixed, g_v);
  }

  auto g_gated = params_.mixer.backward(g_mixed, fw.gated, g.params.mixer);

  // gated_c = s_c(norms(u)) * u_c
  const auto& gate = params_.gate;
  const auto& u_sig = conv_.plan.out;
  const std::size_t C = gate.channels();
  const std::size_t H = gate.w1.rows();
  const auto norms = gate.invariants(fw.u);
  EquivariantFeature g_u(u_sig, f_in.tokens());
  std::vector<double> a(H), hid(H), s(C), g_s(C), g_z(C), g_a(H), g_n(C);
  std::size_t slice = 0;
  for (std::size_t t = 0; t < f_in.tokens(); ++t) {
    for (int h = 0; h < f_in.heads(); ++h, ++slice) {
      const double* n = norms.data() + slice * C;
      for (std::size_t j = 0; j < H; ++j) {
        a[j] = gate.b1[j];
        for (std::size_t c = 0; c < C; ++c) a[j] += gate.w1(j, c) * n[c];
        hid[j] = silu(a[j]);
      }
      for (std::size_t c = 0; c < C; ++c) {
        double z = gate.b2[c];
        for (std::size_t j = 0; j < H; ++j) z += gate.w2(c, j) * hid[j];
        s[c] = sigmoid(z);
      }
      auto us = fw.u.slice(t, h);
      auto gg = g_gated.slice(t, h);
      auto gus = g_u.slice(t, h);
      std::size_t off = 0, c = 0;
      for (const auto& e : u_sig.entries()) {
        const std::size_t dim = irrep_dim(e.degree);
        for (int ch = 0; ch < e.multiplicity; ++ch, ++c) {
          double acc = 0.0;
          for (std::size_t k = 0; k < dim; ++k) {
            acc += gg[off + k] * us[off + k];
            gus[off + k] += s[c] * gg[off + k];
          }
          g_s[c] = acc;
          off += dim;
        }
      }
      for (std::size_t cc = 0; cc < C; ++cc) {
        g_z[cc] = g_s[cc] * s[cc] * (1.0 - s[cc]);
        g.params.gate.b2[cc] += g_z[cc];
        for (std::size_t j = 0; j < H; ++j) g.params.gate.w2(cc, j) += g_z[cc] * hid[j];
      }
      for (std::size_t j = 0; j < H; ++j) {
        double gh = 0.0;
        for (std::size_t cc = 0; cc < C; ++cc) gh += gate.w2(cc, j) * g_z[cc];
        g_a[j] = gh * silu_grad(a[j]);
        g.params.gate.b1[j] += g_a[j];
        for (std::size_t cc = 0; cc < C; ++cc) g.params.gate.w1(j, cc) += g_a[j] * n[cc];
      }
      for (std::size_t cc = 0; cc < C; ++cc) {
        double acc = 0.0;
        for (std::size_t j = 0; j < H; ++j) acc += gate.w1(j, cc) * g_a[j];
        g_n[cc] = acc;
      }
      off = 0;
      c = 0;
      for (const auto& e : u_sig.entries()) {
        const std::size_t dim = irrep_dim(e.degree);
        for (int ch = 0; ch < e.multiplicity; ++ch, ++c) {
          if (n[c] > 0.0) {
            for (std::size_t k = 0; k < dim; ++k) gus[off + k] += g_n[c] * us[off + k] / n[c];
          }
          off += dim;
        }
      }
    }
  }

  auto cg = conv_adjoint(conv_, g_u, fw.q, fw.k);
  auto g_centered = params_.wq.backward(cg.grad_q, fw.centered, g.params.wq);
  add_into(g_centered, params_.wk.backward(cg.grad_k, fw.centered, g.params.wk));
  add_into(g_centered, params_.wv.backward(g_v, fw.centered, g.params.wv));
  // out = f_in + y(centered): the residual path bypasses the centering.
  g.input = center_gradient(g_centered);
  add_into(g.input, grad_out);
  return g;
}

void AttentionBlock::zero_parameters() {
  for (auto& group : params_.groups()) std::fill(group.values.begin(), group.values.end(), 0.0);
}

void AttentionBlock::saturate_gates() {
  std::fill(params_.gate.w2.data().begin(), params_.gate.w2.data().end(), 0.0);
  std::fill(params_.gate.b2.begin(), params_.gate.b2.end(), 40.0);
}

EquivariantFeature stack(std::span<const AttentionBlock> blocks, const EquivariantFeature& f_in) {
  EquivariantFeature f = f_in;
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    if (!(f.signature() == blocks[i].config().signature)) {
      throw Error(ErrorCode::SignatureMismatch, "block " + std::to_string(i) + " expects " +
                                                    blocks[i].config().signature.to_string() + " but receives " +
                                                    f.signature().to_string());
    }
    f = blocks[i].attend(f);
  }
  return f;
}

// ---------------------------------------------------------------------------
// CGB1 container

namespace {

constexpr std::array<char, 4> kMagic = {'C', 'G', 'B', '1'};
constexpr std::uint32_t kVersion = 1;

void put_u64(std::ostream& os, std::uint64_t v) {
  std::array<char, 8> b{};
  for (std::size_t i = 0; i < 8; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xFFU);
  os.write(b.data(), 8);
}
void put_u32(std::ostream& os, std::uint32_t v) {
  std::array<char, 4> b{};
  for (std::size_t i = 0; i < 4; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xFFU);
  os.write(b.data(), 4);
}
void put_u8(std::ostream& os, std::uint8_t v) { os.put(static_cast<char>(v)); }
void put_f64(std::ostream& os, double v) { put_u64(os, std::bit_cast<std::uint64_t>(v)); }

std::uint64_t get_uint(std::istream& is, std::size_t bytes) {
  std::array<unsigned char, 8> b{};
  if (!is.read(reinterpret_cast<char*>(b.data()), static_cast<std::streamsize>(bytes))) {
    throw Error(ErrorCode::ParseError, "CGB1 stream truncated");
  }
  std::uint64_t v = 0;
  for (std::size_t i = 0; i < bytes; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  return v;
}

}  // namespace

void save_params(std::ostream& os, const AttentionBlock& block) {
  const auto& cfg = block.config();
  os.write(kMagic.data(), 4);
  put_u32(os, kVersion);
  put_u64(os, cfg.seed);
  put_u32(os, static_cast<std::uint32_t>(cfg.signature.heads()));
  put_u32(os, static_cast<std::uint32_t>(cfg.signature.entries().size()));
  for (const auto& e : cfg.signature.entries()) {
    put_u32(os, static_cast<std::uint32_t>(e.degree));
    put_u32(os, static_cast<std::uint32_t>(e.multiplicity));
  }
  put_u32(os, static_cast<std::uint32_t>(cfg.max_out_degree));
  put_u8(os, static_cast<std::uint8_t>(cfg.channel_mode));
  put_u8(os, static_cast<std::uint8_t>(cfg.gating_mode));
  put_u8(os, static_cast<std::uint8_t>(cfg.boundary));
  put_u8(os, static_cast<std::uint8_t>(cfg.parity));
  put_u32(os, static_cast<std::uint32_t>(cfg.gate_hidden));
  auto params = block.params();
  const auto groups = params.groups();
  put_u32(os, static_cast<std::uint32_t>(groups.size()));
  for (const auto& g : groups) {
    put_u64(os, g.values.size());
    for (double v : g.values) put_f64(os, v);
  }
}

AttentionBlock load_params(std::istream& is) {
  std::array<char, 4> magic{};
  if (!is.read(magic.data(), 4) || magic != kMagic) throw Error(ErrorCode::ParseError, "missing CGB1 magic");
  if (get_uint(is, 4) != kVersion) throw Error(ErrorCode::ParseError, "unsupported CGB1 version");
  BlockConfig cfg;
  cfg.seed = get_uint(is, 8);
  const int heads = static_cast<int>(get_uint(is, 4));
  const std::size_t n_entries = get_uint(is, 4);
  std::vector<Irrep> entries;
  for (std::size_t i = 0; i < n_entries; ++i) {
    const int l = static_cast<int>(get_uint(is, 4));
    const int m = static_cast<int>(get_uint(is, 4));
    entries.push_back({l, m});
  }
  cfg.signature = IrrepsSignature::make(entries, heads);
  cfg.max_out_degree = static_cast<int>(get_uint(is, 4));
  cfg.channel_mode = static_cast<ChannelMode>(get_uint(is, 1));
  cfg.gating_mode = static_cast<GatingMode>(get_uint(is, 1));
  cfg.boundary = static_cast<Boundary>(get_uint(is, 1));
  cfg.parity = static_cast<PathParity>(get_uint(is, 1));
  cfg.gate_hidden = static_cast<int>(get_uint(is, 4));
  AttentionBlock block(cfg);
  auto groups = block.params().groups();
  if (get_uint(is, 4) != groups.size()) throw Error(ErrorCode::ParseError, "CGB1 parameter group count");
  for (auto& g : groups) {
    if (get_uint(is, 8) != g.values.size()) throw Error(ErrorCode::ParseError, "CGB1 group '" + g.name + "' size");
    for (auto& v : g.values) v = std::bit_cast<double>(get_uint(is, 8));
  }
  return block;
}

}  // namespace cgt
