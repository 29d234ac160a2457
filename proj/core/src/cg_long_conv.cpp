#include "cgt/cg_long_conv.hpp"

#include <cmath>
#include <limits>

#include "cgt/fft.hpp"

namespace cgt {

namespace {

using cplx = std::complex<double>;

void check_conv_operands(const ConvConfig& cfg, const EquivariantFeature& q, const EquivariantFeature& k) {
  if (!(q.signature() == cfg.plan.in_a) || !(k.signature() == cfg.plan.in_b)) {
    throw Error(ErrorCode::ShapeMismatch, "conv operands do not match the plan signatures");
  }
  if (q.tokens() != k.tokens()) throw Error(ErrorCode::ShapeMismatch, "q and k have different token counts");
  if (q.tokens() == 0) throw Error(ErrorCode::ShapeMismatch, "conv needs at least one token");
}

// Frequency-wise product of two spectra through `kernel`.
template <class Kernel>
ComplexFeature per_frequency(const IrrepsSignature& out_sig, const ComplexFeature& a, const ComplexFeature& b,
                             std::size_t wa, std::size_t wb, Kernel kernel) {
  ComplexFeature out(out_sig, a.tokens());
  const std::size_t wo = out_sig.width();
  const std::size_t slices = a.tokens() * static_cast<std::size_t>(a.heads());
  const cplx* pa = a.data().data();
  const cplx* pb = b.data().data();
  cplx* po = out.data().data();
  for (std::size_t s = 0; s < slices; ++s) {
    kernel(std::span<const cplx>(pa + s * wa, wa), std::span<const cplx>(pb + s * wb, wb),
           std::span<cplx>(po + s * wo, wo));
  }
  return out;
}

ComplexFeature conjugate(ComplexFeature f) {
  for (auto& v : f.data()) v = std::conj(v);
  return f;
}

}  // namespace

std::size_t ConvConfig::fft_size(std::size_t tokens) const {
  if (boundary == Boundary::circular) return tokens;
  return next_power_of_two(2 * tokens - 1);
}

ConvConfig make_conv_config(const IrrepsSignature& q, const IrrepsSignature& k, const std::vector<int>& out_degrees,
                            ChannelMode mode, Boundary boundary, PathParity parity) {
  return ConvConfig{plan_product(q, k, out_degrees, mode, parity), boundary};
}

ComplexFeature lane_fft(const EquivariantFeature& f, std::size_t size) {
  if (size < f.tokens()) throw Error(ErrorCode::SizeMismatch, "FFT size shorter than the token axis");
  ComplexFeature out(f.signature(), size);
  const std::size_t stride = f.token_stride();
  if (stride == 0) return out;
  const FftPlan fft(size);
  std::vector<cplx> lane(size);
  auto src = f.data();
  auto dst = out.data();
  for (std::size_t k = 0; k < stride; ++k) {
    std::fill(lane.begin(), lane.end(), cplx(0.0, 0.0));
    for (std::size_t t = 0; t < f.tokens(); ++t) lane[t] = src[t * stride + k];
    fft.forward(lane);
    for (std::size_t t = 0; t < size; ++t) dst[t * stride + k] = lane[t];
  }
  return out;
}

EquivariantFeature lane_ifft(ComplexFeature spectrum, std::size_t tokens, double* imag_norm) {
  const std::size_t size = spectrum.tokens();
  if (tokens > size) throw Error(ErrorCode::SizeMismatch, "cannot keep more tokens than the FFT size");
  EquivariantFeature out(spectrum.signature(), tokens);
  const std::size_t stride = spectrum.token_stride();
  double imag2 = 0.0;
  if (stride != 0) {
    const FftPlan fft(size);
    std::vector<cplx> lane(size);
    auto src = spectrum.data();
    auto dst = out.data();
    for (std::size_t k = 0; k < stride; ++k) {
      for (std::size_t t = 0; t < size; ++t) lane[t] = src[t * stride + k];
      fft.inverse(lane);
      for (std::size_t t = 0; t < tokens; ++t) {
        dst[t * stride + k] = lane[t].real();
        imag2 += lane[t].imag() * lane[t].imag();
      }
    }
  }
  if (imag_norm) *imag_norm = std::sqrt(imag2);
  return out;
}

EquivariantFeature conv_direct(const ConvConfig& cfg, const EquivariantFeature& q, const EquivariantFeature& k) {
  check_conv_operands(cfg, q, k);
  const auto& plan = cfg.plan;
  const std::size_t n = q.tokens();
  const int heads = q.heads();
  EquivariantFeature out(plan.out, n);
  if (plan.paths.empty()) return out;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      std::size_t src;
      if (cfg.boundary == Boundary::circular) {
        src = (i + n - j) % n;
      } else {
        if (j > i) continue;
        src = i - j;
      }
      for (int h = 0; h < heads; ++h) contract_slice(plan, q.slice(j, h), k.slice(src, h), out.slice(i, h));
    }
  }
  return out;
}

EquivariantFeature conv_fft(const ConvConfig& cfg, const EquivariantFeature& q, const EquivariantFeature& k) {
  check_conv_operands(cfg, q, k);
  const auto& plan = cfg.plan;
  const std::size_t n = q.tokens();
  if (plan.paths.empty()) return EquivariantFeature(plan.out, n);
  const std::size_t size = cfg.fft_size(n);
  const auto qh = lane_fft(q, size);
  const auto kh = lane_fft(k, size);
  auto uh = per_frequency(plan.out, qh, kh, plan.in_a.width(), plan.in_b.width(),
                          [&plan](std::span<const cplx> a, std::span<const cplx> b, std::span<cplx> o) {
                            contract_slice(plan, a, b, o);
                          });
  double imag = 0.0;
  auto out = lane_ifft(std::move(uh), n, &imag);
  const double scale = std::max(l2_norm(out), std::numeric_limits<double>::min());
  if (imag > 1e-10 * scale && imag > 1e-280) {
    throw Error(ErrorCode::NumericalConsistency,
                "inverse FFT left an imaginary residue of " + std::to_string(imag / scale) + " (relative)");
  }
  return out;
}

ConvGradients conv_adjoint(const ConvConfig& cfg, const EquivariantFeature& grad_out, const EquivariantFeature& q,
                           const EquivariantFeature& k) {
  check_conv_operands(cfg, q, k);
  const auto& plan = cfg.plan;
  const std::size_t n = q.tokens();
  if (!(grad_out.signature() == plan.out) || grad_out.tokens() != n) {
    throw Error(ErrorCode::ShapeMismatch, "grad_out does not match the conv output");
  }
  if (plan.paths.empty()) return {EquivariantFeature(plan.in_a, n), EquivariantFeature(plan.in_b, n)};
  // grad_q_j = sum_t T_a(g_{j+t}, k_t) and grad_k_t = sum_j T_b(g_{t+j}, q_j):
  // correlations, i.e. products with conjugated spectra.
  const std::size_t size = cfg.fft_size(n);
  const auto gh = lane_fft(grad_out, size);
  const auto qh_conj = conjugate(lane_fft(q, size));
  const auto kh_conj = conjugate(lane_fft(k, size));
  auto gq = per_frequency(plan.in_a, gh, kh_conj, plan.out.width(), plan.in_b.width(),
                          [&plan](std::span<const cplx> g, std::span<const cplx> b, std::span<cplx> o) {
                            contract_slice_adjoint_a(plan, g, b, o);
                          });
  auto gk = per_frequency(plan.in_b, gh, qh_conj, plan.out.width(), plan.in_a.width(),
                          [&plan](std::span<const cplx> g, std::span<const cplx> a, std::span<cplx> o) {
                            contract_slice_adjoint_b(plan, g, a, o);
                          });
  return {lane_ifft(std::move(gq), n), lane_ifft(std::move(gk), n)};
}

EquivariantFeature shift_tokens(const EquivariantFeature& f, std::size_t shift) {
  EquivariantFeature out(f.signature(), f.tokens());
  const std::size_t n = f.tokens();
  const std::size_t stride = f.token_stride();
  auto src = f.data();
  auto dst = out.data();
  for (std::size_t t = 0; t < n; ++t) {
    const std::size_t to = (t + shift) % n;
    std::copy(src.begin() + static_cast<std::ptrdiff_t>(t * stride),
              src.begin() + static_cast<std::ptrdiff_t>((t + 1) * stride),
              dst.begin() + static_cast<std::ptrdiff_t>(to * stride));
  }
  return out;
}

}  // namespace cgt
