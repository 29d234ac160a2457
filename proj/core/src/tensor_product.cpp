#include "cgt/tensor_product.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <random>

#include "cgt/so3_tables.hpp"

namespace cgt {

namespace {

void check_operands(const ProductPlan& plan, const IrrepsSignature& a, const IrrepsSignature& b, std::size_t na,
                    std::size_t nb) {
  if (!(a == plan.in_a) || !(b == plan.in_b)) {
    throw Error(ErrorCode::ShapeMismatch, "operand signatures do not match the plan");
  }
  if (na != nb) throw Error(ErrorCode::ShapeMismatch, "operands have different token counts");
}

template <class T>
void sparse_kernel(const ProductPlan& plan, const T* a, const T* b, T* out) {
  for (const auto& p : plan.paths) {
    const std::size_t da = irrep_dim(p.l), db = irrep_dim(p.lp), dJ = irrep_dim(p.J);
    const bool full = plan.mode == ChannelMode::full;
    for (int c = 0; c < p.a_channels; ++c) {
      const T* ab = a + p.a_offset + static_cast<std::size_t>(c) * da;
      const int c1_begin = full ? 0 : c;
      const int c1_end = full ? p.b_channels : c + 1;
      for (int c1 = c1_begin; c1 < c1_end; ++c1) {
        const T* bb = b + p.b_offset + static_cast<std::size_t>(c1) * db;
        const std::size_t oc = full ? static_cast<std::size_t>(c * p.b_channels + c1) : static_cast<std::size_t>(c);
        T* ob = out + p.out_offset + oc * dJ;
        for (const auto& e : p.packed) ob[e.M] += e.value * ab[e.m] * bb[e.mp];
      }
    }
  }
}

template <class T>
void dense_kernel(const ProductPlan& plan, const T* a, const T* b, T* out) {
  for (const auto& p : plan.paths) {
    const std::size_t da = irrep_dim(p.l), db = irrep_dim(p.lp), dJ = irrep_dim(p.J);
    const bool full = plan.mode == ChannelMode::full;
    for (int c = 0; c < p.a_channels; ++c) {
      const T* ab = a + p.a_offset + static_cast<std::size_t>(c) * da;
      const int c1_begin = full ? 0 : c;
      const int c1_end = full ? p.b_channels : c + 1;
      for (int c1 = c1_begin; c1 < c1_end; ++c1) {
        const T* bb = b + p.b_offset + static_cast<std::size_t>(c1) * db;
        const std::size_t oc = full ? static_cast<std::size_t>(c * p.b_channels + c1) : static_cast<std::size_t>(c);
        T* ob = out + p.out_offset + oc * dJ;
        const double* w = p.dense.data();
        for (std::size_t M = 0; M < dJ; ++M) {
          T s{};
          for (std::size_t m = 0; m < da; ++m) {
            for (std::size_t mp = 0; mp < db; ++mp) s += *w++ * ab[m] * bb[mp];
          }
          ob[M] += s;
        }
      }
    }
  }
}

// which == 0: gradient w.r.t. a (other = b); which == 1: w.r.t. b (other = a).
template <class T>
void adjoint_kernel(const ProductPlan& plan, const T* g, const T* other, T* grad, int which) {
  for (const auto& p : plan.paths) {
    const std::size_t da = irrep_dim(p.l), db = irrep_dim(p.lp), dJ = irrep_dim(p.J);
    const bool full = plan.mode == ChannelMode::full;
    for (int c = 0; c < p.a_channels; ++c) {
      const int c1_begin = full ? 0 : c;
      const int c1_end = full ? p.b_channels : c + 1;
      for (int c1 = c1_begin; c1 < c1_end; ++c1) {
        const std::size_t oc = full ? static_cast<std::size_t>(c * p.b_channels + c1) : static_cast<std::size_t>(c);
        const T* gb = g + p.out_offset + oc * dJ;
        if (which == 0) {
          T* ga = grad + p.a_offset + static_cast<std::size_t>(c) * da;
          const T* bb = other + p.b_offset + static_cast<std::size_t>(c1) * db;
          for (const auto& e : p.packed) ga[e.m] += e.value * gb[e.M] * bb[e.mp];
        } else {
          T* gbb = grad + p.b_offset + static_cast<std::size_t>(c1) * db;
          const T* ab = other + p.a_offset + static_cast<std::size_t>(c) * da;
          for (const auto& e : p.packed) gbb[e.mp] += e.value * gb[e.M] * ab[e.m];
        }
      }
    }
  }
}

template <class Kernel>
EquivariantFeature contract_tokens(const ProductPlan& plan, const EquivariantFeature& a, const EquivariantFeature& b,
                                   Kernel kernel) {
  check_operands(plan, a.signature(), b.signature(), a.tokens(), b.tokens());
  EquivariantFeature out(plan.out, a.tokens());
  if (plan.paths.empty()) return out;
  const std::size_t wa = plan.in_a.width(), wb = plan.in_b.width(), wo = plan.out.width();
  const double* pa = a.data().data();
  const double* pb = b.data().data();
  double* po = out.data().data();
  const std::size_t slices = a.tokens() * static_cast<std::size_t>(a.heads());
  for (std::size_t s = 0; s < slices; ++s) kernel(plan, pa + s * wa, pb + s * wb, po + s * wo);
  return out;
}

void count(FlopCounter* counter, const ProductPlan& plan, std::size_t slices) {
  if (!counter) return;
  counter->dense += plan.dense_flops() * slices;
  counter->sparse += plan.sparse_flops() * slices;
}

}  // namespace

std::uint64_t ProductPlan::dense_flops() const {
  std::uint64_t total = 0;
  for (const auto& p : paths) total += p.dense_flops;
  return total;
}

std::uint64_t ProductPlan::sparse_flops() const {
  std::uint64_t total = 0;
  for (const auto& p : paths) total += p.sparse_flops;
  return total;
}

ProductPlan plan_product(const IrrepsSignature& a, const IrrepsSignature& b, const std::vector<int>& out_degrees,
                         ChannelMode mode, PathParity parity) {
  if (a.heads() != b.heads()) {
    throw Error(ErrorCode::HeadMismatch,
                "operands have " + std::to_string(a.heads()) + " and " + std::to_string(b.heads()) + " heads");
  }
  std::vector<int> targets = out_degrees;
  std::sort(targets.begin(), targets.end());
  targets.erase(std::unique(targets.begin(), targets.end()), targets.end());
  for (int J : targets) {
    if (J < 0) throw Error(ErrorCode::InvalidArgument, "negative output degree");
  }

  ProductPlan plan;
  plan.in_a = a;
  plan.in_b = b;
  plan.mode = mode;
  plan.parity = parity;

  std::vector<int> out_mult(targets.empty() ? 0 : static_cast<std::size_t>(targets.back()) + 1, 0);
  for (const auto& ea : a.entries()) {
    for (const auto& eb : b.entries()) {
      for (int J : targets) {
        if (!satisfies_triangle(J, ea.degree, eb.degree)) continue;
        if (parity == PathParity::even_only && !parity_even(J, ea.degree, eb.degree)) continue;
        const CGTable& table = shared_cg_real(J, ea.degree, eb.degree);
        if (table.empty()) continue;
        if (mode == ChannelMode::elementwise && ea.multiplicity != eb.multiplicity) {
          throw Error(ErrorCode::ChannelMismatch, "elementwise path (" + std::to_string(ea.degree) + "," +
                                                      std::to_string(eb.degree) + ") pairs multiplicities " +
                                                      std::to_string(ea.multiplicity) + " and " +
                                                      std::to_string(eb.multiplicity));
        }
        ProductPath p;
        p.l = ea.degree;
        p.lp = eb.degree;
        p.J = J;
        p.a_channels = ea.multiplicity;
        p.b_channels = eb.multiplicity;
        p.channels = mode == ChannelMode::full ? ea.multiplicity * eb.multiplicity : ea.multiplicity;
        p.out_channel0 = out_mult[static_cast<std::size_t>(J)];
        out_mult[static_cast<std::size_t>(J)] += p.channels;
        p.table = table;
        p.dense = table.dense();
        for (const auto& e : table.entries) {
          p.packed.push_back({static_cast<std::uint16_t>(e.M + J), static_cast<std::uint16_t>(e.m + ea.degree),
                              static_cast<std::uint16_t>(e.mp + eb.degree), e.value});
        }
        const auto ch = static_cast<std::uint64_t>(p.channels);
        p.dense_flops = 2ULL * table.dense_size() * ch;
        p.sparse_flops = 2ULL * table.entries.size() * ch;
        plan.paths.push_back(std::move(p));
      }
    }
  }

  std::vector<Irrep> out_entries;
  for (std::size_t J = 0; J < out_mult.size(); ++J) {
    if (out_mult[J] > 0) out_entries.push_back({static_cast<int>(J), out_mult[J]});
  }
  if (out_entries.empty()) {
    plan.out = IrrepsSignature().with_heads(a.heads());
    return plan;
  }
  plan.out = IrrepsSignature::make(out_entries, a.heads());
  for (auto& p : plan.paths) {
    p.a_offset = a.degree_offset(p.l);
    p.b_offset = b.degree_offset(p.lp);
    p.out_offset = plan.out.degree_offset(p.J) + static_cast<std::size_t>(p.out_channel0) * irrep_dim(p.J);
  }
  return plan;
}

EquivariantFeature contract_dense(const ProductPlan& plan, const EquivariantFeature& a, const EquivariantFeature& b,
                                  FlopCounter* counter) {
  auto out = contract_tokens(plan, a, b, [](const ProductPlan& p, const double* x, const double* y, double* o) {
    dense_kernel(p, x, y, o);
  });
  count(counter, plan, a.tokens() * static_cast<std::size_t>(a.heads()));
  return out;
}

EquivariantFeature contract_sparse(const ProductPlan& plan, const EquivariantFeature& a, const EquivariantFeature& b,
                                   FlopCounter* counter) {
  auto out = contract_tokens(plan, a, b, [](const ProductPlan& p, const double* x, const double* y, double* o) {
    sparse_kernel(p, x, y, o);
  });
  count(counter, plan, a.tokens() * static_cast<std::size_t>(a.heads()));
  return out;
}

void contract_slice(const ProductPlan& plan, std::span<const double> a, std::span<const double> b,
                    std::span<double> out) {
  sparse_kernel(plan, a.data(), b.data(), out.data());
}

void contract_slice(const ProductPlan& plan, std::span<const std::complex<double>> a,
                    std::span<const std::complex<double>> b, std::span<std::complex<double>> out) {
  sparse_kernel(plan, a.data(), b.data(), out.data());
}

void contract_slice_adjoint_a(const ProductPlan& plan, std::span<const double> g, std::span<const double> b,
                              std::span<double> grad_a) {
  adjoint_kernel(plan, g.data(), b.data(), grad_a.data(), 0);
}

void contract_slice_adjoint_b(const ProductPlan& plan, std::span<const double> g, std::span<const double> a,
                              std::span<double> grad_b) {
  adjoint_kernel(plan, g.data(), a.data(), grad_b.data(), 1);
}

void contract_slice_adjoint_a(const ProductPlan& plan, std::span<const std::complex<double>> g,
                              std::span<const std::complex<double>> b, std::span<std::complex<double>> grad_a) {
  adjoint_kernel(plan, g.data(), b.data(), grad_a.data(), 0);
}

void contract_slice_adjoint_b(const ProductPlan& plan, std::span<const std::complex<double>> g,
                              std::span<const std::complex<double>> a, std::span<std::complex<double>> grad_b) {
  adjoint_kernel(plan, g.data(), a.data(), grad_b.data(), 1);
}

ProductGradients contract_adjoint(const ProductPlan& plan, const EquivariantFeature& grad_out,
                                  const EquivariantFeature& a, const EquivariantFeature& b) {
  check_operands(plan, a.signature(), b.signature(), a.tokens(), b.tokens());
  if (!(grad_out.signature() == plan.out) || grad_out.tokens() != a.tokens()) {
    throw Error(ErrorCode::ShapeMismatch, "gradient does not match the plan output");
  }
  ProductGradients g{EquivariantFeature(plan.in_a, a.tokens()), EquivariantFeature(plan.in_b, b.tokens())};
  const std::size_t wa = plan.in_a.width(), wb = plan.in_b.width(), wo = plan.out.width();
  const std::size_t slices = a.tokens() * static_cast<std::size_t>(a.heads());
  for (std::size_t s = 0; s < slices; ++s) {
    const double* go = grad_out.data().data() + s * wo;
    adjoint_kernel(plan, go, b.data().data() + s * wb, g.grad_a.data().data() + s * wa, 0);
    adjoint_kernel(plan, go, a.data().data() + s * wa, g.grad_b.data().data() + s * wb, 1);
  }
  return g;
}

CrossProductReport cross_product_check(std::size_t cases, std::uint64_t seed) {
  const auto sig = IrrepsSignature::make({{1, 1}}, 1);
  const auto plan = plan_product(sig, sig, {1}, ChannelMode::full);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  CrossProductReport report;
  report.cases = cases;
  for (std::size_t i = 0; i < cases; ++i) {
    // Component order inside a degree-1 block is (y, z, x).
    std::array<double, 3> q{}, k{};
    for (auto& v : q) v = normal(rng);
    for (auto& v : k) v = normal(rng);
    EquivariantFeature fq(sig, 1, {q[0], q[1], q[2]});
    EquivariantFeature fk(sig, 1, {k[0], k[1], k[2]});
    const auto u = contract_sparse(plan, fq, fk);
    const std::array<double, 3> qx = {q[2], q[0], q[1]};
    const std::array<double, 3> kx = {k[2], k[0], k[1]};
    const std::array<double, 3> cx = {qx[1] * kx[2] - qx[2] * kx[1], qx[2] * kx[0] - qx[0] * kx[2],
                                      qx[0] * kx[1] - qx[1] * kx[0]};
    const std::array<double, 3> cyzx = {cx[1], cx[2], cx[0]};
    for (std::size_t c = 0; c < 3; ++c) {
      report.max_error = std::max(report.max_error, std::abs(std::sqrt(2.0) * u.data()[c] - cyzx[c]));
    }
  }
  report.passed = report.max_error < report.tolerance;
  return report;
}

}  // namespace cgt
