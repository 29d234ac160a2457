#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "cgt/attention_block.hpp"
#include "helpers.hpp"

namespace cgt {
namespace {

using testing::full_signature;
using testing::random_feature;

BlockConfig small_config(int L = 2, int m = 2, int heads = 2, std::uint64_t seed = 1) {
  BlockConfig cfg;
  cfg.signature = full_signature(L, m, heads);
  cfg.max_out_degree = L;
  cfg.gate_hidden = 8;
  cfg.seed = seed;
  return cfg;
}

TEST(Linear, IdentityRestrictsToSharedDegrees) {
  auto in = make_signature({{0, 2}, {1, 2}}, 1);
  auto out = make_signature({{1, 2}, {2, 1}}, 1);
  auto lin = EquivariantLinear::identity(in, out);
  auto f = random_feature(in, 3, 1);
  auto y = lin.apply(f);
  for (std::size_t t = 0; t < 3; ++t) {
    for (int c = 0; c < 2; ++c) {
      auto a = y.block(t, 0, 1, c), b = f.block(t, 0, 1, c);
      for (std::size_t i = 0; i < 3; ++i) EXPECT_EQ(a[i], b[i]);
    }
    for (double v : y.block(t, 0, 2, 0)) EXPECT_EQ(v, 0.0);
  }
}

TEST(Linear, CommutesWithRotation) {
  auto sig = full_signature(3, 3, 2);
  BlockConfig cfg = small_config(3, 3, 2);
  AttentionBlock block(cfg);
  const auto& lin = block.params().wq;
  auto f = random_feature(sig, 4, 2);
  auto R = oracles::random_rotation(3);
  auto rep = wigner_d(sig, R);
  EXPECT_LT(max_abs_diff(lin.apply(rotate(f, rep)), rotate(lin.apply(f), rep)), 1e-10);
}

TEST(Block, ProjectZeroAndEquivariant) {
  AttentionBlock block(small_config(3, 2, 2));
  const auto& sig = block.config().signature;
  auto z = block.project_qkv(EquivariantFeature(sig, 4));
  EXPECT_EQ(max_abs(z.q) + max_abs(z.k) + max_abs(z.v), 0.0);
  auto f = random_feature(sig, 4, 1);
  auto rep = wigner_d(sig, oracles::random_rotation(2));
  auto a = block.project_qkv(rotate(f, rep));
  auto b = block.project_qkv(f);
  EXPECT_LT(max_abs_diff(a.q, rotate(b.q, rep)), 1e-10);
  EXPECT_LT(max_abs_diff(a.k, rotate(b.k, rep)), 1e-10);
  EXPECT_LT(max_abs_diff(a.v, rotate(b.v, rep)), 1e-10);
}

TEST(Block, ProjectRejectsWrongShape) {
  AttentionBlock block(small_config());
  try {
    block.project_qkv(random_feature(full_signature(1, 2, 2), 4, 1));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::ShapeMismatch);
  }
}

TEST(Gate, SaturatedIsIdentity) {
  AttentionBlock block(small_config());
  block.saturate_gates();
  const auto& usig = block.conv().plan.out;
  auto u = random_feature(usig, 5, 1);
  EXPECT_EQ(max_abs_diff(block.gate(u), u), 0.0);
}

TEST(Gate, InvariantAndBounded) {
  AttentionBlock block(small_config());
  const auto& usig = block.conv().plan.out;
  auto u = random_feature(usig, 5, 1);
  auto rep = wigner_d(usig, oracles::random_rotation(9));
  auto ru = rotate(u, rep);
  auto g1 = block.params().gate.gates(u), g2 = block.params().gate.gates(ru);
  ASSERT_EQ(g1.size(), g2.size());
  for (std::size_t i = 0; i < g1.size(); ++i) {
    EXPECT_NEAR(g1[i], g2[i], 1e-12);
    EXPECT_GT(g1[i], 0.0);
    EXPECT_LT(g1[i], 1.0);
  }
  auto gated = block.gate(u);
  EXPECT_LT(max_abs_diff(block.gate(ru), rotate(gated, rep)), 1e-12);
  for (std::size_t t = 0; t < 5; ++t)
    for (const auto& e : usig.entries())
      for (int c = 0; c < e.multiplicity; ++c) {
        double a = 0.0, b = 0.0;
        for (double v : gated.block(t, 0, e.degree, c)) a += v * v;
        for (double v : u.block(t, 0, e.degree, c)) b += v * v;
        EXPECT_LE(a, b);
      }
}

TEST(Gate, ZeroInput) {
  AttentionBlock block(small_config());
  EquivariantFeature z(block.conv().plan.out, 3);
  EXPECT_EQ(max_abs(block.gate(z)), 0.0);
}

TEST(Attend, ZeroParametersGiveResidual) {
  AttentionBlock block(small_config());
  block.zero_parameters();
  auto f = random_feature(block.config().signature, 6, 1);
  EXPECT_LT(max_abs_diff(block.attend(f), f), 1e-15);
}

class AttendEquivariance : public ::testing::TestWithParam<std::tuple<ChannelMode, GatingMode, Boundary>> {};

TEST_P(AttendEquivariance, Rotation) {
  const auto [mode, gating, boundary] = GetParam();
  auto cfg = small_config(3, 2, 2, 5);
  cfg.channel_mode = mode;
  cfg.gating_mode = gating;
  cfg.boundary = boundary;
  AttentionBlock block(cfg);
  auto f = random_feature(cfg.signature, 16, 7);
  auto rep = wigner_d(cfg.signature, oracles::random_rotation(11));
  EXPECT_LT(relative_error(block.attend(rotate(f, rep)), rotate(block.attend(f), rep)), 1e-9);
}

INSTANTIATE_TEST_SUITE_P(Modes, AttendEquivariance,
                         ::testing::Combine(::testing::Values(ChannelMode::full, ChannelMode::elementwise),
                                            ::testing::Values(GatingMode::cg, GatingMode::concat),
                                            ::testing::Values(Boundary::circular, Boundary::linear)));

TEST(Attend, TranslationShiftsTypeOneOnly) {
  AttentionBlock block(small_config(2, 2, 2, 3));
  const auto& sig = block.config().signature;
  auto f = random_feature(sig, 8, 2);
  auto shifted = f;
  const std::array<double, 3> c{0.7, -1.3, 2.1};
  for (std::size_t t = 0; t < 8; ++t)
    for (int h = 0; h < 2; ++h)
      for (int ch = 0; ch < 2; ++ch) {
        auto b = shifted.block(t, h, 1, ch);
        for (std::size_t i = 0; i < 3; ++i) b[i] += c[i];
      }
  auto a = block.attend(f), b = block.attend(shifted);
  for (std::size_t t = 0; t < 8; ++t)
    for (int h = 0; h < 2; ++h)
      for (const auto& e : sig.entries())
        for (int ch = 0; ch < e.multiplicity; ++ch) {
          auto x = a.block(t, h, e.degree, ch), y = b.block(t, h, e.degree, ch);
          for (std::size_t i = 0; i < x.size(); ++i) {
            const double expect = e.degree == 1 ? c[i] : 0.0;
            EXPECT_NEAR(y[i] - x[i], expect, 1e-10);
          }
        }
}

TEST(Attend, ElementwiseNeedsUniformMultiplicity) {
  BlockConfig cfg;
  cfg.signature = make_signature({{0, 4}, {1, 2}}, 1);
  cfg.channel_mode = ChannelMode::elementwise;
  try {
    AttentionBlock block(cfg);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::ChannelMismatch);
  }
}

TEST(Attend, LocalBranchIsAdded) {
  AttentionBlock block(small_config());
  auto f = random_feature(block.config().signature, 4, 1);
  auto base = block.attend(f);
  block.set_local_branch([](const EquivariantFeature& x) { return x; });
  auto with = block.attend(f);
  auto centered = subtract_mean(f, 1).centered;
  for (std::size_t i = 0; i < f.data().size(); ++i)
    EXPECT_NEAR(with.data()[i] - base.data()[i], centered.data()[i], 1e-12);
  try {
    block.attend_adjoint(f, f);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::InvalidArgument);
  }
}

TEST(Attend, DeterministicFromSeed) {
  AttentionBlock a(small_config(2, 2, 2, 42)), b(small_config(2, 2, 2, 42)), c(small_config(2, 2, 2, 43));
  auto pa = a.params(), pb = b.params(), pc = c.params();
  auto ga = pa.groups(), gb = pb.groups(), gc = pc.groups();
  ASSERT_EQ(ga.size(), gb.size());
  bool differs = false;
  for (std::size_t i = 0; i < ga.size(); ++i) {
    EXPECT_TRUE(std::equal(ga[i].values.begin(), ga[i].values.end(), gb[i].values.begin()));
    differs |= !std::equal(ga[i].values.begin(), ga[i].values.end(), gc[i].values.begin());
  }
  EXPECT_TRUE(differs);
  auto f = random_feature(a.config().signature, 5, 1);
  EXPECT_EQ(a.attend(f).storage(), b.attend(f).storage());
}

TEST(Adjoint, ZeroGradient) {
  AttentionBlock block(small_config());
  auto f = random_feature(block.config().signature, 6, 1);
  auto g = block.attend_adjoint(EquivariantFeature(f.signature(), 6), f);
  EXPECT_EQ(max_abs(g.input), 0.0);
  for (auto& group : g.params.groups())
    for (double v : group.values) EXPECT_EQ(v, 0.0);
}

// With saturated gates and concatenation, <g, attend(f + h d)> is quadratic
// in h, so the central difference is exact up to rounding.
TEST(Adjoint, DotProductWithSaturatedGates) {
  for (auto mode : {ChannelMode::full, ChannelMode::elementwise}) {
    auto cfg = small_config(2, 2, 1, 4);
    cfg.channel_mode = mode;
    cfg.gating_mode = GatingMode::concat;
    AttentionBlock block(cfg);
    block.saturate_gates();
    auto f = random_feature(cfg.signature, 5, 1);
    auto d = random_feature(cfg.signature, 5, 2);
    auto g = random_feature(cfg.signature, 5, 3);
    auto fn = [&](std::span<const double> x) {
      return dot(g, block.attend(EquivariantFeature(cfg.signature, 5, {x.begin(), x.end()})));
    };
    const double jd = oracles::finite_diff(fn, f.storage(), d.storage(), 1e-3);
    const double adj = dot(block.attend_adjoint(g, f).input, d);
    EXPECT_NEAR(jd, adj, 1e-10 * std::abs(adj));
  }
}

class AdjointFiniteDifference : public ::testing::TestWithParam<std::tuple<ChannelMode, GatingMode>> {};

TEST_P(AdjointFiniteDifference, EveryGroupAndInput) {
  const auto [mode, gating] = GetParam();
  auto cfg = small_config(2, 2, 2, 8);
  cfg.channel_mode = mode;
  cfg.gating_mode = gating;
  AttentionBlock block(cfg);
  // Move the gates off the +4 plateau so their gradients are not tiny.
  for (auto& b : block.params().gate.b2) b = 0.3;
  const std::size_t n = 8;
  auto f = random_feature(cfg.signature, n, 1);
  auto g = random_feature(cfg.signature, n, 2);
  auto grads = block.attend_adjoint(g, f);

  {
    auto d = random_feature(cfg.signature, n, 3);
    auto fn = [&](std::span<const double> x) {
      return dot(g, block.attend(EquivariantFeature(cfg.signature, n, {x.begin(), x.end()})));
    };
    const double fd = oracles::finite_diff(fn, f.storage(), d.storage(), 1e-5);
    const double an = dot(grads.input, d);
    EXPECT_LT(std::abs(fd - an), 1e-6 * std::abs(an)) << "input";
  }

  auto names = block.params().groups();
  auto grad_groups = grads.params.groups();
  for (std::size_t gi = 0; gi < names.size(); ++gi) {
    const auto base = std::vector<double>(names[gi].values.begin(), names[gi].values.end());
    auto dir = testing::random_vector(base.size(), 100 + gi);
    auto fn = [&](std::span<const double> x) {
      AttentionBlock copy = block;
      auto spans = copy.params().groups();
      std::copy(x.begin(), x.end(), spans[gi].values.begin());
      return dot(g, copy.attend(f));
    };
    const double fd = oracles::finite_diff(fn, base, dir, 1e-5);
    double an = 0.0;
    for (std::size_t i = 0; i < dir.size(); ++i) an += grad_groups[gi].values[i] * dir[i];
    EXPECT_LT(std::abs(fd - an), 1e-6 * std::max(std::abs(an), 1e-3)) << names[gi].name;
  }
}

INSTANTIATE_TEST_SUITE_P(Modes, AdjointFiniteDifference,
                         ::testing::Combine(::testing::Values(ChannelMode::full, ChannelMode::elementwise),
                                            ::testing::Values(GatingMode::cg, GatingMode::concat)));

TEST(Stack, SingleBlockIsAttend) {
  std::vector<AttentionBlock> blocks{AttentionBlock(small_config())};
  auto f = random_feature(blocks[0].config().signature, 4, 1);
  EXPECT_EQ(stack(blocks, f).storage(), blocks[0].attend(f).storage());
}

TEST(Stack, IdentityBlocks) {
  std::vector<AttentionBlock> blocks;
  for (int i = 0; i < 3; ++i) {
    blocks.emplace_back(small_config(2, 2, 2, static_cast<std::uint64_t>(i)));
    blocks.back().zero_parameters();
  }
  auto f = random_feature(blocks[0].config().signature, 4, 1);
  EXPECT_LT(max_abs_diff(stack(blocks, f), f), 1e-14);
}

TEST(Stack, FourBlockEquivariance) {
  std::vector<AttentionBlock> blocks;
  for (int i = 0; i < 4; ++i) blocks.emplace_back(small_config(3, 2, 2, 20 + static_cast<std::uint64_t>(i)));
  const auto& sig = blocks[0].config().signature;
  auto f = random_feature(sig, 12, 1);
  auto rep = wigner_d(sig, oracles::random_rotation(4));
  EXPECT_LT(relative_error(stack(blocks, rotate(f, rep)), rotate(stack(blocks, f), rep)), 1e-8);
}

TEST(Stack, SignatureMismatch) {
  std::vector<AttentionBlock> blocks{AttentionBlock(small_config(2)), AttentionBlock(small_config(1))};
  auto f = random_feature(blocks[0].config().signature, 4, 1);
  try {
    stack(blocks, f);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::SignatureMismatch);
  }
}

TEST(Params, Cgb1RoundTrip) {
  auto cfg = small_config(2, 2, 2, 6);
  cfg.channel_mode = ChannelMode::elementwise;
  cfg.boundary = Boundary::linear;
  AttentionBlock block(cfg);
  block.params().gate.b1[0] = 0.123456789;
  std::stringstream ss;
  save_params(ss, block);
  const std::string bytes = ss.str();
  EXPECT_EQ(bytes.substr(0, 4), "CGB1");
  auto loaded = load_params(ss);
  EXPECT_EQ(loaded.config().signature, cfg.signature);
  EXPECT_EQ(loaded.config().channel_mode, ChannelMode::elementwise);
  EXPECT_EQ(loaded.config().boundary, Boundary::linear);
  EXPECT_EQ(loaded.params().gate.b1[0], 0.123456789);
  auto f = random_feature(cfg.signature, 5, 2);
  EXPECT_EQ(loaded.attend(f).storage(), block.attend(f).storage());
  std::stringstream again;
  save_params(again, loaded);
  EXPECT_EQ(again.str(), bytes);
}

TEST(Params, LoadRejectsCorruptStreams) {
  AttentionBlock block(small_config());
  std::stringstream ss;
  save_params(ss, block);
  const std::string bytes = ss.str();
  std::stringstream bad_magic("XGB1" + bytes.substr(4));
  EXPECT_THROW(load_params(bad_magic), Error);
  std::stringstream truncated(bytes.substr(0, bytes.size() - 3));
  try {
    load_params(truncated);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::ParseError);
  }
}

}  // namespace
}  // namespace cgt
