#include <gtest/gtest.h>

#include <cmath>

#include "cgt/tensor_product.hpp"
#include "helpers.hpp"

namespace cgt {
namespace {

using testing::full_signature;
using testing::random_feature;

EquivariantFeature vectors(const std::vector<std::array<double, 3>>& xyz) {
  // (y, z, x) storage order.
  EquivariantFeature f(make_signature({{1, 1}}, 1), xyz.size());
  for (std::size_t t = 0; t < xyz.size(); ++t) {
    auto b = f.block(t, 0, 1, 0);
    b[0] = xyz[t][1];
    b[1] = xyz[t][2];
    b[2] = xyz[t][0];
  }
  return f;
}

TEST(Plan, VectorCrossSinglePath) {
  auto v = make_signature({{1, 1}}, 1);
  auto plan = plan_product(v, v, {1}, ChannelMode::full);
  ASSERT_EQ(plan.paths.size(), 1u);
  EXPECT_EQ(plan.paths[0].l, 1);
  EXPECT_EQ(plan.paths[0].lp, 1);
  EXPECT_EQ(plan.paths[0].J, 1);
  EXPECT_EQ(plan.out, v);
}

TEST(Plan, ParityOddPathOnlyUnderAllPaths) {
  auto a = make_signature({{1, 1}}, 1), b = make_signature({{2, 1}}, 1);
  auto even = plan_product(a, b, {2}, ChannelMode::full, PathParity::even_only);
  EXPECT_TRUE(even.paths.empty());
  EXPECT_TRUE(even.out.empty());
  auto all = plan_product(a, b, {2}, ChannelMode::full, PathParity::all);
  ASSERT_EQ(all.paths.size(), 1u);
}

TEST(Plan, OutputMultiplicities) {
  auto a = make_signature({{0, 2}, {1, 3}}, 2), b = make_signature({{0, 1}, {1, 2}}, 2);
  auto full = plan_product(a, b, {0, 1, 2}, ChannelMode::full);
  // J=0: (0,0) 2*1 + (1,1) 3*2; J=1: (0,1) 2*2 + (1,0) 3*1 + (1,1) 3*2; J=2: (1,1) 3*2
  EXPECT_EQ(full.out.multiplicity(0), 8);
  EXPECT_EQ(full.out.multiplicity(1), 13);
  EXPECT_EQ(full.out.multiplicity(2), 6);
  EXPECT_EQ(full.out.heads(), 2);

  auto c = make_signature({{0, 3}, {1, 3}}, 2);
  auto ew = plan_product(c, c, {0, 1, 2}, ChannelMode::elementwise);
  EXPECT_EQ(ew.out.multiplicity(0), 6);
  EXPECT_EQ(ew.out.multiplicity(1), 9);
  EXPECT_EQ(ew.out.multiplicity(2), 3);
}

TEST(Plan, FlopModel) {
  auto sig = full_signature(3, 2, 1);
  auto plan = plan_product(sig, sig, {0, 1, 2, 3}, ChannelMode::full);
  std::uint64_t dense = 0, sparse = 0;
  for (const auto& p : plan.paths) {
    EXPECT_EQ(p.dense_flops, 2ull * (2 * p.J + 1) * (2 * p.l + 1) * (2 * p.lp + 1) * p.channels);
    EXPECT_EQ(p.sparse_flops, 2ull * p.table.entries.size() * p.channels);
    EXPECT_FALSE(p.table.empty());
    dense += p.dense_flops;
    sparse += p.sparse_flops;
  }
  EXPECT_EQ(plan.dense_flops(), dense);
  EXPECT_EQ(plan.sparse_flops(), sparse);
}

TEST(Plan, SparseRatioAtSix) {
  auto sig = full_signature(6, 1, 1);
  std::vector<int> out;
  for (int J = 0; J <= 6; ++J) out.push_back(J);
  auto plan = plan_product(sig, sig, out, ChannelMode::full);
  const double ratio = static_cast<double>(plan.sparse_flops()) / static_cast<double>(plan.dense_flops());
  EXPECT_LT(ratio, 0.25);
}

TEST(Plan, Errors) {
  auto a = make_signature({{1, 2}}, 1);
  try {
    plan_product(a, a.with_heads(2), {1}, ChannelMode::full);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::HeadMismatch);
  }
  try {
    plan_product(a, make_signature({{1, 3}}, 1), {1}, ChannelMode::elementwise);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::ChannelMismatch);
  }
}

TEST(Contract, ZeroInputs) {
  auto sig = full_signature(2, 2, 2);
  auto plan = plan_product(sig, sig, {0, 1, 2}, ChannelMode::full);
  EquivariantFeature z(sig, 3);
  EXPECT_EQ(max_abs(contract_dense(plan, z, z)), 0.0);
  EXPECT_EQ(max_abs(contract_sparse(plan, z, z)), 0.0);
}

TEST(Contract, CrossProductOfAxes) {
  auto a = vectors({{1, 0, 0}, {0, 1, 0}}), b = vectors({{0, 1, 0}, {0, 0, 1}});
  auto plan = plan_product(a.signature(), b.signature(), {1}, ChannelMode::full);
  auto out = contract_dense(plan, a, b);
  const double s = 1.0 / std::sqrt(2.0);
  // e_x x e_y = e_z (index 1); e_y x e_z = e_x (index 2).
  EXPECT_NEAR(out.block(0, 0, 1, 0)[1], s, 1e-15);
  EXPECT_NEAR(out.block(0, 0, 1, 0)[0], 0.0, 1e-15);
  EXPECT_NEAR(out.block(1, 0, 1, 0)[2], s, 1e-15);
  EXPECT_LT(max_abs_diff(contract_sparse(plan, a, b), out), 1e-16);
}

TEST(Contract, MatchesReferenceProduct) {
  for (auto mode : {ChannelMode::full, ChannelMode::elementwise}) {
    auto sig = full_signature(3, 2, 2);
    auto a = random_feature(sig, 3, 1), b = random_feature(sig, 3, 2);
    std::vector<int> out{0, 1, 2, 3, 4, 5, 6};
    auto plan = plan_product(sig, sig, out, mode);
    auto ref = oracles::reference_product(testing::real_tables(), a, b, out, mode == ChannelMode::elementwise);
    auto dense = contract_dense(plan, a, b);
    ASSERT_EQ(ref.signature(), dense.signature());
    EXPECT_LT(max_abs_diff(dense, ref), 1e-13);
    EXPECT_LT(max_abs_diff(contract_sparse(plan, a, b), ref), 1e-13);
  }
}

TEST(Contract, SparseMatchesDense) {
  for (std::uint64_t c = 0; c < 40; ++c) {
    const int La = static_cast<int>(c % 7), Lb = static_cast<int>((c * 3) % 7);
    auto sa = full_signature(La, 1 + static_cast<int>(c % 2), 1 + static_cast<int>(c % 3));
    auto sb = full_signature(Lb, 1 + static_cast<int>(c % 2), sa.heads());
    std::vector<int> out;
    for (int J = 0; J <= 6; ++J) out.push_back(J);
    auto mode = c % 2 ? ChannelMode::elementwise : ChannelMode::full;
    auto plan = plan_product(sa, sb, out, mode);
    auto a = random_feature(sa, 2, 10 + c), b = random_feature(sb, 2, 90 + c);
    EXPECT_LT(max_abs_diff(contract_sparse(plan, a, b), contract_dense(plan, a, b)), 1e-12) << c;
  }
}

TEST(Contract, EmptyPlanGivesZeroFeature) {
  auto a = make_signature({{0, 1}}, 2);
  auto plan = plan_product(a, a, {3}, ChannelMode::full);
  EXPECT_TRUE(plan.paths.empty());
  auto out = contract_sparse(plan, random_feature(a, 4, 1), random_feature(a, 4, 2));
  EXPECT_EQ(out.tokens(), 4u);
  EXPECT_EQ(out.width(), 0u);
}

TEST(Contract, ShapeMismatch) {
  auto sig = full_signature(1, 1, 1);
  auto plan = plan_product(sig, sig, {0, 1}, ChannelMode::full);
  try {
    contract_sparse(plan, random_feature(sig, 3, 1), random_feature(sig, 4, 1));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::ShapeMismatch);
  }
  EXPECT_THROW(contract_dense(plan, random_feature(full_signature(2, 1, 1), 3, 1), random_feature(sig, 3, 1)), Error);
}

TEST(Contract, FlopCounterFollowsModel) {
  auto sig = full_signature(2, 2, 3);
  auto plan = plan_product(sig, sig, {0, 1, 2}, ChannelMode::full);
  auto a = random_feature(sig, 5, 1), b = random_feature(sig, 5, 2);
  FlopCounter c1, c2;
  contract_dense(plan, a, b, &c1);
  contract_sparse(plan, a, b, &c2);
  EXPECT_EQ(c1.dense, plan.dense_flops() * 5 * 3);
  EXPECT_EQ(c2.sparse, plan.sparse_flops() * 5 * 3);
}

class ContractEquivariance : public ::testing::TestWithParam<std::tuple<int, ChannelMode, int>> {};

TEST_P(ContractEquivariance, RotationCommutes) {
  const auto [L, mode, heads] = GetParam();
  auto sig = full_signature(L, 2, heads);
  std::vector<int> out;
  for (int J = 0; J <= L; ++J) out.push_back(J);
  auto plan = plan_product(sig, sig, out, mode);
  auto a = random_feature(sig, 3, 4), b = random_feature(sig, 3, 5);
  auto R = oracles::random_rotation(77 + static_cast<std::uint64_t>(L));
  auto lhs = contract_sparse(plan, rotate(a, wigner_d(sig, R)), rotate(b, wigner_d(sig, R)));
  auto rhs = rotate(contract_sparse(plan, a, b), wigner_d(plan.out, R));
  EXPECT_LT(relative_error(lhs, rhs), 1e-9);
}

INSTANTIATE_TEST_SUITE_P(Degrees, ContractEquivariance,
                         ::testing::Combine(::testing::Values(1, 3, 5),
                                            ::testing::Values(ChannelMode::full, ChannelMode::elementwise),
                                            ::testing::Values(1, 4)));

TEST(Contract, Bilinear) {
  auto sig = full_signature(3, 2, 2);
  auto plan = plan_product(sig, sig, {0, 1, 2, 3}, ChannelMode::full);
  auto a = random_feature(sig, 2, 1), a2 = random_feature(sig, 2, 2), b = random_feature(sig, 2, 3);
  const double alpha = -1.7;
  EquivariantFeature mix(sig, 2);
  for (std::size_t i = 0; i < mix.data().size(); ++i) mix.data()[i] = alpha * a.data()[i] + a2.data()[i];
  auto lhs = contract_sparse(plan, mix, b);
  auto pa = contract_sparse(plan, a, b), pa2 = contract_sparse(plan, a2, b);
  for (std::size_t i = 0; i < lhs.data().size(); ++i)
    EXPECT_NEAR(lhs.data()[i], alpha * pa.data()[i] + pa2.data()[i], 1e-12);
}

TEST(Contract, HeadsDoNotInteract) {
  auto sig = full_signature(2, 2, 4);
  auto plan = plan_product(sig, sig, {0, 1, 2}, ChannelMode::full);
  auto a = random_feature(sig, 3, 1), b = random_feature(sig, 3, 2);
  for (std::size_t t = 0; t < 3; ++t) {
    for (auto& v : a.slice(t, 2)) v = 0.0;
    for (auto& v : b.slice(t, 2)) v = 0.0;
  }
  auto out = contract_sparse(plan, a, b);
  for (std::size_t t = 0; t < 3; ++t)
    for (int h = 0; h < 4; ++h) {
      double n = 0.0;
      for (double v : out.slice(t, h)) n += v * v;
      if (h == 2) {
        EXPECT_EQ(n, 0.0);
      } else {
        EXPECT_GT(n, 0.0);
      }
    }
}

TEST(Contract, AdjointDotProduct) {
  auto sig = full_signature(2, 2, 2);
  for (auto mode : {ChannelMode::full, ChannelMode::elementwise}) {
    auto plan = plan_product(sig, sig, {0, 1, 2}, mode);
    auto a = random_feature(sig, 3, 1), b = random_feature(sig, 3, 2);
    auto da = random_feature(sig, 3, 3), db = random_feature(sig, 3, 4);
    auto g = random_feature(plan.out, 3, 5);
    auto grads = contract_adjoint(plan, g, a, b);
    // d/dt <g, P(a + t da, b + t db)> at t = 0
    const double lhs = dot(g, contract_sparse(plan, da, b)) + dot(g, contract_sparse(plan, a, db));
    const double rhs = dot(grads.grad_a, da) + dot(grads.grad_b, db);
    EXPECT_NEAR(lhs, rhs, 1e-10 * std::abs(lhs));
  }
}

TEST(CrossProduct, Check) {
  auto r = cross_product_check();
  EXPECT_TRUE(r.passed) << r.max_error;
  EXPECT_EQ(r.cases, 100u);
  EXPECT_LT(r.max_error, 1e-13);
}

TEST(CrossProduct, ParallelVectorsVanish) {
  auto a = vectors({{0.3, -1.2, 2.0}});
  auto plan = plan_product(a.signature(), a.signature(), {1}, ChannelMode::full);
  EXPECT_LT(max_abs(contract_sparse(plan, a, a)), 1e-16);
}

TEST(CrossProduct, NormMatchesSine) {
  std::array<double, 3> q{1.0, 2.0, -0.5}, k{-0.3, 0.7, 1.1};
  auto plan = plan_product(make_signature({{1, 1}}, 1), make_signature({{1, 1}}, 1), {1}, ChannelMode::full);
  auto out = contract_sparse(plan, vectors({q}), vectors({k}));
  const double nq = std::sqrt(q[0] * q[0] + q[1] * q[1] + q[2] * q[2]);
  const double nk = std::sqrt(k[0] * k[0] + k[1] * k[1] + k[2] * k[2]);
  const double cos = (q[0] * k[0] + q[1] * k[1] + q[2] * k[2]) / (nq * nk);
  EXPECT_NEAR(std::sqrt(2.0) * l2_norm(out), nq * nk * std::sqrt(1.0 - cos * cos), 1e-13);
}

}  // namespace
}  // namespace cgt
