#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <sstream>

#include "cgt/so3_tables.hpp"
#include "helpers.hpp"

namespace cgt {
namespace {

double entry(const CGTable& t, int M, int m, int mp) { return t.dense()[t.index(M, m, mp)]; }

std::vector<double> apply_table(const CGTable& t, const std::vector<double>& x, const std::vector<double>& y) {
  return oracles::reference_contract(t.J, t.l, t.lp, t, x, y);
}

TEST(CgComplex, ScalarTable) {
  auto t = cg_complex(0, 0, 0);
  ASSERT_EQ(t.entries.size(), 1u);
  EXPECT_DOUBLE_EQ(t.entries[0].value, 1.0);
  auto s = sparsity_stats(t);
  EXPECT_EQ(s.nnz, 1u);
  EXPECT_DOUBLE_EQ(s.density, 1.0);
}

TEST(CgComplex, HighestWeight) { EXPECT_NEAR(entry(cg_complex(2, 1, 1), 2, 1, 1), 1.0, 1e-15); }

TEST(CgComplex, KnownValues) {
  // <1 1; 1 -1 | 0 0> = 1/sqrt(3), <1 0; 1 0 | 1 0> = 0, <1 1; 1 0 | 1 1> = 1/sqrt(2)
  EXPECT_NEAR(entry(cg_complex(0, 1, 1), 0, 1, -1), 1.0 / std::sqrt(3.0), 1e-15);
  EXPECT_NEAR(entry(cg_complex(1, 1, 1), 0, 0, 0), 0.0, 1e-15);
  EXPECT_NEAR(entry(cg_complex(1, 1, 1), 1, 1, 0), 1.0 / std::sqrt(2.0), 1e-15);
}

TEST(CgComplex, SelectionRuleAndTriangle) {
  for (int J = 0; J <= 8; ++J)
    for (int l = 0; l <= 8; ++l)
      for (int lp = 0; lp <= 8; ++lp) {
        auto t = cg_complex(J, l, lp);
        EXPECT_EQ(t.empty(), !satisfies_triangle(J, l, lp)) << J << l << lp;
        EXPECT_LE(t.entries.size(), static_cast<std::size_t>((2 * l + 1) * (2 * lp + 1)));
        for (const auto& e : t.entries) {
          EXPECT_EQ(e.M, e.m + e.mp);
          EXPECT_GT(std::abs(e.value), kSparsityThreshold);
        }
      }
}

TEST(CgComplex, Orthonormality) {
  for (int l = 0; l <= 6; ++l)
    for (int lp = 0; lp <= 6; ++lp) {
      std::vector<CGTable> tables;
      for (int J = std::abs(l - lp); J <= l + lp; ++J) tables.push_back(cg_complex(J, l, lp));
      for (const auto& a : tables)
        for (const auto& b : tables) {
          auto da = a.dense(), db = b.dense();
          const std::size_t cols = a.cols();
          for (std::size_t r1 = 0; r1 < a.rows(); ++r1)
            for (std::size_t r2 = 0; r2 < b.rows(); ++r2) {
              double s = 0.0;
              for (std::size_t c = 0; c < cols; ++c) s += da[r1 * cols + c] * db[r2 * cols + c];
              const double expect = (a.J == b.J && r1 == r2) ? 1.0 : 0.0;
              ASSERT_NEAR(s, expect, 1e-12) << l << " " << lp << " J=" << a.J << "," << b.J;
            }
        }
    }
}

TEST(CgComplex, DegreeGuard) {
  try {
    cg_complex(25, 12, 13);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::DegreeTooLarge);
  }
  EXPECT_NO_THROW(cg_complex(24, 12, 12));
}

TEST(CgReal, CrossProductTable) {
  auto t = cg_real(1, 1, 1);
  EXPECT_EQ(sparsity_stats(t).nnz, 6u);
  for (const auto& e : t.entries) EXPECT_NEAR(std::abs(e.value), 1.0 / std::sqrt(2.0), 1e-15);
  // (y, z, x) order: e_x = index 2, e_y = index 0, e_z = index 1.
  std::vector<double> ex{0, 0, 1}, ey{1, 0, 0};
  auto r = apply_table(t, ex, ey);
  EXPECT_NEAR(r[0], 0.0, 1e-15);
  EXPECT_NEAR(r[1], 1.0 / std::sqrt(2.0), 1e-15);
  EXPECT_NEAR(r[2], 0.0, 1e-15);
  // Antisymmetric in the two inputs.
  for (const auto& e : t.entries) EXPECT_NEAR(entry(t, e.M, e.mp, e.m), -e.value, 1e-15);
}

TEST(CgReal, DotProductTable) {
  auto t = cg_real(0, 1, 1);
  std::vector<double> ez{0, 1, 0}, ex{0, 0, 1}, ey{1, 0, 0};
  EXPECT_GT(std::abs(apply_table(t, ez, ez)[0]), 0.5);
  EXPECT_NEAR(apply_table(t, ex, ey)[0], 0.0, 1e-15);
  // Proportional to the dot product on random inputs.
  auto q = testing::random_vector(3, 1), k = testing::random_vector(3, 2);
  const double d = q[0] * k[0] + q[1] * k[1] + q[2] * k[2];
  const double c = apply_table(t, ez, ez)[0];
  EXPECT_NEAR(std::abs(c), 1.0 / std::sqrt(3.0), 1e-15);
  EXPECT_NEAR(apply_table(t, q, k)[0], c * d, 1e-14);
}

TEST(CgReal, ParityOddRealPartIsEmpty) {
  EXPECT_TRUE(cg_real_part(2, 1, 2).empty());
  EXPECT_TRUE(cg_real_part(1, 1, 1).empty());
  for (int J = 0; J <= 6; ++J)
    for (int l = 0; l <= 6; ++l)
      for (int lp = 0; lp <= 6; ++lp) {
        auto part = cg_real_part(J, l, lp);
        if (!parity_even(J, l, lp)) {
          EXPECT_TRUE(part.empty());
          EXPECT_EQ(cg_real(J, l, lp).empty(), !satisfies_triangle(J, l, lp));
        } else {
          auto full = cg_real(J, l, lp);
          ASSERT_EQ(part.entries.size(), full.entries.size());
          for (std::size_t i = 0; i < part.entries.size(); ++i)
            EXPECT_EQ(part.entries[i].value, full.entries[i].value);
        }
      }
}

TEST(CgReal, RowsOrthonormal) {
  for (int l = 0; l <= 5; ++l)
    for (int lp = 0; lp <= 5; ++lp) {
      const std::size_t cols = static_cast<std::size_t>((2 * l + 1) * (2 * lp + 1));
      Matrix stacked(cols, cols);
      std::size_t row = 0;
      for (int J = std::abs(l - lp); J <= l + lp; ++J) {
        auto p = projection_matrix(cg_real(J, l, lp));
        for (std::size_t r = 0; r < p.rows(); ++r, ++row)
          for (std::size_t c = 0; c < cols; ++c) stacked(row, c) = p(r, c);
      }
      ASSERT_EQ(row, cols);
      EXPECT_LT(max_abs_diff(stacked * stacked.transpose(), Matrix::identity(cols)), 1e-12);
    }
}

TEST(CgReal, Equivariance) {
  for (int J = 0; J <= 4; ++J)
    for (int l = 0; l <= 4; ++l)
      for (int lp = 0; lp <= 4; ++lp) {
        if (!satisfies_triangle(J, l, lp)) continue;
        const auto t = cg_real(J, l, lp);
        auto R = oracles::random_rotation(100 + 25 * J + 5 * l + lp);
        auto D = wigner_blocks(4, R);
        auto x = testing::random_vector(2 * l + 1, 1), y = testing::random_vector(2 * lp + 1, 2);
        auto mul = [](const Matrix& m, const std::vector<double>& v) {
          std::vector<double> out(m.rows(), 0.0);
          for (std::size_t r = 0; r < m.rows(); ++r)
            for (std::size_t c = 0; c < m.cols(); ++c) out[r] += m(r, c) * v[c];
          return out;
        };
        auto lhs = apply_table(t, mul(D[l], x), mul(D[lp], y));
        auto rhs = mul(D[J], apply_table(t, x, y));
        double err = 0.0, nx = 0.0, ny = 0.0;
        for (std::size_t i = 0; i < lhs.size(); ++i) err += (lhs[i] - rhs[i]) * (lhs[i] - rhs[i]);
        for (double v : x) nx += v * v;
        for (double v : y) ny += v * v;
        EXPECT_LT(std::sqrt(err), 1e-9 * std::sqrt(nx * ny)) << J << l << lp;
      }
}

TEST(Sparsity, ComplexBound) {
  auto s = sparsity_stats(cg_complex(1, 1, 1));
  EXPECT_LE(s.nnz, 9u);
  EXPECT_NEAR(s.density, static_cast<double>(s.nnz) / 27.0, 1e-15);
}

TEST(Sparsity, SharedTableIsStable) {
  const auto& a = shared_cg_real(3, 2, 2);
  const auto& b = shared_cg_real(3, 2, 2);
  EXPECT_EQ(&a, &b);
  EXPECT_EQ(a.entries.size(), cg_real(3, 2, 2).entries.size());
}

TEST(TableDump, Format) {
  std::ostringstream os;
  write_table_dump(os, cg_complex(0, 0, 0));
  EXPECT_EQ(os.str(), "0 0 0 0 0 0 1\n");
}

TEST(TableCache, EnumeratesTriples) {
  auto cache = TableCache::build(6);
  EXPECT_EQ(cache.triple_count(), 343u);
  EXPECT_EQ(cache.max_degree(), 6);
  EXPECT_GE(cache.build_seconds(), 0.0);
  EXPECT_TRUE(cache.get(6, 0, 1, Basis::complex).empty());
  EXPECT_TRUE(cache.get(6, 0, 1, Basis::real).empty());
  std::size_t triangle = 0;
  for (int J = 0; J <= 6; ++J)
    for (int l = 0; l <= 6; ++l)
      for (int lp = 0; lp <= 6; ++lp) triangle += satisfies_triangle(J, l, lp) ? 1 : 0;
  EXPECT_EQ(cache.nonempty_count(Basis::complex), triangle);
  EXPECT_THROW(TableCache::build(13), Error);
}

TEST(TableCache, RebuildIsBitwiseIdentical) {
  auto a = TableCache::build(5), b = TableCache::build(5);
  for (int J = 0; J <= 5; ++J)
    for (int l = 0; l <= 5; ++l)
      for (int lp = 0; lp <= 5; ++lp)
        for (auto basis : {Basis::complex, Basis::real}) {
          const auto& x = a.get(J, l, lp, basis);
          const auto& y = b.get(J, l, lp, basis);
          ASSERT_EQ(x.entries.size(), y.entries.size());
          for (std::size_t i = 0; i < x.entries.size(); ++i) {
            EXPECT_EQ(x.entries[i].value, y.entries[i].value);
            EXPECT_EQ(x.entries[i].M, y.entries[i].M);
          }
        }
}

TEST(Wigner, Identity) {
  auto blocks = wigner_blocks(6, Matrix::identity(3));
  for (std::size_t l = 0; l < blocks.size(); ++l)
    EXPECT_LT(max_abs_diff(blocks[l], Matrix::identity(2 * l + 1)), 1e-12);
}

TEST(Wigner, HalfTurnAboutZ) {
  auto D = wigner_blocks(1, axis_angle({0, 0, 1}, std::numbers::pi));
  Matrix expect(3, 3);
  expect(0, 0) = -1;
  expect(1, 1) = 1;
  expect(2, 2) = -1;
  EXPECT_LT(max_abs_diff(D[1], expect), 1e-15);
  EXPECT_EQ(D[0](0, 0), 1.0);
}

TEST(Wigner, OrthogonalAndInverse) {
  auto R = oracles::random_rotation(5);
  auto D = wigner_blocks(8, R);
  auto Dt = wigner_blocks(8, R.transpose());
  for (int l = 0; l <= 8; ++l) {
    const auto n = static_cast<std::size_t>(2 * l + 1);
    EXPECT_LT(max_abs_diff(D[l] * D[l].transpose(), Matrix::identity(n)), 1e-10);
    EXPECT_LT(max_abs_diff(D[l] * Dt[l], Matrix::identity(n)), 1e-10);
  }
}

TEST(Wigner, Homomorphism) {
  for (std::uint64_t s = 0; s < 5; ++s) {
    auto R1 = oracles::random_rotation(2 * s), R2 = oracles::random_rotation(2 * s + 1);
    auto D1 = wigner_blocks(6, R1), D2 = wigner_blocks(6, R2), D12 = wigner_blocks(6, R1 * R2);
    for (int l = 0; l <= 6; ++l) EXPECT_LT(max_abs_diff(D12[l], D1[l] * D2[l]), 1e-9);
  }
}

TEST(Wigner, RejectsNonRotations) {
  Matrix reflect = Matrix::identity(3);
  reflect(2, 2) = -1;
  try {
    wigner_blocks(2, reflect);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NotARotation);
  }
  Matrix scaled = Matrix::identity(3);
  scaled(0, 0) = 1.001;
  EXPECT_THROW(wigner_blocks(2, scaled), Error);
}

TEST(Wigner, RotateActsPerBlock) {
  auto sig = make_signature({{0, 1}, {1, 2}}, 2);
  auto f = testing::random_feature(sig, 3, 9);
  auto rep = wigner_d(sig, axis_angle({0, 0, 1}, std::numbers::pi));
  auto g = rotate(f, rep);
  EXPECT_EQ(g.block(1, 1, 0, 0)[0], f.block(1, 1, 0, 0)[0]);
  EXPECT_NEAR(g.block(2, 0, 1, 1)[0], -f.block(2, 0, 1, 1)[0], 1e-15);
  EXPECT_NEAR(g.block(2, 0, 1, 1)[1], f.block(2, 0, 1, 1)[1], 1e-15);
}

}  // namespace
}  // namespace cgt
