#include "cgt/so3_tables.hpp"

#include <array>
#include <charconv>
#include <chrono>
#include <cmath>
#include <complex>
#include <map>
#include <memory>
#include <mutex>
#include <ostream>
#include <tuple>

namespace cgt {

namespace {

using cplx = std::complex<double>;

// log(n!) for n up to 3 * kMaxCGDegree + 1 in extended precision.
const std::array<long double, 3 * kMaxCGDegree + 2>& log_factorials() {
  static const auto table = [] {
    std::array<long double, 3 * kMaxCGDegree + 2> t{};
    t[0] = 0.0L;
    for (std::size_t n = 1; n < t.size(); ++n) t[n] = t[n - 1] + std::log(static_cast<long double>(n));
    return t;
  }();
  return table;
}

void check_degrees(int J, int l, int lp) {
  if (J < 0 || l < 0 || lp < 0) throw Error(ErrorCode::InvalidArgument, "negative degree");
  if (J > kMaxCGDegree || l > kMaxCGDegree || lp > kMaxCGDegree) {
    throw Error(ErrorCode::DegreeTooLarge, "CG degrees are limited to " + std::to_string(kMaxCGDegree));
  }
}

long double racah(int J, int M, int j1, int m1, int j2, int m2) {
  const auto& lf = log_factorials();
  auto f = [&](int n) { return lf[static_cast<std::size_t>(n)]; };
  const long double pref =
      0.5L * (std::log(static_cast<long double>(2 * J + 1)) + f(J + j1 - j2) + f(J - j1 + j2) + f(j1 + j2 - J) -
              f(j1 + j2 + J + 1) + f(J + M) + f(J - M) + f(j1 - m1) + f(j1 + m1) + f(j2 - m2) + f(j2 + m2));
  const int kmin = std::max({0, j2 - J - m1, j1 - J + m2});
  const int kmax = std::min({j1 + j2 - J, j1 - m1, j2 + m2});
  long double sum = 0.0L;
  for (int k = kmin; k <= kmax; ++k) {
    const long double log_den =
        f(k) + f(j1 + j2 - J - k) + f(j1 - m1 - k) + f(j2 + m2 - k) + f(J - j2 + m1 + k) + f(J - j1 - m2 + k);
    const long double term = std::exp(pref - log_den);
    sum += (k % 2 == 0) ? term : -term;
  }
  return sum;
}

// Non-zero entries of column m of the real-harmonic unitary U_l, whose rows
// are real components a = -l..l:
//   a > 0: (Y^{-a} + (-1)^a Y^{a}) / sqrt(2)
//   a < 0: i (Y^{a} - (-1)^a Y^{-a}) / sqrt(2)
//   a = 0: Y^0
struct UnitaryTerm {
  int a;
  cplx value;
};

std::array<UnitaryTerm, 2> unitary_column(int m, int& count) {
  static const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
  std::array<UnitaryTerm, 2> out{};
  if (m == 0) {
    out[0] = {0, cplx(1.0, 0.0)};
    count = 1;
    return out;
  }
  const int am = std::abs(m);
  const double sign = (am % 2 == 0) ? 1.0 : -1.0;
  if (m > 0) {
    // Row a = m picks (-1)^m / sqrt2; row a = -m picks -i (-1)^{-m} / sqrt2.
    out[0] = {m, cplx(sign * inv_sqrt2, 0.0)};
    out[1] = {-m, cplx(0.0, -sign * inv_sqrt2)};
  } else {
    // Row a = -m = |m| picks 1/sqrt2; row a = m picks i/sqrt2.
    out[0] = {am, cplx(inv_sqrt2, 0.0)};
    out[1] = {m, cplx(0.0, inv_sqrt2)};
  }
  count = 2;
  return out;
}

enum class RealPhase { equivariant, literal };

CGTable real_table(int J, int l, int lp, RealPhase phase) {
  check_degrees(J, l, lp);
  CGTable out{J, l, lp, Basis::real, {}};
  if (!satisfies_triangle(J, l, lp)) return out;
  const CGTable complex_table = cg_complex(J, l, lp);
  std::vector<cplx> acc(out.dense_size(), cplx(0.0, 0.0));
  for (const auto& e : complex_table.entries) {
    int nA = 0, na = 0, nb = 0;
    const auto colA = unitary_column(e.M, nA);
    const auto cola = unitary_column(e.m, na);
    const auto colb = unitary_column(e.mp, nb);
    for (int i = 0; i < nA; ++i) {
      for (int j = 0; j < na; ++j) {
        for (int k = 0; k < nb; ++k) {
          acc[out.index(colA[i].a, cola[j].a, colb[k].a)] +=
              std::conj(colA[i].value) * e.value * cola[j].value * colb[k].value;
        }
      }
    }
  }
  const bool even = parity_even(J, l, lp);
  for (int M = -J; M <= J; ++M) {
    for (int m = -l; m <= l; ++m) {
      for (int mp = -lp; mp <= lp; ++mp) {
        const cplx z = acc[out.index(M, m, mp)];
        double value = 0.0;
        if (even) {
          if (std::abs(z.imag()) > kSparsityThreshold) {
            throw Error(ErrorCode::NumericalConsistency, "even-parity real CG table has an imaginary residue");
          }
          value = z.real();
        } else if (phase == RealPhase::literal) {
          value = z.real();
        } else {
          if (std::abs(z.real()) > kSparsityThreshold) {
            throw Error(ErrorCode::NumericalConsistency, "odd-parity real CG table has a real residue");
          }
          value = -z.imag();  // Re(i z)
        }
        if (std::abs(value) > kSparsityThreshold) {
          out.entries.push_back({static_cast<std::int16_t>(M), static_cast<std::int16_t>(m),
                                 static_cast<std::int16_t>(mp), value});
        }
      }
    }
  }
  return out;
}

}  // namespace

CGTable cg_complex(int J, int l, int lp) {
  check_degrees(J, l, lp);
  CGTable out{J, l, lp, Basis::complex, {}};
  if (!satisfies_triangle(J, l, lp)) return out;
  for (int M = -J; M <= J; ++M) {
    for (int m = -l; m <= l; ++m) {
      const int mp = M - m;
      if (mp < -lp || mp > lp) continue;
      const double value = static_cast<double>(racah(J, M, l, m, lp, mp));
      if (std::abs(value) > kSparsityThreshold) {
        out.entries.push_back({static_cast<std::int16_t>(M), static_cast<std::int16_t>(m),
                               static_cast<std::int16_t>(mp), value});
      }
    }
  }
  return out;
}

CGTable cg_real(int J, int l, int lp) { return real_table(J, l, lp, RealPhase::equivariant); }

CGTable cg_real_part(int J, int l, int lp) { return real_table(J, l, lp, RealPhase::literal); }

const CGTable& shared_cg_real(int J, int l, int lp) {
  static std::mutex mutex;
  static std::map<std::tuple<int, int, int>, std::unique_ptr<CGTable>> cache;
  std::lock_guard lock(mutex);
  auto& slot = cache[{J, l, lp}];
  if (!slot) slot = std::make_unique<CGTable>(cg_real(J, l, lp));
  return *slot;
}

SparsityStats sparsity_stats(const CGTable& table) {
  SparsityStats s;
  s.nnz = table.entries.size();
  s.density = static_cast<double>(s.nnz) / static_cast<double>(table.dense_size());
  return s;
}

Matrix projection_matrix(const CGTable& table) {
  Matrix p(table.rows(), table.cols());
  const std::size_t width_b = static_cast<std::size_t>(2 * table.lp + 1);
  for (const auto& e : table.entries) {
    p(static_cast<std::size_t>(e.M + table.J),
      static_cast<std::size_t>(e.m + table.l) * width_b + static_cast<std::size_t>(e.mp + table.lp)) = e.value;
  }
  return p;
}

void write_table_dump(std::ostream& os, const CGTable& table) {
  std::array<char, 64> buf{};
  for (const auto& e : table.entries) {
    auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), e.value, std::chars_format::general, 17);
    os << table.J << ' ' << table.l << ' ' << table.lp << ' ' << e.M << ' ' << e.m << ' ' << e.mp << ' ';
    os.write(buf.data(), ptr - buf.data());
    os << '\n';
  }
}

TableCache TableCache::build(int max_L) {
  if (max_L < 0 || max_L > 12) throw Error(ErrorCode::InvalidArgument, "table cache supports max_L in [0, 12]");
  const auto start = std::chrono::steady_clock::now();
  TableCache cache;
  cache.max_L_ = max_L;
  const std::size_t n = static_cast<std::size_t>(max_L + 1);
  cache.complex_.reserve(n * n * n);
  cache.real_.reserve(n * n * n);
  for (int J = 0; J <= max_L; ++J) {
    for (int l = 0; l <= max_L; ++l) {
      for (int lp = 0; lp <= max_L; ++lp) {
        cache.complex_.push_back(cg_complex(J, l, lp));
        cache.real_.push_back(cg_real(J, l, lp));
      }
    }
  }
  cache.build_seconds_ = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return cache;
}

std::size_t TableCache::slot(int J, int l, int lp) const {
  if (J < 0 || l < 0 || lp < 0 || J > max_L_ || l > max_L_ || lp > max_L_) {
    throw Error(ErrorCode::IndexError, "degree outside table cache");
  }
  const std::size_t n = static_cast<std::size_t>(max_L_ + 1);
  return (static_cast<std::size_t>(J) * n + static_cast<std::size_t>(l)) * n + static_cast<std::size_t>(lp);
}

const CGTable& TableCache::get(int J, int l, int lp, Basis basis) const {
  const std::size_t s = slot(J, l, lp);
  return basis == Basis::complex ? complex_[s] : real_[s];
}

std::size_t TableCache::nonempty_count(Basis basis) const {
  const auto& tables = basis == Basis::complex ? complex_ : real_;
  std::size_t count = 0;
  for (const auto& t : tables) count += t.empty() ? 0 : 1;
  return count;
}

std::vector<Matrix> wigner_blocks(int max_degree, const Matrix& rotation) {
  if (rotation.rows() != 3 || rotation.cols() != 3) throw Error(ErrorCode::NotARotation, "rotation must be 3x3");
  if (max_abs_diff(rotation.transpose() * rotation, Matrix::identity(3)) > 1e-10 ||
      std::abs(determinant3(rotation) - 1.0) > 1e-10) {
    throw Error(ErrorCode::NotARotation, "matrix is not orthogonal with det +1");
  }
  std::vector<Matrix> blocks;
  blocks.push_back(Matrix::identity(1));
  if (max_degree < 1) return blocks;
  constexpr std::array<std::size_t, 3> order = {1, 2, 0};  // (y, z, x)
  Matrix d1(3, 3);
  for (std::size_t a = 0; a < 3; ++a) {
    for (std::size_t b = 0; b < 3; ++b) d1(a, b) = rotation(order[a], order[b]);
  }
  blocks.push_back(d1);
  for (int l = 2; l <= max_degree; ++l) {
    const Matrix c = projection_matrix(shared_cg_real(l, l - 1, 1));
    blocks.push_back(c * blocks.back().kron(d1) * c.transpose());
  }
  return blocks;
}

WignerRep wigner_d(const IrrepsSignature& signature, const Matrix& rotation) {
  return WignerRep{signature, rotation, wigner_blocks(std::max(signature.max_degree(), 0), rotation)};
}

EquivariantFeature rotate(const EquivariantFeature& f, const WignerRep& rep) {
  const auto& sig = f.signature();
  if (sig.max_degree() >= static_cast<int>(rep.blocks.size())) {
    throw Error(ErrorCode::SignatureMismatch, "rotation representation does not cover the feature degrees");
  }
  EquivariantFeature out(sig, f.tokens());
  for (std::size_t t = 0; t < f.tokens(); ++t) {
    for (int h = 0; h < f.heads(); ++h) {
      auto src = f.slice(t, h);
      auto dst = out.slice(t, h);
      for (const auto& e : sig.entries()) {
        const Matrix& d = rep.block(e.degree);
        const std::size_t dim = irrep_dim(e.degree);
        for (int c = 0; c < e.multiplicity; ++c) {
          const std::size_t off = sig.block_offset(e.degree, c);
          for (std::size_t i = 0; i < dim; ++i) {
            double s = 0.0;
            for (std::size_t j = 0; j < dim; ++j) s += d(i, j) * src[off + j];
            dst[off + i] = s;
          }
        }
      }
    }
  }
  return out;
}

Matrix axis_angle(const std::array<double, 3>& axis, double angle) {
  const double n = std::sqrt(axis[0] * axis[0] + axis[1] * axis[1] + axis[2] * axis[2]);
  const double x = axis[0] / n, y = axis[1] / n, z = axis[2] / n;
  const double c = std::cos(angle), s = std::sin(angle), t = 1.0 - c;
  Matrix r(3, 3);
  r(0, 0) = t * x * x + c;
  r(0, 1) = t * x * y - s * z;
  r(0, 2) = t * x * z + s * y;
  r(1, 0) = t * x * y + s * z;
  r(1, 1) = t * y * y + c;
  r(1, 2) = t * y * z - s * x;
  r(2, 0) = t * x * z - s * y;
  r(2, 1) = t * y * z + s * x;
  r(2, 2) = t * z * z + c;
  return r;
}

}  // namespace cgt
