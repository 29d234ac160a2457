#pragma once

#include <array>
#include <cstddef>
#include <iosfwd>
#include <vector>

#include "cgt/cg_table.hpp"
#include "cgt/irreps.hpp"
#include "cgt/linalg.hpp"

namespace cgt {

/// Log-factorial precision guard for the closed-form sum.
inline constexpr int kMaxCGDegree = 24;
/// Entries with |value| <= threshold are structural zeros.
inline constexpr double kSparsityThreshold = 1e-12;

inline bool satisfies_triangle(int J, int l, int lp) {
  return J >= 0 && l >= 0 && lp >= 0 && J <= l + lp && J >= (l > lp ? l - lp : lp - l);
}
inline bool parity_even(int J, int l, int lp) { return (J + l + lp) % 2 == 0; }

/// Complex (Condon-Shortley) basis coefficients <l m; lp mp | J M> from the
/// Racah sum. Triangle-violating inputs give an empty table.
CGTable cg_complex(int J, int l, int lp);

/// Real-basis equivariant table U_J C (U_l (x) U_lp)^dagger.
///
/// With the standard real-harmonic unitary the transformed array is purely
/// real when l+lp+J is even and purely imaginary when it is odd. Even tables
/// keep the real part; odd tables are multiplied by i so that they are real as
/// well. The odd family is what makes (1,1)->1 the cross product:
/// sqrt(2) * C^1_11 (q (x) k) = q x k in (y, z, x) component order.
CGTable cg_real(int J, int l, int lp);

/// The literal real part of U_J C (U_l (x) U_lp)^dagger, with no phase
/// rotation. Identical to cg_real for even parity; empty for odd parity.
CGTable cg_real_part(int J, int l, int lp);

/// Thread-safe memoized cg_real; references stay valid for the process.
const CGTable& shared_cg_real(int J, int l, int lp);

struct SparsityStats {
  std::size_t nnz = 0;
  double density = 0.0;
};
SparsityStats sparsity_stats(const CGTable& table);

/// Dense (2J+1) x (2l+1)(2lp+1) projection matrix.
Matrix projection_matrix(const CGTable& table);

/// "J l lp M m mp value" lines, 17 significant digits.
void write_table_dump(std::ostream& os, const CGTable& table);

/// Immutable set of tables for J, l, lp <= max_L in both bases.
class TableCache {
 public:
  static TableCache build(int max_L);

  int max_degree() const { return max_L_; }
  double build_seconds() const { return build_seconds_; }
  const CGTable& get(int J, int l, int lp, Basis basis) const;
  std::size_t triple_count() const { return real_.size(); }
  std::size_t nonempty_count(Basis basis) const;

 private:
  std::size_t slot(int J, int l, int lp) const;

  int max_L_ = 0;
  double build_seconds_ = 0.0;
  std::vector<CGTable> complex_;
  std::vector<CGTable> real_;
};

/// Block-diagonal real rotation representation. blocks[l] is D^l(R) for every
/// l up to the signature's maximum degree.
struct WignerRep {
  IrrepsSignature signature;
  Matrix rotation;
  std::vector<Matrix> blocks;

  const Matrix& block(int degree) const { return blocks.at(static_cast<std::size_t>(degree)); }
};

/// D^1 is R in (y, z, x) order; higher degrees come from the recursion
/// D^l = C^l_{l-1,1} (D^{l-1} (x) D^1) C^l_{l-1,1}^T. Throws NotARotation.
WignerRep wigner_d(const IrrepsSignature& signature, const Matrix& rotation);
/// Blocks 0..max_degree only.
std::vector<Matrix> wigner_blocks(int max_degree, const Matrix& rotation);

/// Applies D^l to every (token, head, channel) block of f.
EquivariantFeature rotate(const EquivariantFeature& f, const WignerRep& rep);

/// Rotation about a unit axis (right-hand rule).
Matrix axis_angle(const std::array<double, 3>& axis, double angle);

}  // namespace cgt
