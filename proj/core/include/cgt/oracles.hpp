#pragma once

// Brute-force references for tests and the acceptance run. Nothing here
// depends on the production kernels; CG tables enter through a provider
// callback so the caller decides where they come from.

#include <array>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "cgt/cg_table.hpp"
#include "cgt/irreps.hpp"
#include "cgt/linalg.hpp"

namespace cgt::oracles {

using TableProvider = std::function<CGTable(int J, int l, int lp)>;

/// out[M] = sum_{m, mp} C[M][m][mp] x[m] y[mp] over the dense array.
std::vector<double> reference_contract(int J, int l, int lp, const CGTable& table, std::span<const double> x,
                                       std::span<const double> y);

/// Whole-feature product with the library's output layout: for each J in
/// out_degrees, paths (l, lp) in lexicographic order, channels (c, c')
/// row-major (or c alone when elementwise). Paths whose table is empty are
/// skipped.
EquivariantFeature reference_product(const TableProvider& tables, const EquivariantFeature& a,
                                     const EquivariantFeature& b, const std::vector<int>& out_degrees,
                                     bool elementwise);

/// out_i = sum_j q_j x k_{(i - j) mod N} for N three-vectors stored xyz.
std::vector<std::array<double, 3>> circular_cross_conv(std::span<const std::array<double, 3>> q,
                                                       std::span<const std::array<double, 3>> k);
/// out_i = sum_j x_j y_{(j - i) mod N}, the textbook circular correlation.
std::vector<double> circular_correlation(std::span<const double> x, std::span<const double> y);

/// Haar-uniform rotation from a normalized quaternion of four normal draws.
Matrix random_rotation(std::uint64_t seed);

/// Central difference (f(x + h d) - f(x - h d)) / 2h. Step must lie in
/// [1e-7, 1e-3] (InvalidArgument otherwise).
double finite_diff(const std::function<double(std::span<const double>)>& fn, std::span<const double> point,
                   std::span<const double> direction, double step);

/// Gauss-Legendre nodes/weights on [-1, 1].
void gauss_legendre(int n, std::vector<double>& nodes, std::vector<double>& weights);

/// Product quadrature on the sphere with real spherical harmonics up to
/// degree max_degree tabulated at every node. Exact for integrands up to
/// degree 2 * max_degree.
class SphereGrid {
 public:
  explicit SphereGrid(int max_degree);

  int max_degree() const { return max_degree_; }
  std::size_t points() const { return weights_.size(); }
  int n_theta() const { return n_theta_; }
  int n_phi() const { return n_phi_; }
  std::span<const double> weights() const { return weights_; }
  /// Y_{l,m}(node p), m in -l..l, l <= max_degree.
  double y(int l, int m, std::size_t p) const {
    return ylm_[p * harmonics_ + static_cast<std::size_t>(l * l + l + m)];
  }

  /// Coefficients (l = 0..band, packed l*l + l + m) to grid values.
  std::vector<double> synthesize(std::span<const double> coeffs, int band) const;
  /// Grid values to coefficients up to degree band.
  std::vector<double> analyze(std::span<const double> values, int band) const;
  /// max |<Y_lm, Y_l'm'> - delta| over l, l' <= band.
  double orthonormality_error(int band) const;

 private:
  int max_degree_;
  int n_theta_;
  int n_phi_;
  std::size_t harmonics_;
  std::vector<double> weights_;
  std::vector<double> ylm_;
};

/// Real spherical harmonic Y_{l,m}(theta, phi), no Condon-Shortley phase.
double real_ylm(int l, int m, double theta, double phi);

/// <l1 0 l2 0 | J 0> from the closed-form 3j symbol with all m = 0.
double cg_zero(int l1, int l2, int J);
/// Y_{l1} Y_{l2} = sum_J gaunt_scale * C^J (Y_{l1} (x) Y_{l2}).
double gaunt_scale(int l1, int l2, int J);

struct SphereReport {
  int band = 0;
  double rel_error = 0.0;
  double calibration_error = 0.0;  ///< quadrature vs closed form at l = 0
  double tolerance = 1e-8;
  bool passed = false;
};

/// Synthesizes f and g (coefficients packed l*l + l + m, l <= band) on a
/// grid, multiplies pointwise, analyzes to degree 2 * band, and compares
/// with the CG expansion of the coefficient products. `grid` must resolve
/// degree 2 * band (GridTooCoarse otherwise).
SphereReport sphere_product_check(const SphereGrid& grid, const TableProvider& tables, int band,
                                  std::span<const double> f, std::span<const double> g);

}  // namespace cgt::oracles
