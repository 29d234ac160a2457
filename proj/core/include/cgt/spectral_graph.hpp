#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <vector>

#include "cgt/cg_long_conv.hpp"
#include "cgt/irreps.hpp"
#include "cgt/linalg.hpp"
#include "cgt/tensor_product.hpp"

namespace cgt {

/// Normalized Laplacian L = I - D^{-1/2} A D^{-1/2} and its eigenbasis.
/// Eigenvalues ascend; each eigenvector column is sign-fixed so that its
/// largest-magnitude component is positive.
struct GraphSpectrum {
  std::size_t n = 0;
  Matrix adjacency;
  Matrix laplacian;
  std::vector<double> eigenvalues;
  Matrix eigenvectors;  ///< columns are eigenvectors

  double min_gap() const;
  bool simple(double gap = 1e-8) const { return min_gap() > gap; }
};

/// Throws NotSymmetric, IsolatedNode, InvalidArgument (negative weight or
/// self loop).
GraphSpectrum build_spectrum(const Matrix& adjacency);

/// Cyclic Jacobi eigensolver for a symmetric matrix. Columns of `vectors`
/// are the (unsorted) eigenvectors.
void jacobi_eigen(Matrix a, std::vector<double>& values, Matrix& vectors, double tol = 1e-13);

/// x_hat = U^T x per lane; igft is x = U x_hat.
EquivariantFeature gft(const GraphSpectrum& spectrum, const EquivariantFeature& x);
EquivariantFeature igft(const GraphSpectrum& spectrum, const EquivariantFeature& x_hat);

/// U( CG(U^T q, U^T k) ): the per-eigenmode analogue of conv_fft.
EquivariantFeature spectral_conv(const GraphSpectrum& spectrum, const ProductPlan& plan, const EquivariantFeature& q,
                                 const EquivariantFeature& k);

/// Node i of the input becomes node perm[i].
EquivariantFeature permute_tokens(const EquivariantFeature& f, std::span<const std::size_t> perm);
Matrix permute_adjacency(const Matrix& adjacency, std::span<const std::size_t> perm);

struct PermutationReport {
  double error = 0.0;  ///< relative
  double tolerance = 1e-8;
  bool passed = false;
};

/// Compares spectral_conv on (P A P^T, P q, P k) with P spectral_conv(A, q, k).
/// Throws DegenerateSpectrum if the graph's eigenvalues are not simple.
PermutationReport permutation_check(const GraphSpectrum& spectrum, const ProductPlan& plan,
                                    const EquivariantFeature& q, const EquivariantFeature& k,
                                    std::span<const std::size_t> perm);

/// Same comparison for the token-order FFT path, which is not permutation
/// equivariant.
PermutationReport fft_permutation_check(const ConvConfig& cfg, const EquivariantFeature& q,
                                        const EquivariantFeature& k, std::span<const std::size_t> perm);

/// Edge list "u v weight" per line (0-indexed); '#' starts a comment.
Matrix read_edge_list(std::istream& is);

}  // namespace cgt
