#include "cgt/spectral_graph.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <numeric>
#include <sstream>
#include <string>

namespace cgt {

namespace {

// out = M^T x (transpose = true) or M x, applied to every lane of the token axis.
EquivariantFeature mix_tokens(const Matrix& m, const EquivariantFeature& x, bool transpose) {
  const std::size_t n = m.rows();
  if (x.tokens() != n) {
    throw Error(ErrorCode::SizeMismatch,
                "feature has " + std::to_string(x.tokens()) + " tokens, graph has " + std::to_string(n) + " nodes");
  }
  EquivariantFeature out(x.signature(), n);
  const std::size_t stride = x.token_stride();
  auto src = x.data();
  auto dst = out.data();
  for (std::size_t i = 0; i < n; ++i) {
    double* row_out = dst.data() + i * stride;
    for (std::size_t j = 0; j < n; ++j) {
      const double w = transpose ? m(j, i) : m(i, j);
      if (w == 0.0) continue;
      const double* row_in = src.data() + j * stride;
      for (std::size_t k = 0; k < stride; ++k) row_out[k] += w * row_in[k];
    }
  }
  return out;
}

}  // namespace

double GraphSpectrum::min_gap() const {
  double gap = std::numeric_limits<double>::infinity();
  for (std::size_t i = 1; i < eigenvalues.size(); ++i) gap = std::min(gap, eigenvalues[i] - eigenvalues[i - 1]);
  return gap;
}

void jacobi_eigen(Matrix a, std::vector<double>& values, Matrix& vectors, double tol) {
  const std::size_t n = a.rows();
  vectors = Matrix::identity(n);
  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0;
    for (std::size_t p = 0; p < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) off = std::max(off, std::abs(a(p, q)));
    }
    if (off <= tol) break;
    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double apq = a(p, q);
        if (std::abs(apq) < std::numeric_limits<double>::min()) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
        const double t = (theta >= 0.0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (std::size_t k = 0; k < n; ++k) {
          const double akp = a(k, p), akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double apk = a(p, k), aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double vkp = vectors(k, p), vkq = vectors(k, q);
          vectors(k, p) = c * vkp - s * vkq;
          vectors(k, q) = s * vkp + c * vkq;
        }
      }
    }
  }
  values.resize(n);
  for (std::size_t i = 0; i < n; ++i) values[i] = a(i, i);
}

GraphSpectrum build_spectrum(const Matrix& adjacency) {
  const std::size_t n = adjacency.rows();
  if (n == 0 || adjacency.cols() != n) throw Error(ErrorCode::NotSymmetric, "adjacency must be square and non-empty");
  std::vector<double> degree(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    if (adjacency(i, i) != 0.0) throw Error(ErrorCode::InvalidArgument, "self loop at node " + std::to_string(i));
    for (std::size_t j = 0; j < n; ++j) {
      if (adjacency(i, j) != adjacency(j, i)) throw Error(ErrorCode::NotSymmetric, "adjacency is not symmetric");
      if (adjacency(i, j) < 0.0) throw Error(ErrorCode::InvalidArgument, "negative edge weight");
      degree[i] += adjacency(i, j);
    }
  }
  GraphSpectrum spec;
  spec.n = n;
  spec.adjacency = adjacency;
  spec.laplacian = Matrix(n, n);
  if (n == 1) {
    // A lone node has no edges; its only mode is the constant one.
    spec.laplacian(0, 0) = 0.0;
  } else {
    for (std::size_t i = 0; i < n; ++i) {
      if (degree[i] <= 0.0) throw Error(ErrorCode::IsolatedNode, "node " + std::to_string(i) + " has no edges");
    }
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        spec.laplacian(i, j) =
            (i == j ? 1.0 : 0.0) - adjacency(i, j) / std::sqrt(degree[i] * degree[j]);
      }
    }
  }
  std::vector<double> values;
  Matrix vectors;
  jacobi_eigen(spec.laplacian, values, vectors);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  spec.eigenvalues.resize(n);
  spec.eigenvectors = Matrix(n, n);
  for (std::size_t c = 0; c < n; ++c) {
    const std::size_t src = order[c];
    spec.eigenvalues[c] = values[src];
    std::size_t arg = 0;
    for (std::size_t r = 1; r < n; ++r) {
      if (std::abs(vectors(r, src)) > std::abs(vectors(arg, src))) arg = r;
    }
    const double sign = vectors(arg, src) < 0.0 ? -1.0 : 1.0;
    for (std::size_t r = 0; r < n; ++r) spec.eigenvectors(r, c) = sign * vectors(r, src);
  }
  return spec;
}

EquivariantFeature gft(const GraphSpectrum& spectrum, const EquivariantFeature& x) {
  return mix_tokens(spectrum.eigenvectors, x, true);
}

EquivariantFeature igft(const GraphSpectrum& spectrum, const EquivariantFeature& x_hat) {
  return mix_tokens(spectrum.eigenvectors, x_hat, false);
}

EquivariantFeature spectral_conv(const GraphSpectrum& spectrum, const ProductPlan& plan, const EquivariantFeature& q,
                                 const EquivariantFeature& k) {
  const auto qh = gft(spectrum, q);
  const auto kh = gft(spectrum, k);
  return igft(spectrum, contract_sparse(plan, qh, kh));
}

EquivariantFeature permute_tokens(const EquivariantFeature& f, std::span<const std::size_t> perm) {
  if (perm.size() != f.tokens()) throw Error(ErrorCode::SizeMismatch, "permutation length");
  EquivariantFeature out(f.signature(), f.tokens());
  const std::size_t stride = f.token_stride();
  auto src = f.data();
  auto dst = out.data();
  for (std::size_t i = 0; i < perm.size(); ++i) {
    std::copy_n(src.begin() + static_cast<std::ptrdiff_t>(i * stride), stride,
                dst.begin() + static_cast<std::ptrdiff_t>(perm[i] * stride));
  }
  return out;
}

Matrix permute_adjacency(const Matrix& adjacency, std::span<const std::size_t> perm) {
  const std::size_t n = adjacency.rows();
  if (perm.size() != n) throw Error(ErrorCode::SizeMismatch, "permutation length");
  Matrix out(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) out(perm[i], perm[j]) = adjacency(i, j);
  }
  return out;
}

PermutationReport permutation_check(const GraphSpectrum& spectrum, const ProductPlan& plan,
                                    const EquivariantFeature& q, const EquivariantFeature& k,
                                    std::span<const std::size_t> perm) {
  if (!spectrum.simple()) {
    throw Error(ErrorCode::DegenerateSpectrum,
                "eigenvalue gap " + std::to_string(spectrum.min_gap()) +
                    " <= 1e-8; the eigenbasis is not unique up to sign, so the check is undefined");
  }
  const auto base = permute_tokens(spectral_conv(spectrum, plan, q, k), perm);
  const auto permuted_spec = build_spectrum(permute_adjacency(spectrum.adjacency, perm));
  const auto moved = spectral_conv(permuted_spec, plan, permute_tokens(q, perm), permute_tokens(k, perm));
  PermutationReport r;
  r.error = relative_error(moved, base);
  r.passed = r.error < r.tolerance;
  return r;
}

PermutationReport fft_permutation_check(const ConvConfig& cfg, const EquivariantFeature& q,
                                        const EquivariantFeature& k, std::span<const std::size_t> perm) {
  const auto base = permute_tokens(conv_fft(cfg, q, k), perm);
  const auto moved = conv_fft(cfg, permute_tokens(q, perm), permute_tokens(k, perm));
  PermutationReport r;
  r.error = relative_error(moved, base);
  r.passed = r.error < r.tolerance;
  return r;
}

Matrix read_edge_list(std::istream& is) {
  struct Edge {
    std::size_t u, v;
    double w;
  };
  std::vector<Edge> edges;
  std::size_t n = 0;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    Edge e{};
    if (!(ls >> e.u)) continue;
    if (!(ls >> e.v >> e.w)) throw Error(ErrorCode::ParseError, "edge list line " + std::to_string(lineno));
    n = std::max({n, e.u + 1, e.v + 1});
    edges.push_back(e);
  }
  Matrix a(n, n);
  for (const auto& e : edges) {
    a(e.u, e.v) = e.w;
    a(e.v, e.u) = e.w;
  }
  return a;
}

}  // namespace cgt
