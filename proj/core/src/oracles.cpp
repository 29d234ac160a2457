#include "cgt/oracles.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "cgt/errors.hpp"

namespace cgt::oracles {

std::vector<double> reference_contract(int J, int l, int lp, const CGTable& table, std::span<const double> x,
                                       std::span<const double> y) {
  const auto dense = table.dense();
  const int nJ = 2 * J + 1, nl = 2 * l + 1, nlp = 2 * lp + 1;
  std::vector<double> out(static_cast<std::size_t>(nJ), 0.0);
  for (int M = 0; M < nJ; ++M) {
    for (int m = 0; m < nl; ++m) {
      for (int mp = 0; mp < nlp; ++mp) {
        out[static_cast<std::size_t>(M)] +=
            dense[static_cast<std::size_t>((M * nl + m) * nlp + mp)] * x[static_cast<std::size_t>(m)] *
            y[static_cast<std::size_t>(mp)];
      }
    }
  }
  return out;
}

EquivariantFeature reference_product(const TableProvider& tables, const EquivariantFeature& a,
                                     const EquivariantFeature& b, const std::vector<int>& out_degrees,
                                     bool elementwise) {
  const auto& sa = a.signature();
  const auto& sb = b.signature();
  struct Path {
    int l, lp, J, channels;
    CGTable table;
  };
  std::vector<Path> paths;
  std::vector<Irrep> out_entries;
  std::vector<int> degrees = out_degrees;
  std::sort(degrees.begin(), degrees.end());
  for (int J : degrees) {
    int mult = 0;
    for (const auto& ea : sa.entries()) {
      for (const auto& eb : sb.entries()) {
        if (J < std::abs(ea.degree - eb.degree) || J > ea.degree + eb.degree) continue;
        auto t = tables(J, ea.degree, eb.degree);
        if (t.empty()) continue;
        const int ch = elementwise ? ea.multiplicity : ea.multiplicity * eb.multiplicity;
        paths.push_back({ea.degree, eb.degree, J, ch, std::move(t)});
        mult += ch;
      }
    }
    if (mult > 0) out_entries.push_back({J, mult});
  }
  const auto out_sig = out_entries.empty() ? IrrepsSignature().with_heads(sa.heads())
                                           : IrrepsSignature::make(out_entries, sa.heads());
  EquivariantFeature out(out_sig, a.tokens());
  for (std::size_t t = 0; t < a.tokens(); ++t) {
    for (int h = 0; h < sa.heads(); ++h) {
      int current_J = -1;
      int channel = 0;
      for (const auto& p : paths) {
        if (p.J != current_J) {
          current_J = p.J;
          channel = 0;
        }
        const int ma = sa.multiplicity(p.l);
        const int mb = sb.multiplicity(p.lp);
        for (int c = 0; c < ma; ++c) {
          for (int c1 = 0; c1 < mb; ++c1) {
            if (elementwise && c1 != c) continue;
            const int oc = channel + (elementwise ? c : c * mb + c1);
            auto x = a.block(t, h, p.l, c);
            auto y = b.block(t, h, p.lp, c1);
            auto r = reference_contract(p.J, p.l, p.lp, p.table, x, y);
            auto dst = out.block(t, h, p.J, oc);
            for (std::size_t i = 0; i < r.size(); ++i) dst[i] += r[i];
          }
        }
        channel += p.channels;
      }
    }
  }
  return out;
}

std::vector<std::array<double, 3>> circular_cross_conv(std::span<const std::array<double, 3>> q,
                                                       std::span<const std::array<double, 3>> k) {
  const std::size_t n = q.size();
  std::vector<std::array<double, 3>> out(n, {0.0, 0.0, 0.0});
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      const auto& a = q[j];
      const auto& b = k[(i + n - j) % n];
      out[i][0] += a[1] * b[2] - a[2] * b[1];
      out[i][1] += a[2] * b[0] - a[0] * b[2];
      out[i][2] += a[0] * b[1] - a[1] * b[0];
    }
  }
  return out;
}

std::vector<double> circular_correlation(std::span<const double> x, std::span<const double> y) {
  const std::size_t n = x.size();
  std::vector<double> out(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) out[i] += x[j] * y[(j + n - i) % n];
  }
  return out;
}

Matrix random_rotation(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  double w = normal(rng), x = normal(rng), y = normal(rng), z = normal(rng);
  const double n = std::sqrt(w * w + x * x + y * y + z * z);
  w /= n;
  x /= n;
  y /= n;
  z /= n;
  Matrix r(3, 3);
  r(0, 0) = 1 - 2 * (y * y + z * z);
  r(0, 1) = 2 * (x * y - z * w);
  r(0, 2) = 2 * (x * z + y * w);
  r(1, 0) = 2 * (x * y + z * w);
  r(1, 1) = 1 - 2 * (x * x + z * z);
  r(1, 2) = 2 * (y * z - x * w);
  r(2, 0) = 2 * (x * z - y * w);
  r(2, 1) = 2 * (y * z + x * w);
  r(2, 2) = 1 - 2 * (x * x + y * y);
  return r;
}

double finite_diff(const std::function<double(std::span<const double>)>& fn, std::span<const double> point,
                   std::span<const double> direction, double step) {
  if (!(step >= 1e-7 && step <= 1e-3)) throw Error(ErrorCode::InvalidArgument, "finite-difference step out of range");
  if (point.size() != direction.size()) throw Error(ErrorCode::ShapeMismatch, "point/direction size");
  std::vector<double> plus(point.begin(), point.end()), minus(point.begin(), point.end());
  for (std::size_t i = 0; i < plus.size(); ++i) {
    plus[i] += step * direction[i];
    minus[i] -= step * direction[i];
  }
  return (fn(plus) - fn(minus)) / (2.0 * step);
}

void gauss_legendre(int n, std::vector<double>& nodes, std::vector<double>& weights) {
  nodes.assign(static_cast<std::size_t>(n), 0.0);
  weights.assign(static_cast<std::size_t>(n), 0.0);
  for (int i = 0; i < n; ++i) {
    double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    // Recompute the derivative at the converged node.
    double p0 = 1.0, p1 = x;
    for (int k = 2; k <= n; ++k) {
      const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
      p0 = p1;
      p1 = p2;
    }
    dp = n * (x * p1 - p0) / (x * x - 1.0);
    nodes[static_cast<std::size_t>(i)] = x;
    weights[static_cast<std::size_t>(i)] = 2.0 / ((1.0 - x * x) * dp * dp);
  }
}

namespace {

// Fully normalized associated Legendre values P~_l^m(cos theta) for
// 0 <= m <= l <= L, indexed l*(l+1)/2 + m. Includes the 1/sqrt(4 pi) factor.
std::vector<double> normalized_legendre(int L, double x, double s) {
  std::vector<double> p(static_cast<std::size_t>((L + 1) * (L + 2) / 2), 0.0);
  auto at = [](int l, int m) { return static_cast<std::size_t>(l * (l + 1) / 2 + m); };
  p[0] = 1.0 / std::sqrt(4.0 * std::numbers::pi);
  for (int m = 1; m <= L; ++m) p[at(m, m)] = std::sqrt((2.0 * m + 1.0) / (2.0 * m)) * s * p[at(m - 1, m - 1)];
  for (int m = 0; m < L; ++m) p[at(m + 1, m)] = std::sqrt(2.0 * m + 3.0) * x * p[at(m, m)];
  for (int m = 0; m <= L; ++m) {
    for (int l = m + 2; l <= L; ++l) {
      const double a = std::sqrt((4.0 * l * l - 1.0) / (static_cast<double>(l) * l - static_cast<double>(m) * m));
      const double b = std::sqrt((static_cast<double>(l - 1) * (l - 1) - static_cast<double>(m) * m) /
                                 (4.0 * (l - 1) * (l - 1) - 1.0));
      p[at(l, m)] = a * (x * p[at(l - 1, m)] - b * p[at(l - 2, m)]);
    }
  }
  return p;
}

double harmonic_from(const std::vector<double>& p, int l, int m, double phi) {
  const std::size_t idx = static_cast<std::size_t>(l * (l + 1) / 2 + std::abs(m));
  if (m == 0) return p[idx];
  if (m > 0) return std::numbers::sqrt2 * p[idx] * std::cos(m * phi);
  return std::numbers::sqrt2 * p[idx] * std::sin(-m * phi);
}

double log_factorial(int n) { return std::lgamma(static_cast<double>(n) + 1.0); }

}  // namespace

double real_ylm(int l, int m, double theta, double phi) {
  const auto p = normalized_legendre(l, std::cos(theta), std::sin(theta));
  return harmonic_from(p, l, m, phi);
}

SphereGrid::SphereGrid(int max_degree)
    : max_degree_(max_degree),
      n_theta_(max_degree + 2),
      n_phi_(2 * max_degree + 2),
      harmonics_(static_cast<std::size_t>((max_degree + 1) * (max_degree + 1))) {
  if (max_degree < 0) throw Error(ErrorCode::InvalidArgument, "negative sphere grid degree");
  std::vector<double> nodes, gl_weights;
  gauss_legendre(n_theta_, nodes, gl_weights);
  const double dphi = 2.0 * std::numbers::pi / n_phi_;
  weights_.reserve(static_cast<std::size_t>(n_theta_ * n_phi_));
  ylm_.reserve(static_cast<std::size_t>(n_theta_ * n_phi_) * harmonics_);
  for (int a = 0; a < n_theta_; ++a) {
    const double x = nodes[static_cast<std::size_t>(a)];
    const auto p = normalized_legendre(max_degree_, x, std::sqrt(1.0 - x * x));
    for (int b = 0; b < n_phi_; ++b) {
      const double phi = b * dphi;
      weights_.push_back(gl_weights[static_cast<std::size_t>(a)] * dphi);
      for (int l = 0; l <= max_degree_; ++l) {
        for (int m = -l; m <= l; ++m) ylm_.push_back(harmonic_from(p, l, m, phi));
      }
    }
  }
}

std::vector<double> SphereGrid::synthesize(std::span<const double> coeffs, int band) const {
  if (band > max_degree_) throw Error(ErrorCode::GridTooCoarse, "synthesis band exceeds grid degree");
  std::vector<double> values(points(), 0.0);
  for (std::size_t p = 0; p < points(); ++p) {
    double acc = 0.0;
    for (int l = 0; l <= band; ++l) {
      for (int m = -l; m <= l; ++m) acc += coeffs[static_cast<std::size_t>(l * l + l + m)] * y(l, m, p);
    }
    values[p] = acc;
  }
  return values;
}

std::vector<double> SphereGrid::analyze(std::span<const double> values, int band) const {
  if (band > max_degree_) throw Error(ErrorCode::GridTooCoarse, "analysis band exceeds grid degree");
  std::vector<double> coeffs(static_cast<std::size_t>((band + 1) * (band + 1)), 0.0);
  for (std::size_t p = 0; p < points(); ++p) {
    const double wv = weights_[p] * values[p];
    for (int l = 0; l <= band; ++l) {
      for (int m = -l; m <= l; ++m) coeffs[static_cast<std::size_t>(l * l + l + m)] += wv * y(l, m, p);
    }
  }
  return coeffs;
}

double SphereGrid::orthonormality_error(int band) const {
  if (band > max_degree_) throw Error(ErrorCode::GridTooCoarse, "orthonormality band exceeds grid degree");
  const std::size_t n = static_cast<std::size_t>((band + 1) * (band + 1));
  double worst = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i; j < n; ++j) {
      double acc = 0.0;
      for (std::size_t p = 0; p < points(); ++p) acc += weights_[p] * ylm_[p * harmonics_ + i] * ylm_[p * harmonics_ + j];
      worst = std::max(worst, std::abs(acc - (i == j ? 1.0 : 0.0)));
    }
  }
  return worst;
}

double cg_zero(int l1, int l2, int J) {
  const int sum = l1 + l2 + J;
  if (sum % 2 != 0 || J < std::abs(l1 - l2) || J > l1 + l2) return 0.0;
  const int g = sum / 2;
  const double log_mag = 0.5 * (log_factorial(2 * g - 2 * l1) + log_factorial(2 * g - 2 * l2) +
                                log_factorial(2 * g - 2 * J) - log_factorial(2 * g + 1)) +
                         log_factorial(g) - log_factorial(g - l1) - log_factorial(g - l2) - log_factorial(g - J);
  const double three_j = ((g % 2 == 0) ? 1.0 : -1.0) * std::exp(log_mag);
  const double phase = ((l1 - l2) % 2 == 0) ? 1.0 : -1.0;
  return phase * std::sqrt(2.0 * J + 1.0) * three_j;
}

double gaunt_scale(int l1, int l2, int J) {
  return std::sqrt((2.0 * l1 + 1.0) * (2.0 * l2 + 1.0) / (4.0 * std::numbers::pi * (2.0 * J + 1.0))) *
         cg_zero(l1, l2, J);
}

SphereReport sphere_product_check(const SphereGrid& grid, const TableProvider& tables, int band,
                                  std::span<const double> f, std::span<const double> g) {
  if (grid.max_degree() < 2 * band) throw Error(ErrorCode::GridTooCoarse, "grid must resolve twice the band");
  const std::size_t n_in = static_cast<std::size_t>((band + 1) * (band + 1));
  if (f.size() != n_in || g.size() != n_in) throw Error(ErrorCode::ShapeMismatch, "coefficient count");
  SphereReport report;
  report.band = band;

  // Calibrate at l = 0: integral of Y00^3 against the closed form.
  std::vector<double> ones(grid.points(), 0.0);
  for (std::size_t p = 0; p < grid.points(); ++p) ones[p] = grid.y(0, 0, p) * grid.y(0, 0, p);
  const double y000 = grid.analyze(ones, 0)[0];
  report.calibration_error = std::abs(y000 - gaunt_scale(0, 0, 0));

  const auto fv = grid.synthesize(f, band);
  const auto gv = grid.synthesize(g, band);
  std::vector<double> prod(fv.size());
  for (std::size_t p = 0; p < prod.size(); ++p) prod[p] = fv[p] * gv[p];
  const auto measured = grid.analyze(prod, 2 * band);

  std::vector<double> expected(measured.size(), 0.0);
  for (int J = 0; J <= 2 * band; ++J) {
    for (int l1 = 0; l1 <= band; ++l1) {
      for (int l2 = 0; l2 <= band; ++l2) {
        const double scale = gaunt_scale(l1, l2, J);
        if (scale == 0.0) continue;
        const auto table = tables(J, l1, l2);
        for (const auto& e : table.entries) {
          expected[static_cast<std::size_t>(J * J + J + e.M)] +=
              scale * e.value * f[static_cast<std::size_t>(l1 * l1 + l1 + e.m)] *
              g[static_cast<std::size_t>(l2 * l2 + l2 + e.mp)];
        }
      }
    }
  }
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < expected.size(); ++i) {
    num += (measured[i] - expected[i]) * (measured[i] - expected[i]);
    den += expected[i] * expected[i];
  }
  report.rel_error = den > 0.0 ? std::sqrt(num / den) : std::sqrt(num);
  report.passed = report.rel_error < report.tolerance && report.calibration_error < 1e-12;
  return report;
}

}  // namespace cgt::oracles
