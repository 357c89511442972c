#pragma once

// Special functions used by the kernel families: Bernoulli polynomials,
// Legendre polynomials, Gauss-Legendre rules and real spherical harmonics.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <span>
#include <stdexcept>
#include <vector>

namespace rkdpp::special {

/// Bernoulli numbers B_0..B_n (convention B_1 = -1/2).
inline std::vector<double> bernoulli_numbers(std::size_t n) {
  std::vector<double> b(n + 1, 0.0);
  b[0] = 1.0;
  for (std::size_t m = 1; m <= n; ++m) {
    // B_m = -1/(m+1) * sum_{k<m} C(m+1, k) B_k
    double binom = 1.0;  // C(m+1, 0)
    double acc = 0.0;
    for (std::size_t k = 0; k < m; ++k) {
      acc += binom * b[k];
      binom = binom * static_cast<double>(m + 1 - k) / static_cast<double>(k + 1);
    }
    b[m] = -acc / static_cast<double>(m + 1);
  }
  return b;
}

/// Bernoulli polynomial B_n(x).
inline double bernoulli_polynomial(std::size_t n, double x) {
  const auto b = bernoulli_numbers(n);
  // Horner in x over sum_k C(n,k) B_k x^{n-k}.
  double binom = 1.0;
  std::vector<double> c(n + 1);
  for (std::size_t k = 0; k <= n; ++k) {
    c[k] = binom * b[k];
    binom = binom * static_cast<double>(n - k) / static_cast<double>(k + 1);
  }
  double v = 0.0;
  for (std::size_t k = 0; k <= n; ++k) v = v * x + c[k];
  return v;
}

/// P_0(t)..P_{count-1}(t) by the three-term recurrence.
inline void legendre_all(double t, std::span<double> out) {
  if (out.empty()) return;
  out[0] = 1.0;
  if (out.size() == 1) return;
  out[1] = t;
  for (std::size_t j = 2; j < out.size(); ++j) {
    const double jj = static_cast<double>(j);
    out[j] = ((2.0 * jj - 1.0) * t * out[j - 1] - (jj - 1.0) * out[j - 2]) / jj;
  }
}

struct QuadratureRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

/// n-point Gauss-Legendre rule on [-1, 1] (weights sum to 2).
inline QuadratureRule gauss_legendre(std::size_t n) {
  if (n == 0) throw std::invalid_argument("gauss_legendre: n must be positive");
  QuadratureRule rule{std::vector<double>(n), std::vector<double>(n)};
  const double nn = static_cast<double>(n);
  for (std::size_t i = 0; i < (n + 1) / 2; ++i) {
    double x = std::cos(std::numbers::pi * (static_cast<double>(i) + 0.75) / (nn + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0;
      double p1 = x;
      for (std::size_t j = 2; j <= n; ++j) {
        const double jj = static_cast<double>(j);
        const double p2 = ((2.0 * jj - 1.0) * x * p1 - (jj - 1.0) * p0) / jj;
        p0 = p1;
        p1 = p2;
      }
      dp = nn * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    // Recompute derivative at the converged node.
    double p0 = 1.0;
    double p1 = x;
    for (std::size_t j = 2; j <= n; ++j) {
      const double jj = static_cast<double>(j);
      const double p2 = ((2.0 * jj - 1.0) * x * p1 - (jj - 1.0) * p0) / jj;
      p0 = p1;
      p1 = p2;
    }
    dp = nn * (x * p1 - p0) / (x * x - 1.0);
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    rule.nodes[i] = -x;
    rule.nodes[n - 1 - i] = x;
    rule.weights[i] = w;
    rule.weights[n - 1 - i] = w;
  }
  if (n % 2 == 1) rule.nodes[n / 2] = 0.0;
  return rule;
}

/// Number of spherical harmonics of exact degree l on S^{d-1} (in R^d):
/// (2l + d - 2) Gamma(l + d - 2) / (Gamma(d - 1) Gamma(l + 1)), so 2l + 1 on S^2.
inline double sphere_harmonic_count(int d, int l) {
  if (d < 2 || l < 0) throw std::invalid_argument("sphere_harmonic_count: need d >= 2 and l >= 0");
  if (l == 0) return 1.0;
  return (2.0 * l + d - 2.0) * std::tgamma(l + d - 2.0) / (std::tgamma(d - 1.0) * std::tgamma(l + 1.0));
}

/// Real spherical harmonics on S^2, orthonormal for the uniform probability
/// measure, for all degrees 0..max_degree. Within degree l the order is
/// m = 0, then (cos m, sin m) for m = 1..l, so degree l occupies
/// indices l^2 .. (l+1)^2 - 1.
inline void real_spherical_harmonics(double cos_theta, double phi, int max_degree, std::span<double> out) {
  const auto L = static_cast<std::size_t>(max_degree);
  const std::size_t needed = (L + 1) * (L + 1);
  if (out.size() < needed) throw std::invalid_argument("real_spherical_harmonics: output too small");
  const double ct = cos_theta;
  const double st = std::sqrt(std::max(0.0, 1.0 - ct * ct));

  // Fully normalized associated Legendre functions (average of the squared
  // harmonic over the sphere is 1), column by column in m.
  double pmm = 1.0;
  for (std::size_t m = 0; m <= L; ++m) {
    if (m == 1) {
      pmm = std::sqrt(3.0) * st;
    } else if (m >= 2) {
      pmm = std::sqrt((2.0 * m + 1.0) / (2.0 * m)) * st * pmm;
    }
    const double cm = m == 0 ? 1.0 : std::cos(static_cast<double>(m) * phi);
    const double sm = m == 0 ? 0.0 : std::sin(static_cast<double>(m) * phi);
    auto store = [&](std::size_t l, double p) {
      const std::size_t base = l * l;
      if (m == 0) {
        out[base] = p;
      } else {
        out[base + 2 * m - 1] = p * cm;
        out[base + 2 * m] = p * sm;
      }
    };
    store(m, pmm);
    if (m == L) break;
    double p_lm2 = pmm;
    double p_lm1 = std::sqrt(2.0 * m + 3.0) * ct * pmm;
    store(m + 1, p_lm1);
    for (std::size_t l = m + 2; l <= L; ++l) {
      const double ld = static_cast<double>(l);
      const double md = static_cast<double>(m);
      const double a = std::sqrt((2.0 * ld - 1.0) * (2.0 * ld + 1.0) / ((ld - md) * (ld + md)));
      const double b = std::sqrt((2.0 * ld + 1.0) * (ld + md - 1.0) * (ld - md - 1.0) /
                                 ((ld - md) * (ld + md) * (2.0 * ld - 3.0)));
      const double p = a * ct * p_lm1 - b * p_lm2;
      store(l, p);
      p_lm2 = p_lm1;
      p_lm1 = p;
    }
  }
}

}  // namespace rkdpp::special
