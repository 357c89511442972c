#pragma once

// Monte Carlo summaries with standard errors, goodness-of-fit statistics.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <span>
#include <stdexcept>
#include <vector>

#include <boost/math/special_functions/gamma.hpp>

#include "rkdpp/core.hpp"

namespace rkdpp::stats {

struct Estimate {
  double value = 0.0;
  double stderr_ = 0.0;
  std::size_t n = 0;

  /// |value - target| <= k * stderr.
  bool within(double target, double k = 3.0) const { return std::abs(value - target) <= k * stderr_; }
  double z(double target) const {
    return stderr_ > 0.0 ? (value - target) / stderr_ : (value == target ? 0.0 : std::numeric_limits<double>::infinity());
  }
};

inline double mean(std::span<const double> x) {
  if (x.empty()) throw std::invalid_argument("mean of an empty sample");
  CompensatedSum s;
  for (double v : x) s.add(v);
  return s.value() / static_cast<double>(x.size());
}

/// Sample mean with its standard error.
inline Estimate mean_estimate(std::span<const double> x) {
  const double m = mean(x);
  const auto n = x.size();
  if (n < 2) return {m, std::numeric_limits<double>::infinity(), n};
  CompensatedSum ss;
  for (double v : x) ss.add((v - m) * (v - m));
  const double var = ss.value() / static_cast<double>(n - 1);
  return {m, std::sqrt(var / static_cast<double>(n)), n};
}

/// Unbiased sample variance; the standard error uses the fourth central
/// moment, sqrt((m4 - s^4) / n).
inline Estimate variance_estimate(std::span<const double> x) {
  const auto n = x.size();
  if (n < 2) throw std::invalid_argument("variance needs at least two samples");
  const double m = mean(x);
  CompensatedSum s2;
  CompensatedSum s4;
  for (double v : x) {
    const double d = (v - m) * (v - m);
    s2.add(d);
    s4.add(d * d);
  }
  const double var = s2.value() / static_cast<double>(n - 1);
  const double m4 = s4.value() / static_cast<double>(n);
  return {var, std::sqrt(std::max(0.0, m4 - var * var) / static_cast<double>(n)), n};
}

/// Sample covariance as the mean of centred products, with the standard
/// error of that mean.
inline Estimate covariance_estimate(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw std::invalid_argument("covariance: length mismatch");
  const double mx = mean(x);
  const double my = mean(y);
  std::vector<double> p(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) p[i] = (x[i] - mx) * (y[i] - my);
  Estimate e = mean_estimate(p);
  e.value *= static_cast<double>(x.size()) / static_cast<double>(x.size() - 1);
  return e;
}

/// P(X >= x) for X ~ chi^2 with `dof` degrees of freedom.
inline double chi2_survival(double x, double dof) {
  if (x <= 0.0) return 1.0;
  return boost::math::gamma_q(dof / 2.0, x / 2.0);
}

struct ChiSquare {
  double statistic = 0.0;
  double dof = 0.0;
  double p_value = 1.0;
};

/// Pearson test of observed counts against probabilities (summing to 1).
inline ChiSquare chi_square_test(std::span<const std::size_t> counts, std::span<const double> probs) {
  if (counts.size() != probs.size() || counts.size() < 2) throw std::invalid_argument("chi_square_test: bad sizes");
  std::size_t total = 0;
  for (auto c : counts) total += c;
  double stat = 0.0;
  for (std::size_t i = 0; i < counts.size(); ++i) {
    const double e = probs[i] * static_cast<double>(total);
    if (!(e > 0.0)) throw std::invalid_argument("chi_square_test: zero expected count");
    const double d = static_cast<double>(counts[i]) - e;
    stat += d * d / e;
  }
  const double dof = static_cast<double>(counts.size() - 1);
  return {stat, dof, chi2_survival(stat, dof)};
}

/// Kolmogorov-Smirnov distance sup |F_n - F| of a sample against a CDF.
inline double ks_distance(std::vector<double> sample, const std::function<double(double)>& cdf) {
  if (sample.empty()) throw std::invalid_argument("ks_distance: empty sample");
  std::sort(sample.begin(), sample.end());
  const double n = static_cast<double>(sample.size());
  double d = 0.0;
  for (std::size_t i = 0; i < sample.size(); ++i) {
    const double F = cdf(sample[i]);
    d = std::max({d, static_cast<double>(i + 1) / n - F, F - static_cast<double>(i) / n});
  }
  return d;
}

/// Ordinary least-squares slope of y on x.
inline double ols_slope(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) throw std::invalid_argument("ols_slope: need two or more points");
  const double mx = mean(x);
  const double my = mean(y);
  double sxy = 0.0;
  double sxx = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
  }
  if (sxx == 0.0) throw std::invalid_argument("ols_slope: x values are all equal");
  return sxy / sxx;
}

}  // namespace rkdpp::stats
