#pragma once

// Shared vocabulary: points, random streams, error types, compensated sums.

#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace rkdpp {

/// A node in one of the supported domains. Interval domains use only the
/// first coordinate; the 2-sphere uses all three.
using Point = Eigen::Vector3d;

inline Point make_point(double x) { return Point(x, 0.0, 0.0); }

/// The generator behind every sampler. Streams are derived from 64-bit
/// seeds with `derive_seed`, never shared between replicates.
using Rng = std::mt19937_64;

// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Seed of the independent stream labelled (master, a, b).
constexpr std::uint64_t derive_seed(std::uint64_t master, std::uint64_t a,
                                    std::uint64_t b = 0) noexcept {
  return mix64(mix64(mix64(master) ^ a) + b);
}

/// Uniform double in [0, 1) from the top 53 bits. Independent of the
/// standard library's distribution implementations, so streams are
/// bit-reproducible across toolchains.
inline double uniform01(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline double standard_normal(Rng& rng) {
  // Box-Muller; u1 is kept away from zero.
  constexpr double two_pi = 6.283185307179586476925286766559;
  const double u1 = 1.0 - uniform01(rng);
  const double u2 = uniform01(rng);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(two_pi * u2);
}

// Error taxonomy. Precondition violations use std::invalid_argument.

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A linear system or spectral computation that cannot be trusted.
class NumericalFailure : public Error {
 public:
  NumericalFailure(const std::string& what, double condition = std::numeric_limits<double>::infinity(),
                   double min_singular_value = 0.0)
      : Error(what), condition_(condition), min_singular_value_(min_singular_value) {}

  double condition() const noexcept { return condition_; }
  double min_singular_value() const noexcept { return min_singular_value_; }

 private:
  double condition_;
  double min_singular_value_;
};

/// A sampler gave up (proposal cap, resample cap, envelope violation).
class SamplingFailure : public Error {
 public:
  using Error::Error;
};

/// Invalid or inconsistent experiment configuration.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Kahan-Babuska compensated accumulator.
class CompensatedSum {
 public:
  void add(double v) noexcept {
    const double t = sum_ + v;
    if (std::abs(sum_) >= std::abs(v)) {
      comp_ += (sum_ - t) + v;
    } else {
      comp_ += (v - t) + sum_;
    }
    sum_ = t;
  }
  double value() const noexcept { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

/// log(exp(a) + exp(b)) without overflow; -inf is the additive identity.
inline double log_add_exp(double a, double b) noexcept {
  if (a == -std::numeric_limits<double>::infinity()) return b;
  if (b == -std::numeric_limits<double>::infinity()) return a;
  return a > b ? a + std::log1p(std::exp(b - a)) : b + std::log1p(std::exp(a - b));
}

}  // namespace rkdpp
