#pragma once

// Error functionals for approximants of eigen-expanded targets, and the
// spectral quantities r_{N+1}, epsilon_m(N) and beta_N.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <ostream>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "rkdpp/approximants.hpp"
#include "rkdpp/core.hpp"
#include "rkdpp/linalg.hpp"
#include "rkdpp/spectral_model.hpp"

namespace rkdpp {

/// Squared norms may come out slightly negative from cancellation.
inline constexpr double kNegativeSquareTolerance = 1e-10;

struct ClippedValue {
  double value = 0.0;
  bool clipped = false;
};

/// Clips values in [-tol, 0) to zero; anything below -tol is a failure.
inline ClippedValue clip_squared(double v, const char* what, double tol = kNegativeSquareTolerance) {
  if (v >= 0.0) return {v, false};
  if (v >= -tol) return {0.0, true};
  std::ostringstream os;
  os << what << ": squared residual " << v << " is negative beyond the tolerance";
  throw NumericalFailure(os.str());
}

/// ||f - sum_i w_i k(x_i, .)||_omega^2 = ||f||^2 - 2 w^T (Sigma f)(x) + w^T K_2(x) w.
inline double l2_residual_kernelmix(const SpectralModel& model, const TargetFunction& f, const KernelMix& mix) {
  const auto n = static_cast<Eigen::Index>(mix.nodes.size());
  if (mix.weights.size() != n) throw std::invalid_argument("l2_residual_kernelmix: weights/nodes length mismatch");
  Eigen::VectorXd sf(n);
  for (Eigen::Index i = 0; i < n; ++i) sf(i) = smoothed_eval(model, f, mix.nodes[static_cast<std::size_t>(i)]);
  const Eigen::MatrixXd K2 = gram_matrix(model, 2, mix.nodes);
  return f.l2_norm_sq() - 2.0 * mix.weights.dot(sf) + mix.weights.dot(K2 * mix.weights);
}

/// The same residual through the coefficients of the mixture,
/// <f_hat, e_m> = sigma_m sum_i w_i e_m(x_i), summed over the materialized
/// spectrum. Free of the cancellation in the closed formula, but blind to
/// the unmaterialized tail; used where that tail is below the machine floor.
inline double l2_residual_kernelmix_spectral(const SpectralModel& model, const TargetFunction& f,
                                             const KernelMix& mix) {
  f.check_support(model);
  const std::size_t M = model.size();
  const Eigen::VectorXd proj = eigen_matrix(model, mix.nodes, M).transpose() * mix.weights;
  CompensatedSum acc;
  for (std::size_t m = 0; m < M; ++m) {
    const double d = f.coefficient(m) - model.eigenvalue(m) * proj(static_cast<Eigen::Index>(m));
    acc.add(d * d);
  }
  return acc.value();
}

/// Parseval: sum_m (<f, e_m> - coeff_m)^2.
inline double l2_residual_eigen(const TargetFunction& f, const EigenExpansion& approx) {
  CompensatedSum acc;
  const auto n = static_cast<std::size_t>(approx.coeffs.size());
  for (std::size_t m = 0; m < n; ++m) {
    const double d = f.coefficient(m) - approx.coeffs(static_cast<Eigen::Index>(m));
    acc.add(d * d);
  }
  for (auto it = f.coefficients().lower_bound(n); it != f.coefficients().end(); ++it) acc.add(it->second * it->second);
  return acc.value();
}

/// ||f - f_hat_OKA||_F^2 = ||f||_F^2 - f(x)^T K_1(x)^{-1} f(x).
inline double rkhs_residual_oka(const SpectralModel& model, std::span<const Point> nodes,
                                const Eigen::VectorXd& f_evals, double f_rkhs_norm_sq) {
  CheckedSolver solver(gram_matrix(model, 1, nodes), "rkhs_residual_oka: K_1(x)");
  return f_rkhs_norm_sq - f_evals.dot(solver.solve(f_evals));
}

/// log e_k(sigma) for k = 0..N, skipping index `skip` when it is in range.
inline std::vector<double> log_esp(std::span<const double> sigmas, std::size_t N,
                                   std::size_t skip = std::numeric_limits<std::size_t>::max()) {
  constexpr double ninf = -std::numeric_limits<double>::infinity();
  std::vector<double> le(N + 1, ninf);
  le[0] = 0.0;
  for (std::size_t m = 0; m < sigmas.size(); ++m) {
    if (m == skip) continue;
    if (!(sigmas[m] > 0.0)) throw std::invalid_argument("log_esp: eigenvalues must be positive");
    const double ls = std::log(sigmas[m]);
    for (std::size_t k = N; k >= 1; --k) le[k] = log_add_exp(le[k], ls + le[k - 1]);
  }
  return le;
}

/// epsilon_m(N) = sigma_m e_N(sigma without m) / e_N(sigma), m zero-based.
inline double epsilon_m_N(std::span<const double> sigmas, std::size_t m, std::size_t N) {
  if (m >= sigmas.size()) throw std::out_of_range("epsilon_m_N: index outside the spectrum");
  if (N + 1 > sigmas.size()) throw std::invalid_argument("epsilon_m_N: spectrum shorter than N + 1");
  const double full = log_esp(sigmas, N)[N];
  const double without = log_esp(sigmas, N, m)[N];
  return std::exp(std::log(sigmas[m]) + without - full);
}

/// epsilon_m(N) for m < count. The ESP of sigma[count:] is shared; each m
/// then folds in only the leading entries.
inline std::vector<double> epsilon_profile(std::span<const double> sigmas, std::size_t N, std::size_t count) {
  if (count > sigmas.size()) throw std::out_of_range("epsilon_profile: count outside the spectrum");
  if (N + 1 > sigmas.size()) throw std::invalid_argument("epsilon_profile: spectrum shorter than N + 1");
  const auto base = log_esp(sigmas.subspan(count), N);
  const auto fold = [&](std::size_t skip) {
    auto le = base;
    for (std::size_t j = 0; j < count; ++j) {
      if (j == skip) continue;
      if (!(sigmas[j] > 0.0)) throw std::invalid_argument("log_esp: eigenvalues must be positive");
      const double ls = std::log(sigmas[j]);
      for (std::size_t k = N; k >= 1; --k) le[k] = log_add_exp(le[k], ls + le[k - 1]);
    }
    return le[N];
  };
  const double full = fold(count);
  std::vector<double> out(count);
  for (std::size_t m = 0; m < count; ++m) out[m] = std::exp(std::log(sigmas[m]) + fold(m) - full);
  return out;
}

/// beta_N = min_{M in [2, N+1]} sum_{m >= M} sigma_m / ((N - M + 2) sigma_{N+1})
/// with one-based M and sigma; `tail_beyond` is added to every tail sum.
inline double beta_N(std::span<const double> sigmas, std::size_t N, double tail_beyond = 0.0) {
  if (N == 0) throw std::invalid_argument("beta_N: N must be positive");
  if (N + 1 > sigmas.size()) throw std::invalid_argument("beta_N: spectrum shorter than N + 1");
  // suffix[j] = sum_{i >= j} sigmas[i] (zero-based) + tail_beyond
  std::vector<double> suffix(sigmas.size() + 1);
  CompensatedSum acc;
  acc.add(tail_beyond);
  suffix[sigmas.size()] = tail_beyond;
  for (std::size_t j = sigmas.size(); j-- > 0;) {
    acc.add(sigmas[j]);
    suffix[j] = acc.value();
  }
  const double sigma_next = sigmas[N];
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t M = 2; M <= N + 1; ++M) {
    best = std::min(best, suffix[M - 1] / (static_cast<double>(N - M + 2) * sigma_next));
  }
  return best;
}

/// Spectral tail quantities of a model, including its certified
/// unmaterialized remainder.
class SpectralTails {
 public:
  explicit SpectralTails(const SpectralModel& model) : model_(&model) {}

  /// r_{N+1} = sum_{m >= N+1} sigma_m (one-based m).
  double r(std::size_t N) const { return model_->tail_sum(1, N); }

  /// sum_{m >= N+1} sigma_m^2.
  double r2(std::size_t N) const { return model_->tail_sum(2, N); }

  /// epsilon over the materialized spectrum, m zero-based.
  double eps(std::size_t m, std::size_t N) const { return epsilon_m_N(model_->eigenvalues(), m, N); }

  double beta(std::size_t N) const { return beta_N(model_->eigenvalues(), N, model_->unmaterialized_tail(1)); }

 private:
  const SpectralModel* model_;
};

/// One row of an error CSV.
struct ErrorRecord {
  std::string kernel;
  std::string design;
  std::string scheme;
  std::string target;
  std::size_t N = 0;
  std::size_t M = 0;
  std::size_t replicate = 0;  // one-based
  std::string metric;
  double value = 0.0;
  std::uint64_t seed = 0;
};

inline constexpr const char* kErrorCsvHeader = "kernel,design,scheme,target,N,M,replicate,metric,value,seed";

namespace detail {

inline std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + '"';
}

}  // namespace detail

inline void write_error_csv(std::ostream& os, std::span<const ErrorRecord> records) {
  os << kErrorCsvHeader << '\n';
  os.precision(17);
  for (const auto& r : records) {
    os << detail::csv_field(r.kernel) << ',' << detail::csv_field(r.design) << ',' << detail::csv_field(r.scheme)
       << ',' << detail::csv_field(r.target) << ',' << r.N << ',' << r.M << ',' << r.replicate << ','
       << detail::csv_field(r.metric) << ',' << r.value << ',' << r.seed << '\n';
  }
}

}  // namespace rkdpp
