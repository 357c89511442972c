#pragma once

// Monte Carlo and deterministic checks of the exact identities for the
// quasi-interpolant, tELS, the epsilon bound and the CVS mixture weights.
// Every MC check uses a 3-standard-error band.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "rkdpp/approximants.hpp"
#include "rkdpp/designs.hpp"
#include "rkdpp/error_metrics.hpp"
#include "rkdpp/kernels.hpp"
#include "rkdpp/parallel.hpp"
#include "rkdpp/stats.hpp"

namespace rkdpp {

struct VerifyOptions {
  std::size_t budget = 0;  // replicates; 0 selects the suite default
  std::uint64_t seed = 20240601;
  std::size_t jobs = 1;
};

struct Check {
  std::string name;
  bool pass = false;
  std::string detail;
};

struct VerifyReport {
  std::string suite;
  std::vector<Check> checks;

  bool passed() const {
    for (const auto& c : checks) {
      if (!c.pass) return false;
    }
    return !checks.empty();
  }

  std::string text() const {
    std::ostringstream os;
    for (const auto& c : checks) os << (c.pass ? "PASS " : "FAIL ") << suite << ' ' << c.name << ": " << c.detail << '\n';
    os << (passed() ? "PASS " : "FAIL ") << suite << '\n';
    return os.str();
  }
};

inline std::vector<std::string> verify_suites() {
  return {"ez-unbiased", "ez-variance", "ez-uncorrelated", "kale", "tels-identity", "iop", "eps-bound", "cvs-mixture"};
}

/// Quasi-interpolant coefficients under the projection DPP with T = [N]:
/// row r holds the N coefficients of replicate r.
inline Eigen::MatrixXd qi_coefficient_samples(const SpectralModel& model, std::size_t N, const TargetFunction& f,
                                              std::size_t replicates, std::uint64_t seed, std::size_t jobs = 1) {
  ProjectionDppSampler dpp(model, first_indices(N));
  Eigen::MatrixXd out(static_cast<Eigen::Index>(replicates), static_cast<Eigen::Index>(N));
  parallel_for(replicates, jobs, [&](std::size_t r) {
    const Design d = dpp.sample(derive_seed(seed, N, r));
    const Approximant a = qi_transform(model, d.nodes, f.evaluate_at(model, d.nodes));
    out.row(static_cast<Eigen::Index>(r)) = a.expansion().coeffs.transpose();
  });
  return out;
}

/// ||f - f_hat||^2 for each replicate when f_hat keeps the first M columns.
inline std::vector<double> truncated_errors(const Eigen::MatrixXd& coeffs, const TargetFunction& f, std::size_t M) {
  std::vector<double> err(static_cast<std::size_t>(coeffs.rows()));
  for (Eigen::Index r = 0; r < coeffs.rows(); ++r) {
    EigenExpansion e{coeffs.row(r).head(static_cast<Eigen::Index>(M)).transpose()};
    err[static_cast<std::size_t>(r)] = l2_residual_eigen(f, e);
  }
  return err;
}

namespace detail {

inline std::string fmt(double v) {
  std::ostringstream os;
  os.precision(6);
  os << v;
  return os.str();
}

inline std::string band(const stats::Estimate& e, double target) {
  return "estimate " + fmt(e.value) + " target " + fmt(target) + " stderr " + fmt(e.stderr_) + " z " + fmt(e.z(target));
}

// The reference target: coefficients (1, -0.5, 0.25) on the first three
// eigenfunctions and 0.1 on the twelfth.
inline TargetFunction reference_target() { return TargetFunction({{0, 1.0}, {1, -0.5}, {2, 0.25}, {11, 0.1}}); }

inline VerifyReport ez_suite(const std::string& suite, const VerifyOptions& opt) {
  const auto model = make_periodic_sobolev(1);
  const TargetFunction f = reference_target();
  const std::size_t N = 7;
  const std::size_t R = opt.budget ? opt.budget : 10000;
  const Eigen::MatrixXd C = qi_coefficient_samples(*model, N, f, R, opt.seed, opt.jobs);
  const double tail = f.projection_residual_sq(N);
  VerifyReport rep{suite, {}};
  auto column = [&](std::size_t m) {
    const Eigen::VectorXd c = C.col(static_cast<Eigen::Index>(m));
    return std::vector<double>(c.data(), c.data() + c.size());
  };
  if (suite == "ez-unbiased") {
    for (std::size_t m = 0; m < N; ++m) {
      const auto e = stats::mean_estimate(column(m));
      rep.checks.push_back({"mean I_" + std::to_string(m + 1), e.within(f.coefficient(m)), band(e, f.coefficient(m))});
    }
  } else if (suite == "ez-variance") {
    for (std::size_t m = 0; m < N; ++m) {
      const auto e = stats::variance_estimate(column(m));
      rep.checks.push_back({"var I_" + std::to_string(m + 1), e.within(tail), band(e, tail)});
    }
  } else if (suite == "ez-uncorrelated") {
    for (std::size_t a = 0; a < N; ++a) {
      for (std::size_t b = a + 1; b < N; ++b) {
        const auto e = stats::covariance_estimate(column(a), column(b));
        rep.checks.push_back({"cov(I_" + std::to_string(a + 1) + ",I_" + std::to_string(b + 1) + ")", e.within(0.0),
                              band(e, 0.0)});
      }
    }
  } else {  // kale
    const auto e = stats::mean_estimate(truncated_errors(C, f, N));
    const double exact = static_cast<double>(N + 1) * tail;
    rep.checks.push_back({"E||f - f_QI||^2 = (N+1)||f - f_N||^2", e.within(exact),
                          band(e, exact) + "; literal N||f - f_N||^2 = " + fmt(N * tail) + " has z " +
                              fmt(e.z(N * tail))});
  }
  return rep;
}

inline VerifyReport tels_suite(const VerifyOptions& opt) {
  const auto model = make_periodic_sobolev(1);
  const TargetFunction f = reference_target();
  const std::size_t N = 10;
  const std::size_t M = 4;
  const std::size_t R = opt.budget ? opt.budget : 10000;
  const Eigen::MatrixXd C = qi_coefficient_samples(*model, N, f, R, opt.seed, opt.jobs);
  const auto e = stats::mean_estimate(truncated_errors(C, f, M));
  const double fM = f.projection_residual_sq(M);
  const double exact = fM + static_cast<double>(M) * f.projection_residual_sq(N);
  VerifyReport rep{"tels-identity", {}};
  rep.checks.push_back({"E||f - f_tELS||^2 = ||f - f_M||^2 + M||f - f_N||^2", e.within(exact), band(e, exact)});
  const stats::Estimate ratio{e.value / fM, e.stderr_ / fM, e.n};
  rep.checks.push_back({"IOP ratio <= 1 + M", ratio.value <= (1.0 + M) + 3.0 * ratio.stderr_,
                        "ratio " + fmt(ratio.value) + " stderr " + fmt(ratio.stderr_) + " bound " + fmt(1.0 + M)});
  return rep;
}

inline VerifyReport iop_suite(const VerifyOptions& opt) {
  const auto model = make_periodic_sobolev(1);
  const std::size_t N = 10;
  const std::size_t R = opt.budget ? opt.budget : 10000;
  std::vector<std::pair<std::string, TargetFunction>> targets{{"reference", reference_target()}};
  Rng rng(derive_seed(opt.seed, 0xF00D));
  for (int t = 0; t < 2; ++t) {
    std::map<Index, double> c;
    for (Index m = 0; m < 15; ++m) c[m] = standard_normal(rng) / (1.0 + m);
    targets.emplace_back("random" + std::to_string(t + 1), TargetFunction(std::move(c)));
  }
  VerifyReport rep{"iop", {}};
  for (std::size_t i = 0; i < targets.size(); ++i) {
    const auto& [name, f] = targets[i];
    const Eigen::MatrixXd C = qi_coefficient_samples(*model, N, f, R, derive_seed(opt.seed, 100 + i), opt.jobs);
    for (std::size_t M : {std::size_t{4}, N}) {
      const auto e = stats::mean_estimate(truncated_errors(C, f, M));
      const double fM = f.projection_residual_sq(M);
      const double bound = (1.0 + M) * fM;
      const std::string tag = name + " M=" + std::to_string(M);
      rep.checks.push_back({tag + " E||f - f_tELS||^2 <= (1+M)||f - f_M||^2", e.value <= bound + 3.0 * e.stderr_,
                            band(e, bound)});
      if (M == N) rep.checks.push_back({tag + " equality at M = N", e.within(bound), band(e, bound)});
    }
  }
  return rep;
}

inline VerifyReport eps_suite() {
  const auto model = make_periodic_sobolev(1);
  const auto sig = model->eigenvalues();
  const SpectralTails tails(*model);
  VerifyReport rep{"eps-bound", {}};
  bool mono = true;
  bool bound = true;
  std::string worst;
  double worst_ratio = 0.0;
  for (std::size_t N = 1; N <= 50; ++N) {
    const auto eps = epsilon_profile(sig, N, N + 10);
    for (std::size_t m = 1; m < eps.size(); ++m)
      if (eps[m] > eps[m - 1] * (1.0 + 1e-12)) mono = false;
    const double lhs = eps[0];
    const double rhs = sig[N] * (1.0 + tails.beta(N));
    if (lhs > rhs * (1.0 + 1e-12)) bound = false;
    if (lhs / rhs > worst_ratio) {
      worst_ratio = lhs / rhs;
      worst = "N=" + std::to_string(N);
    }
  }
  rep.checks.push_back({"epsilon_m(N) non-increasing in m", mono, "N <= 50, m <= N + 10"});
  rep.checks.push_back({"epsilon_1(N) <= sigma_{N+1}(1 + beta_N)", bound,
                        "N <= 50, largest ratio " + fmt(worst_ratio) + " at " + worst});
  double beta_max = 0.0;
  for (std::size_t N = 1; N <= 200; ++N) beta_max = std::max(beta_max, tails.beta(N));
  rep.checks.push_back({"beta_N < 10 for N <= 200", beta_max < 10.0, "max beta_N " + fmt(beta_max)});
  return rep;
}

inline VerifyReport cvs_suite(const VerifyOptions& opt) {
  const std::vector<double> sig{1.0, 1.0, 1.0, 0.25, 0.25, 1.0 / 9.0};
  const std::size_t N = 2;
  const std::size_t R = opt.budget ? opt.budget : 100000;
  const EspTable table(sig, N);
  std::vector<IndexSet> subsets;
  std::vector<double> probs;
  for (Index a = 0; a < sig.size(); ++a) {
    for (Index b = a + 1; b < sig.size(); ++b) {
      subsets.push_back({a, b});
      probs.push_back(table.probability(subsets.back()));
    }
  }
  std::vector<std::size_t> counts(subsets.size(), 0);
  Rng rng(opt.seed);
  for (std::size_t r = 0; r < R; ++r) {
    const IndexSet T = table.sample(rng);
    const auto it = std::find(subsets.begin(), subsets.end(), T);
    if (it == subsets.end()) throw std::logic_error("cvs-mixture: sampled subset outside the enumeration");
    ++counts[static_cast<std::size_t>(it - subsets.begin())];
  }
  const auto chi = stats::chi_square_test(counts, probs);
  VerifyReport rep{"cvs-mixture", {}};
  rep.checks.push_back({"mixture frequencies vs enumerated weights", chi.p_value > 1e-3,
                        "chi2 " + fmt(chi.statistic) + " dof " + fmt(chi.dof) + " p " + fmt(chi.p_value)});
  return rep;
}

}  // namespace detail

/// Runs a named suite; throws std::invalid_argument for unknown names.
inline VerifyReport run_verify(const std::string& suite, const VerifyOptions& opt = {}) {
  if (suite == "ez-unbiased" || suite == "ez-variance" || suite == "ez-uncorrelated" || suite == "kale") {
    return detail::ez_suite(suite, opt);
  }
  if (suite == "tels-identity") return detail::tels_suite(opt);
  if (suite == "iop") return detail::iop_suite(opt);
  if (suite == "eps-bound") return detail::eps_suite();
  if (suite == "cvs-mixture") return detail::cvs_suite(opt);
  throw std::invalid_argument("unknown verify suite '" + suite + "'");
}

}  // namespace rkdpp
