#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>
#include <vector>

#include <gtest/gtest.h>

#include "rkdpp/approximants.hpp"
#include "rkdpp/designs.hpp"
#include "rkdpp/error_metrics.hpp"
#include "rkdpp/kernels.hpp"
#include "rkdpp/stats.hpp"
#include "rkdpp/study.hpp"

using namespace rkdpp;
using std::numbers::pi;

namespace {

// Brute-force e_N over all N-subsets of sig, optionally without index skip.
double esp_enumerate(const std::vector<double>& sig, std::size_t N, std::size_t skip = 99) {
  const std::size_t n = sig.size();
  double total = 0.0;
  for (unsigned mask = 0; mask < (1u << n); ++mask) {
    if (static_cast<std::size_t>(__builtin_popcount(mask)) != N) continue;
    if (skip < n && (mask >> skip & 1u)) continue;
    double p = 1.0;
    for (std::size_t i = 0; i < n; ++i)
      if (mask >> i & 1u) p *= sig[i];
    total += p;
  }
  return total;
}

double beta_direct(const std::vector<double>& sig, std::size_t N) {
  double best = 1e300;
  for (std::size_t M = 2; M <= N + 1; ++M) {
    double tail = 0.0;
    for (std::size_t m = M; m <= sig.size(); ++m) tail += sig[m - 1];
    best = std::min(best, tail / ((N - M + 2) * sig[N]));
  }
  return best;
}

}  // namespace

TEST(Residuals, KernelMixAgreesWithQuadrature) {
  const auto k = make_periodic_sobolev(1);
  const TargetFunction f({{0, 0.2}, {1, 1.0}, {6, -0.4}, {13, 0.3}});
  const auto x = ProjectionDppSampler(*k, first_indices(9)).sample(3).nodes;
  const auto a = oka(*k, x, f.evaluate_at(*k, x));
  const int Q = 4096;
  double quad = 0.0;
  for (int q = 0; q < Q; ++q) {
    const Point p = make_point((q + 0.5) / Q);
    const double d = f(*k, p) - evaluate(*k, a, p);
    quad += d * d / Q;
  }
  EXPECT_NEAR(l2_residual_kernelmix(*k, f, a.kernel_mix()), quad, 1e-8);
  EXPECT_NEAR(l2_residual_kernelmix_spectral(*k, f, a.kernel_mix()), quad, 1e-6);
}

TEST(Residuals, EigenExpansionParseval) {
  const TargetFunction f({{0, 1.0}, {2, 2.0}, {5, -1.0}});
  const EigenExpansion e{Eigen::Vector3d(0.5, 0.0, 2.5)};
  EXPECT_NEAR(l2_residual_eigen(f, e), 0.25 + 0.25 + 1.0, 1e-15);
}

TEST(Residuals, ClipOnlyWithinTolerance) {
  EXPECT_EQ(clip_squared(0.3, "t").value, 0.3);
  const auto c = clip_squared(-1e-12, "t");
  EXPECT_EQ(c.value, 0.0);
  EXPECT_TRUE(c.clipped);
  EXPECT_THROW(clip_squared(-1e-6, "t"), NumericalFailure);
}

TEST(Esp, LogEspMatchesEnumeration) {
  const std::vector<double> sig{1.0, 0.7, 0.5, 0.3, 0.2, 0.05, 0.01};
  const auto le = log_esp(sig, 4);
  for (std::size_t N = 0; N <= 4; ++N) EXPECT_NEAR(std::exp(le[N]), esp_enumerate(sig, N), 1e-12) << N;
  const auto skip = log_esp(sig, 3, 2);
  EXPECT_NEAR(std::exp(skip[3]), esp_enumerate(sig, 3, 2), 1e-12);
}

TEST(Epsilon, SmallSpectrumValue) {
  const std::vector<double> sig{1.0, 0.5, 0.25};
  EXPECT_NEAR(epsilon_m_N(sig, 0, 1), 0.75 / 1.75, 1e-14);
  EXPECT_NEAR(epsilon_m_N(sig, 1, 1), 0.5 * 1.25 / 1.75, 1e-14);
  EXPECT_NEAR(epsilon_m_N(sig, 2, 2), 0.25 * 0.5 / 0.875, 1e-14);
  EXPECT_THROW(epsilon_m_N(sig, 0, 3), std::invalid_argument);
}

TEST(Epsilon, EnumerationAndMonotonicity) {
  const std::vector<double> sig{1.0, 0.9, 0.6, 0.4, 0.4, 0.1, 0.02, 0.001};
  for (std::size_t N = 1; N <= 5; ++N) {
    const double eN = esp_enumerate(sig, N);
    for (std::size_t m = 0; m < sig.size(); ++m) {
      EXPECT_NEAR(epsilon_m_N(sig, m, N), sig[m] * esp_enumerate(sig, N, m) / eN, 1e-12);
      if (m > 0) {
        EXPECT_LE(epsilon_m_N(sig, m, N), epsilon_m_N(sig, m - 1, N) * (1 + 1e-12));
      }
    }
  }
}

TEST(Epsilon, ProfileMatchesPointwise) {
  const auto k = make_periodic_sobolev(1, 301);
  for (std::size_t N : {1u, 7u, 30u}) {
    const auto p = epsilon_profile(k->eigenvalues(), N, N + 5);
    ASSERT_EQ(p.size(), N + 5);
    for (std::size_t m = 0; m < p.size(); ++m) EXPECT_NEAR(p[m], epsilon_m_N(k->eigenvalues(), m, N), 1e-11 * p[m]);
  }
  EXPECT_THROW(epsilon_profile(k->eigenvalues(), 2, 400), std::out_of_range);
}

TEST(Beta, DirectEvaluation) {
  std::vector<double> geo;
  for (int m = 1; m <= 60; ++m) geo.push_back(std::pow(2.0, -m));
  for (std::size_t N : {1u, 2u, 5u, 20u}) EXPECT_NEAR(beta_N(geo, N), beta_direct(geo, N), 1e-12 * beta_direct(geo, N));
  double worst = 0.0;
  std::vector<double> longgeo;
  for (int m = 1; m <= 110; ++m) longgeo.push_back(std::pow(2.0, -m));
  for (std::size_t N = 1; N <= 100; ++N) worst = std::max(worst, beta_N(longgeo, N));
  EXPECT_LE(worst, 4.0);
}

TEST(SpectralTails, SobolevTailsAndBound) {
  const auto k = make_periodic_sobolev(1);
  const SpectralTails t(*k);
  // r_{N+1} for N = 2J + 1: 2 sum_{j > J} j^{-2}; J = 10 via a long direct sum.
  double direct = 0.0;
  for (int j = 11; j <= 2000000; ++j) direct += 2.0 / (static_cast<double>(j) * j);
  EXPECT_NEAR(t.r(21), direct, 3e-6);
  for (std::size_t N = 1; N < 30; ++N) {
    EXPECT_LE(t.r(N + 1), t.r(N));
    EXPECT_LE(t.r2(N + 1), t.r2(N));
    EXPECT_LE(t.eps(0, N), k->eigenvalue(N) * (1.0 + t.beta(N)) * (1 + 1e-12));
  }
}

TEST(CvsIdentity, ExpectedRkhsErrorIsEpsilon) {
  // Over continuous volume sampling the embedding Sigma e_m = sigma_m e_m is
  // recovered with E||sigma_m e_m - OKA||_F^2 = eps_m(N). For e_m^F this is
  // eps_m(N) / sigma_m, which only coincides when sigma_m = 1.
  const auto k = make_periodic_sobolev(1, 400);
  const std::size_t N = 4;
  const CvsSampler cvs(*k, N);
  for (Index m : {Index{0}, Index{3}, Index{5}}) {
    const TargetFunction f = TargetFunction::eigenfunction(m, k->eigenvalue(m));
    std::vector<double> err;
    for (std::uint64_t s = 0; s < 3000; ++s) {
      const auto d = cvs.sample(derive_seed(31, s));
      err.push_back(rkhs_residual_oka(*k, d.nodes, f.evaluate_at(*k, d.nodes), f.rkhs_norm_sq(*k)));
    }
    const auto e = stats::mean_estimate(err);
    EXPECT_TRUE(e.within(epsilon_m_N(k->eigenvalues(), m, N))) << m << ": " << e.value << " +- " << e.stderr_;
  }
}

TEST(ErrorCsv, HeaderAndQuoting) {
  std::vector<ErrorRecord> r{{"k,1", "dpp", "ls", "e1F", 8, 8, 1, "l2_sq", 0.5, 42}};
  std::ostringstream os;
  write_error_csv(os, r);
  EXPECT_EQ(os.str(), "kernel,design,scheme,target,N,M,replicate,metric,value,seed\n\"k,1\",dpp,ls,e1F,8,8,1,l2_sq,0.5,42\n");
}

TEST(Stats, EstimatesAndTests) {
  const std::vector<double> x{1, 2, 3, 4, 5};
  const auto e = stats::mean_estimate(x);
  EXPECT_DOUBLE_EQ(e.value, 3.0);
  EXPECT_NEAR(e.stderr_, std::sqrt(2.5 / 5), 1e-15);
  EXPECT_NEAR(stats::variance_estimate(x).value, 2.5, 1e-15);
  EXPECT_NEAR(stats::covariance_estimate(x, x).value, 2.5, 1e-12);
  EXPECT_NEAR(stats::chi2_survival(3.841458820694124, 1), 0.05, 1e-9);
  std::vector<double> grid;
  for (int i = 0; i < 100; ++i) grid.push_back((i + 0.5) / 100);
  EXPECT_NEAR(stats::ks_distance(grid, [](double t) { return t; }), 0.005, 1e-12);
  const std::vector<double> lx{0, 1, 2, 3};
  const std::vector<double> ly{1, -2, -5, -8};
  EXPECT_NEAR(stats::ols_slope(lx, ly), -3.0, 1e-14);
}

TEST(Study, SlopeOfSyntheticPowerLaw) {
  std::vector<ErrorRecord> rec;
  for (std::size_t N : {8u, 16u, 32u, 64u})
    for (std::size_t r = 1; r <= 3; ++r) {
      rec.push_back({"k", "d", "ls", "t", N, N, r, "l2_sq", 5.0 * std::pow(N, -3.0) * (0.9 + 0.1 * r), 0});
      rec.push_back({"k", "d", "ls", "t", N, N, r, "min_singular_value", 1.0, 0});
    }
  const std::vector<std::size_t> grid{16, 32, 64};
  EXPECT_NEAR(fit_loglog_slope(rec, grid), -3.0, 1e-12);
  EXPECT_EQ(upper_half({8, 16, 24, 32, 40, 48, 56, 64}), (std::vector<std::size_t>{40, 48, 56, 64}));
  EXPECT_EQ(upper_half({8, 16, 24, 32}), (std::vector<std::size_t>{16, 24, 32}));
  EXPECT_THROW(fit_loglog_slope(rec, std::vector<std::size_t>{8, 16}), std::invalid_argument);
}

TEST(Study, SeedsAndFailureRows) {
  StudySpec spec;
  spec.model = make_periodic_sobolev(1);
  spec.kernel_label = "sob1";
  spec.design = DesignSpec{};
  spec.scheme = Scheme::LS;
  spec.target = TargetSpec{};
  spec.N_grid = {4, 8};
  spec.replicates = 4;
  spec.master_seed = 9;
  const auto a = mc_error_study(spec);
  spec.jobs = 3;
  const auto b = mc_error_study(spec);
  ASSERT_EQ(a.records.size(), b.records.size());
  for (std::size_t i = 0; i < a.records.size(); ++i) {
    EXPECT_EQ(a.records[i].value, b.records[i].value);
    EXPECT_EQ(a.records[i].seed, b.records[i].seed);
  }
  EXPECT_FALSE(a.budget_exceeded);
  EXPECT_EQ(a.records.front().replicate, 1u);

  // N = M with a single draw: the conditioning event rarely holds.
  spec.design.family = DesignFamily::Christoffel;
  spec.design.order_rule = OrderRule::Fixed;
  spec.design.M = 4;
  spec.design.max_resamples = 0;
  spec.N_grid = {4};
  const auto c = mc_error_study(spec);
  std::size_t failures = 0;
  for (const auto& r : c.records) failures += r.metric == "failure";
  EXPECT_EQ(failures, c.summaries[0].failed);
  EXPECT_GT(failures, 0u);
  EXPECT_TRUE(c.budget_exceeded);
}
