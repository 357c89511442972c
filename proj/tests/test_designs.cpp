#include <algorithm>
#include <cmath>
#include <complex>
#include <map>
#include <numbers>
#include <vector>

#include <gtest/gtest.h>

#include "rkdpp/designs.hpp"
#include "rkdpp/kernels.hpp"
#include "rkdpp/special.hpp"
#include "rkdpp/stats.hpp"

using namespace rkdpp;
using std::numbers::pi;

namespace {

// Normalized Legendre polynomials on [-1, 1] w.r.t. dx/2, up to degree 2.
double legendre_density_3(double x) {
  const double p2 = 0.5 * (3 * x * x - 1);
  return (1.0 + 3.0 * x * x + 5.0 * p2 * p2) / 3.0;
}

std::vector<double> pooled_coordinate(const std::vector<Design>& designs) {
  std::vector<double> v;
  for (const auto& d : designs)
    for (const auto& x : d.nodes) v.push_back(x(0));
  return v;
}

}  // namespace

TEST(Designs, FormatIndexSetIsOneBased) {
  EXPECT_EQ(format_index_set(IndexSet{0, 2, 5}), "1;3;6");
  EXPECT_EQ(describe(ChristoffelTag{4, QMode::Christoffel}), describe(ChristoffelTag{4, QMode::Christoffel}));
}

TEST(Christoffel, HistogramMatchesDensity) {
  const LegendreBasis basis(-1.0, 1.0, 3);
  ChristoffelOptions opt;
  opt.condition_gram = false;
  const Design d = ChristoffelSampler(basis, 40000, 3, opt).sample(11);
  ASSERT_EQ(d.nodes.size(), 40000u);

  const int bins = 20;
  const auto gl = special::gauss_legendre(8);
  std::vector<double> probs(bins);
  for (int b = 0; b < bins; ++b) {
    const double lo = -1.0 + 2.0 * b / bins;
    const double hi = lo + 2.0 / bins;
    double p = 0.0;
    for (std::size_t i = 0; i < gl.nodes.size(); ++i) {
      const double x = 0.5 * (lo + hi) + 0.5 * (hi - lo) * gl.nodes[i];
      p += gl.weights[i] * 0.5 * (hi - lo) * legendre_density_3(x) / 2.0;
    }
    probs[b] = p;
  }
  std::vector<std::size_t> counts(bins, 0);
  for (const auto& x : d.nodes) ++counts[std::min(bins - 1, static_cast<int>((x(0) + 1.0) / 2.0 * bins))];
  const auto chi = stats::chi_square_test(counts, probs);
  EXPECT_GT(chi.p_value, 1e-3) << "chi2 " << chi.statistic;
}

TEST(Christoffel, DensityIsUniformForCompleteTrigonometricBlocks) {
  const auto k = make_periodic_sobolev(1);
  for (double x : {0.0, 0.13, 0.5, 0.77}) EXPECT_NEAR(christoffel_density(*k, 5, make_point(x)), 1.0, 1e-12);
  ChristoffelOptions opt;
  opt.condition_gram = false;
  const Design d = ChristoffelSampler(*k, 500, 5, opt).sample(3);
  EXPECT_EQ(d.attempts.density_rejections, 0u);
  EXPECT_EQ(d.attempts.proposals, 500u);
}

TEST(Christoffel, ConditionedGramIsNearIdentity) {
  const auto k = make_periodic_sobolev(1);
  ChristoffelSampler sampler(*k, 40, 5);
  const Design d = sampler.sample(5);
  std::vector<double> q;
  for (const auto& x : d.nodes) q.push_back(sampler.q(x));
  EXPECT_LE(gram_identity_deviation(christoffel_gram(*k, d.nodes, 5, q)), 0.5);
}

TEST(Christoffel, UnattainableConditioningFails) {
  const auto k = make_periodic_sobolev(1);
  EXPECT_THROW(ChristoffelSampler(*k, 3, 5).sample(1), SamplingFailure);
  ChristoffelOptions opt;
  opt.max_resamples = 2;
  EXPECT_THROW(ChristoffelSampler(*k, 6, 5, opt).sample(1), SamplingFailure);
}

TEST(Christoffel, UniformModeDrawsFromReferenceMeasure) {
  const LegendreBasis basis(-1.0, 1.0, 4);
  ChristoffelOptions opt;
  opt.q_mode = QMode::Uniform;
  opt.condition_gram = false;
  ChristoffelSampler sampler(basis, 20000, 4, opt);
  const Design d = sampler.sample(9);
  EXPECT_EQ(sampler.q(d.nodes[0]), 1.0);
  const double ks = stats::ks_distance(pooled_coordinate({d}), [](double x) { return (x + 1.0) / 2.0; });
  EXPECT_LT(ks, 0.015);
}

TEST(ProjectionDpp, MarginalOfTwoPointDesign) {
  // T = {1, cos}: one-point intensity (1 + 2 cos^2(2 pi x)) / 2.
  const auto k = make_periodic_sobolev(1);
  ProjectionDppSampler dpp(*k, IndexSet{0, 1});
  std::vector<Design> ds;
  for (std::uint64_t s = 0; s < 20000; ++s) ds.push_back(dpp.sample(s));
  const auto cdf = [](double x) { return x + std::sin(4 * pi * x) / (8 * pi); };
  EXPECT_LT(stats::ks_distance(pooled_coordinate(ds), cdf), 0.012);
}

TEST(ProjectionDpp, RepulsionMatchesCircularUnitaryMoment) {
  // T = {1, cos, sin}: the circular unitary ensemble with three points, for
  // which E|sum_j exp(2 pi i x_j)|^2 = 1 (independent points give 3).
  const auto k = make_periodic_sobolev(1);
  ProjectionDppSampler dpp(*k, first_indices(3));
  std::vector<double> v;
  for (std::uint64_t s = 0; s < 20000; ++s) {
    const Design d = dpp.sample(derive_seed(77, s));
    std::complex<double> z = 0.0;
    for (const auto& x : d.nodes) z += std::polar(1.0, 2 * pi * x(0));
    v.push_back(std::norm(z));
  }
  const auto e = stats::mean_estimate(v);
  EXPECT_TRUE(e.within(1.0)) << e.value << " +- " << e.stderr_;
}

TEST(ProjectionDpp, DeterministicAndDistinct) {
  const auto k = make_sphere_sobolev(3, 1.5, 6);
  ProjectionDppSampler dpp(*k, first_indices(16));
  const Design a = dpp.sample(42);
  const Design b = dpp.sample(42);
  const Design c = dpp.sample(43);
  ASSERT_EQ(a.nodes.size(), 16u);
  for (std::size_t i = 0; i < a.nodes.size(); ++i) {
    EXPECT_EQ(a.nodes[i], b.nodes[i]);
    EXPECT_NEAR(a.nodes[i].norm(), 1.0, 1e-12);
  }
  EXPECT_NE(a.nodes[0], c.nodes[0]);
  EXPECT_GT(projection_gram_log_det(*k, first_indices(16), a.nodes), -50.0);
  EXPECT_EQ(a.seed, 42u);
}

TEST(ProjectionDpp, LegendreBasisOnSincInterval) {
  const auto k = make_sinc_pswf(2.0, 7.0);
  const LegendreBasis basis(-1.0, 1.0, 10);
  const Design d = ProjectionDppSampler(basis, first_indices(10), "legendre").sample(8);
  ASSERT_EQ(d.nodes.size(), 10u);
  for (const auto& x : d.nodes) EXPECT_TRUE(k->domain().contains(x));
  EXPECT_NE(describe(d.tag).find("legendre"), std::string::npos);
}

TEST(EspTable, ProbabilitiesMatchEnumeration) {
  const std::vector<double> sig{1.0, 0.5, 0.25};
  const EspTable one(sig, 1);
  EXPECT_NEAR(one.probability(IndexSet{0}), 4.0 / 7.0, 1e-12);
  EXPECT_NEAR(one.probability(IndexSet{1}), 2.0 / 7.0, 1e-12);
  EXPECT_NEAR(one.probability(IndexSet{2}), 1.0 / 7.0, 1e-12);
  const EspTable two(sig, 2);
  EXPECT_NEAR(two.probability(IndexSet{0, 1}), 0.5 / 0.875, 1e-12);
  EXPECT_NEAR(two.probability(IndexSet{0, 2}), 0.25 / 0.875, 1e-12);
  EXPECT_NEAR(two.probability(IndexSet{1, 2}), 0.125 / 0.875, 1e-12);
  EXPECT_NEAR(std::exp(two.log_e(2, 3)), 0.875, 1e-12);
  EXPECT_THROW(EspTable(sig, 4), std::invalid_argument);
}

TEST(EspTable, SampleFrequencies) {
  const std::vector<double> sig{1.0, 0.5, 0.25, 0.125};
  const EspTable table(sig, 2);
  std::map<IndexSet, std::size_t> counts;
  Rng rng(5);
  const std::size_t R = 60000;
  for (std::size_t r = 0; r < R; ++r) {
    const IndexSet T = table.sample(rng);
    ASSERT_TRUE(std::is_sorted(T.begin(), T.end()));
    ++counts[T];
  }
  double e2 = 0.0;
  for (std::size_t a = 0; a < 4; ++a)
    for (std::size_t b = a + 1; b < 4; ++b) e2 += sig[a] * sig[b];
  std::vector<std::size_t> c;
  std::vector<double> p;
  for (Index a = 0; a < 4; ++a) {
    for (Index b = a + 1; b < 4; ++b) {
      c.push_back(counts[IndexSet{a, b}]);
      p.push_back(sig[a] * sig[b] / e2);
    }
  }
  EXPECT_GT(stats::chi_square_test(c, p).p_value, 1e-3);
}

TEST(Cvs, SingleNodeSubsetWeights) {
  const auto k = make_periodic_sobolev(1, 41);
  const CvsSampler cvs(*k, 1);
  double total = 0.0;
  for (double v : k->eigenvalues()) total += v;
  std::size_t hits = 0;
  const std::size_t R = 20000;
  for (std::uint64_t s = 0; s < R; ++s) {
    const Design d = cvs.sample(s);
    const auto& T = std::get<CvsTag>(d.tag).T;
    ASSERT_EQ(T.size(), 1u);
    hits += T[0] == 0;
  }
  const double p = 1.0 / total;
  const double se = std::sqrt(p * (1 - p) / R);
  EXPECT_NEAR(static_cast<double>(hits) / R, p, 3 * se);
  EXPECT_GT(cvs.truncation_tv_bound(), 0.0);
  EXPECT_LT(cvs.truncation_tv_bound(), 0.05);
}
