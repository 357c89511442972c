#include <cmath>
#include <sstream>
#include <vector>

#include <gtest/gtest.h>

#include "rkdpp/approximants.hpp"
#include "rkdpp/designs.hpp"
#include "rkdpp/error_metrics.hpp"
#include "rkdpp/kernels.hpp"

using namespace rkdpp;

namespace {

std::vector<Point> dpp_nodes(const OrthonormalBasis& b, std::size_t N, std::uint64_t seed) {
  return ProjectionDppSampler(b, first_indices(N)).sample(seed).nodes;
}

// <g, e_m> for m < M on [0, 1) by the trapezoid rule. Aliasing error is
// of the size of the coefficients of g near frequency Q.
template <class G>
std::vector<double> trapezoid_coefficients(const SpectralModel& model, G&& g, std::size_t M, int Q = 1 << 16) {
  std::vector<double> v(M, 0.0);
  std::vector<double> e(M);
  for (int q = 0; q < Q; ++q) {
    const Point x = make_point(static_cast<double>(q) / Q);
    const double gx = g(x);
    model.eval_first(x, M, e);
    for (std::size_t m = 0; m < M; ++m) v[m] += gx * e[m] / Q;
  }
  return v;
}

const TargetFunction kTarget({{0, 0.3}, {1, 1.0}, {4, -0.7}, {9, 0.2}, {20, 0.05}});

}  // namespace

TEST(Oka, InterpolatesAtNodes) {
  const auto k = make_periodic_sobolev(1);
  const auto x = dpp_nodes(*k, 12, 1);
  const auto a = oka(*k, x, kTarget.evaluate_at(*k, x));
  ASSERT_TRUE(a.is_kernel_mix());
  for (const auto& p : x) EXPECT_NEAR(evaluate(*k, a, p), kTarget(*k, p), 1e-10);
  EXPECT_GT(a.diagnostics.min_singular_value, 0.0);
  EXPECT_LT(a.diagnostics.condition, kConditionLimit);
}

TEST(Oka, RkhsResidualMatchesCoefficientSum) {
  // The coefficient sum is cut at M_spec; the tail beyond 4000 terms is
  // below the tolerance for s = 2.
  const auto k = make_periodic_sobolev(2, 4000);
  const auto x = dpp_nodes(*k, 8, 2);
  const Eigen::VectorXd fx = kTarget.evaluate_at(*k, x);
  const auto a = oka(*k, x, fx);
  // Coefficients of the kernel mix: sigma_m sum_i w_i e_m(x_i).
  double direct = 0.0;
  std::vector<double> e(k->size());
  Eigen::VectorXd c = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(k->size()));
  for (std::size_t i = 0; i < x.size(); ++i) {
    k->eval_first(x[i], k->size(), e);
    for (std::size_t m = 0; m < k->size(); ++m) c(m) += a.kernel_mix().weights(i) * k->eigenvalue(m) * e[m];
  }
  for (std::size_t m = 0; m < k->size(); ++m) {
    const double d = kTarget.coefficient(m) - c(m);
    direct += d * d / k->eigenvalue(m);
  }
  EXPECT_NEAR(rkhs_residual_oka(*k, x, fx, kTarget.rkhs_norm_sq(*k)), direct, 1e-8 * kTarget.rkhs_norm_sq(*k));
}

TEST(Ls, BeatsOkaInL2) {
  const auto k = make_periodic_sobolev(1);
  for (std::uint64_t s = 0; s < 5; ++s) {
    const auto x = dpp_nodes(*k, 10, 10 + s);
    const auto a_ls = ls(*k, x, kTarget);
    const auto a_oka = oka(*k, x, kTarget.evaluate_at(*k, x));
    EXPECT_LE(l2_residual_kernelmix(*k, kTarget, a_ls.kernel_mix()),
              l2_residual_kernelmix(*k, kTarget, a_oka.kernel_mix()) + 1e-12);
  }
}

TEST(Ls, ReproducesKernelTranslates) {
  const auto k = make_periodic_sobolev(1);
  const auto x = dpp_nodes(*k, 6, 4);
  // f = sum_i v_i k(x_i, .) lies in the span; its coefficients are sigma_m sum_i v_i e_m(x_i).
  const Eigen::VectorXd v = Eigen::VectorXd::LinSpaced(6, -1.0, 1.0);
  std::map<Index, double> coeffs;
  std::vector<double> e(k->size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    k->eval_first(x[i], k->size(), e);
    for (std::size_t m = 0; m < k->size(); ++m) coeffs[m] += v(i) * k->eigenvalue(m) * e[m];
  }
  const TargetFunction f(coeffs);
  const auto a = ls(*k, x, f);
  EXPECT_LT((a.kernel_mix().weights - v).cwiseAbs().maxCoeff(), 1e-6);
}

TEST(Okq, CoefficientsAreProjectionsOfOka) {
  const auto k = make_periodic_sobolev(1);
  const auto x = dpp_nodes(*k, 9, 3);
  const Eigen::VectorXd fx = kTarget.evaluate_at(*k, x);
  const auto a_oka = oka(*k, x, fx);
  const auto a_okq = okq_transform(*k, x, fx, 7);
  ASSERT_EQ(a_okq.expansion().coeffs.size(), 7);
  EXPECT_FALSE(a_okq.beyond_interpolative_regime);
  const auto ref = trapezoid_coefficients(*k, [&](const Point& p) { return evaluate(*k, a_oka, p); }, 7);
  for (Index m = 0; m < 7; ++m) EXPECT_NEAR(a_okq.expansion().coeffs(m), ref[m], 1e-8) << m;
  EXPECT_TRUE(okq_transform(*k, x, fx, 12).beyond_interpolative_regime);
}

TEST(Qi, ExactOnLeadingEigenspace) {
  const auto k = make_periodic_sobolev(1);
  const TargetFunction f({{0, 0.5}, {3, -1.0}, {6, 2.0}});
  const auto x = dpp_nodes(*k, 7, 6);
  const auto a = qi_transform(*k, x, f.evaluate_at(*k, x));
  for (Index m = 0; m < 7; ++m) EXPECT_NEAR(a.expansion().coeffs(m), f.coefficient(m), 1e-11);
}

TEST(Els, EqualsQiWhenSquareForAnyWeights) {
  const auto k = make_periodic_sobolev(1);
  const auto x = dpp_nodes(*k, 8, 7);
  const Eigen::VectorXd fx = kTarget.evaluate_at(*k, x);
  const auto qi = qi_transform(*k, x, fx);
  Eigen::VectorXd q1 = Eigen::VectorXd::Ones(8);
  Eigen::VectorXd q2 = Eigen::VectorXd::LinSpaced(8, 0.5, 3.0);
  for (const auto& q : {q1, q2}) {
    const auto a = els(*k, x, fx, q, 8);
    EXPECT_LT((a.expansion().coeffs - qi.expansion().coeffs).cwiseAbs().maxCoeff(), 1e-9);
  }
}

TEST(Els, WeightsMatterBelowSquareButNotOnEm) {
  const auto k = make_periodic_sobolev(1);
  const auto x = dpp_nodes(*k, 15, 8);
  const Eigen::VectorXd q1 = Eigen::VectorXd::Ones(15);
  const Eigen::VectorXd q2 = Eigen::VectorXd::LinSpaced(15, 0.5, 3.0);
  const Eigen::VectorXd fx = kTarget.evaluate_at(*k, x);
  const auto a1 = els(*k, x, fx, q1, 5);
  const auto a2 = els(*k, x, fx, q2, 5);
  EXPECT_GT((a1.expansion().coeffs - a2.expansion().coeffs).norm(), 1e-6);

  const TargetFunction g({{0, 1.0}, {2, -0.5}, {4, 0.25}});
  const Eigen::VectorXd gx = g.evaluate_at(*k, x);
  for (const auto& q : {q1, q2}) {
    const auto a = els(*k, x, gx, q, 5);
    for (Index m = 0; m < 5; ++m) EXPECT_NEAR(a.expansion().coeffs(m), g.coefficient(m), 1e-11);
  }
}

TEST(Tels, TruncatesQiAndDiffersFromEls) {
  const auto k = make_periodic_sobolev(1);
  const auto x = dpp_nodes(*k, 10, 9);
  const Eigen::VectorXd fx = kTarget.evaluate_at(*k, x);
  const auto t = tels(*k, x, fx, 4);
  const auto q = qi_transform(*k, x, fx);
  EXPECT_EQ(t.scheme, Scheme::TELS);
  EXPECT_EQ(t.expansion().coeffs, q.expansion().coeffs.head(4));
  const auto e = els(*k, x, fx, Eigen::VectorXd::Ones(10), 4);
  EXPECT_GT((t.expansion().coeffs - e.expansion().coeffs).norm(), 1e-8);
  EXPECT_THROW(tels(*k, x, fx, 11), std::invalid_argument);
}

TEST(Approximants, DuplicateNodesAreNumericalFailures) {
  const auto k = make_periodic_sobolev(1);
  std::vector<Point> x{make_point(0.1), make_point(0.4), make_point(0.4)};
  const Eigen::VectorXd fx = kTarget.evaluate_at(*k, x);
  EXPECT_THROW(oka(*k, x, fx), NumericalFailure);
  EXPECT_THROW(qi_transform(*k, x, fx), NumericalFailure);
  try {
    oka(*k, x, fx);
  } catch (const NumericalFailure& e) {
    EXPECT_GT(e.condition(), kConditionLimit);
  }
}

TEST(Approximants, CsvIsOneBased) {
  const auto k = make_periodic_sobolev(1);
  const auto x = dpp_nodes(*k, 3, 1);
  std::ostringstream os;
  write_approximant_csv(os, qi_transform(*k, x, kTarget.evaluate_at(*k, x)));
  std::istringstream in(os.str());
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "scheme,kind,index,value");
  std::getline(in, line);
  EXPECT_EQ(line.rfind("qi,eigen_expansion,1,", 0), 0u);
}

TEST(CheckedSolver, RejectsBadInput) {
  EXPECT_THROW(CheckedSolver(Eigen::MatrixXd::Ones(2, 3), "t"), std::invalid_argument);
  Eigen::MatrixXd A = Eigen::MatrixXd::Identity(2, 2);
  A(0, 0) = std::nan("");
  EXPECT_THROW(CheckedSolver(A, "t"), NumericalFailure);
  const CheckedSolver ok(Eigen::MatrixXd::Identity(3, 3) * 2.0, "t");
  EXPECT_NEAR(ok.diagnostics().condition, 1.0, 1e-14);
  const Eigen::VectorXd b = Eigen::VectorXd::Ones(3);
  EXPECT_NEAR(ok.solve(b)(1), 0.5, 1e-15);
}
