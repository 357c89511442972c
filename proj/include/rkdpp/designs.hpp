#pragma once

// Randomized node designs: i.i.d. Christoffel sampling with the Gram
// conditioning event, projection DPPs by the HKPV chain rule, and continuous
// volume sampling as an ESP-weighted mixture of projection DPPs.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <type_traits>
#include <variant>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include "rkdpp/core.hpp"
#include "rkdpp/spectral_model.hpp"

namespace rkdpp {

struct SamplingCounters {
  std::uint64_t proposals = 0;               // draws from the reference measure
  std::uint64_t density_rejections = 0;      // rejected by the diagonal-density envelope
  std::uint64_t conditional_rejections = 0;  // rejected by an HKPV conditional
  std::uint64_t resamples = 0;               // whole-configuration redraws (Christoffel)

  bool operator==(const SamplingCounters&) const = default;
};

enum class QMode {
  Christoffel,  // q = M / c_M, nodes drawn from c_M / M
  Uniform,      // q = 1, nodes drawn from omega
};

struct ChristoffelTag {
  std::size_t M = 0;
  QMode q_mode = QMode::Christoffel;
  bool operator==(const ChristoffelTag&) const = default;
};

struct ProjectionDppTag {
  IndexSet T;
  std::string basis = "eigen";
  bool operator==(const ProjectionDppTag&) const = default;
};

struct CvsTag {
  IndexSet T;  // the sampled mixture component
  bool operator==(const CvsTag&) const = default;
};

using DesignTag = std::variant<ChristoffelTag, ProjectionDppTag, CvsTag>;

struct Design {
  std::vector<Point> nodes;
  DesignTag tag;
  std::uint64_t seed = 0;
  SamplingCounters attempts;

  std::size_t size() const noexcept { return nodes.size(); }
};

/// Index set rendered one-based and ';'-separated, e.g. "1;2;5".
inline std::string format_index_set(std::span<const Index> T) {
  std::ostringstream os;
  for (std::size_t i = 0; i < T.size(); ++i) os << (i ? ";" : "") << T[i] + 1;
  return os.str();
}

inline std::string describe(const DesignTag& tag) {
  return std::visit(
      [](const auto& t) -> std::string {
        using T = std::decay_t<decltype(t)>;
        if constexpr (std::is_same_v<T, ChristoffelTag>) {
          return "christoffel(M=" + std::to_string(t.M) + (t.q_mode == QMode::Uniform ? ",q=1)" : ")");
        } else if constexpr (std::is_same_v<T, ProjectionDppTag>) {
          return "projection_dpp(" + t.basis + ",T=" + format_index_set(t.T) + ")";
        } else {
          return "cvs(T=" + format_index_set(t.T) + ")";
        }
      },
      tag);
}

/// c_M(x) / M = (1/M) sum_{m < M} e_m(x)^2, a probability density w.r.t. omega.
inline double christoffel_density(const OrthonormalBasis& basis, std::size_t M, const Point& x) {
  if (M == 0) throw std::invalid_argument("christoffel_density: M must be positive");
  basis.check_index(M - 1);
  std::vector<double> e(M);
  basis.eval_first(x, M, e);
  double c = 0.0;
  for (double v : e) c += v * v;
  return c / static_cast<double>(M);
}

/// Rejection sampler for the density k_{0,T}(x,x) / |T| with respect to
/// omega. The envelope is the basis' analytic bound when it is exact, else
/// the smaller of a certified bound and the grid supremum inflated by 5%.
class DiagonalDensitySampler {
 public:
  static constexpr std::uint64_t kProposalCap = 1'000'000;

  DiagonalDensitySampler(const OrthonormalBasis& basis, IndexSet T) : basis_(&basis), T_(std::move(T)) {
    if (T_.empty()) throw std::invalid_argument("DiagonalDensitySampler: empty index set");
    for (Index m : T_) basis_->check_index(m);
    const auto analytic = basis_->diagonal_sup(T_);
    if (analytic && analytic->exact) {
      envelope_ = analytic->value;
      return;
    }
    std::vector<double> scratch(T_.size());
    double grid_sup = 0.0;
    for (const Point& x : basis_->domain().envelope_grid()) grid_sup = std::max(grid_sup, diagonal(x, scratch));
    envelope_ = 1.05 * grid_sup;
    if (analytic) envelope_ = std::min(envelope_, analytic->value);
  }

  const IndexSet& indices() const noexcept { return T_; }

  /// Bound used for sup_x k_{0,T}(x, x).
  double envelope() const noexcept { return envelope_; }

  /// k_{0,T}(x, x) = sum_{m in T} e_m(x)^2.
  double diagonal(const Point& x, std::span<double> scratch) const {
    basis_->eval_subset(x, T_, scratch);
    double v = 0.0;
    for (double e : scratch) v += e * e;
    return v;
  }

  /// One draw; the returned diagonal value is written to *diag when non-null.
  Point draw(Rng& rng, SamplingCounters& counters, std::span<double> scratch, double* diag = nullptr) const {
    for (std::uint64_t n = 0; n < kProposalCap; ++n) {
      const Point x = basis_->domain().sample(rng);
      ++counters.proposals;
      const double d = diagonal(x, scratch);
      if (d > envelope_ * (1.0 + 1e-9)) {
        std::ostringstream os;
        os << "envelope violation: density " << d << " exceeds envelope " << envelope_;
        throw SamplingFailure(os.str());
      }
      if (uniform01(rng) * envelope_ < d) {
        if (diag) *diag = d;
        return x;
      }
      ++counters.density_rejections;
    }
    throw SamplingFailure("diagonal density sampler exceeded the per-point proposal cap");
  }

 private:
  const OrthonormalBasis* basis_;
  IndexSet T_;
  double envelope_ = 0.0;
};

struct ChristoffelOptions {
  QMode q_mode = QMode::Christoffel;
  std::size_t max_resamples = 1000;
  bool condition_gram = true;  // enforce ||G - I|| <= 1/2 by resampling
};

/// ||G_{q,x} - I_M||_op for G = (1/N) sum_i q(x_i) e(x_i) e(x_i)^T.
inline Eigen::MatrixXd christoffel_gram(const OrthonormalBasis& basis, std::span<const Point> nodes, std::size_t M,
                                        std::span<const double> q_values) {
  const auto m = static_cast<Eigen::Index>(M);
  Eigen::MatrixXd G = Eigen::MatrixXd::Zero(m, m);
  Eigen::VectorXd e(m);
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    basis.eval_first(nodes[i], M, std::span<double>(e.data(), M));
    G.selfadjointView<Eigen::Lower>().rankUpdate(e, q_values[i]);
  }
  G = G.selfadjointView<Eigen::Lower>();
  return G / static_cast<double>(nodes.size());
}

inline double gram_identity_deviation(const Eigen::MatrixXd& G) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(G, Eigen::EigenvaluesOnly);
  const auto& ev = es.eigenvalues();
  return std::max(std::abs(ev(0) - 1.0), std::abs(ev(ev.size() - 1) - 1.0));
}

/// i.i.d. nodes from c_M / M (or omega), redrawn as a whole until
/// ||G_{q,x} - I_M||_op <= 1/2.
class ChristoffelSampler {
 public:
  ChristoffelSampler(const OrthonormalBasis& basis, std::size_t N, std::size_t M, ChristoffelOptions options = {})
      : basis_(&basis), N_(N), M_(M), options_(options), density_(basis, first_indices(M)) {
    if (N == 0 || M == 0) throw std::invalid_argument("ChristoffelSampler: N and M must be positive");
  }

  std::size_t N() const noexcept { return N_; }
  std::size_t M() const noexcept { return M_; }

  /// The weight q evaluated at x.
  double q(const Point& x) const {
    if (options_.q_mode == QMode::Uniform) return 1.0;
    return 1.0 / christoffel_density(*basis_, M_, x);
  }

  Design sample(std::uint64_t seed) const {
    Rng rng(seed);
    Design d;
    d.seed = seed;
    d.tag = ChristoffelTag{M_, options_.q_mode};
    if (options_.condition_gram && N_ < M_) {
      throw SamplingFailure("Christoffel: N < M makes ||G - I|| <= 1/2 unattainable");
    }
    std::vector<double> scratch(M_);
    std::vector<double> qv(N_);
    for (std::size_t attempt = 0; attempt <= options_.max_resamples; ++attempt) {
      d.nodes.clear();
      for (std::size_t i = 0; i < N_; ++i) {
        if (options_.q_mode == QMode::Uniform) {
          d.nodes.push_back(basis_->domain().sample(rng));
          ++d.attempts.proposals;
        } else {
          d.nodes.push_back(density_.draw(rng, d.attempts, scratch));
        }
        qv[i] = q(d.nodes.back());
      }
      if (!options_.condition_gram) return d;
      if (gram_identity_deviation(christoffel_gram(*basis_, d.nodes, M_, qv)) <= 0.5) return d;
      ++d.attempts.resamples;
    }
    std::ostringstream os;
    os << "Christoffel: conditioning event ||G - I|| <= 1/2 not met after " << options_.max_resamples
       << " resamples (N=" << N_ << ", M=" << M_ << ", proposals=" << d.attempts.proposals << ")";
    throw SamplingFailure(os.str());
  }

 private:
  const OrthonormalBasis* basis_;
  std::size_t N_;
  std::size_t M_;
  ChristoffelOptions options_;
  DiagonalDensitySampler density_;
};

inline Design sample_christoffel_iid(const OrthonormalBasis& basis, std::size_t N, std::size_t M,
                                     std::uint64_t seed, ChristoffelOptions options = {}) {
  return ChristoffelSampler(basis, N, M, options).sample(seed);
}

/// Exact sampler for the projection DPP with kernel k_{0,T} (HKPV chain
/// rule). Each conditional is sampled by rejection with the marginal
/// k_{0,T}(x,x)/N as proposal; the Gram matrix of accepted nodes is kept as
/// a Cholesky factor extended one row per node.
class ProjectionDppSampler {
 public:
  static constexpr double kNegativeTolerance = 1e-10;

  ProjectionDppSampler(const OrthonormalBasis& basis, IndexSet T, std::string basis_label = "eigen")
      : basis_(&basis), label_(std::move(basis_label)), proposal_(basis, std::move(T)) {}

  const IndexSet& indices() const noexcept { return proposal_.indices(); }

  Design sample(std::uint64_t seed) const {
    Rng rng(seed);
    Design d;
    d.seed = seed;
    d.tag = ProjectionDppTag{indices(), label_};
    d.nodes = sample_nodes(rng, d.attempts);
    return d;
  }

  std::vector<Point> sample_nodes(Rng& rng, SamplingCounters& counters) const {
    const std::size_t N = indices().size();
    const auto n = static_cast<Eigen::Index>(N);
    Eigen::MatrixXd features(n, n);  // row j = e_T(x_j)
    Eigen::MatrixXd chol = Eigen::MatrixXd::Zero(n, n);
    std::vector<Point> nodes;
    nodes.reserve(N);
    std::vector<double> phi(N);
    Eigen::VectorXd b(n);
    for (Eigen::Index k = 0; k < n; ++k) {
      std::uint64_t tries = 0;
      for (;;) {
        const std::uint64_t before = counters.proposals;
        double kxx = 0.0;
        const Point x = proposal_.draw(rng, counters, phi, &kxx);
        tries += counters.proposals - before;
        const Eigen::Map<const Eigen::VectorXd> f(phi.data(), n);
        double cond = kxx;
        if (k > 0) {
          b.head(k).noalias() = features.topRows(k) * f;
          chol.topLeftCorner(k, k).triangularView<Eigen::Lower>().solveInPlace(b.head(k));
          cond = kxx - b.head(k).squaredNorm();
        }
        if (cond < -kNegativeTolerance) {
          std::ostringstream os;
          os << "HKPV: conditional density " << cond << " is negative (ill-conditioned Gram matrix)";
          throw NumericalFailure(os.str());
        }
        cond = std::max(cond, 0.0);
        if (uniform01(rng) * kxx < cond) {
          features.row(k) = f.transpose();
          if (k > 0) chol.row(k).head(k) = b.head(k).transpose();
          chol(k, k) = std::sqrt(cond);
          nodes.push_back(x);
          break;
        }
        ++counters.conditional_rejections;
        if (tries >= DiagonalDensitySampler::kProposalCap) {
          throw SamplingFailure("HKPV: per-point proposal cap exceeded");
        }
      }
    }
    return nodes;
  }

 private:
  const OrthonormalBasis* basis_;
  std::string label_;
  DiagonalDensitySampler proposal_;
};

inline Design sample_projection_dpp(const OrthonormalBasis& basis, const IndexSet& T, std::uint64_t seed,
                                    std::string basis_label = "eigen") {
  return ProjectionDppSampler(basis, T, std::move(basis_label)).sample(seed);
}

/// log e_k(sigma_0, ..., sigma_{m-1}) for k <= N and m <= M, filled by the
/// recursion e_k(m) = e_k(m-1) + sigma_{m-1} e_{k-1}(m-1) in log space.
class EspTable {
 public:
  EspTable(std::span<const double> sigmas, std::size_t N) : N_(N), M_(sigmas.size()) {
    if (N > M_) throw std::invalid_argument("EspTable: N exceeds the number of eigenvalues");
    log_sigma_.resize(M_);
    for (std::size_t m = 0; m < M_; ++m) {
      if (!(sigmas[m] > 0.0)) throw std::invalid_argument("EspTable: eigenvalues must be positive");
      log_sigma_[m] = std::log(sigmas[m]);
    }
    constexpr double ninf = -std::numeric_limits<double>::infinity();
    table_.assign((N_ + 1) * (M_ + 1), ninf);
    for (std::size_t m = 0; m <= M_; ++m) at(0, m) = 0.0;
    for (std::size_t m = 1; m <= M_; ++m) {
      const std::size_t kmax = std::min(N_, m);
      for (std::size_t k = 1; k <= kmax; ++k) {
        at(k, m) = log_add_exp(at(k, m - 1), log_sigma_[m - 1] + at(k - 1, m - 1));
      }
    }
  }

  std::size_t N() const noexcept { return N_; }
  std::size_t M() const noexcept { return M_; }

  /// log e_k over the first m eigenvalues.
  double log_e(std::size_t k, std::size_t m) const { return table_[k * (M_ + 1) + m]; }

  /// P(T) = prod_{t in T} sigma_t / e_N(sigma).
  double probability(std::span<const Index> T) const {
    double lp = -log_e(N_, M_);
    for (Index t : T) lp += log_sigma_.at(t);
    return std::exp(lp);
  }

  /// Sequential inclusion scan from the last eigenvalue down.
  IndexSet sample(Rng& rng) const {
    IndexSet T;
    T.reserve(N_);
    std::size_t k = N_;
    for (std::size_t m = M_; m > 0 && k > 0; --m) {
      if (k == m) {
        for (std::size_t j = m; j > 0; --j) T.push_back(j - 1);
        k = 0;
        break;
      }
      const double p = std::exp(log_sigma_[m - 1] + log_e(k - 1, m - 1) - log_e(k, m));
      if (uniform01(rng) < p) {
        T.push_back(m - 1);
        --k;
      }
    }
    std::sort(T.begin(), T.end());
    return T;
  }

 private:
  double& at(std::size_t k, std::size_t m) { return table_[k * (M_ + 1) + m]; }

  std::size_t N_;
  std::size_t M_;
  std::vector<double> log_sigma_;
  std::vector<double> table_;
};

/// T with |T| = N and P(T) proportional to prod_{t in T} sigma_t.
inline IndexSet sample_subset_esp(std::span<const double> sigmas, std::size_t N, Rng& rng) {
  return EspTable(sigmas, N).sample(rng);
}

/// Continuous volume sampling: T from the ESP mixture weights over the
/// materialized spectrum, then the projection DPP of k_{0,T}.
class CvsSampler {
 public:
  CvsSampler(const SpectralModel& model, std::size_t N) : model_(&model), table_(model.eigenvalues(), N) {
    if (N == 0) throw std::invalid_argument("CvsSampler: N must be positive");
  }

  std::size_t N() const noexcept { return table_.N(); }
  const EspTable& table() const noexcept { return table_; }

  /// Estimate of the total-variation distance between the truncated and the
  /// full mixture: sum_{m >= M_spec} P(m in T) <= r_{M_spec} e_{N-1} / e_N.
  double truncation_tv_bound() const {
    const double ratio = std::exp(table_.log_e(N() - 1, table_.M()) - table_.log_e(N(), table_.M()));
    return model_->unmaterialized_tail(1) * ratio;
  }

  Design sample(std::uint64_t seed) const {
    Rng rng(seed);
    Design d;
    d.seed = seed;
    IndexSet T = table_.sample(rng);
    d.tag = CvsTag{T};
    ProjectionDppSampler dpp(*model_, std::move(T));
    d.nodes = dpp.sample_nodes(rng, d.attempts);
    return d;
  }

 private:
  const SpectralModel* model_;
  EspTable table_;
};

inline Design sample_cvs(const SpectralModel& model, std::size_t N, std::uint64_t seed) {
  return CvsSampler(model, N).sample(seed);
}

/// log det K_{0,T}(x) for a design, through a Cholesky factorization.
/// Returns -inf when the Gram matrix is not numerically positive definite.
inline double projection_gram_log_det(const OrthonormalBasis& basis, std::span<const Index> T,
                                      std::span<const Point> nodes) {
  const auto n = static_cast<Eigen::Index>(nodes.size());
  const auto t = static_cast<Eigen::Index>(T.size());
  Eigen::MatrixXd E(n, t);
  std::vector<double> row(T.size());
  for (Eigen::Index i = 0; i < n; ++i) {
    basis.eval_subset(nodes[static_cast<std::size_t>(i)], T, row);
    for (Eigen::Index j = 0; j < t; ++j) E(i, j) = row[static_cast<std::size_t>(j)];
  }
  Eigen::LLT<Eigen::MatrixXd> llt(E * E.transpose());
  if (llt.info() != Eigen::Success) return -std::numeric_limits<double>::infinity();
  return 2.0 * llt.matrixLLT().diagonal().array().log().sum();
}

}  // namespace rkdpp
