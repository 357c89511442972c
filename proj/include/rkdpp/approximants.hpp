#pragma once

// Reconstruction schemes built from node evaluations: OKA, LS, the OKQ and
// quasi-interpolant transforms, and (truncated) empirical least squares.

#include <cstddef>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "rkdpp/core.hpp"
#include "rkdpp/linalg.hpp"
#include "rkdpp/spectral_model.hpp"

namespace rkdpp {

enum class Scheme { OKA, LS, OKQ, QI, ELS, TELS };

inline std::string scheme_name(Scheme s) {
  switch (s) {
    case Scheme::OKA: return "oka";
    case Scheme::LS: return "ls";
    case Scheme::OKQ: return "okq";
    case Scheme::QI: return "qi";
    case Scheme::ELS: return "els";
    case Scheme::TELS: return "tels";
  }
  return "unknown";
}

/// f_hat = sum_i w_i k(x_i, .)
struct KernelMix {
  std::vector<Point> nodes;
  Eigen::VectorXd weights;
};

/// f_hat = sum_{m < coeffs.size()} coeffs(m) e_m
struct EigenExpansion {
  Eigen::VectorXd coeffs;
};

struct Approximant {
  std::variant<KernelMix, EigenExpansion> representation;
  Scheme scheme = Scheme::OKA;
  SolveDiagnostics diagnostics;
  /// OKQ with M > N: coefficients beyond N are not interpolative quadratures.
  bool beyond_interpolative_regime = false;

  bool is_kernel_mix() const noexcept { return std::holds_alternative<KernelMix>(representation); }
  const KernelMix& kernel_mix() const { return std::get<KernelMix>(representation); }
  const EigenExpansion& expansion() const { return std::get<EigenExpansion>(representation); }
};

/// K_nu(x) = (k_nu(x_i, x_j))_{i,j}.
inline Eigen::MatrixXd gram_matrix(const SpectralModel& model, int nu, std::span<const Point> nodes) {
  const auto n = static_cast<Eigen::Index>(nodes.size());
  Eigen::MatrixXd K(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i; j < n; ++j) {
      K(i, j) = K(j, i) = model.kernel(nu, nodes[static_cast<std::size_t>(i)], nodes[static_cast<std::size_t>(j)]);
    }
  }
  return K;
}

/// E(i, m) = e_m(x_i) for m < M.
inline Eigen::MatrixXd eigen_matrix(const OrthonormalBasis& basis, std::span<const Point> nodes, std::size_t M) {
  if (M > 0) basis.check_index(M - 1);
  const auto n = static_cast<Eigen::Index>(nodes.size());
  Eigen::MatrixXd E(n, static_cast<Eigen::Index>(M));
  std::vector<double> row(M);
  for (Eigen::Index i = 0; i < n; ++i) {
    basis.eval_first(nodes[static_cast<std::size_t>(i)], M, row);
    for (std::size_t m = 0; m < M; ++m) E(i, static_cast<Eigen::Index>(m)) = row[m];
  }
  return E;
}

namespace detail {

inline void check_evals(std::span<const Point> nodes, const Eigen::VectorXd& f_evals, const char* what) {
  if (nodes.empty()) throw std::invalid_argument(std::string(what) + ": empty design");
  if (static_cast<std::size_t>(f_evals.size()) != nodes.size()) {
    throw std::invalid_argument(std::string(what) + ": f_evals length differs from the design size");
  }
}

}  // namespace detail

/// Optimal kernel approximation: w = K_1(x)^{-1} f(x).
inline Approximant oka(const SpectralModel& model, std::span<const Point> nodes, const Eigen::VectorXd& f_evals) {
  detail::check_evals(nodes, f_evals, "oka");
  CheckedSolver solver(gram_matrix(model, 1, nodes), "oka: K_1(x)");
  Approximant a;
  a.scheme = Scheme::OKA;
  a.diagnostics = solver.diagnostics();
  a.representation = KernelMix{{nodes.begin(), nodes.end()}, solver.solve(f_evals)};
  return a;
}

/// L2(omega) projection onto span k(x_i, .): w = K_2(x)^{-1} (Sigma f)(x).
inline Approximant ls(const SpectralModel& model, std::span<const Point> nodes, const TargetFunction& f) {
  if (nodes.empty()) throw std::invalid_argument("ls: empty design");
  f.check_support(model);
  Eigen::VectorXd sf(static_cast<Eigen::Index>(nodes.size()));
  for (std::size_t i = 0; i < nodes.size(); ++i) sf(static_cast<Eigen::Index>(i)) = smoothed_eval(model, f, nodes[i]);
  CheckedSolver solver(gram_matrix(model, 2, nodes), "ls: K_2(x)");
  Approximant a;
  a.scheme = Scheme::LS;
  a.diagnostics = solver.diagnostics();
  a.representation = KernelMix{{nodes.begin(), nodes.end()}, solver.solve(sf)};
  return a;
}

/// I_hat_m = f(x)^T sigma_m K_1(x)^{-1} e_m(x) for m < M, i.e. the
/// coefficients of the OKA approximant on the first M eigenfunctions.
inline Approximant okq_transform(const SpectralModel& model, std::span<const Point> nodes,
                                 const Eigen::VectorXd& f_evals, std::size_t M) {
  detail::check_evals(nodes, f_evals, "okq_transform");
  if (M == 0) throw std::invalid_argument("okq_transform: M must be positive");
  CheckedSolver solver(gram_matrix(model, 1, nodes), "okq_transform: K_1(x)");
  const Eigen::VectorXd w = solver.solve(f_evals);
  const Eigen::MatrixXd E = eigen_matrix(model, nodes, M);
  Eigen::VectorXd c = E.transpose() * w;
  for (std::size_t m = 0; m < M; ++m) c(static_cast<Eigen::Index>(m)) *= model.eigenvalue(m);
  Approximant a;
  a.scheme = Scheme::OKQ;
  a.diagnostics = solver.diagnostics();
  a.beyond_interpolative_regime = M > nodes.size();
  a.representation = EigenExpansion{std::move(c)};
  return a;
}

/// Ermakov-Zolotukhin quasi-interpolant: solves E eta = f(x) with
/// E(i, m) = e_m(x_i), m < N.
inline Approximant qi_transform(const OrthonormalBasis& basis, std::span<const Point> nodes,
                                const Eigen::VectorXd& f_evals) {
  detail::check_evals(nodes, f_evals, "qi_transform");
  CheckedSolver solver(eigen_matrix(basis, nodes, nodes.size()), "qi_transform: E(x)");
  Approximant a;
  a.scheme = Scheme::QI;
  a.diagnostics = solver.diagnostics();
  a.representation = EigenExpansion{solver.solve(f_evals)};
  return a;
}

/// Empirical least squares of order M with weights q: G eta = d where
/// G = (1/N) E^T Q E and d = (1/N) E^T Q f(x).
inline Approximant els(const OrthonormalBasis& basis, std::span<const Point> nodes, const Eigen::VectorXd& f_evals,
                       const Eigen::VectorXd& q_evals, std::size_t M) {
  detail::check_evals(nodes, f_evals, "els");
  if (q_evals.size() != f_evals.size()) throw std::invalid_argument("els: q_evals length differs from the design");
  if (M == 0 || M > nodes.size()) throw std::invalid_argument("els: need 1 <= M <= N");
  if ((q_evals.array() <= 0.0).any()) throw std::invalid_argument("els: q must be positive");
  const double inv_n = 1.0 / static_cast<double>(nodes.size());
  const Eigen::MatrixXd E = eigen_matrix(basis, nodes, M);
  const Eigen::MatrixXd QE = q_evals.asDiagonal() * E;
  const Eigen::MatrixXd G = inv_n * E.transpose() * QE;
  const Eigen::VectorXd d = inv_n * QE.transpose() * f_evals;
  CheckedSolver solver(G, "els: G_{q,x}");
  Approximant a;
  a.scheme = Scheme::ELS;
  a.diagnostics = solver.diagnostics();
  a.representation = EigenExpansion{solver.solve(d)};
  return a;
}

/// First M coefficients of the quasi-interpolant (the projection of the
/// order-N ELS solution onto the first M eigenfunctions).
inline Approximant tels(const OrthonormalBasis& basis, std::span<const Point> nodes, const Eigen::VectorXd& f_evals,
                        std::size_t M) {
  if (M == 0 || M > nodes.size()) throw std::invalid_argument("tels: need 1 <= M <= N");
  Approximant a = qi_transform(basis, nodes, f_evals);
  a.scheme = Scheme::TELS;
  auto& c = std::get<EigenExpansion>(a.representation).coeffs;
  c.conservativeResize(static_cast<Eigen::Index>(M));
  return a;
}

inline double evaluate(const SpectralModel& model, const Approximant& a, const Point& x) {
  if (a.is_kernel_mix()) {
    const auto& km = a.kernel_mix();
    double v = 0.0;
    for (std::size_t i = 0; i < km.nodes.size(); ++i) {
      const double w = km.weights(static_cast<Eigen::Index>(i));
      if (w != 0.0) v += w * model.kernel(1, km.nodes[i], x);
    }
    return v;
  }
  const auto& c = a.expansion().coeffs;
  if (c.size() == 0) return 0.0;
  std::vector<double> e(static_cast<std::size_t>(c.size()));
  model.eval_first(x, e.size(), e);
  return Eigen::Map<const Eigen::VectorXd>(e.data(), c.size()).dot(c);
}

/// Rows `scheme,kind,index,value` with one-based index.
inline void write_approximant_csv(std::ostream& os, const Approximant& a, bool header = true) {
  if (header) os << "scheme,kind,index,value\n";
  const std::string name = scheme_name(a.scheme);
  const bool mix = a.is_kernel_mix();
  const Eigen::VectorXd& v = mix ? a.kernel_mix().weights : a.expansion().coeffs;
  const char* kind = mix ? "kernel_mix" : "eigen_expansion";
  os.precision(17);
  for (Eigen::Index i = 0; i < v.size(); ++i) os << name << ',' << kind << ',' << i + 1 << ',' << v(i) << '\n';
}

}  // namespace rkdpp
