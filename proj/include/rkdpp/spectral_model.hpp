#pragma once

// Mercer-decomposed kernels: the orthonormal basis abstraction, the spectral
// model built on it, target functions given by eigen-expansions, and the
// truncated/powered kernels k_{nu,T}.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <memory>
#include <numbers>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "rkdpp/core.hpp"

namespace rkdpp {

using Index = std::size_t;
using IndexSet = std::vector<Index>;

enum class DomainKind { Interval, Sphere2 };

/// The space X together with its reference measure. Every supported family
/// uses the uniform probability measure on X.
struct Domain {
  DomainKind kind = DomainKind::Interval;
  double lo = 0.0;
  double hi = 1.0;

  static Domain interval(double lo, double hi) { return {DomainKind::Interval, lo, hi}; }
  static Domain sphere() { return {DomainKind::Sphere2, 0.0, 0.0}; }

  /// Number of coordinates written per node.
  int coordinates() const noexcept { return kind == DomainKind::Interval ? 1 : 3; }

  bool contains(const Point& x, double tol = 1e-12) const {
    if (kind == DomainKind::Interval) return x(0) >= lo - tol && x(0) <= hi + tol;
    return std::abs(x.norm() - 1.0) <= 1e-9;
  }

  /// One draw from the reference measure.
  Point sample(Rng& rng) const {
    if (kind == DomainKind::Interval) return make_point(lo + (hi - lo) * uniform01(rng));
    const double z = 2.0 * uniform01(rng) - 1.0;
    const double phi = 2.0 * std::numbers::pi * uniform01(rng);
    const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
    return Point(r * std::cos(phi), r * std::sin(phi), z);
  }

  /// Deterministic grid used to estimate density suprema: 4096 points on an
  /// interval (endpoints included), 200 x 400 in (cos theta, phi) on S^2.
  std::vector<Point> envelope_grid() const {
    std::vector<Point> grid;
    if (kind == DomainKind::Interval) {
      constexpr int n = 4096;
      grid.reserve(n);
      for (int i = 0; i < n; ++i) grid.push_back(make_point(lo + (hi - lo) * i / (n - 1.0)));
      return grid;
    }
    constexpr int n_theta = 200;
    constexpr int n_phi = 400;
    grid.reserve(n_theta * n_phi);
    for (int i = 0; i < n_theta; ++i) {
      const double z = -1.0 + 2.0 * i / (n_theta - 1.0);
      const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
      for (int j = 0; j < n_phi; ++j) {
        const double phi = 2.0 * std::numbers::pi * j / n_phi;
        grid.emplace_back(r * std::cos(phi), r * std::sin(phi), z);
      }
    }
    return grid;
  }
};

/// Upper bound on sup_x sum_{m in T} e_m(x)^2 supplied analytically by a basis.
struct DiagonalBound {
  double value = 0.0;
  bool exact = false;  // true when the bound is the supremum itself
};

/// An L2(omega)-orthonormal family e_0, e_1, ... on a domain. Indices are
/// zero-based throughout the library.
class OrthonormalBasis {
 public:
  virtual ~OrthonormalBasis() = default;

  virtual const Domain& domain() const noexcept = 0;

  /// Number of functions that can be evaluated.
  virtual std::size_t size() const noexcept = 0;

  virtual std::string name() const = 0;

  /// Writes e_0(x), ..., e_{count-1}(x) into out[0..count).
  virtual void eval_first(const Point& x, std::size_t count, std::span<double> out) const = 0;

  /// Writes e_{indices[i]}(x) into out[i].
  virtual void eval_subset(const Point& x, std::span<const Index> indices, std::span<double> out) const {
    if (indices.empty()) return;
    const Index top = *std::max_element(indices.begin(), indices.end());
    check_index(top);
    std::vector<double> all(top + 1);
    eval_first(x, top + 1, all);
    for (std::size_t i = 0; i < indices.size(); ++i) out[i] = all[indices[i]];
  }

  virtual std::optional<DiagonalBound> diagonal_sup(std::span<const Index> /*indices*/) const {
    return std::nullopt;
  }

  double eval(const Point& x, Index m) const {
    double v = 0.0;
    const Index idx[1] = {m};
    eval_subset(x, idx, std::span<double>(&v, 1));
    return v;
  }

  void check_index(Index m) const {
    if (m >= size()) {
      throw std::out_of_range("basis index " + std::to_string(m) + " outside truncation range " +
                              std::to_string(size()));
    }
  }
};

enum class KernelFamily { PeriodicSobolev, SphereSobolev, SincPswf };

enum class SincConvention {
  Unnormalized,  // sin(F u) / (F u)
  Normalized,    // sin(pi F u) / (pi F u)
};

/// Parameters that rebuild a model; serialized as the `kernel` config block.
struct KernelDescriptor {
  KernelFamily family = KernelFamily::PeriodicSobolev;
  double s = 1.0;               // smoothness (Sobolev families)
  int d = 3;                    // ambient dimension (sphere)
  std::size_t M_spec = 2000;    // periodic Sobolev truncation
  int L_max = 60;               // sphere truncation degree
  double T_len = 2.0;           // Sinc interval length
  double F = 7.0;               // Sinc bandwidth
  std::size_t legendre_order = 128;
  SincConvention convention = SincConvention::Normalized;

  bool operator==(const KernelDescriptor&) const = default;
};

inline std::string family_name(KernelFamily f) {
  switch (f) {
    case KernelFamily::PeriodicSobolev: return "periodic_sobolev";
    case KernelFamily::SphereSobolev: return "sphere_sobolev";
    case KernelFamily::SincPswf: return "sinc_pswf";
  }
  return "unknown";
}

/// A Mercer-decomposed kernel k(x,y) = sum_m sigma_m e_m(x) e_m(y), with the
/// spectrum materialized up to the truncation order M_spec = size().
/// Immutable after construction.
class SpectralModel : public OrthonormalBasis {
 public:
  std::span<const double> eigenvalues() const noexcept { return sigmas_; }
  std::size_t truncation_order() const noexcept { return sigmas_.size(); }
  std::size_t size() const noexcept override { return sigmas_.size(); }

  double eigenvalue(Index m) const {
    check_index(m);
    return sigmas_[m];
  }

  const KernelDescriptor& descriptor() const noexcept { return descriptor_; }

  /// True when part of the numerical spectrum was dropped at the machine floor.
  bool floor_clipped() const noexcept { return floor_clipped_; }

  /// Certified bound on sum_{m >= M_spec} sigma_m^nu.
  virtual double unmaterialized_tail(int nu) const = 0;

  /// Bound on sup_m sup_x e_m(x)^2 over materialized eigenfunctions, used to
  /// turn spectral tails into pointwise kernel error bounds.
  virtual double eigenfunction_sup_sq() const = 0;

  /// tail_sum(nu, n) = sum_{m >= n} sigma_m^nu (zero-based n), including the
  /// certified remainder beyond the truncation order.
  double tail_sum(int nu, std::size_t from) const {
    CompensatedSum acc;
    for (std::size_t m = sigmas_.size(); m-- > from;) acc.add(std::pow(sigmas_[m], nu));
    return acc.value() + unmaterialized_tail(nu);
  }

  virtual bool has_closed_form(int /*nu*/) const noexcept { return false; }

  virtual double closed_form(int nu, const Point& /*x*/, const Point& /*y*/) const {
    throw std::logic_error("no closed form for k_" + std::to_string(nu) + " in " + name());
  }

  /// k_nu(x, y) for nu in {1, 2}: the closed form when one exists, the
  /// truncated Mercer sum otherwise.
  virtual double kernel(int nu, const Point& x, const Point& y) const {
    if (has_closed_form(nu)) return closed_form(nu, x, y);
    return truncated_kernel(nu, x, y);
  }

  /// sum_{m < M_spec} sigma_m^nu e_m(x) e_m(y).
  double truncated_kernel(int nu, const Point& x, const Point& y) const {
    const std::size_t M = size();
    std::vector<double> ex(M);
    std::vector<double> ey(M);
    eval_first(x, M, ex);
    eval_first(y, M, ey);
    double v = 0.0;
    for (std::size_t m = M; m-- > 0;) v += std::pow(sigmas_[m], nu) * ex[m] * ey[m];
    return v;
  }

 protected:
  SpectralModel(KernelDescriptor descriptor, std::vector<double> sigmas, bool floor_clipped = false)
      : descriptor_(descriptor), sigmas_(std::move(sigmas)), floor_clipped_(floor_clipped) {}

 private:
  KernelDescriptor descriptor_;
  std::vector<double> sigmas_;
  bool floor_clipped_ = false;
};

using ModelPtr = std::shared_ptr<const SpectralModel>;

/// k_{nu,T}(x, y) = sum_{m in T} sigma_m^nu e_m(x) e_m(y), nu in {0, 1, 2}.
inline double kernel_nu_T(const SpectralModel& model, int nu, std::span<const Index> T, const Point& x,
                          const Point& y) {
  if (nu < 0 || nu > 2) throw std::invalid_argument("kernel_nu_T: nu must be 0, 1 or 2");
  for (Index m : T) model.check_index(m);
  std::vector<double> ex(T.size());
  std::vector<double> ey(T.size());
  model.eval_subset(x, T, ex);
  model.eval_subset(y, T, ey);
  double v = 0.0;
  for (std::size_t i = 0; i < T.size(); ++i) v += std::pow(model.eigenvalue(T[i]), nu) * ex[i] * ey[i];
  return v;
}

inline IndexSet first_indices(std::size_t n) {
  IndexSet T(n);
  for (std::size_t i = 0; i < n; ++i) T[i] = i;
  return T;
}

/// A function known through finitely many coefficients <f, e_m>_omega.
class TargetFunction {
 public:
  TargetFunction() = default;
  explicit TargetFunction(std::map<Index, double> coeffs) : coeffs_(std::move(coeffs)) {}

  /// f = scale * e_m.
  static TargetFunction eigenfunction(Index m, double scale = 1.0) { return TargetFunction({{m, scale}}); }

  /// f = e_m^F = sqrt(sigma_m) e_m, the unit-norm RKHS basis element.
  static TargetFunction rkhs_eigenfunction(const SpectralModel& model, Index m) {
    return eigenfunction(m, std::sqrt(model.eigenvalue(m)));
  }

  /// f = sum_{m < M} xi_m e_m^F with xi_m i.i.d. standard Gaussian.
  static TargetFunction random_rkhs_mixture(const SpectralModel& model, std::size_t M, Rng& rng) {
    std::map<Index, double> c;
    for (Index m = 0; m < M; ++m) c[m] = standard_normal(rng) * std::sqrt(model.eigenvalue(m));
    return TargetFunction(std::move(c));
  }

  /// f = Sigma^{r + 1/2} g, with g given by its coefficients.
  static TargetFunction smoothed(const SpectralModel& model, double r, const std::map<Index, double>& g) {
    std::map<Index, double> c;
    for (const auto& [m, v] : g) c[m] = std::pow(model.eigenvalue(m), r + 0.5) * v;
    return TargetFunction(std::move(c));
  }

  const std::map<Index, double>& coefficients() const noexcept { return coeffs_; }

  double coefficient(Index m) const {
    const auto it = coeffs_.find(m);
    return it == coeffs_.end() ? 0.0 : it->second;
  }

  /// One past the largest index with a stored coefficient.
  std::size_t support_end() const noexcept { return coeffs_.empty() ? 0 : coeffs_.rbegin()->first + 1; }

  void check_support(const OrthonormalBasis& basis) const {
    if (support_end() > basis.size()) {
      throw std::out_of_range("target support exceeds the basis truncation order");
    }
  }

  double l2_norm_sq() const {
    CompensatedSum acc;
    for (const auto& [m, c] : coeffs_) acc.add(c * c);
    return acc.value();
  }

  double rkhs_norm_sq(const SpectralModel& model) const {
    CompensatedSum acc;
    for (const auto& [m, c] : coeffs_) acc.add(c * c / model.eigenvalue(m));
    return acc.value();
  }

  /// ||f - f_M||^2 = sum_{m >= M} <f, e_m>^2, with f_M the projection onto
  /// the first M eigenfunctions.
  double projection_residual_sq(std::size_t M) const {
    CompensatedSum acc;
    for (auto it = coeffs_.lower_bound(M); it != coeffs_.end(); ++it) acc.add(it->second * it->second);
    return acc.value();
  }

  double operator()(const OrthonormalBasis& basis, const Point& x) const {
    check_support(basis);
    IndexSet idx;
    idx.reserve(coeffs_.size());
    for (const auto& [m, c] : coeffs_) idx.push_back(m);
    std::vector<double> e(idx.size());
    basis.eval_subset(x, idx, e);
    double v = 0.0;
    std::size_t i = 0;
    for (const auto& [m, c] : coeffs_) v += c * e[i++];
    return v;
  }

  Eigen::VectorXd evaluate_at(const OrthonormalBasis& basis, std::span<const Point> nodes) const {
    Eigen::VectorXd v(static_cast<Eigen::Index>(nodes.size()));
    for (std::size_t i = 0; i < nodes.size(); ++i) v(static_cast<Eigen::Index>(i)) = (*this)(basis, nodes[i]);
    return v;
  }

 private:
  std::map<Index, double> coeffs_;
};

/// (Sigma f)(x) = sum_m sigma_m <f, e_m> e_m(x).
inline double smoothed_eval(const SpectralModel& model, const TargetFunction& f, const Point& x) {
  f.check_support(model);
  std::map<Index, double> scaled;
  for (const auto& [m, c] : f.coefficients()) scaled[m] = model.eigenvalue(m) * c;
  return TargetFunction(std::move(scaled))(model, x);
}

}  // namespace rkdpp
