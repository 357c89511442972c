#pragma once

// The three kernel families with exact or numerically certified Mercer data,
// plus the normalized Legendre basis used both as a DPP basis and as the
// Galerkin space for prolate spheroidal wave functions.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <map>
#include <memory>
#include <numbers>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Eigenvalues>

#include "rkdpp/core.hpp"
#include "rkdpp/special.hpp"
#include "rkdpp/spectral_model.hpp"

namespace rkdpp {

namespace detail {

// sum_{j > J} j^{-p} for p > 1, bounded by the integral from J (J >= 1) or by
// 1 + 1/(p-1) when J = 0.
inline double zeta_tail_bound(double J, double p) {
  if (p <= 1.0) return std::numeric_limits<double>::infinity();
  if (J < 1.0) return 1.0 + 1.0 / (p - 1.0);
  return std::pow(J, 1.0 - p) / (p - 1.0);
}

}  // namespace detail

/// Periodic Sobolev space of order s on [0, 1]. Index 0 is the constant;
/// index 2j-1 is sqrt(2) cos(2 pi j x) and index 2j is sqrt(2) sin(2 pi j x),
/// both with eigenvalue j^{-2s}.
class PeriodicSobolev final : public SpectralModel {
 public:
  PeriodicSobolev(int s, std::size_t M_spec)
      : SpectralModel(make_descriptor(s, M_spec), make_spectrum(s, M_spec)),
        s_(s),
        domain_(Domain::interval(0.0, 1.0)),
        bernoulli_s_(bernoulli_coefficients(static_cast<std::size_t>(2 * s))),
        bernoulli_2s_(bernoulli_coefficients(static_cast<std::size_t>(4 * s))) {}

  const Domain& domain() const noexcept override { return domain_; }
  std::string name() const override { return "periodic_sobolev(s=" + std::to_string(s_) + ")"; }
  int smoothness() const noexcept { return s_; }

  static std::size_t frequency(Index n) noexcept { return (n + 1) / 2; }
  static bool is_cosine(Index n) noexcept { return n % 2 == 1; }

  void eval_first(const Point& x, std::size_t count, std::span<double> out) const override {
    if (count > size()) check_index(count - 1);
    const double t = 2.0 * std::numbers::pi * x(0);
    for (std::size_t n = 0; n < count; ++n) out[n] = basis_value(t, n);
  }

  void eval_subset(const Point& x, std::span<const Index> indices, std::span<double> out) const override {
    const double t = 2.0 * std::numbers::pi * x(0);
    for (std::size_t i = 0; i < indices.size(); ++i) {
      check_index(indices[i]);
      out[i] = basis_value(t, indices[i]);
    }
  }

  /// Complete cosine/sine pairs give the constant 2 per pair; a lone member
  /// contributes at most 2.
  std::optional<DiagonalBound> diagonal_sup(std::span<const Index> indices) const override {
    std::map<std::size_t, int> members;
    double bound = 0.0;
    for (Index n : indices) {
      if (n == 0) {
        bound += 1.0;
      } else {
        ++members[frequency(n)];
      }
    }
    bound += 2.0 * static_cast<double>(members.size());
    const bool exact = std::all_of(members.begin(), members.end(), [](const auto& kv) { return kv.second == 2; });
    return DiagonalBound{bound, exact};
  }

  double unmaterialized_tail(int nu) const override {
    if (nu <= 0) return std::numeric_limits<double>::infinity();
    const std::size_t M = size();
    const double p = 2.0 * s_ * nu;
    const std::size_t last = M - 1;
    const double j_last = static_cast<double>(frequency(last));
    double tail = 2.0 * detail::zeta_tail_bound(j_last, p);
    if (last > 0 && is_cosine(last)) tail += std::pow(j_last, -p);  // the missing sine
    return tail;
  }

  double eigenfunction_sup_sq() const override { return size() > 1 ? 2.0 : 1.0; }

  bool has_closed_form(int nu) const noexcept override { return nu == 1 || nu == 2; }

  /// k_s (nu = 1) and k_{2s} (nu = 2) through Bernoulli polynomials.
  double closed_form(int nu, const Point& x, const Point& y) const override {
    if (nu != 1 && nu != 2) return SpectralModel::closed_form(nu, x, y);
    double u = x(0) - y(0);
    u -= std::floor(u);
    const auto& c = nu == 1 ? bernoulli_s_ : bernoulli_2s_;
    double v = 0.0;
    for (double ck : c) v = v * u + ck;
    return 1.0 + v;
  }

 private:
  static KernelDescriptor make_descriptor(int s, std::size_t M_spec) {
    if (s < 1) throw std::invalid_argument("periodic Sobolev: s must be >= 1");
    if (M_spec < 1) throw std::invalid_argument("periodic Sobolev: M_spec must be >= 1");
    KernelDescriptor d;
    d.family = KernelFamily::PeriodicSobolev;
    d.s = s;
    d.M_spec = M_spec;
    return d;
  }

  static std::vector<double> make_spectrum(int s, std::size_t M_spec) {
    std::vector<double> sig(M_spec);
    for (std::size_t n = 0; n < M_spec; ++n) {
      sig[n] = n == 0 ? 1.0 : std::pow(static_cast<double>(frequency(n)), -2.0 * s);
    }
    return sig;
  }

  // Coefficients (highest degree first) of (-1)^{q/2-1} (2 pi)^q / q! * B_q(u).
  static std::vector<double> bernoulli_coefficients(std::size_t q) {
    const auto b = special::bernoulli_numbers(q);
    double scale = ((q / 2) % 2 == 1 ? 1.0 : -1.0);
    for (std::size_t k = 1; k <= q; ++k) scale *= 2.0 * std::numbers::pi / static_cast<double>(k);
    std::vector<double> c(q + 1);
    double binom = 1.0;
    for (std::size_t k = 0; k <= q; ++k) {
      c[k] = scale * binom * b[k];
      binom = binom * static_cast<double>(q - k) / static_cast<double>(k + 1);
    }
    return c;
  }

  static double basis_value(double t, Index n) {
    if (n == 0) return 1.0;
    const double arg = t * static_cast<double>(frequency(n));
    return std::numbers::sqrt2 * (is_cosine(n) ? std::cos(arg) : std::sin(arg));
  }

  int s_;
  Domain domain_;
  std::vector<double> bernoulli_s_;
  std::vector<double> bernoulli_2s_;
};

/// Dot-product kernel on S^2 with sigma_l = (1 + l)^{-2s} on the real
/// spherical harmonics of degree l (multiplicity 2l + 1).
class SphereSobolev final : public SpectralModel {
 public:
  SphereSobolev(int d, double s, int L_max)
      : SpectralModel(make_descriptor(d, s, L_max), make_spectrum(s, L_max)),
        s_(s),
        L_max_(L_max),
        domain_(Domain::sphere()) {}

  const Domain& domain() const noexcept override { return domain_; }
  std::string name() const override { return "sphere_sobolev(d=3,s=" + std::to_string(s_) + ")"; }

  static int degree(Index n) noexcept { return static_cast<int>(std::floor(std::sqrt(static_cast<double>(n)))); }

  void eval_first(const Point& x, std::size_t count, std::span<double> out) const override {
    if (count == 0) return;
    check_index(count - 1);
    const int L = degree(count - 1);
    std::vector<double> buf(static_cast<std::size_t>((L + 1) * (L + 1)));
    harmonics(x, L, buf);
    std::copy_n(buf.begin(), count, out.begin());
  }

  void eval_subset(const Point& x, std::span<const Index> indices, std::span<double> out) const override {
    if (indices.empty()) return;
    const Index top = *std::max_element(indices.begin(), indices.end());
    check_index(top);
    const int L = degree(top);
    std::vector<double> buf(static_cast<std::size_t>((L + 1) * (L + 1)));
    harmonics(x, L, buf);
    for (std::size_t i = 0; i < indices.size(); ++i) out[i] = buf[indices[i]];
  }

  /// Addition theorem: each full degree contributes exactly 2l + 1 and any
  /// subset of a degree contributes at most that.
  std::optional<DiagonalBound> diagonal_sup(std::span<const Index> indices) const override {
    std::map<int, int> count;
    for (Index n : indices) ++count[degree(n)];
    double bound = 0.0;
    bool exact = true;
    for (const auto& [l, c] : count) {
      bound += 2.0 * l + 1.0;
      exact = exact && c == 2 * l + 1;
    }
    return DiagonalBound{bound, exact};
  }

  double unmaterialized_tail(int nu) const override {
    // sum_{l > L} (2l+1)(1+l)^{-2 s nu} <= 2 sum_{j >= L+2} j^{1 - 2 s nu}.
    return 2.0 * detail::zeta_tail_bound(L_max_ + 1.0, 2.0 * s_ * nu - 1.0);
  }

  double eigenfunction_sup_sq() const override { return 2.0 * L_max_ + 1.0; }

  /// Truncated Mercer sum through the Legendre addition theorem:
  /// sum_{l <= L} sigma_l^nu (2l + 1) P_l(<x, y>).
  double kernel(int nu, const Point& x, const Point& y) const override {
    const double t = std::clamp(x.dot(y), -1.0, 1.0);
    std::vector<double> p(static_cast<std::size_t>(L_max_ + 1));
    special::legendre_all(t, p);
    double v = 0.0;
    for (int l = L_max_; l >= 0; --l) {
      v += std::pow(1.0 + l, -2.0 * s_ * nu) * (2.0 * l + 1.0) * p[static_cast<std::size_t>(l)];
    }
    return v;
  }

 private:
  static KernelDescriptor make_descriptor(int d, double s, int L_max) {
    if (d != 3) {
      throw std::invalid_argument("sphere Sobolev: unsupported dimension d=" + std::to_string(d) +
                                  " (only d = 3 is implemented)");
    }
    if (!(s > (d - 1) / 2.0)) throw std::invalid_argument("sphere Sobolev: s must exceed (d-1)/2");
    if (L_max < 0) throw std::invalid_argument("sphere Sobolev: L_max must be >= 0");
    KernelDescriptor desc;
    desc.family = KernelFamily::SphereSobolev;
    desc.d = d;
    desc.s = s;
    desc.L_max = L_max;
    return desc;
  }

  static std::vector<double> make_spectrum(double s, int L_max) {
    std::vector<double> sig;
    sig.reserve(static_cast<std::size_t>((L_max + 1) * (L_max + 1)));
    for (int l = 0; l <= L_max; ++l) {
      const double v = std::pow(1.0 + l, -2.0 * s);
      for (int i = 0; i < 2 * l + 1; ++i) sig.push_back(v);
    }
    return sig;
  }

  static void harmonics(const Point& x, int L, std::span<double> out) {
    const double z = std::clamp(x(2), -1.0, 1.0);
    const double phi = std::atan2(x(1), x(0));
    special::real_spherical_harmonics(z, phi, L, out);
  }

  double s_;
  int L_max_;
  Domain domain_;
};

/// sqrt(2j + 1) P_j mapped affinely onto [lo, hi]: orthonormal for the
/// uniform probability measure on the interval.
class LegendreBasis final : public OrthonormalBasis {
 public:
  LegendreBasis(double lo, double hi, std::size_t size) : domain_(Domain::interval(lo, hi)), size_(size) {
    if (!(hi > lo)) throw std::invalid_argument("LegendreBasis: empty interval");
  }

  const Domain& domain() const noexcept override { return domain_; }
  std::size_t size() const noexcept override { return size_; }
  std::string name() const override { return "legendre"; }

  void eval_first(const Point& x, std::size_t count, std::span<double> out) const override {
    if (count == 0) return;
    check_index(count - 1);
    const double t = 2.0 * (x(0) - domain_.lo) / (domain_.hi - domain_.lo) - 1.0;
    special::legendre_all(t, out.first(count));
    for (std::size_t j = 0; j < count; ++j) out[j] *= std::sqrt(2.0 * j + 1.0);
  }

  /// Every |P_j| peaks at the endpoints, where all of them equal one.
  std::optional<DiagonalBound> diagonal_sup(std::span<const Index> indices) const override {
    double v = 0.0;
    for (Index j : indices) v += 2.0 * j + 1.0;
    return DiagonalBound{v, true};
  }

 private:
  Domain domain_;
  std::size_t size_;
};

/// Sinc kernel on [-T/2, T/2], diagonalized by a symmetric Galerkin
/// discretization on normalized Legendre polynomials. The eigenfunctions are
/// prolate spheroidal wave functions stored as Legendre coefficient vectors.
/// Eigenvalues below the machine floor are excluded from the model.
class SincPswf final : public SpectralModel {
 public:
  static constexpr double kMachineFloor = 1e-14;

  SincPswf(double T_len, double F, std::size_t legendre_order, SincConvention convention)
      : SincPswf(T_len, F, legendre_order, convention, diagonalize(T_len, F, legendre_order, convention)) {}

  const Domain& domain() const noexcept override { return legendre_.domain(); }
  std::string name() const override { return "sinc_pswf"; }

  void eval_first(const Point& x, std::size_t count, std::span<double> out) const override {
    if (count == 0) return;
    check_index(count - 1);
    Eigen::VectorXd phi(static_cast<Eigen::Index>(legendre_.size()));
    legendre_.eval_first(x, legendre_.size(), std::span<double>(phi.data(), legendre_.size()));
    const auto c = static_cast<Eigen::Index>(count);
    Eigen::Map<Eigen::VectorXd>(out.data(), c) = coefficients_.leftCols(c).transpose() * phi;
  }

  double unmaterialized_tail(int nu) const override {
    double t = 0.0;
    for (double v : dropped_) t += std::pow(v, nu);
    return t;
  }

  double eigenfunction_sup_sq() const override {
    // |e_m(x)| <= sum_j |c_jm| sqrt(2j+1).
    double best = 0.0;
    for (Eigen::Index m = 0; m < coefficients_.cols(); ++m) {
      double s = 0.0;
      for (Eigen::Index j = 0; j < coefficients_.rows(); ++j) {
        s += std::abs(coefficients_(j, m)) * std::sqrt(2.0 * j + 1.0);
      }
      best = std::max(best, s * s);
    }
    return best;
  }

  bool has_closed_form(int nu) const noexcept override { return nu == 1; }

  double closed_form(int nu, const Point& x, const Point& y) const override {
    if (nu != 1) return SpectralModel::closed_form(nu, x, y);
    return sinc(x(0) - y(0));
  }

  double sinc(double u) const noexcept { return sinc_value(scale_ * u); }

  /// Legendre coefficients of e_m (column m).
  const Eigen::MatrixXd& legendre_coefficients() const noexcept { return coefficients_; }

  /// Smallest eigenvalue of the Galerkin matrix before clipping.
  double min_galerkin_eigenvalue() const noexcept { return min_raw_; }

 private:
  struct Spectrum {
    std::vector<double> kept;
    std::vector<double> dropped;
    Eigen::MatrixXd vectors;
    double min_raw = 0.0;
  };

  SincPswf(double T_len, double F, std::size_t order, SincConvention convention, Spectrum sp)
      : SpectralModel(make_descriptor(T_len, F, order, convention), sp.kept, !sp.dropped.empty()),
        legendre_(-T_len / 2.0, T_len / 2.0, order),
        coefficients_(std::move(sp.vectors)),
        dropped_(std::move(sp.dropped)),
        min_raw_(sp.min_raw),
        scale_(convention == SincConvention::Normalized ? std::numbers::pi * F : F) {}

  static double sinc_value(double v) noexcept {
    if (std::abs(v) < 1e-8) return 1.0 - v * v / 6.0;
    return std::sin(v) / v;
  }

  static KernelDescriptor make_descriptor(double T_len, double F, std::size_t order, SincConvention conv) {
    KernelDescriptor d;
    d.family = KernelFamily::SincPswf;
    d.T_len = T_len;
    d.F = F;
    d.legendre_order = order;
    d.convention = conv;
    return d;
  }

  static Spectrum diagonalize(double T_len, double F, std::size_t order, SincConvention conv) {
    if (!(T_len > 0.0) || !(F > 0.0)) throw std::invalid_argument("sinc PSWF: T_len and F must be positive");
    if (order < 20) throw std::invalid_argument("sinc PSWF: legendre_order must be >= 20");
    const double scale = conv == SincConvention::Normalized ? std::numbers::pi * F : F;
    const auto rule = special::gauss_legendre(2 * order);
    const auto Q = static_cast<Eigen::Index>(rule.nodes.size());
    const auto L = static_cast<Eigen::Index>(order);
    LegendreBasis basis(-T_len / 2.0, T_len / 2.0, order);

    // Phi(q, j) = phi_j(x_q) * w_q with w the probability-measure weights.
    Eigen::MatrixXd Phi(Q, L);
    Eigen::VectorXd x(Q);
    std::vector<double> row(order);
    for (Eigen::Index q = 0; q < Q; ++q) {
      x(q) = rule.nodes[static_cast<std::size_t>(q)] * T_len / 2.0;
      basis.eval_first(make_point(x(q)), order, row);
      const double w = rule.weights[static_cast<std::size_t>(q)] / 2.0;
      for (Eigen::Index j = 0; j < L; ++j) Phi(q, j) = row[static_cast<std::size_t>(j)] * w;
    }
    Eigen::MatrixXd K(Q, Q);
    for (Eigen::Index a = 0; a < Q; ++a) {
      for (Eigen::Index b = a; b < Q; ++b) {
        K(a, b) = K(b, a) = sinc_value(scale * (x(a) - x(b)));
      }
    }
    Eigen::MatrixXd A = Phi.transpose() * K * Phi;
    A = 0.5 * (A + A.transpose()).eval();

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(A);
    if (es.info() != Eigen::Success) throw NumericalFailure("sinc PSWF: Galerkin eigendecomposition failed");
    const Eigen::VectorXd& ev = es.eigenvalues();  // ascending
    Spectrum sp;
    sp.min_raw = ev(0);
    if (ev(0) < -1e-10) {
      throw NumericalFailure("sinc PSWF: Galerkin matrix is not positive semidefinite (min eigenvalue " +
                             std::to_string(ev(0)) + ")");
    }
    std::vector<Eigen::Index> keep;
    for (Eigen::Index i = L; i-- > 0;) {
      if (ev(i) >= kMachineFloor) {
        keep.push_back(i);
      } else {
        sp.dropped.push_back(std::max(ev(i), 0.0));
      }
    }
    sp.vectors.resize(L, static_cast<Eigen::Index>(keep.size()));
    for (std::size_t c = 0; c < keep.size(); ++c) {
      Eigen::VectorXd v = es.eigenvectors().col(keep[c]);
      Eigen::Index arg = 0;
      v.cwiseAbs().maxCoeff(&arg);
      if (v(arg) < 0) v = -v;
      sp.vectors.col(static_cast<Eigen::Index>(c)) = v;
      sp.kept.push_back(ev(keep[c]));
    }
    return sp;
  }

  LegendreBasis legendre_;
  Eigen::MatrixXd coefficients_;
  std::vector<double> dropped_;
  double min_raw_;
  double scale_;
};

inline std::shared_ptr<const PeriodicSobolev> make_periodic_sobolev(int s, std::size_t M_spec = 2000) {
  return std::make_shared<const PeriodicSobolev>(s, M_spec);
}

inline std::shared_ptr<const SphereSobolev> make_sphere_sobolev(int d, double s, int L_max = 60) {
  return std::make_shared<const SphereSobolev>(d, s, L_max);
}

inline std::shared_ptr<const SincPswf> make_sinc_pswf(double T_len, double F, std::size_t legendre_order = 128,
                                                      SincConvention convention = SincConvention::Normalized) {
  return std::make_shared<const SincPswf>(T_len, F, legendre_order, convention);
}

inline ModelPtr make_model(const KernelDescriptor& d) {
  switch (d.family) {
    case KernelFamily::PeriodicSobolev: {
      const int s = static_cast<int>(std::lround(d.s));
      if (std::abs(d.s - s) > 1e-12) throw std::invalid_argument("periodic Sobolev: s must be an integer");
      return make_periodic_sobolev(s, d.M_spec);
    }
    case KernelFamily::SphereSobolev:
      return make_sphere_sobolev(d.d, d.s, d.L_max);
    case KernelFamily::SincPswf:
      return make_sinc_pswf(d.T_len, d.F, d.legendre_order, d.convention);
  }
  throw std::invalid_argument("unknown kernel family");
}

}  // namespace rkdpp
