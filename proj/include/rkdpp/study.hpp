#pragma once

// Monte Carlo convergence studies: fresh design, approximant and metrics per
// (N, replicate), replicates spread over worker threads.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "rkdpp/approximants.hpp"
#include "rkdpp/core.hpp"
#include "rkdpp/designs.hpp"
#include "rkdpp/error_metrics.hpp"
#include "rkdpp/kernels.hpp"
#include "rkdpp/parallel.hpp"
#include "rkdpp/spectral_model.hpp"
#include "rkdpp/stats.hpp"

namespace rkdpp {

enum class DesignFamily { ProjectionDpp, Cvs, Christoffel };

/// How the Christoffel order M follows N.
enum class OrderRule {
  Auto,   // auto_christoffel_order(N)
  EqualN, // M = N, the i.i.d. counterpart of the projection DPP marginal
  Fixed,  // the configured M
};

struct DesignSpec {
  DesignFamily family = DesignFamily::ProjectionDpp;
  std::string basis = "eigen";  // projection DPP basis: "eigen" or "legendre"
  OrderRule order_rule = OrderRule::Auto;
  std::size_t M = 0;            // used with OrderRule::Fixed
  QMode q_mode = QMode::Christoffel;
  std::size_t max_resamples = 1000;
  bool condition_gram = true;

  bool operator==(const DesignSpec&) const = default;
};

/// max(1, floor(N / ln N)), and 1 below N = 3.
inline std::size_t auto_christoffel_order(std::size_t N) {
  if (N < 3) return 1;
  return std::max<std::size_t>(1, static_cast<std::size_t>(std::floor(N / std::log(static_cast<double>(N)))));
}

inline std::size_t christoffel_order(const DesignSpec& d, std::size_t N) {
  switch (d.order_rule) {
    case OrderRule::Auto: return auto_christoffel_order(N);
    case OrderRule::EqualN: return N;
    case OrderRule::Fixed: return d.M;
  }
  return d.M;
}

inline std::string design_label(const DesignSpec& d) {
  switch (d.family) {
    case DesignFamily::ProjectionDpp: return "dpp_" + d.basis;
    case DesignFamily::Cvs: return "cvs";
    case DesignFamily::Christoffel: {
      std::string s = "christoffel_M";
      s += d.order_rule == OrderRule::Auto ? "auto" : d.order_rule == OrderRule::EqualN ? "N" : std::to_string(d.M);
      if (d.q_mode == QMode::Uniform) s += "_q1";
      if (!d.condition_gram) s += "_uncond";
      return s;
    }
  }
  return "unknown";
}

enum class TargetKind { Eigenfunction, RandomMixture, Coefficients };

struct TargetSpec {
  TargetKind kind = TargetKind::Eigenfunction;
  Index m = 0;                    // eigenfunction index, zero-based
  bool rkhs_normalized = true;    // e_m^F = sqrt(sigma_m) e_m rather than e_m
  std::size_t order = 10;         // random mixture order
  std::uint64_t seed = 0;         // random mixture seed
  bool per_replicate = false;     // redraw the mixture for every replicate
  std::map<Index, double> coefficients;

  bool operator==(const TargetSpec&) const = default;
};

inline std::string target_label(const TargetSpec& t) {
  switch (t.kind) {
    case TargetKind::Eigenfunction: return "e" + std::to_string(t.m + 1) + (t.rkhs_normalized ? "F" : "");
    case TargetKind::RandomMixture:
      return "mix" + std::to_string(t.order) + "_seed" + std::to_string(t.seed) + (t.per_replicate ? "_rep" : "");
    case TargetKind::Coefficients: return "coeffs" + std::to_string(t.coefficients.size());
  }
  return "unknown";
}

inline TargetFunction build_target(const SpectralModel& model, const TargetSpec& t, std::uint64_t seed) {
  switch (t.kind) {
    case TargetKind::Eigenfunction:
      model.check_index(t.m);
      return t.rkhs_normalized ? TargetFunction::rkhs_eigenfunction(model, t.m) : TargetFunction::eigenfunction(t.m);
    case TargetKind::RandomMixture: {
      if (t.order == 0 || t.order > model.size()) throw std::out_of_range("random mixture order outside the spectrum");
      Rng rng(seed);
      return TargetFunction::random_rkhs_mixture(model, t.order, rng);
    }
    case TargetKind::Coefficients: {
      TargetFunction f(t.coefficients);
      f.check_support(model);
      return f;
    }
  }
  throw std::invalid_argument("unknown target kind");
}

struct StudySpec {
  ModelPtr model;
  std::string kernel_label;
  DesignSpec design;
  Scheme scheme = Scheme::LS;
  std::optional<std::size_t> scheme_M;  // order for OKQ, ELS and tELS
  TargetSpec target;
  std::vector<std::size_t> N_grid;
  std::size_t replicates = 50;
  std::uint64_t master_seed = 0;
  std::size_t jobs = 1;
  double failure_budget = 0.2;  // a run fails when more than this fraction fails at some N
};

struct NSummary {
  std::size_t N = 0;
  std::size_t M = 0;
  std::size_t succeeded = 0;
  std::size_t failed = 0;
  stats::Estimate l2;  // squared L2(omega) error
};

struct StudyResult {
  std::vector<ErrorRecord> records;
  std::vector<NSummary> summaries;
  bool budget_exceeded = false;
  std::string first_failure;
};

/// Seed of replicate r at grid value N.
inline std::uint64_t replicate_seed(std::uint64_t master, std::size_t N, std::size_t r) {
  return derive_seed(master, N, r);
}

namespace detail {

// Samplers shared by all replicates at one N.
struct PreparedDesign {
  std::unique_ptr<LegendreBasis> legendre;
  std::unique_ptr<ProjectionDppSampler> dpp;
  std::unique_ptr<CvsSampler> cvs;
  std::unique_ptr<ChristoffelSampler> christoffel;
  std::size_t christoffel_M = 0;

  Design sample(std::uint64_t seed) const {
    if (dpp) return dpp->sample(seed);
    if (cvs) return cvs->sample(seed);
    return christoffel->sample(seed);
  }

  double q(const Point& x) const { return christoffel ? christoffel->q(x) : 1.0; }
};

inline PreparedDesign prepare_design(const SpectralModel& model, const DesignSpec& d, std::size_t N) {
  PreparedDesign p;
  switch (d.family) {
    case DesignFamily::ProjectionDpp:
      if (d.basis == "legendre") {
        if (model.domain().kind != DomainKind::Interval) {
          throw std::invalid_argument("Legendre DPP needs an interval domain");
        }
        p.legendre = std::make_unique<LegendreBasis>(model.domain().lo, model.domain().hi, N);
        p.dpp = std::make_unique<ProjectionDppSampler>(*p.legendre, first_indices(N), "legendre");
      } else if (d.basis == "eigen") {
        if (N > model.size()) throw std::out_of_range("DPP size exceeds the materialized spectrum");
        p.dpp = std::make_unique<ProjectionDppSampler>(model, first_indices(N), "eigen");
      } else {
        throw std::invalid_argument("unknown DPP basis '" + d.basis + "'");
      }
      break;
    case DesignFamily::Cvs:
      p.cvs = std::make_unique<CvsSampler>(model, N);
      break;
    case DesignFamily::Christoffel: {
      p.christoffel_M = christoffel_order(d, N);
      ChristoffelOptions opt;
      opt.q_mode = d.q_mode;
      opt.max_resamples = d.max_resamples;
      opt.condition_gram = d.condition_gram;
      p.christoffel = std::make_unique<ChristoffelSampler>(model, N, p.christoffel_M, opt);
      break;
    }
  }
  return p;
}

struct Metric {
  std::string name;
  double value;
};

// Squared L2 error of a kernel mixture. The Sinc spectrum is materialized
// down to the machine floor, so its coefficient form is used there to avoid
// cancellation at very small errors.
inline double kernelmix_l2(const SpectralModel& model, const TargetFunction& f, const KernelMix& mix) {
  if (model.descriptor().family == KernelFamily::SincPswf) return l2_residual_kernelmix_spectral(model, f, mix);
  return l2_residual_kernelmix(model, f, mix);
}

inline std::vector<Metric> run_scheme(const StudySpec& spec, const PreparedDesign& prepared, const Design& design,
                                      const TargetFunction& f, std::size_t M, bool& clipped) {
  const SpectralModel& model = *spec.model;
  const Eigen::VectorXd f_evals = f.evaluate_at(model, design.nodes);
  std::vector<Metric> out;
  auto push_sq = [&](const char* name, double raw) {
    const auto c = clip_squared(raw, name);
    clipped = clipped || c.clipped;
    out.push_back({name, c.value});
  };
  Approximant a;
  switch (spec.scheme) {
    case Scheme::OKA:
      a = oka(model, design.nodes, f_evals);
      push_sq("l2_sq", kernelmix_l2(model, f, a.kernel_mix()));
      push_sq("rkhs_sq", rkhs_residual_oka(model, design.nodes, f_evals, f.rkhs_norm_sq(model)));
      break;
    case Scheme::LS:
      a = ls(model, design.nodes, f);
      push_sq("l2_sq", kernelmix_l2(model, f, a.kernel_mix()));
      break;
    case Scheme::OKQ:
      a = okq_transform(model, design.nodes, f_evals, M);
      push_sq("l2_sq", l2_residual_eigen(f, a.expansion()));
      break;
    case Scheme::QI:
      a = qi_transform(model, design.nodes, f_evals);
      push_sq("l2_sq", l2_residual_eigen(f, a.expansion()));
      break;
    case Scheme::ELS: {
      Eigen::VectorXd q(f_evals.size());
      for (Eigen::Index i = 0; i < q.size(); ++i) q(i) = prepared.q(design.nodes[static_cast<std::size_t>(i)]);
      a = els(model, design.nodes, f_evals, q, M);
      push_sq("l2_sq", l2_residual_eigen(f, a.expansion()));
      break;
    }
    case Scheme::TELS:
      a = tels(model, design.nodes, f_evals, M);
      push_sq("l2_sq", l2_residual_eigen(f, a.expansion()));
      break;
  }
  out.push_back({"min_singular_value", a.diagnostics.min_singular_value});
  return out;
}

}  // namespace detail

/// Scheme order at grid value N: the configured M, else the Christoffel
/// order of the design, else N.
inline std::size_t scheme_order(const StudySpec& spec, std::size_t N) {
  if (spec.scheme_M) return *spec.scheme_M;
  if (spec.design.family == DesignFamily::Christoffel) return christoffel_order(spec.design, N);
  return N;
}

inline StudyResult mc_error_study(const StudySpec& spec) {
  if (!spec.model) throw std::invalid_argument("mc_error_study: no model");
  if (spec.N_grid.empty()) throw std::invalid_argument("mc_error_study: empty N grid");
  if (spec.replicates == 0) throw std::invalid_argument("mc_error_study: replicates must be >= 1");
  const SpectralModel& model = *spec.model;
  const std::string design_name = design_label(spec.design);
  const std::string target_name = target_label(spec.target);
  const std::string scheme_name_s = scheme_name(spec.scheme);

  std::optional<TargetFunction> shared_target;
  if (!(spec.target.kind == TargetKind::RandomMixture && spec.target.per_replicate)) {
    shared_target = build_target(model, spec.target, spec.target.seed);
  }

  struct Slot {
    std::vector<detail::Metric> metrics;
    bool failed = false;
    bool clipped = false;
    std::string error;
    std::string tag;
  };
  const std::size_t R = spec.replicates;
  std::vector<detail::PreparedDesign> prepared;
  prepared.reserve(spec.N_grid.size());
  for (std::size_t N : spec.N_grid) prepared.push_back(detail::prepare_design(model, spec.design, N));
  std::vector<Slot> slots(spec.N_grid.size() * R);

  parallel_for(slots.size(), spec.jobs, [&](std::size_t task) {
    const std::size_t gi = task / R;
    const std::size_t r = task % R;
    const std::size_t N = spec.N_grid[gi];
    const std::uint64_t seed = replicate_seed(spec.master_seed, N, r);
    Slot& slot = slots[task];
    try {
      const Design design = prepared[gi].sample(seed);
      slot.tag = describe(design.tag);
      const TargetFunction f =
          shared_target ? *shared_target : build_target(model, spec.target, derive_seed(seed, 2));
      slot.metrics = detail::run_scheme(spec, prepared[gi], design, f, scheme_order(spec, N), slot.clipped);
    } catch (const NumericalFailure& e) {
      slot.failed = true;
      slot.error = e.what();
    } catch (const SamplingFailure& e) {
      slot.failed = true;
      slot.error = e.what();
    }
  });

  StudyResult res;
  for (std::size_t gi = 0; gi < spec.N_grid.size(); ++gi) {
    const std::size_t N = spec.N_grid[gi];
    // The M column: the scheme order when the scheme has one, else the
    // Christoffel order, else N.
    const bool ordered = spec.scheme == Scheme::OKQ || spec.scheme == Scheme::ELS || spec.scheme == Scheme::TELS;
    const std::size_t M = ordered ? scheme_order(spec, N) : prepared[gi].christoffel ? prepared[gi].christoffel_M : N;
    NSummary sum;
    sum.N = N;
    sum.M = M;
    std::vector<double> l2;
    for (std::size_t r = 0; r < R; ++r) {
      const Slot& slot = slots[gi * R + r];
      ErrorRecord base{spec.kernel_label, design_name, scheme_name_s, target_name, N, M, r + 1, "", 0.0,
                       replicate_seed(spec.master_seed, N, r)};
      if (slot.failed) {
        ++sum.failed;
        if (res.first_failure.empty()) res.first_failure = slot.error;
        base.metric = "failure";
        base.value = 1.0;
        res.records.push_back(base);
        continue;
      }
      ++sum.succeeded;
      for (const auto& m : slot.metrics) {
        base.metric = m.name;
        base.value = m.value;
        res.records.push_back(base);
        if (m.name == "l2_sq") l2.push_back(m.value);
      }
      if (slot.clipped) {
        base.metric = "clipped";
        base.value = 1.0;
        res.records.push_back(base);
      }
    }
    if (!l2.empty()) sum.l2 = stats::mean_estimate(l2);
    if (static_cast<double>(sum.failed) > spec.failure_budget * static_cast<double>(R)) res.budget_exceeded = true;
    res.summaries.push_back(sum);
  }
  return res;
}

/// The upper half of a grid (at least three points when available).
inline std::vector<std::size_t> upper_half(const std::vector<std::size_t>& grid) {
  const std::size_t keep = std::min(grid.size(), std::max<std::size_t>(3, (grid.size() + 1) / 2));
  return {grid.end() - static_cast<std::ptrdiff_t>(keep), grid.end()};
}

/// Least-squares slope of log(mean metric) against log N over `N_range`.
inline double fit_loglog_slope(std::span<const ErrorRecord> records, std::span<const std::size_t> N_range,
                               const std::string& metric = "l2_sq") {
  if (N_range.size() < 3) throw std::invalid_argument("fit_loglog_slope: need at least three grid points");
  std::vector<double> lx;
  std::vector<double> ly;
  for (std::size_t N : N_range) {
    CompensatedSum s;
    std::size_t n = 0;
    for (const auto& r : records) {
      if (r.N == N && r.metric == metric) {
        s.add(r.value);
        ++n;
      }
    }
    if (n == 0) throw std::domain_error("fit_loglog_slope: no successful replicates at N=" + std::to_string(N));
    const double mean = s.value() / static_cast<double>(n);
    if (!(mean > 0.0)) {
      throw std::domain_error("fit_loglog_slope: non-positive mean error at N=" + std::to_string(N));
    }
    lx.push_back(std::log(static_cast<double>(N)));
    ly.push_back(std::log(mean));
  }
  return stats::ols_slope(lx, ly);
}

inline std::string summarize(const StudySpec& spec, const StudyResult& res, std::optional<double> slope) {
  std::ostringstream os;
  os << "# " << spec.kernel_label << " design=" << design_label(spec.design) << " scheme=" << scheme_name(spec.scheme)
     << " target=" << target_label(spec.target) << " replicates=" << spec.replicates << '\n';
  os << "# N M ok failed mean_l2_sq stderr lo3 hi3\n";
  os.precision(6);
  for (const auto& s : res.summaries) {
    os << s.N << ' ' << s.M << ' ' << s.succeeded << ' ' << s.failed << ' ';
    if (s.succeeded == 0) {
      os << "nan nan nan nan\n";
      continue;
    }
    os << std::scientific << s.l2.value << ' ' << s.l2.stderr_ << ' ' << s.l2.value - 3 * s.l2.stderr_ << ' '
       << s.l2.value + 3 * s.l2.stderr_ << std::defaultfloat << '\n';
  }
  if (slope) os << "slope(upper half) = " << std::fixed << *slope << std::defaultfloat << '\n';
  if (res.budget_exceeded) os << "FAILURE BUDGET EXCEEDED: " << res.first_failure << '\n';
  return os.str();
}

}  // namespace rkdpp
