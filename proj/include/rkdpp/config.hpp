#pragma once

// Experiment configuration files (JSON). Indices in configs are one-based.

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <initializer_list>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "rkdpp/approximants.hpp"
#include "rkdpp/core.hpp"
#include "rkdpp/kernels.hpp"
#include "rkdpp/study.hpp"

namespace rkdpp {

using Json = nlohmann::json;

struct ExperimentConfig {
  KernelDescriptor kernel;
  std::vector<DesignSpec> designs{DesignSpec{}};
  Scheme scheme = Scheme::LS;
  std::optional<std::size_t> scheme_M;
  std::vector<TargetSpec> targets{TargetSpec{}};
  std::vector<std::size_t> N_grid;
  std::size_t replicates = 50;
  std::uint64_t master_seed = 0;
  std::string output = "out";
  std::size_t jobs = 1;

  bool operator==(const ExperimentConfig&) const = default;
};

namespace detail {

[[noreturn]] inline void config_fail(const std::string& path, const std::string& msg) {
  throw ConfigError((path.empty() ? std::string("/") : path) + ": " + msg);
}

inline void check_keys(const Json& j, const std::string& path, std::initializer_list<const char*> allowed) {
  if (!j.is_object()) config_fail(path, "expected an object");
  for (const auto& [k, v] : j.items()) {
    if (std::none_of(allowed.begin(), allowed.end(), [&](const char* a) { return k == a; })) {
      config_fail(path + "/" + k, "unknown key");
    }
  }
}

template <class T>
T get_or(const Json& j, const std::string& path, const char* key, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const Json::exception&) {
    config_fail(path + "/" + key, "wrong type");
  }
}

inline std::size_t get_count(const Json& j, const std::string& path, const char* key, std::size_t fallback) {
  if (!j.contains(key)) return fallback;
  const Json& v = j.at(key);
  if (!v.is_number_integer() || v.get<long long>() < 0) config_fail(path + "/" + key, "expected a non-negative integer");
  return v.get<std::size_t>();
}

inline std::size_t one_based(const Json& v, const std::string& path) {
  if (!v.is_number_integer() || v.get<long long>() < 1) config_fail(path, "expected a one-based index (integer >= 1)");
  return v.get<std::size_t>() - 1;
}

inline Scheme parse_scheme(const std::string& s, const std::string& path) {
  for (Scheme sc : {Scheme::OKA, Scheme::LS, Scheme::OKQ, Scheme::QI, Scheme::ELS, Scheme::TELS}) {
    if (scheme_name(sc) == s) return sc;
  }
  config_fail(path, "unknown scheme '" + s + "' (oka, ls, okq, qi, els, tels)");
}

inline KernelDescriptor parse_kernel(const Json& j, const std::string& path) {
  if (!j.is_object() || !j.contains("family")) config_fail(path, "kernel block needs a 'family'");
  const auto family = get_or<std::string>(j, path, "family", "");
  KernelDescriptor d;
  if (family == "periodic_sobolev") {
    check_keys(j, path, {"family", "s", "M_spec"});
    d.family = KernelFamily::PeriodicSobolev;
    d.s = get_or<double>(j, path, "s", 1.0);
    d.M_spec = get_count(j, path, "M_spec", 2000);
  } else if (family == "sphere_sobolev") {
    check_keys(j, path, {"family", "d", "s", "L_max"});
    d.family = KernelFamily::SphereSobolev;
    d.d = get_or<int>(j, path, "d", 3);
    d.s = get_or<double>(j, path, "s", 1.5);
    d.L_max = get_or<int>(j, path, "L_max", 60);
  } else if (family == "sinc_pswf") {
    check_keys(j, path, {"family", "T_len", "F", "legendre_order", "convention"});
    d.family = KernelFamily::SincPswf;
    d.T_len = get_or<double>(j, path, "T_len", 2.0);
    d.F = get_or<double>(j, path, "F", 7.0);
    d.legendre_order = get_count(j, path, "legendre_order", 128);
    const auto conv = get_or<std::string>(j, path, "convention", "normalized");
    if (conv == "normalized") {
      d.convention = SincConvention::Normalized;
    } else if (conv == "unnormalized") {
      d.convention = SincConvention::Unnormalized;
    } else {
      config_fail(path + "/convention", "expected 'normalized' or 'unnormalized'");
    }
  } else {
    config_fail(path + "/family", "unknown kernel family '" + family + "' (periodic_sobolev, sphere_sobolev, sinc_pswf)");
  }
  return d;
}

inline DesignSpec parse_design(const Json& j, const std::string& path) {
  if (!j.is_object() || !j.contains("family")) config_fail(path, "design block needs a 'family'");
  const auto family = get_or<std::string>(j, path, "family", "");
  DesignSpec d;
  if (family == "projection_dpp") {
    check_keys(j, path, {"family", "basis"});
    d.family = DesignFamily::ProjectionDpp;
    d.basis = get_or<std::string>(j, path, "basis", "eigen");
    if (d.basis != "eigen" && d.basis != "legendre") config_fail(path + "/basis", "expected 'eigen' or 'legendre'");
  } else if (family == "cvs") {
    check_keys(j, path, {"family"});
    d.family = DesignFamily::Cvs;
  } else if (family == "christoffel") {
    check_keys(j, path, {"family", "M", "q", "max_resamples", "condition_gram"});
    d.family = DesignFamily::Christoffel;
    if (j.contains("M")) {
      const Json& m = j.at("M");
      if (m.is_string() && m.get<std::string>() == "auto") {
        d.order_rule = OrderRule::Auto;
      } else if (m.is_string() && m.get<std::string>() == "N") {
        d.order_rule = OrderRule::EqualN;
      } else if (m.is_number_integer() && m.get<long long>() >= 1) {
        d.order_rule = OrderRule::Fixed;
        d.M = m.get<std::size_t>();
      } else {
        config_fail(path + "/M", "expected \"auto\", \"N\" or an integer >= 1");
      }
    }
    const auto q = get_or<std::string>(j, path, "q", "christoffel");
    if (q == "christoffel") {
      d.q_mode = QMode::Christoffel;
    } else if (q == "uniform") {
      d.q_mode = QMode::Uniform;
    } else {
      config_fail(path + "/q", "expected 'christoffel' or 'uniform'");
    }
    d.max_resamples = get_count(j, path, "max_resamples", 1000);
    d.condition_gram = get_or<bool>(j, path, "condition_gram", true);
  } else {
    config_fail(path + "/family", "unknown design family '" + family + "' (projection_dpp, cvs, christoffel)");
  }
  return d;
}

inline TargetSpec parse_target(const Json& j, const std::string& path) {
  if (!j.is_object() || !j.contains("kind")) config_fail(path, "target block needs a 'kind'");
  const auto kind = get_or<std::string>(j, path, "kind", "");
  TargetSpec t;
  if (kind == "eigenfunction") {
    check_keys(j, path, {"kind", "m", "normalization"});
    t.kind = TargetKind::Eigenfunction;
    if (!j.contains("m")) config_fail(path, "eigenfunction target needs 'm'");
    t.m = one_based(j.at("m"), path + "/m");
    const auto norm = get_or<std::string>(j, path, "normalization", "rkhs");
    if (norm != "rkhs" && norm != "l2") config_fail(path + "/normalization", "expected 'rkhs' or 'l2'");
    t.rkhs_normalized = norm == "rkhs";
  } else if (kind == "random_mixture") {
    check_keys(j, path, {"kind", "order", "seed", "per_replicate"});
    t.kind = TargetKind::RandomMixture;
    t.order = get_count(j, path, "order", 10);
    if (t.order == 0) config_fail(path + "/order", "must be >= 1");
    t.seed = get_or<std::uint64_t>(j, path, "seed", 0);
    t.per_replicate = get_or<bool>(j, path, "per_replicate", false);
  } else if (kind == "coefficients") {
    check_keys(j, path, {"kind", "coefficients"});
    t.kind = TargetKind::Coefficients;
    if (!j.contains("coefficients") || !j.at("coefficients").is_object() || j.at("coefficients").empty()) {
      config_fail(path + "/coefficients", "expected a non-empty object {\"<index>\": value}");
    }
    for (const auto& [k, v] : j.at("coefficients").items()) {
      const std::string p = path + "/coefficients/" + k;
      std::size_t idx = 0;
      try {
        std::size_t used = 0;
        const long long raw = std::stoll(k, &used);
        if (used != k.size() || raw < 1) throw std::invalid_argument(k);
        idx = static_cast<std::size_t>(raw - 1);
      } catch (const std::exception&) {
        config_fail(p, "keys must be one-based integer indices");
      }
      if (!v.is_number()) config_fail(p, "expected a number");
      t.coefficients[idx] = v.get<double>();
    }
  } else {
    config_fail(path + "/kind", "unknown target kind '" + kind + "' (eigenfunction, random_mixture, coefficients)");
  }
  return t;
}

inline std::size_t min_grid(const ExperimentConfig& c) { return c.N_grid.empty() ? 0 : c.N_grid.front(); }

}  // namespace detail

/// Structural checks that do not need the kernel model.
inline void validate(const ExperimentConfig& c) {
  using detail::config_fail;
  if (c.N_grid.empty()) config_fail("/N_grid", "must not be empty");
  for (std::size_t i = 0; i < c.N_grid.size(); ++i) {
    if (c.N_grid[i] == 0) config_fail("/N_grid/" + std::to_string(i), "entries must be >= 1");
    if (i > 0 && c.N_grid[i] <= c.N_grid[i - 1]) {
      config_fail("/N_grid/" + std::to_string(i), "must be strictly increasing");
    }
  }
  if (c.replicates == 0) config_fail("/replicates", "must be >= 1");
  if (c.jobs == 0) config_fail("/jobs", "must be >= 1");
  if (c.designs.empty()) config_fail("/designs", "must not be empty");
  if (c.targets.empty()) config_fail("/targets", "must not be empty");
  const std::size_t nmin = detail::min_grid(c);
  if (c.scheme_M) {
    if (*c.scheme_M == 0) config_fail("/scheme_M", "must be >= 1");
    if ((c.scheme == Scheme::ELS || c.scheme == Scheme::TELS) && *c.scheme_M > nmin) {
      config_fail("/scheme_M", "must not exceed the smallest N for els/tels");
    }
  }
  for (std::size_t i = 0; i < c.designs.size(); ++i) {
    const auto& d = c.designs[i];
    const std::string p = "/designs/" + std::to_string(i);
    if (d.family != DesignFamily::Christoffel) continue;
    if (d.order_rule == OrderRule::Fixed && d.M == 0) config_fail(p + "/M", "must be >= 1");
    if (d.order_rule == OrderRule::Fixed && d.condition_gram && d.M > nmin) {
      config_fail(p + "/M", "exceeds the smallest N; the conditioning event would be unattainable");
    }
  }
}

/// Checks that need the model: referenced indices within the truncation.
inline void validate_against(const ExperimentConfig& c, const SpectralModel& model) {
  using detail::config_fail;
  const std::size_t size = model.size();
  const std::size_t nmax = c.N_grid.empty() ? 0 : c.N_grid.back();
  const std::string lim = " exceeds the truncation order " + std::to_string(size);
  for (std::size_t i = 0; i < c.targets.size(); ++i) {
    const auto& t = c.targets[i];
    const std::string p = "/targets/" + std::to_string(i);
    if (t.kind == TargetKind::Eigenfunction && t.m >= size) config_fail(p + "/m", std::to_string(t.m + 1) + lim);
    if (t.kind == TargetKind::RandomMixture && t.order > size) config_fail(p + "/order", std::to_string(t.order) + lim);
    if (t.kind == TargetKind::Coefficients && t.coefficients.rbegin()->first >= size) {
      config_fail(p + "/coefficients", std::to_string(t.coefficients.rbegin()->first + 1) + lim);
    }
  }
  for (std::size_t i = 0; i < c.designs.size(); ++i) {
    const auto& d = c.designs[i];
    const std::string p = "/designs/" + std::to_string(i);
    const bool eigen_dpp = d.family == DesignFamily::ProjectionDpp && d.basis == "eigen";
    if ((eigen_dpp || d.family == DesignFamily::Cvs) && nmax > size) config_fail(p, "N=" + std::to_string(nmax) + lim);
    if (d.family == DesignFamily::ProjectionDpp && d.basis == "legendre" && model.domain().kind != DomainKind::Interval) {
      config_fail(p + "/basis", "the Legendre basis needs an interval domain");
    }
    if (d.family == DesignFamily::Christoffel) {
      const std::size_t Mmax = christoffel_order(d, nmax);
      if (Mmax > size) config_fail(p + "/M", "M=" + std::to_string(Mmax) + lim);
    }
  }
  if (c.scheme_M && *c.scheme_M > size) config_fail("/scheme_M", std::to_string(*c.scheme_M) + lim);
  if (!c.scheme_M && c.scheme == Scheme::OKQ && nmax > size) config_fail("/scheme_M", "default M = N" + lim);
}

inline ExperimentConfig config_from_json(const Json& j) {
  using namespace detail;
  check_keys(j, "", {"kernel", "design", "designs", "scheme", "scheme_M", "target", "targets", "N_grid", "replicates",
                     "master_seed", "output", "jobs"});
  ExperimentConfig c;
  if (!j.contains("kernel")) config_fail("/kernel", "missing");
  c.kernel = parse_kernel(j.at("kernel"), "/kernel");
  if (j.contains("design") && j.contains("designs")) config_fail("/designs", "give either 'design' or 'designs'");
  if (j.contains("design")) {
    c.designs = {parse_design(j.at("design"), "/design")};
  } else if (j.contains("designs")) {
    if (!j.at("designs").is_array()) config_fail("/designs", "expected an array");
    c.designs.clear();
    for (std::size_t i = 0; i < j.at("designs").size(); ++i) {
      c.designs.push_back(parse_design(j.at("designs")[i], "/designs/" + std::to_string(i)));
    }
  }
  c.scheme = parse_scheme(get_or<std::string>(j, "", "scheme", "ls"), "/scheme");
  if (j.contains("scheme_M")) c.scheme_M = get_count(j, "", "scheme_M", 0);
  if (j.contains("target") && j.contains("targets")) config_fail("/targets", "give either 'target' or 'targets'");
  if (j.contains("target")) {
    c.targets = {parse_target(j.at("target"), "/target")};
  } else if (j.contains("targets")) {
    if (!j.at("targets").is_array()) config_fail("/targets", "expected an array");
    c.targets.clear();
    for (std::size_t i = 0; i < j.at("targets").size(); ++i) {
      c.targets.push_back(parse_target(j.at("targets")[i], "/targets/" + std::to_string(i)));
    }
  }
  if (!j.contains("N_grid") || !j.at("N_grid").is_array()) config_fail("/N_grid", "expected an array of integers");
  for (std::size_t i = 0; i < j.at("N_grid").size(); ++i) {
    const Json& v = j.at("N_grid")[i];
    if (!v.is_number_integer() || v.get<long long>() < 1) {
      config_fail("/N_grid/" + std::to_string(i), "expected an integer >= 1");
    }
    c.N_grid.push_back(v.get<std::size_t>());
  }
  c.replicates = get_count(j, "", "replicates", 50);
  c.master_seed = get_or<std::uint64_t>(j, "", "master_seed", 0);
  c.output = get_or<std::string>(j, "", "output", "out");
  c.jobs = get_count(j, "", "jobs", 1);
  validate(c);
  return c;
}

/// Parses and validates a config. Syntax errors report line and column.
inline ExperimentConfig parse_config(const std::string& text) {
  Json j;
  try {
    j = Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw ConfigError(std::string("syntax error: ") + e.what());
  }
  return config_from_json(j);
}

inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return parse_config(ss.str());
  } catch (const ConfigError& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

inline Json to_json(const KernelDescriptor& d) {
  switch (d.family) {
    case KernelFamily::PeriodicSobolev:
      return {{"family", "periodic_sobolev"}, {"s", d.s}, {"M_spec", d.M_spec}};
    case KernelFamily::SphereSobolev:
      return {{"family", "sphere_sobolev"}, {"d", d.d}, {"s", d.s}, {"L_max", d.L_max}};
    case KernelFamily::SincPswf:
      return {{"family", "sinc_pswf"},
              {"T_len", d.T_len},
              {"F", d.F},
              {"legendre_order", d.legendre_order},
              {"convention", d.convention == SincConvention::Normalized ? "normalized" : "unnormalized"}};
  }
  return {};
}

inline Json to_json(const DesignSpec& d) {
  switch (d.family) {
    case DesignFamily::ProjectionDpp: return {{"family", "projection_dpp"}, {"basis", d.basis}};
    case DesignFamily::Cvs: return {{"family", "cvs"}};
    case DesignFamily::Christoffel: {
      Json j = {{"family", "christoffel"},
                {"q", d.q_mode == QMode::Uniform ? "uniform" : "christoffel"},
                {"max_resamples", d.max_resamples},
                {"condition_gram", d.condition_gram}};
      if (d.order_rule == OrderRule::Auto) j["M"] = "auto";
      if (d.order_rule == OrderRule::EqualN) j["M"] = "N";
      if (d.order_rule == OrderRule::Fixed) j["M"] = d.M;
      return j;
    }
  }
  return {};
}

inline Json to_json(const TargetSpec& t) {
  switch (t.kind) {
    case TargetKind::Eigenfunction:
      return {{"kind", "eigenfunction"}, {"m", t.m + 1}, {"normalization", t.rkhs_normalized ? "rkhs" : "l2"}};
    case TargetKind::RandomMixture:
      return {{"kind", "random_mixture"}, {"order", t.order}, {"seed", t.seed}, {"per_replicate", t.per_replicate}};
    case TargetKind::Coefficients: {
      Json c = Json::object();
      for (const auto& [m, v] : t.coefficients) c[std::to_string(m + 1)] = v;
      return {{"kind", "coefficients"}, {"coefficients", c}};
    }
  }
  return {};
}

inline Json to_json(const ExperimentConfig& c) {
  Json j;
  j["kernel"] = to_json(c.kernel);
  j["designs"] = Json::array();
  for (const auto& d : c.designs) j["designs"].push_back(to_json(d));
  j["scheme"] = scheme_name(c.scheme);
  if (c.scheme_M) j["scheme_M"] = *c.scheme_M;
  j["targets"] = Json::array();
  for (const auto& t : c.targets) j["targets"].push_back(to_json(t));
  j["N_grid"] = c.N_grid;
  j["replicates"] = c.replicates;
  j["master_seed"] = c.master_seed;
  j["output"] = c.output;
  j["jobs"] = c.jobs;
  return j;
}

inline std::string kernel_label(const KernelDescriptor& d) {
  std::ostringstream os;
  switch (d.family) {
    case KernelFamily::PeriodicSobolev: os << "periodic_sobolev_s" << d.s; break;
    case KernelFamily::SphereSobolev: os << "sphere_sobolev_d" << d.d << "_s" << d.s; break;
    case KernelFamily::SincPswf:
      os << "sinc_T" << d.T_len << "_F" << d.F << (d.convention == SincConvention::Unnormalized ? "_unnorm" : "");
      break;
  }
  return os.str();
}

/// Human-readable description of every config key with its default.
inline std::string config_schema() {
  return R"(Experiment config (JSON). Indices are one-based. Defaults in brackets.

{
  "kernel": one of
      {"family": "periodic_sobolev", "s": integer >= 1 [1], "M_spec": integer >= 1 [2000]}
      {"family": "sphere_sobolev", "d": 3 [3], "s": real > (d-1)/2 [1.5], "L_max": integer >= 0 [60]}
      {"family": "sinc_pswf", "T_len": real > 0 [2], "F": real > 0 [7],
       "legendre_order": integer >= 20 [128],
       "convention": "normalized" (sin(pi F u)/(pi F u)) | "unnormalized" (sin(F u)/(F u)) ["normalized"]},
  "design" | "designs": one block or an array of blocks [projection_dpp/eigen]
      {"family": "projection_dpp", "basis": "eigen" | "legendre" ["eigen"]}
      {"family": "cvs"}
      {"family": "christoffel", "M": "auto" (max(1, floor(N/ln N))) | "N" | integer >= 1 ["auto"],
       "q": "christoffel" (q = M/c_M) | "uniform" (q = 1, nodes from omega) ["christoffel"],
       "max_resamples": integer [1000],
       "condition_gram": resample until ||G - I|| <= 1/2 (bool) [true]},
  "scheme": "oka" | "ls" | "okq" | "qi" | "els" | "tels" ["ls"],
  "scheme_M": order M for okq/els/tels (integer >= 1) [N],
  "target" | "targets": one block or an array of blocks [eigenfunction m=1, rkhs]
      {"kind": "eigenfunction", "m": integer >= 1, "normalization": "rkhs" (sqrt(sigma_m) e_m) | "l2" (e_m) ["rkhs"]}
      {"kind": "random_mixture", "order": integer >= 1 [10], "seed": u64 [0], "per_replicate": bool [false]}
      {"kind": "coefficients", "coefficients": {"<index>": value, ...}},
  "N_grid": strictly increasing integers >= 1 (required),
  "replicates": integer >= 1 [50],
  "master_seed": u64 [0],
  "output": output directory [out],
  "jobs": worker threads [1]
}

Outputs of `study`: errors.csv with columns kernel,design,scheme,target,N,M,replicate,metric,value,seed
and summary.txt (whitespace-separated columns, gnuplot-compatible, '#' comments).
)";
}

}  // namespace rkdpp
