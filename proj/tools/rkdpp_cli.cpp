// rkdpp: sample designs, run convergence studies, verify identities.
//
// Exit codes: 0 success, 1 config error, 2 numerical failure budget
// exceeded, 3 verification failure.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "rkdpp/rkdpp.hpp"

namespace fs = std::filesystem;
using namespace rkdpp;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 1;
constexpr int kExitNumerical = 2;
constexpr int kExitVerify = 3;

struct Overrides {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> jobs;
  std::optional<std::string> out;
};

ExperimentConfig load_with_overrides(const Overrides& o) {
  ExperimentConfig c = load_config(o.config);
  if (o.seed) c.master_seed = *o.seed;
  if (o.jobs) c.jobs = *o.jobs;
  if (o.out) c.output = *o.out;
  validate(c);
  return c;
}

ModelPtr build_model(const ExperimentConfig& c) {
  ModelPtr model;
  try {
    model = make_model(c.kernel);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("/kernel: ") + e.what());
  }
  validate_against(c, *model);
  return model;
}

std::ofstream open_out(const fs::path& p) {
  fs::create_directories(p.parent_path());
  std::ofstream os(p);
  if (!os) throw ConfigError("cannot write '" + p.string() + "'");
  return os;
}

int cmd_sample(const Overrides& o) {
  const ExperimentConfig c = load_with_overrides(o);
  const ModelPtr model = build_model(c);
  const fs::path out(c.output);
  std::ofstream log = open_out(out / "sample.log");
  log << "# kernel=" << kernel_label(c.kernel) << " master_seed=" << c.master_seed << '\n';
  std::size_t failures = 0;
  std::size_t total = 0;
  for (const auto& ds : c.designs) {
    const std::string label = design_label(ds);
    for (std::size_t N : c.N_grid) {
      const auto prepared = detail::prepare_design(*model, ds, N);
      for (std::size_t r = 0; r < c.replicates; ++r) {
        const std::uint64_t seed = replicate_seed(c.master_seed, N, r);
        ++total;
        try {
          const Design d = prepared.sample(seed);
          std::ofstream csv = open_out(out / "designs" / label / ("N" + std::to_string(N) + "_r" + std::to_string(r + 1) + ".csv"));
          write_design_csv(csv, d, model->domain());
          log << design_log_line(d, N, r + 1) << '\n';
        } catch (const Error& e) {
          ++failures;
          log << "design=" << label << " N=" << N << " replicate=" << r + 1 << " seed=" << seed << " failed: " << e.what()
              << '\n';
        }
      }
    }
  }
  std::cout << "wrote " << total - failures << " designs to " << (out / "designs").string() << " (" << failures
            << " failed)\n";
  return static_cast<double>(failures) > 0.2 * static_cast<double>(total) ? kExitNumerical : kExitOk;
}

int cmd_study(const Overrides& o) {
  const ExperimentConfig c = load_with_overrides(o);
  const ModelPtr model = build_model(c);
  const fs::path out(c.output);
  std::vector<ErrorRecord> all;
  std::string summary;
  bool exceeded = false;
  for (const auto& ds : c.designs) {
    for (const auto& ts : c.targets) {
      StudySpec spec;
      spec.model = model;
      spec.kernel_label = kernel_label(c.kernel);
      spec.design = ds;
      spec.scheme = c.scheme;
      spec.scheme_M = c.scheme_M;
      spec.target = ts;
      spec.N_grid = c.N_grid;
      spec.replicates = c.replicates;
      spec.master_seed = c.master_seed;
      spec.jobs = c.jobs;
      const StudyResult res = mc_error_study(spec);
      std::optional<double> slope;
      std::string slope_note;
      try {
        const auto range = upper_half(c.N_grid);
        slope = fit_loglog_slope(res.records, range);
      } catch (const std::exception& e) {
        slope_note = std::string("slope unavailable: ") + e.what() + '\n';
      }
      summary += summarize(spec, res, slope) + slope_note + '\n';
      exceeded = exceeded || res.budget_exceeded;
      all.insert(all.end(), res.records.begin(), res.records.end());
    }
  }
  std::ofstream csv = open_out(out / "errors.csv");
  write_error_csv(csv, all);
  std::ofstream txt = open_out(out / "summary.txt");
  txt << summary;
  std::cout << summary << "wrote " << (out / "errors.csv").string() << '\n';
  return exceeded ? kExitNumerical : kExitOk;
}

int cmd_verify(const std::string& suite, const VerifyOptions& opt) {
  const auto names = verify_suites();
  if (std::find(names.begin(), names.end(), suite) == names.end()) {
    std::cerr << "error: unknown suite '" << suite << "'; available:";
    for (const auto& n : names) std::cerr << ' ' << n;
    std::cerr << '\n';
    return kExitConfig;
  }
  const VerifyReport rep = run_verify(suite, opt);
  std::cout << rep.text();
  return rep.passed() ? kExitOk : kExitVerify;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Function reconstruction in RKHS from randomized node designs"};
  app.require_subcommand(1);

  Overrides sample_o;
  Overrides study_o;
  auto add_common = [](CLI::App* sub, Overrides& o, bool jobs) {
    sub->add_option("--config", o.config, "experiment config (JSON)")->required()->check(CLI::ExistingFile);
    sub->add_option("--seed", o.seed, "override master_seed");
    if (jobs) sub->add_option("--jobs", o.jobs, "worker threads")->check(CLI::PositiveNumber);
    sub->add_option("--out", o.out, "output directory");
  };
  auto* sample = app.add_subcommand("sample", "write one design CSV per replicate");
  add_common(sample, sample_o, false);
  auto* study = app.add_subcommand("study", "Monte Carlo error study, CSV and slope summary");
  add_common(study, study_o, true);

  std::string suite;
  VerifyOptions vopt;
  auto* verify = app.add_subcommand("verify", "check an identity suite with 3-sigma bands");
  verify->add_option("suite", suite, "ez-unbiased | ez-variance | ez-uncorrelated | kale | tels-identity | iop | "
                                     "eps-bound | cvs-mixture")
      ->required();
  verify->add_option("--budget", vopt.budget, "Monte Carlo replicates (default per suite)");
  verify->add_option("--seed", vopt.seed, "master seed");
  verify->add_option("--jobs", vopt.jobs, "worker threads")->check(CLI::PositiveNumber);

  auto* schema = app.add_subcommand("config-schema", "print the config keys and defaults");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (*sample) return cmd_sample(sample_o);
    if (*study) return cmd_study(study_o);
    if (*verify) return cmd_verify(suite, vopt);
    if (*schema) {
      std::cout << config_schema();
      return kExitOk;
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const NumericalFailure& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const SamplingFailure& e) {
    std::cerr << "sampling failure: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::out_of_range& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  }
  return kExitOk;
}
