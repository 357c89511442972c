#include <string>

#include <gtest/gtest.h>

#include "rkdpp/config.hpp"

using namespace rkdpp;

namespace {

const char* kFull = R"({
  "kernel": {"family": "sinc_pswf", "T_len": 2, "F": 7, "convention": "unnormalized"},
  "designs": [
    {"family": "projection_dpp", "basis": "legendre"},
    {"family": "cvs"},
    {"family": "christoffel", "M": "N", "q": "uniform", "condition_gram": false}
  ],
  "scheme": "okq",
  "scheme_M": 6,
  "targets": [
    {"kind": "eigenfunction", "m": 3, "normalization": "l2"},
    {"kind": "random_mixture", "order": 5, "seed": 7, "per_replicate": true},
    {"kind": "coefficients", "coefficients": {"1": 1.0, "12": 0.1}}
  ],
  "N_grid": [10, 12, 14],
  "replicates": 7,
  "master_seed": 99,
  "output": "out/x",
  "jobs": 2
})";

std::string error_of(const std::string& text) {
  try {
    parse_config(text);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST(Config, ParsesEveryBlock) {
  const auto c = parse_config(kFull);
  EXPECT_EQ(c.kernel.family, KernelFamily::SincPswf);
  EXPECT_EQ(c.kernel.convention, SincConvention::Unnormalized);
  ASSERT_EQ(c.designs.size(), 3u);
  EXPECT_EQ(c.designs[0].basis, "legendre");
  EXPECT_EQ(c.designs[2].order_rule, OrderRule::EqualN);
  EXPECT_FALSE(c.designs[2].condition_gram);
  EXPECT_EQ(c.scheme, Scheme::OKQ);
  EXPECT_EQ(c.scheme_M, 6u);
  EXPECT_EQ(c.targets[0].m, 2u);  // one-based in the file
  EXPECT_FALSE(c.targets[0].rkhs_normalized);
  EXPECT_EQ(c.targets[2].coefficients.at(11), 0.1);
  EXPECT_EQ(c.master_seed, 99u);
}

TEST(Config, RoundTripThroughJson) {
  const auto c = parse_config(kFull);
  const auto back = config_from_json(to_json(c));
  EXPECT_EQ(c, back);
  EXPECT_EQ(to_json(back).dump(), to_json(c).dump());
}

TEST(Config, Defaults) {
  const auto c = parse_config(R"({"kernel": {"family": "periodic_sobolev"}, "N_grid": [4]})");
  EXPECT_EQ(c.kernel.s, 1.0);
  EXPECT_EQ(c.scheme, Scheme::LS);
  EXPECT_EQ(c.designs.at(0).family, DesignFamily::ProjectionDpp);
  EXPECT_EQ(c.targets.at(0).kind, TargetKind::Eigenfunction);
  EXPECT_EQ(c.replicates, 50u);
}

TEST(Config, ErrorsCarryPaths) {
  EXPECT_NE(error_of(R"({"kernel": {"family": "periodic_sobolev"}, "N_grid": []})").find("/N_grid"), std::string::npos);
  EXPECT_NE(error_of(R"({"kernel": {"family": "periodic_sobolev", "x": 1}, "N_grid": [4]})").find("/kernel/x"),
            std::string::npos);
  EXPECT_NE(error_of(R"({"kernel": {"family": "gauss"}, "N_grid": [4]})").find("/kernel/family"), std::string::npos);
  EXPECT_NE(error_of(R"({"kernel": {"family": "periodic_sobolev"}, "N_grid": [4], "scheme": "nn"})").find("/scheme"),
            std::string::npos);
  EXPECT_NE(error_of(R"({"kernel": {"family": "periodic_sobolev"}, "N_grid": [4],
                        "target": {"kind": "eigenfunction", "m": 0}})")
                .find("/target/m"),
            std::string::npos);
  EXPECT_NE(error_of(R"({"kernel": {"family": "periodic_sobolev"}, "N_grid": [4],
                        "design": {"family": "christoffel", "M": 9}})")
                .find("/designs/0/M"),
            std::string::npos);
  EXPECT_NE(error_of("{ not json").find("syntax error"), std::string::npos);
}

TEST(Config, ModelDependentChecks) {
  const auto c = parse_config(R"({"kernel": {"family": "periodic_sobolev", "M_spec": 10}, "N_grid": [4, 12],
                                  "target": {"kind": "eigenfunction", "m": 11}})");
  const auto model = make_model(c.kernel);
  EXPECT_THROW(validate_against(c, *model), ConfigError);
}

TEST(Config, SchemaMentionsEveryTopLevelKey) {
  const std::string s = config_schema();
  for (const char* key : {"kernel", "designs", "scheme", "scheme_M", "targets", "N_grid", "replicates", "master_seed",
                          "output", "jobs"})
    EXPECT_NE(s.find(key), std::string::npos) << key;
}
