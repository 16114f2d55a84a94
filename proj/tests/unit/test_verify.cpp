#include <gtest/gtest.h>

#include "uqstream/verify.hpp"

namespace {

using uqstream::ConjugatePosterior;

TEST(Verify, EveryPropertyPassesAtDefaultSeed) {
  const uqstream::VerifyOptions opts;
  for (const auto& name : uqstream::property_names()) {
    const auto r = uqstream::run_property(name, opts);
    EXPECT_TRUE(r.passed) << name << "\n" << r.detail;
  }
}

TEST(Verify, UnknownProperty) {
  EXPECT_THROW(uqstream::run_property("nope", {}), uqstream::UsageError);
}

TEST(Verify, QuadratureOracleAgreesWithClosedForm) {
  const auto num = ConjugatePosterior::gamma(2, 2);
  const auto den = ConjugatePosterior::gamma(1, 1);
  EXPECT_NEAR(uqstream::ratio_second_moment_quadrature(num, den), 32.0 / 27.0, 1e-10);
}

TEST(Verify, VarianceExplodesAgainstThePrior) {
  const auto path = uqstream::posterior_path(1.0, 400, ConjugatePosterior::gamma(0.001, 0.001), 1);
  EXPECT_GT(uqstream::ratio_second_moment(path[400], path[0]),
            uqstream::ratio_second_moment(path[100], path[0]));
  const auto table = uqstream::ratio_moment_table(path, 20);
  EXPECT_TRUE(std::isnan(table[3][5]));
  EXPECT_GE(table[50][19], 1.0);
}

}  // namespace
