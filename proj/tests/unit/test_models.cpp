#include <gtest/gtest.h>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/quadrature/exp_sinh.hpp>

#include <cmath>

#include "uqstream/models.hpp"

namespace {

using uqstream::ConjugatePosterior;
using uqstream::NewsVendor;

double h_by_quadrature(const NewsVendor& nv, double theta) {
  // E[min(q, D)] split at the kink.
  const double below = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(
      [&](double d) { return d * theta * std::exp(-theta * d); }, 0.0, nv.order());
  const double above = nv.order() * std::exp(-theta * nv.order());
  return nv.price() * (below + above) - nv.cost() * nv.order();
}

TEST(NewsVendor, Output) {
  const NewsVendor nv;
  EXPECT_DOUBLE_EQ(nv.output(0.3), 1.5 * 0.3 - 0.5);
  EXPECT_DOUBLE_EQ(nv.output(2.0), 0.25);
}

TEST(NewsVendor, ClosedFormValues) {
  const NewsVendor nv;
  EXPECT_NEAR(uqstream::true_performance(nv, 1.0), 0.090204, 5e-7);
  EXPECT_NEAR(uqstream::true_performance(nv, 2.0), -0.025909, 1e-6);
  EXPECT_NEAR(uqstream::true_performance(nv, 1e6), -0.5, 1e-5);
}

TEST(NewsVendor, ClosedFormMatchesQuadrature) {
  const NewsVendor nv(0.7, 2.0, 1.1);
  for (double theta : {0.05, 0.5, 1.0, 2.0, 7.0}) {
    EXPECT_NEAR(uqstream::true_performance(nv, theta), h_by_quadrature(nv, theta), 1e-12);
  }
}

TEST(NewsVendor, MonteCarloMeanConverges) {
  const NewsVendor nv;
  for (double theta : {0.5, 1.0, 2.0}) {
    uqstream::Rng rng(static_cast<std::uint64_t>(theta * 100));
    double sum = 0.0;
    constexpr int n = 1000000;
    for (int i = 0; i < n; ++i) sum += uqstream::simulate(nv, theta, rng);
    const double h = uqstream::true_performance(nv, theta);
    if (theta == 1.0) {
      EXPECT_NEAR(sum / n, h, 0.003);
    }
    EXPECT_LT(std::abs(sum / n - h), 0.01 * std::abs(h)) << "theta " << theta;
  }
}

TEST(NewsVendor, StrictlyDecreasing) {
  const NewsVendor nv;
  double prev = INFINITY;
  for (int i = 0; i < 1000; ++i) {
    const double theta = 0.01 + i * (10.0 - 0.01) / 999.0;
    const double h = uqstream::true_performance(nv, theta);
    EXPECT_LT(h, prev);
    prev = h;
  }
}

TEST(NewsVendor, Validation) {
  EXPECT_THROW(NewsVendor(0.5, 1.0, 1.0), uqstream::DomainError);
  EXPECT_THROW(NewsVendor(0.0, 1.5, 1.0), uqstream::DomainError);
  EXPECT_THROW(uqstream::true_performance(NewsVendor(), 0.0), uqstream::DomainError);
}

TEST(TrueQuantile, MedianMapsThroughH) {
  const NewsVendor nv;
  const auto post = ConjugatePosterior::gamma(7.0, 6.5);
  EXPECT_DOUBLE_EQ(uqstream::true_quantile(nv, post, 0.5),
                   uqstream::true_performance(nv, uqstream::posterior_quantile(post, 0.5)));
}

TEST(TrueQuantile, LowerQuantileUsesUpperTheta) {
  const NewsVendor nv;
  const double q = uqstream::true_quantile(nv, ConjugatePosterior::gamma(1, 1), 0.05);
  EXPECT_NEAR(q, uqstream::true_performance(nv, -std::log(0.05)), 1e-12);
  EXPECT_NEAR(q, -0.11125037318724779, 1e-10);
}

TEST(TrueQuantile, MonotoneInAlpha) {
  const NewsVendor nv;
  const auto post = ConjugatePosterior::gamma(30.0, 28.0);
  double prev = -INFINITY;
  for (double a = 0.01; a < 1.0; a += 0.01) {
    const double q = uqstream::true_quantile(nv, post, a);
    EXPECT_GT(q, prev);
    prev = q;
  }
}

TEST(TrueQuantile, IncreasingModelAndUnknown) {
  const uqstream::LinearModel lin(uqstream::InputModel::normal_known_variance(1.0));
  const auto post = ConjugatePosterior::normal(0.0, 1.0, 1.0);
  EXPECT_NEAR(uqstream::true_quantile(lin, post, 0.975), 1.959963984540054, 1e-12);
  const uqstream::ConstantModel c(uqstream::InputModel::exponential_rate(), 2.0);
  EXPECT_THROW(uqstream::true_quantile(c, ConjugatePosterior::gamma(1, 1), 0.5),
               uqstream::UnsupportedError);
}

TEST(Stubs, ZeroNoiseAndCounting) {
  auto nv = std::make_shared<NewsVendor>();
  const uqstream::ZeroNoiseSimulator zero(nv);
  uqstream::Rng rng(1);
  for (int i = 0; i < 10; ++i) {
    EXPECT_EQ(zero.simulate(1.3, rng).output, uqstream::true_performance(*nv, 1.3));
  }
  const uqstream::CountingSimulator counter(nv);
  for (int i = 0; i < 17; ++i) counter.simulate(1.0, rng);
  EXPECT_EQ(counter.calls(), 17u);

  const uqstream::LinearModel lin(uqstream::InputModel::exponential_rate());
  EXPECT_DOUBLE_EQ(uqstream::true_performance(lin, 4.0), 0.25);
  EXPECT_EQ(lin.monotonicity(), uqstream::Monotonicity::kDecreasing);
  const uqstream::ConstantModel c(uqstream::InputModel::exponential_rate(), 2.0);
  EXPECT_EQ(uqstream::simulate(c, 1.0, rng), 2.0);
}

}  // namespace
