#include <gtest/gtest.h>

#include <cmath>

#include "uqstream/algorithms.hpp"

namespace {

using namespace uqstream;

const auto kPrior = ConjugatePosterior::gamma(2.0, 2.0);

AlgoConfig config(Method m, std::size_t M = 6, std::size_t N = 4, std::size_t K = 3) {
  AlgoConfig c;
  c.method = m;
  c.M = M;
  c.N = N;
  c.K = K;
  return c;
}

std::vector<double> stream(std::size_t T, std::uint64_t seed = 1) {
  Rng rng = StreamSet{seed, 0, 0}.data();
  std::vector<double> d(T);
  for (double& x : d) x = InputModel::exponential_rate().sample(1.0, rng);
  return d;
}

std::vector<QuantReport> run(const AlgoConfig& c, const Simulator& sim, const StreamSet& s,
                             std::size_t T) {
  AlgoState st = initialize(c, kPrior, sim, s);
  std::vector<QuantReport> out;
  for (double x : stream(T)) out.push_back(step(st, x, c, sim, s));
  return out;
}

TEST(Method, ParseRoundTrip) {
  for (Method m : {Method::kTlis1, Method::kTlis2, Method::kDirectMc, Method::kSimpleIs,
                   Method::kGreen}) {
    EXPECT_EQ(parse_method(to_string(m)), m);
  }
  EXPECT_THROW(parse_method("tlis3"), UsageError);
}

TEST(AlgoConfig, Validation) {
  auto c = config(Method::kTlis2);
  EXPECT_NO_THROW(validate(c));
  c.M = 0;
  EXPECT_THROW(validate(c), UsageError);
  c = config(Method::kTlis2);
  c.alphas = {0.5, 1.0};
  EXPECT_THROW(validate(c), UsageError);
  c = config(Method::kDirectMc, 3, 3, 7);
  EXPECT_EQ(c.window(), 1u);
  EXPECT_EQ(config(Method::kGreen, 3, 3, 7).window(), 7u);
}

TEST(Initialize, TlisOneRunsMTimesNSimulations) {
  const CountingSimulator sim(std::make_shared<NewsVendor>());
  const auto c = config(Method::kTlis1, 30, 10, 20);
  const AlgoState st = initialize(c, kPrior, sim, StreamSet{1, 0, 0});
  EXPECT_EQ(sim.calls(), 300u);
  EXPECT_EQ(st.buffer().size(), 1u);
  EXPECT_EQ(st.stage(), 0u);
  ASSERT_TRUE(st.pinned_block());
  EXPECT_EQ(st.pinned_block()->cols(), 10);
}

TEST(Initialize, SameSeedSameState) {
  const NewsVendor sim;
  for (Method m : {Method::kTlis1, Method::kTlis2, Method::kDirectMc, Method::kSimpleIs,
                   Method::kGreen}) {
    const auto c = config(m);
    const AlgoState a = initialize(c, kPrior, sim, StreamSet{4, 2, 9});
    const AlgoState b = initialize(c, kPrior, sim, StreamSet{4, 2, 9});
    EXPECT_TRUE((a.buffer().newest().thetas == b.buffer().newest().thetas).all());
    EXPECT_TRUE((a.buffer().newest().estimates == b.buffer().newest().estimates).all());
  }
}

TEST(Initialize, RejectsNonConjugatePrior) {
  const NewsVendor sim;
  EXPECT_THROW(initialize(config(Method::kTlis2), ConjugatePosterior::normal(0, 1, 1), sim,
                          StreamSet{}),
               UsageError);
}

TEST(Step, TlisOneRunsNoNewSimulations) {
  const CountingSimulator sim(std::make_shared<NewsVendor>());
  const auto c = config(Method::kTlis1);
  const StreamSet s{1, 0, 0};
  AlgoState st = initialize(c, kPrior, sim, s);
  const std::size_t before = sim.calls();
  for (double x : stream(10)) step(st, x, c, sim, s);
  EXPECT_EQ(sim.calls(), before);
  EXPECT_EQ(st.buffer().size(), 3u);
  EXPECT_FALSE(st.buffer().newest().has_simulation());
}

TEST(Step, BudgetAccounting) {
  for (Method m : {Method::kTlis1, Method::kTlis2, Method::kDirectMc, Method::kSimpleIs,
                   Method::kGreen}) {
    for (std::size_t T : {0u, 1u, 2u, 7u, 20u}) {
      const CountingSimulator sim(std::make_shared<NewsVendor>());
      const auto c = config(m, 5, 3, 4);
      const StreamSet s{3, T, 1};
      AlgoState st = initialize(c, kPrior, sim, s);
      for (double x : stream(T)) step(st, x, c, sim, s);
      const bool once = m == Method::kTlis1 || m == Method::kSimpleIs;
      EXPECT_EQ(sim.calls(), once ? 15u : (T + 1) * 15u) << to_string(m) << " T=" << T;
      EXPECT_EQ(st.simulation_calls(), sim.calls());
    }
  }
}

TEST(Step, MatchedBudgetScalesInitialBlock) {
  const CountingSimulator sim(std::make_shared<NewsVendor>());
  auto c = config(Method::kTlis1, 5, 3, 4);
  c.initial_replications = 20 * 3;
  const StreamSet s{3, 0, 1};
  AlgoState st = initialize(c, kPrior, sim, s);
  for (double x : stream(20)) step(st, x, c, sim, s);
  EXPECT_EQ(sim.calls(), 5u * 20u * 3u);
  auto d = config(Method::kDirectMc, 5, 3, 4);
  d.initial_replications = 60;
  EXPECT_EQ(d.initial_block_replications(), 3u);
}

TEST(Step, TlisTwoWithoutCisAndKOneIsDirectMc) {
  const NewsVendor sim;
  const StreamSet s{5, 1, 42};
  auto t2 = config(Method::kTlis2, 6, 4, 1);
  t2.warmup = kNeverCis;
  const auto a = run(t2, sim, s, 12);
  const auto b = run(config(Method::kDirectMc, 6, 4, 1), sim, s, 12);
  const auto g = run(config(Method::kGreen, 6, 4, 1), sim, s, 12);
  for (std::size_t t = 0; t < a.size(); ++t) {
    for (std::size_t i = 0; i < a[t].quantiles.size(); ++i) {
      EXPECT_EQ(a[t].quantiles[i].estimate, b[t].quantiles[i].estimate);
      EXPECT_EQ(g[t].quantiles[i].estimate, b[t].quantiles[i].estimate);
    }
  }
}

TEST(Step, ReportsAreWellFormed) {
  const NewsVendor sim;
  auto c = config(Method::kTlis2, 10, 5, 4);
  c.alphas = {0.05, 0.5, 0.95};
  const auto reports = run(c, sim, StreamSet{2, 0, 0}, 15);
  ASSERT_EQ(reports.size(), 15u);
  for (std::size_t t = 0; t < reports.size(); ++t) {
    const auto& r = reports[t];
    EXPECT_TRUE(r.ok());
    EXPECT_EQ(r.t, t + 1);
    EXPECT_LE(r.quantiles[0].estimate, r.quantiles[1].estimate);
    EXPECT_LE(r.quantiles[1].estimate, r.quantiles[2].estimate);
    EXPECT_LE(r.quantiles[0].truth, r.quantiles[2].truth);
    EXPECT_LE(r.credible_interval.first, r.credible_interval.second);
    EXPECT_EQ(r.diagnostics.stage_ess.size(), std::min<std::size_t>(t + 2, 4));
  }
}

TEST(Step, RejectsInvalidObservation) {
  const NewsVendor sim;
  const auto c = config(Method::kGreen);
  AlgoState st = initialize(c, kPrior, sim, StreamSet{});
  EXPECT_THROW(step(st, -1.0, c, sim, StreamSet{}), DomainError);
  EXPECT_EQ(st.stage(), 0u);
}

TEST(Step, LikelihoodWeightMode) {
  const NewsVendor sim;
  const StreamSet s{8, 0, 0};
  auto exact = config(Method::kGreen, 8, 3, 1);
  auto lik = exact;
  lik.weight_mode = WeightMode::kSelfNormalizedLikelihood;
  const auto a = run(exact, sim, s, 10);
  const auto b = run(lik, sim, s, 10);
  for (std::size_t t = 0; t < a.size(); ++t) {
    EXPECT_EQ(a[t].quantiles[0].estimate, b[t].quantiles[0].estimate);
  }
  lik.K = 4;
  for (const auto& r : run(lik, sim, s, 10)) {
    EXPECT_TRUE(r.ok());
    EXPECT_TRUE(std::isfinite(r.quantiles[1].estimate));
  }
}

TEST(Restart, ResetsWindowAndPinnedBlock) {
  const CountingSimulator sim(std::make_shared<NewsVendor>());
  const auto c = config(Method::kTlis1, 5, 3, 4);
  const StreamSet s{6, 0, 0};
  AlgoState st = initialize(c, kPrior, sim, s);
  const auto data = stream(8);
  for (std::size_t i = 0; i < 5; ++i) step(st, data[i], c, sim, s);
  const auto old_block = st.pinned_block();
  restart(st, c, sim, s);
  EXPECT_NE(st.pinned_block(), old_block);
  EXPECT_EQ(st.buffer().size(), 1u);
  EXPECT_EQ(st.buffer().newest().stage, 5u);
  EXPECT_EQ(sim.calls(), 30u);
  const auto r = step(st, data[5], c, sim, s);
  EXPECT_EQ(r.t, 6u);
  EXPECT_EQ(st.buffer().size(), 2u);
  EXPECT_THROW(restart(st, config(Method::kGreen), sim, s), UsageError);
}

TEST(Pipeline, WindowCdfMatchesTripleLoop) {
  const NewsVendor sim;
  const auto c = config(Method::kTlis1, 4, 3, 3);
  const StreamSet s{9, 0, 0};
  AlgoState st = initialize(c, kPrior, sim, s);
  for (double x : stream(5)) step(st, x, c, sim, s);
  const auto& block = *st.pinned_block();
  const auto& model = sim.input_model();

  std::vector<WeightedStage> window;
  for (const auto& rec : st.buffer().stages()) {
    window.push_back({rec.stage, outer_log_weights(st.posterior(), rec), rec.estimates});
  }
  for (double h : {-0.2, 0.0, 0.05, 0.1}) {
    double acc = 0.0;
    std::size_t count = 0;
    for (const auto& rec : st.buffer().stages()) {
      for (Eigen::Index i = 0; i < rec.thetas.size(); ++i, ++count) {
        const double th = rec.thetas[i];
        double est = 0.0;
        for (Eigen::Index l = 0; l < block.rows(); ++l) {
          for (Eigen::Index j = 0; j < block.cols(); ++j) {
            const double x = block.inputs(l, j);
            est += std::exp(log_pdf(model, x, th) - log_pdf(model, x, block.thetas[l])) *
                   block.outputs(l, j);
          }
        }
        est /= static_cast<double>(block.rows() * block.cols());
        const double w = std::exp(posterior_log_pdf(st.posterior(), th) -
                                  posterior_log_pdf(rec.posterior, th));
        if (est <= h) acc += w;
      }
    }
    EXPECT_NEAR(window_cdf(window, h), acc / static_cast<double>(count), 1e-12);
  }
}

}  // namespace
