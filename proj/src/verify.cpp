#include "uqstream/verify.hpp"

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/sinh_sinh.hpp>

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <sstream>

#include "uqstream/algorithms.hpp"
#include "uqstream/estimators.hpp"
#include "uqstream/models.hpp"

namespace uqstream {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

struct RunningMoments {
  std::size_t n = 0;
  double mean = 0.0;
  double m2 = 0.0;

  void add(double x) {
    ++n;
    const double d = x - mean;
    mean += d / static_cast<double>(n);
    m2 += d * (x - mean);
  }
  double standard_error() const {
    return std::sqrt(m2 / static_cast<double>(n - 1) / static_cast<double>(n));
  }
};

std::string fmt(double x) {
  std::ostringstream s;
  s.precision(6);
  s << x;
  return s.str();
}

/// Checks |mean - truth| ≤ sigmas · standard error; appends a line to detail.
bool mean_test(const RunningMoments& m, double truth, double sigmas, const std::string& what,
               std::string& detail) {
  const double se = m.standard_error();
  const double z = se > 0.0 ? std::abs(m.mean - truth) / se
                            : (m.mean == truth ? 0.0 : std::numeric_limits<double>::infinity());
  detail += what + ": mean " + fmt(m.mean) + " truth " + fmt(truth) + " z " + fmt(z) + "\n";
  return z <= sigmas;
}

PropertyResult check_ratio_moment(const VerifyOptions& opts) {
  PropertyResult r{"ratio-moment", true, {}};
  std::vector<std::pair<ConjugatePosterior, ConjugatePosterior>> cases = {
      {ConjugatePosterior::gamma(2, 2), ConjugatePosterior::gamma(1, 1)},
      {ConjugatePosterior::gamma(5, 4), ConjugatePosterior::gamma(3, 3.5)},
      {ConjugatePosterior::normal(0.3, 0.5, 1.0), ConjugatePosterior::normal(0.0, 1.0, 1.0)},
      {ConjugatePosterior::normal(1.0, 0.2, 2.0), ConjugatePosterior::normal(0.8, 0.3, 2.0)},
  };
  const auto path = posterior_path(1.0, 200, ConjugatePosterior::gamma(0.001, 0.001), opts.seed);
  for (std::size_t t : {20, 50, 100, 200}) {
    for (std::size_t k : {1, 5, 20}) cases.emplace_back(path[t], path[t - k]);
  }
  double worst = 0.0;
  for (const auto& [num, den] : cases) {
    const double closed = ratio_second_moment(num, den);
    const double quad = ratio_second_moment_quadrature(num, den);
    const double rel = std::abs(closed - quad) / std::abs(quad);
    worst = std::max(worst, rel);
    if (!(rel <= 1e-8)) r.passed = false;
  }
  const double divergent = ratio_second_moment(ConjugatePosterior::gamma(1, 1),
                                               ConjugatePosterior::gamma(3, 1));
  if (!std::isinf(divergent)) r.passed = false;
  r.detail = std::to_string(cases.size()) + " pairs, worst relative error " + fmt(worst);
  return r;
}

PropertyResult check_cdf_unbiased(const VerifyOptions& opts) {
  PropertyResult r{"cdf-unbiased", true, {}};
  constexpr std::size_t M = 8, K = 3, N = 4;
  auto inner = std::make_shared<NewsVendor>();
  const ZeroNoiseSimulator sim(inner);
  const auto path = posterior_path(1.0, K + 2, ConjugatePosterior::gamma(2.0, 2.0), opts.seed);
  const ConjugatePosterior& current = path.back();

  const std::vector<double> levels{0.2, 0.5, 0.8};
  std::vector<double> hs, truths;
  for (double p : levels) {
    const double theta_star = posterior_quantile(current, p);
    hs.push_back(true_performance(sim, theta_star));
    truths.push_back(1.0 - posterior_cdf(current, theta_star));
  }
  std::vector<RunningMoments> moments(hs.size());
  Rng rng = make_stream(opts.seed, 0, Stream::kAuxiliary, 1);
  for (std::size_t rep = 0; rep < opts.replications; ++rep) {
    std::vector<WeightedStage> window;
    for (std::size_t s = path.size() - K; s < path.size(); ++s) {
      StageRecord rec;
      rec.stage = s;
      rec.posterior = path[s];
      rec.thetas = posterior_sample(path[s], rng, M);
      auto block = run_block(sim, rec.thetas, N, rng);
      window.push_back({s, outer_log_weights(current, rec), sample_mean_estimate(block)});
    }
    for (std::size_t i = 0; i < hs.size(); ++i) moments[i].add(window_cdf(window, hs[i]));
  }
  for (std::size_t i = 0; i < hs.size(); ++i) {
    r.passed &= mean_test(moments[i], truths[i], opts.sigmas, "G(h) at level " + fmt(levels[i]),
                          r.detail);
  }
  return r;
}

PropertyResult check_cis_unbiased(const VerifyOptions& opts) {
  PropertyResult r{"cis-unbiased", true, {}};
  constexpr std::size_t M = 8, N = 4;
  const NewsVendor sim;
  const auto proposal = ConjugatePosterior::gamma(20.0, 20.0);
  Eigen::ArrayXd targets(5);
  targets << 0.8, 0.9, 1.0, 1.1, 1.25;
  std::vector<RunningMoments> moments(static_cast<std::size_t>(targets.size()));
  Rng rng = make_stream(opts.seed, 0, Stream::kAuxiliary, 2);
  for (std::size_t rep = 0; rep < opts.replications; ++rep) {
    const Eigen::ArrayXd thetas = posterior_sample(proposal, rng, M);
    const SimulationBlock block = run_block(sim, thetas, N, rng);
    const Eigen::ArrayXd est = cis_estimate(sim.input_model(), targets, block);
    for (Eigen::Index i = 0; i < targets.size(); ++i) {
      moments[static_cast<std::size_t>(i)].add(est[i]);
    }
  }
  for (Eigen::Index i = 0; i < targets.size(); ++i) {
    r.passed &= mean_test(moments[static_cast<std::size_t>(i)],
                          true_performance(sim, targets[i]), opts.sigmas,
                          "H(" + fmt(targets[i]) + ")", r.detail);
  }
  return r;
}

PropertyResult check_order_preservation(const VerifyOptions& opts) {
  PropertyResult r{"order-preservation", true, {}};
  auto inner = std::make_shared<NewsVendor>();
  const ZeroNoiseSimulator sim(inner);
  const auto prior = ConjugatePosterior::gamma(2.0, 2.0);
  Rng data_rng = make_stream(opts.seed, 0, Stream::kData);
  const std::vector<double> data = [&] {
    std::vector<double> d(15);
    for (double& x : d) x = sim.input_model().sample(1.0, data_rng);
    return d;
  }();

  std::size_t compared = 0;
  AlgoConfig green{.method = Method::kGreen, .M = 8, .N = 3, .K = 4};
  AlgoConfig direct{.method = Method::kDirectMc, .M = 8, .N = 3, .K = 4};
  AlgoConfig means{.method = Method::kTlis2, .M = 8, .N = 3, .K = 4, .warmup = kNeverCis};
  green.alphas = direct.alphas = means.alphas = {0.05, 0.25, 0.5, 0.75, 0.95};
  for (const AlgoConfig& cfg : {green, direct, means}) {
    const StreamSet streams{opts.seed, 0, static_cast<std::uint64_t>(cfg.method) + 1};
    AlgoState state = initialize(cfg, prior, sim, streams);
    for (double x : data) {
      const QuantReport rep = step(state, x, cfg, sim, streams);
      std::vector<WeightedStage> exact;
      for (const StageRecord& rec : state.buffer().stages()) {
        Eigen::ArrayXd h = rec.thetas.unaryExpr([&](double th) { return true_performance(sim, th); });
        exact.push_back({rec.stage, outer_log_weights(state.posterior(), rec), h});
      }
      const WeightedECDF ecdf = window_ecdf(exact);
      for (const QuantileEstimate& q : rep.quantiles) {
        ++compared;
        if (weighted_quantile(ecdf, q.alpha) != q.estimate) {
          r.passed = false;
          r.detail += std::string(to_string(cfg.method)) + " t=" + std::to_string(rep.t) +
                      " α=" + fmt(q.alpha) + " differs\n";
        }
      }
    }
  }
  r.detail += std::to_string(compared) + " quantiles compared bit-exactly";
  return r;
}

PropertyResult check_budget(const VerifyOptions& opts) {
  PropertyResult r{"budget", true, {}};
  constexpr std::size_t M = 4, N = 3, K = 5;
  const auto prior = ConjugatePosterior::gamma(2.0, 2.0);
  std::size_t checked = 0;
  for (Method m : {Method::kTlis1, Method::kTlis2, Method::kDirectMc, Method::kSimpleIs,
                   Method::kGreen}) {
    AlgoConfig cfg{.method = m, .M = M, .N = N, .K = K};
    for (std::size_t T = 0; T <= 20; ++T) {
      auto sim = CountingSimulator(std::make_shared<NewsVendor>());
      const StreamSet streams{opts.seed, T, 7};
      Rng data_rng = streams.data();
      AlgoState state = initialize(cfg, prior, sim, streams);
      for (std::size_t t = 0; t < T; ++t) {
        step(state, sim.input_model().sample(1.0, data_rng), cfg, sim, streams);
      }
      const bool once = m == Method::kTlis1 || m == Method::kSimpleIs;
      const std::size_t expected = once ? M * N : (T + 1) * M * N;
      ++checked;
      if (sim.calls() != expected || state.simulation_calls() != expected) {
        r.passed = false;
        r.detail += std::string(to_string(m)) + " T=" + std::to_string(T) + ": " +
                    std::to_string(sim.calls()) + " calls, expected " +
                    std::to_string(expected) + "\n";
      }
    }
  }
  r.detail += std::to_string(checked) + " (method, T) pairs";
  return r;
}

PropertyResult check_variance_explosion(const VerifyOptions& opts) {
  PropertyResult r{"variance-explosion", true, {}};
  const auto path = posterior_path(1.0, 400, ConjugatePosterior::gamma(0.001, 0.001), opts.seed);
  const double m100 = ratio_second_moment(path[100], path[0]);
  const double m400 = ratio_second_moment(path[400], path[0]);
  r.passed = m400 > m100;
  r.detail = "E[(π_100/π_0)²] = " + fmt(m100) + ", E[(π_400/π_0)²] = " + fmt(m400);
  return r;
}

PropertyResult check_ratio_moment_decay(const VerifyOptions& opts) {
  PropertyResult r{"ratio-moment-decay", true, {}};
  constexpr std::size_t K = 20, T = 400, t0 = 50;
  const auto path = posterior_path(1.0, T, ConjugatePosterior::gamma(0.001, 0.001), opts.seed);
  const auto table = ratio_moment_table(path, K);
  double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
  for (std::size_t t = t0; t <= T; ++t) {
    for (double m : table[t]) {
      lo = std::min(lo, m);
      hi = std::max(hi, m);
    }
  }
  if (!(lo >= 1.0 && hi <= 2.0)) r.passed = false;
  r.detail = "range over t ≥ 50, k ≤ 20: [" + fmt(lo) + ", " + fmt(hi) + "]\n";

  double steepest = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 1; k <= K; ++k) {
    // Least-squares slope of log(m - 1) against log t.
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0, n = 0.0;
    for (std::size_t t = t0; t <= T; ++t) {
      const double x = std::log(static_cast<double>(t));
      const double y = std::log(table[t][k - 1] - 1.0);
      sx += x;
      sy += y;
      sxx += x * x;
      sxy += x * y;
      n += 1.0;
    }
    const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    steepest = std::max(steepest, slope);
    if (!(slope < 0.0)) {
      r.passed = false;
      r.detail += "k=" + std::to_string(k) + " not decreasing toward 1 (slope " + fmt(slope) + ")\n";
    }
  }
  r.detail += "log-log slope of m - 1 against t, largest over k = 1.." + std::to_string(K) +
              ": " + fmt(steepest);
  return r;
}

const std::map<std::string, std::function<PropertyResult(const VerifyOptions&)>>& registry() {
  static const std::map<std::string, std::function<PropertyResult(const VerifyOptions&)>> r = {
      {"ratio-moment", check_ratio_moment},
      {"cdf-unbiased", check_cdf_unbiased},
      {"cis-unbiased", check_cis_unbiased},
      {"order-preservation", check_order_preservation},
      {"budget", check_budget},
      {"variance-explosion", check_variance_explosion},
      {"ratio-moment-decay", check_ratio_moment_decay},
  };
  return r;
}

}  // namespace

const std::vector<std::string>& property_names() {
  static const std::vector<std::string> names = {
      "ratio-moment", "cdf-unbiased",       "cis-unbiased",  "order-preservation",
      "budget",       "variance-explosion", "ratio-moment-decay"};
  return names;
}

PropertyResult run_property(const std::string& name, const VerifyOptions& opts) {
  const auto it = registry().find(name);
  if (it == registry().end()) throw UsageError("unknown property '" + name + "'");
  return it->second(opts);
}

double ratio_second_moment_quadrature(const ConjugatePosterior& num,
                                      const ConjugatePosterior& den) {
  if (!num.compatible_with(den)) throw UsageError("posteriors are not comparable");
  const double mu = num.mean();
  const double sd = std::sqrt(num.variance());
  auto integrand = [&](double u) {
    const double theta = mu + sd * u;
    if (num.family() == PosteriorFamily::kGamma && !(theta > 0.0)) return 0.0;
    return sd * std::exp(2.0 * posterior_log_pdf(num, theta) - posterior_log_pdf(den, theta));
  };
  if (num.family() == PosteriorFamily::kGamma) {
    boost::math::quadrature::exp_sinh<double> q;
    return q.integrate(integrand, -mu / sd, std::numeric_limits<double>::infinity());
  }
  boost::math::quadrature::sinh_sinh<double> q;
  return q.integrate(integrand);
}

std::vector<ConjugatePosterior> posterior_path(double theta_c, std::size_t T,
                                               const ConjugatePosterior& prior,
                                               std::uint64_t seed) {
  const InputModel model = InputModel::exponential_rate();
  Rng rng = make_stream(seed, 0, Stream::kData);
  std::vector<ConjugatePosterior> path{prior};
  for (std::size_t t = 1; t <= T; ++t) {
    path.push_back(posterior_update(path.back(), model.sample(theta_c, rng)));
  }
  return path;
}

std::vector<std::vector<double>> ratio_moment_table(const std::vector<ConjugatePosterior>& path,
                                                    std::size_t K) {
  std::vector<std::vector<double>> table(path.size(), std::vector<double>(K, kNaN));
  for (std::size_t t = 0; t < path.size(); ++t) {
    for (std::size_t k = 1; k <= std::min(K, t); ++k) {
      table[t][k - 1] = ratio_second_moment(path[t], path[t - k]);
    }
  }
  return table;
}

}  // namespace uqstream
