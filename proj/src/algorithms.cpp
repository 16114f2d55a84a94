#include "uqstream/algorithms.hpp"

#include <cmath>

namespace uqstream {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

Eigen::ArrayXd initial_estimates(const AlgoConfig& cfg, const InputModel& model,
                                 const Eigen::ArrayXd& thetas, const SimulationBlock& block) {
  switch (cfg.method) {
    case Method::kTlis1:
      return cis_estimate(model, thetas, block);
    case Method::kTlis2:
      return cfg.warmup > 0 ? sample_mean_estimate(block) : cis_estimate(model, thetas, block);
    default:
      return sample_mean_estimate(block);
  }
}

}  // namespace

std::string_view to_string(Method method) {
  switch (method) {
    case Method::kTlis1:
      return "tlis1";
    case Method::kTlis2:
      return "tlis2";
    case Method::kDirectMc:
      return "direct-mc";
    case Method::kSimpleIs:
      return "simple-is";
    case Method::kGreen:
      return "green";
  }
  return "unknown";
}

Method parse_method(std::string_view text) {
  for (Method m : {Method::kTlis1, Method::kTlis2, Method::kDirectMc, Method::kSimpleIs,
                   Method::kGreen}) {
    if (text == to_string(m)) return m;
  }
  throw UsageError("unknown method '" + std::string(text) + "'");
}

std::string AlgoConfig::display_name() const {
  return label.empty() ? std::string(to_string(method)) : label;
}

std::size_t AlgoConfig::initial_block_replications() const {
  const bool scenario_one = method == Method::kTlis1 || method == Method::kSimpleIs;
  return scenario_one && initial_replications > 0 ? initial_replications : N;
}

std::size_t AlgoConfig::window() const {
  switch (method) {
    case Method::kDirectMc:
    case Method::kSimpleIs:
      return 1;
    default:
      return K;
  }
}

void validate(const AlgoConfig& cfg) {
  if (cfg.M < 1) throw UsageError("M must be at least 1");
  if (cfg.N < 1) throw UsageError("N must be at least 1");
  if (cfg.K < 1) throw UsageError("K must be at least 1");
  if (cfg.alphas.empty()) throw UsageError("at least one quantile level is required");
  for (double a : cfg.alphas) {
    if (!(a > 0.0 && a < 1.0)) throw UsageError("quantile levels must lie in (0, 1)");
  }
  if (!(cfg.interval_alpha > 0.0 && cfg.interval_alpha < 1.0)) {
    throw UsageError("interval level must lie in (0, 1)");
  }
}

SimulationBlock run_block(const Simulator& sim, const Eigen::ArrayXd& thetas,
                          std::size_t replications, Rng& rng) {
  const Eigen::Index m = thetas.size();
  const auto n = static_cast<Eigen::Index>(replications);
  Eigen::ArrayXXd inputs(m, n), outputs(m, n);
  for (Eigen::Index i = 0; i < m; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      const SimDraw d = sim.simulate(thetas[i], rng);
      inputs(i, j) = d.input;
      outputs(i, j) = d.output;
    }
  }
  return make_simulation_block(sim.input_model(), thetas, std::move(inputs), std::move(outputs));
}

AlgoState initialize(const AlgoConfig& cfg, const ConjugatePosterior& prior,
                     const Simulator& sim, const StreamSet& streams) {
  validate(cfg);
  if (prior.family() != sim.input_model().conjugate_family()) {
    throw UsageError("prior is not conjugate to the simulator's input model");
  }
  AlgoState state(prior, cfg.window());

  Rng theta_rng = streams.theta(0);
  Eigen::ArrayXd thetas = posterior_sample(prior, theta_rng, cfg.M, cfg.box);
  Rng sim_rng = streams.simulation(0);
  const std::size_t n0 = cfg.initial_block_replications();
  auto block =
      std::make_shared<const SimulationBlock>(run_block(sim, thetas, n0, sim_rng));
  state.simulation_calls_ = cfg.M * n0;

  StageRecord record;
  record.stage = 0;
  record.posterior = prior;
  record.estimates = initial_estimates(cfg, sim.input_model(), thetas, *block);
  record.thetas = std::move(thetas);
  record.simulation = block;
  if (cfg.method == Method::kTlis1 || cfg.method == Method::kSimpleIs) state.pinned_ = block;
  state.buffer_.push(std::move(record));
  return state;
}

QuantReport step(AlgoState& state, double datum, const AlgoConfig& cfg, const Simulator& sim,
                 const StreamSet& streams) {
  const InputModel& model = sim.input_model();
  if (!model.in_support(datum)) throw DomainError("observation outside the input model support");

  state.posterior_ = posterior_update(state.posterior_, datum);
  const std::size_t t = ++state.stage_;
  if (cfg.weight_mode == WeightMode::kSelfNormalizedLikelihood) {
    state.recent_data_.push_back(datum);
    while (state.recent_data_.size() > cfg.window()) state.recent_data_.pop_front();
  }

  if (cfg.method != Method::kSimpleIs) {
    Rng theta_rng = streams.theta(t);
    StageRecord record;
    record.stage = t;
    record.posterior = state.posterior_;
    record.thetas = posterior_sample(state.posterior_, theta_rng, cfg.M, cfg.box);

    if (cfg.method == Method::kTlis1) {
      record.estimates = cis_estimate(model, record.thetas, *state.pinned_);
    } else {
      Rng sim_rng = streams.simulation(t);
      auto block = std::make_shared<const SimulationBlock>(
          run_block(sim, record.thetas, cfg.N, sim_rng));
      state.simulation_calls_ += cfg.M * cfg.N;
      const bool use_cis = cfg.method == Method::kTlis2 && t >= cfg.warmup;
      record.estimates = use_cis ? cis_estimate(model, record.thetas, *block)
                                 : sample_mean_estimate(*block);
      record.simulation = std::move(block);
    }
    state.buffer_.push(std::move(record));
  }

  // Outer layer over the retained stages.
  std::vector<WeightedStage> window;
  std::vector<Eigen::ArrayXd> log_weights;
  window.reserve(state.buffer_.size());
  for (const StageRecord& rec : state.buffer_.stages()) {
    WeightedStage ws;
    ws.stage = rec.stage;
    ws.estimates = rec.estimates;
    if (cfg.weight_mode == WeightMode::kExactRatio) {
      ws.log_weights = outer_log_weights(state.posterior_, rec);
    } else {
      const std::size_t since = t - rec.stage;
      std::vector<double> data(state.recent_data_.end() - static_cast<std::ptrdiff_t>(since),
                               state.recent_data_.end());
      ws.log_weights = likelihood_log_weights(model, data, rec.thetas);
    }
    log_weights.push_back(ws.log_weights);
    window.push_back(std::move(ws));
  }

  QuantReport report;
  report.t = t;
  report.simulation_calls = state.simulation_calls_;
  report.diagnostics = weight_diagnostics(log_weights);

  std::optional<WeightedECDF> ecdf;
  try {
    ecdf = window_ecdf(window);
  } catch (const DegenerateWeightsError& e) {
    report.error = e.what();
  }

  for (double alpha : cfg.alphas) {
    QuantileEstimate q;
    q.alpha = alpha;
    q.estimate = ecdf ? weighted_quantile(*ecdf, alpha) : kNaN;
    if (sim.monotonicity() != Monotonicity::kUnknown) {
      try {
        q.truth = true_quantile(sim, state.posterior_, alpha);
      } catch (const UnsupportedError&) {
      }
    }
    report.quantiles.push_back(q);
  }
  report.credible_interval =
      ecdf ? credible_interval(*ecdf, cfg.interval_alpha) : std::pair{kNaN, kNaN};
  return report;
}

void restart(AlgoState& state, const AlgoConfig& cfg, const Simulator& sim,
             const StreamSet& streams) {
  if (cfg.method != Method::kTlis1) throw UsageError("restart applies to tlis1 only");
  const std::size_t t = state.stage_;
  Rng rng = streams.restart(t);
  Eigen::ArrayXd thetas = posterior_sample(state.posterior_, rng, cfg.M, cfg.box);
  const std::size_t n0 = cfg.initial_block_replications();
  auto block = std::make_shared<const SimulationBlock>(run_block(sim, thetas, n0, rng));
  state.simulation_calls_ += cfg.M * n0;

  StageRecord record;
  record.stage = t;
  record.posterior = state.posterior_;
  record.estimates = cis_estimate(sim.input_model(), thetas, *block);
  record.thetas = std::move(thetas);
  record.simulation = block;
  state.pinned_ = block;
  state.buffer_ = StageBuffer(cfg.window(), t);
  state.buffer_.push(std::move(record));
  state.recent_data_.clear();
}

}  // namespace uqstream
