#ifndef UQSTREAM_ALGORITHMS_HPP
#define UQSTREAM_ALGORITHMS_HPP

#include <cstddef>
#include <cstdint>
#include <deque>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "uqstream/efd.hpp"
#include "uqstream/estimators.hpp"
#include "uqstream/models.hpp"
#include "uqstream/rng.hpp"
#include "uqstream/stage_buffer.hpp"

/**
 * \file
 * \brief Online quantile estimation procedures as single-step state machines.
 *
 * Every method follows the same cycle: initialize() draws θ_0 from the prior
 * and runs the t = 0 simulation block; each step() consumes one observation,
 * updates the posterior, produces performance estimates for the stage and
 * reports weighted quantiles over its window of stages.
 *
 *  - tlis1: new θ-samples each stage, estimated by cross importance sampling
 *    against the t = 0 block; no simulations after initialization.
 *  - tlis2: new θ-samples and M×N new simulations each stage, estimated by
 *    cross importance sampling within the stage (sample means during warm-up).
 *  - direct-mc: new θ-samples and simulations, sample means, no reuse.
 *  - simple-is: the t = 0 samples reweighted to the current posterior.
 *  - green: new θ-samples and simulations, sample means, reuse across stages.
 */

namespace uqstream {

enum class Method { kTlis1, kTlis2, kDirectMc, kSimpleIs, kGreen };

std::string_view to_string(Method method);
/// Parses "tlis1", "tlis2", "direct-mc", "simple-is", "green".
Method parse_method(std::string_view text);

/// Warm-up value that keeps tlis2 on sample means forever.
inline constexpr std::size_t kNeverCis = std::numeric_limits<std::size_t>::max();

struct AlgoConfig {
  Method method = Method::kTlis2;
  std::size_t M = 30;
  std::size_t N = 10;
  std::size_t K = 20;
  std::vector<double> alphas{0.05, 0.95};
  /// tlis2 uses sample means while t < warmup.
  std::size_t warmup = 0;
  std::uint64_t seed = 1;
  /// Replications per θ in the t = 0 block of tlis1 / simple-is; 0 means N.
  std::size_t initial_replications = 0;
  WeightMode weight_mode = WeightMode::kExactRatio;
  /// Optional rejection box applied to every θ draw.
  std::optional<ParamBox> box;
  /// Level of the reported credible interval.
  double interval_alpha = 0.1;
  /// Display name; defaults to the method name.
  std::string label;

  std::string display_name() const;
  /// Replications per θ in the t = 0 block.
  std::size_t initial_block_replications() const;
  /// Number of stages reported over.
  std::size_t window() const;
};

/// Throws UsageError when a field violates its bounds.
void validate(const AlgoConfig& cfg);

struct QuantileEstimate {
  double alpha = 0.0;
  double estimate = 0.0;
  /// NaN when the model has no analytic quantile.
  double truth = std::numeric_limits<double>::quiet_NaN();
};

struct QuantReport {
  std::size_t t = 0;
  std::vector<QuantileEstimate> quantiles;
  std::pair<double, double> credible_interval{0.0, 0.0};
  WeightDiagnostics diagnostics;
  /// Cumulative simulator calls made by this state.
  std::size_t simulation_calls = 0;
  /// Non-empty when the weights were degenerate; estimates are NaN then.
  std::string error;

  bool ok() const { return error.empty(); }
};

class AlgoState {
 public:
  const ConjugatePosterior& posterior() const { return posterior_; }
  const StageBuffer& buffer() const { return buffer_; }
  /// Stage counter; equals the number of observations consumed.
  std::size_t stage() const { return stage_; }
  std::size_t simulation_calls() const { return simulation_calls_; }
  /// The simulation block kept for the whole run (tlis1, simple-is).
  const std::shared_ptr<const SimulationBlock>& pinned_block() const { return pinned_; }

 private:
  AlgoState(ConjugatePosterior posterior, std::size_t capacity)
      : posterior_(std::move(posterior)), buffer_(capacity) {}

  friend AlgoState initialize(const AlgoConfig&, const ConjugatePosterior&, const Simulator&,
                              const StreamSet&);
  friend QuantReport step(AlgoState&, double, const AlgoConfig&, const Simulator&,
                          const StreamSet&);
  friend void restart(AlgoState&, const AlgoConfig&, const Simulator&, const StreamSet&);

  ConjugatePosterior posterior_;
  StageBuffer buffer_;
  std::shared_ptr<const SimulationBlock> pinned_;
  std::deque<double> recent_data_;
  std::size_t stage_ = 0;
  std::size_t simulation_calls_ = 0;
};

/// Runs `replications` simulations at each θ, row by row.
SimulationBlock run_block(const Simulator& sim, const Eigen::ArrayXd& thetas,
                          std::size_t replications, Rng& rng);

AlgoState initialize(const AlgoConfig& cfg, const ConjugatePosterior& prior,
                     const Simulator& sim, const StreamSet& streams);

/// Consumes one observation and reports quantiles for the new stage.
QuantReport step(AlgoState& state, double datum, const AlgoConfig& cfg, const Simulator& sim,
                 const StreamSet& streams);

/// tlis1 restart: discards the pinned block, draws fresh θ-samples from the
/// current posterior, simulates a new block and restarts the window there.
void restart(AlgoState& state, const AlgoConfig& cfg, const Simulator& sim,
             const StreamSet& streams);

}  // namespace uqstream

#endif  // UQSTREAM_ALGORITHMS_HPP
