#ifndef UQSTREAM_ESTIMATORS_HPP
#define UQSTREAM_ESTIMATORS_HPP

#include <Eigen/Core>

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "uqstream/efd.hpp"
#include "uqstream/stage_buffer.hpp"

/**
 * \file
 * \brief The two importance-sampling layers and weighted quantiles.
 *
 * Outer layer: θ-samples drawn at stage t-k are reweighted to the current
 * posterior by w = π_t(θ) / π_{t-k}(θ). Inner layer (cross importance
 * sampling): the performance at a target θ is estimated from every output of
 * a simulation block, each reweighted by p(ξ | θ) / p(ξ | θ^l).
 */

namespace uqstream {

enum class WeightMode {
  /// Closed-form posterior ratio; unbiased.
  kExactRatio,
  /// Likelihood product over the data received since the stage, normalized
  /// to mean one within the stage. Introduces O(1/M) bias; intended for
  /// models without closed-form posteriors.
  kSelfNormalizedLikelihood,
};

/// log w_{t|t-k}^i = log π_t(θ^i) - log π_{t-k}(θ^i) for the stage's samples.
Eigen::ArrayXd outer_log_weights(const ConjugatePosterior& current, const StageRecord& stage);

/// log ∏_τ p(ξ_τ | θ^i) over `data` (the observations after the stage),
/// shifted so that the stage mean of exp(·) is one.
Eigen::ArrayXd likelihood_log_weights(const InputModel& model, std::span<const double> data,
                                      const Eigen::ArrayXd& thetas);

/// Cross importance sampling estimate of H at each target θ:
///   Ĥ(θ) = 1/(MN) Σ_{l,j} exp(log p(ξ^{l,j}|θ) - log p(ξ^{l,j}|θ^l)) h(ξ^{l,j}).
/// Numerators are computed fresh, denominators come from the block cache.
Eigen::ArrayXd cis_estimate(const InputModel& model, const Eigen::ArrayXd& targets,
                            const SimulationBlock& proposal);
Eigen::ArrayXd cis_estimate(const InputModel& model, const Eigen::ArrayXd& targets,
                            const StageRecord& proposal_stage);

/// Per-θ sample means of the block outputs.
Eigen::ArrayXd sample_mean_estimate(const SimulationBlock& block);
Eigen::ArrayXd sample_mean_estimate(const StageRecord& stage);

/// Compensated (Neumaier) sum in a fixed left-to-right order.
double compensated_sum(const Eigen::Ref<const Eigen::ArrayXd>& values);

/// Where a weighted point came from; used to make intra-tie order reproducible.
struct SampleTag {
  std::uint32_t stage = 0;
  std::uint32_t index = 0;
  friend auto operator<=>(const SampleTag&, const SampleTag&) = default;
};

/// Weighted empirical CDF. Equal values are merged into one atom.
class WeightedECDF {
 public:
  /// Distinct values, ascending.
  const std::vector<double>& values() const { return values_; }
  /// Normalized cumulative weight at each distinct value; the last entry is 1.
  const std::vector<double>& cumulative() const { return cumulative_; }
  /// Tag of the first sample (by tag order) in each atom.
  const std::vector<SampleTag>& representatives() const { return representatives_; }

  double total_weight() const { return total_; }
  std::size_t size() const { return values_.size(); }

  /// Ĝ(h): normalized weight of values ≤ h.
  double cdf(double h) const;

 private:
  friend WeightedECDF weighted_cdf(std::span<const double>, std::span<const double>,
                                   std::span<const SampleTag>);
  std::vector<double> values_;
  std::vector<double> cumulative_;
  std::vector<SampleTag> representatives_;
  double total_ = 0.0;
};

/// Builds Ĝ from values and nonnegative weights. Tags default to
/// (0, position). Throws DegenerateWeightsError when the weights sum to zero.
WeightedECDF weighted_cdf(std::span<const double> values, std::span<const double> weights,
                          std::span<const SampleTag> tags = {});

/// inf{h : Ĝ(h) ≥ α}.
double weighted_quantile(const WeightedECDF& ecdf, double alpha);
/// Position of the quantile atom in ecdf.values().
std::size_t weighted_quantile_position(const WeightedECDF& ecdf, double alpha);

/// (q_{α/2}, q_{1-α/2}).
std::pair<double, double> credible_interval(const WeightedECDF& ecdf, double alpha);

/// One stage of the outer-layer window: its log-weights against the current
/// posterior and the performance estimate attached to each θ-sample.
struct WeightedStage {
  std::size_t stage = 0;
  Eigen::ArrayXd log_weights;
  Eigen::ArrayXd estimates;
};

/// Unnormalized window estimator 1/(Σ M_k) Σ_k Σ_i w_k^i 1{h ≥ Ĥ_k^i}.
/// Unbiased for G_t(h) when the weights are exact ratios.
double window_cdf(std::span<const WeightedStage> window, double h);

/// Self-normalized ECDF over the window. Weights are exponentiated after a
/// global max-shift, which leaves every quantile unchanged.
WeightedECDF window_ecdf(std::span<const WeightedStage> window);

struct WeightDiagnostics {
  std::vector<double> stage_mean;
  std::vector<double> stage_variance;
  std::vector<double> stage_ess;
  /// (Σw)² / Σw² over all stages.
  double ess = 0.0;
};

WeightDiagnostics weight_diagnostics(std::span<const Eigen::ArrayXd> log_weights);

}  // namespace uqstream

#endif  // UQSTREAM_ESTIMATORS_HPP
