#include "uqstream/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace uqstream {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// Neumaier accumulator.
struct Accumulator {
  double sum = 0.0;
  double carry = 0.0;

  void add(double x) {
    const double t = sum + x;
    const bool sum_larger = std::abs(sum) >= std::abs(x);
    const double big = sum_larger ? sum : x;
    const double small = sum_larger ? x : sum;
    carry += (big - t) + small;
    sum = t;
  }
  double value() const { return sum + carry; }
};

Eigen::Map<const Eigen::ArrayXd> flat(const Eigen::ArrayXXd& a) {
  return {a.data(), a.size()};
}

}  // namespace

double compensated_sum(const Eigen::Ref<const Eigen::ArrayXd>& values) {
  // Four interleaved lanes, merged in a fixed order.
  constexpr Eigen::Index kLanes = 4;
  Accumulator lanes[kLanes];
  const Eigen::Index n = values.size();
  const Eigen::Index body = n - n % kLanes;
  for (Eigen::Index i = 0; i < body; i += kLanes) {
    for (Eigen::Index l = 0; l < kLanes; ++l) lanes[l].add(values[i + l]);
  }
  for (Eigen::Index i = body; i < n; ++i) lanes[i - body].add(values[i]);
  Accumulator total;
  for (const Accumulator& l : lanes) {
    total.add(l.sum);
    total.add(l.carry);
  }
  return total.value();
}

// ---------------------------------------------------------------------------
// Outer layer

Eigen::ArrayXd outer_log_weights(const ConjugatePosterior& current, const StageRecord& stage) {
  if (!current.compatible_with(stage.posterior)) throw UsageError("posterior family mismatch");
  return log_ratio_posteriors(current, stage.posterior, stage.thetas);
}

Eigen::ArrayXd likelihood_log_weights(const InputModel& model, std::span<const double> data,
                                      const Eigen::ArrayXd& thetas) {
  if (thetas.size() == 0) return {};
  const Eigen::Map<const Eigen::ArrayXd> xs(data.data(), static_cast<Eigen::Index>(data.size()));
  Eigen::ArrayXd lw(thetas.size());
  for (Eigen::Index i = 0; i < thetas.size(); ++i) {
    lw[i] = data.empty() ? 0.0 : compensated_sum(log_pdf(model, xs, thetas[i]));
  }
  // Stage mean of exp(lw) equal to one.
  const double shift = lw.maxCoeff();
  const double log_mean =
      shift + std::log((lw - shift).exp().sum() / static_cast<double>(thetas.size()));
  return lw - log_mean;
}

// ---------------------------------------------------------------------------
// Inner layer

Eigen::ArrayXd cis_estimate(const InputModel& model, const Eigen::ArrayXd& targets,
                            const SimulationBlock& proposal) {
  const auto x = flat(proposal.inputs);
  const auto h = flat(proposal.outputs);
  const auto den = flat(proposal.log_proposal);
  const double count = static_cast<double>(x.size());
  if (x.size() == 0) throw UsageError("empty simulation block");

  Eigen::ArrayXd out(targets.size());
  Eigen::ArrayXd terms(x.size());
  if (model.family() == InputFamily::kExponentialRate) {
    for (Eigen::Index k = 0; k < targets.size(); ++k) {
      const double theta = targets[k];
      if (!model.in_parameter_space(theta)) throw DomainError("CIS target outside parameter space");
      const double log_theta = std::log(theta);
      terms = (log_theta - theta * x - den).exp() * h;
      out[k] = compensated_sum(terms) / count;
    }
  } else {
    const double s = model.sigma();
    const double c = -0.5 * std::log(2.0 * std::numbers::pi * s * s);
    const double inv2v = 1.0 / (2.0 * s * s);
    for (Eigen::Index k = 0; k < targets.size(); ++k) {
      const double theta = targets[k];
      if (!model.in_parameter_space(theta)) throw DomainError("CIS target outside parameter space");
      terms = (c - (x - theta).square() * inv2v - den).exp() * h;
      out[k] = compensated_sum(terms) / count;
    }
  }
  return out;
}

Eigen::ArrayXd cis_estimate(const InputModel& model, const Eigen::ArrayXd& targets,
                            const StageRecord& proposal_stage) {
  if (!proposal_stage.has_simulation()) throw UsageError("proposal stage has no simulation block");
  return cis_estimate(model, targets, *proposal_stage.simulation);
}

Eigen::ArrayXd sample_mean_estimate(const SimulationBlock& block) {
  // Shifted by the first output of each row: exact for constant rows.
  Eigen::ArrayXd out(block.rows());
  const Eigen::Index n = block.cols();
  if (n == 0) throw UsageError("empty simulation block");
  for (Eigen::Index i = 0; i < block.rows(); ++i) {
    const double first = block.outputs(i, 0);
    const Eigen::ArrayXd centered = block.outputs.row(i).transpose() - first;
    out[i] = first + compensated_sum(centered) / static_cast<double>(n);
  }
  return out;
}

Eigen::ArrayXd sample_mean_estimate(const StageRecord& stage) {
  if (!stage.has_simulation()) throw UsageError("stage has no simulation block");
  return sample_mean_estimate(*stage.simulation);
}

// ---------------------------------------------------------------------------
// Weighted ECDF

double WeightedECDF::cdf(double h) const {
  const auto it = std::upper_bound(values_.begin(), values_.end(), h);
  if (it == values_.begin()) return 0.0;
  return cumulative_[static_cast<std::size_t>(it - values_.begin()) - 1];
}

WeightedECDF weighted_cdf(std::span<const double> values, std::span<const double> weights,
                          std::span<const SampleTag> tags) {
  if (values.size() != weights.size()) throw InputError("values and weights differ in length");
  if (!tags.empty() && tags.size() != values.size()) throw InputError("tags differ in length");
  if (values.empty()) throw InputError("empty ECDF");

  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  auto tag_of = [&](std::size_t i) {
    return tags.empty() ? SampleTag{0, static_cast<std::uint32_t>(i)} : tags[i];
  };
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!std::isfinite(values[i])) throw InputError("non-finite value in ECDF");
    if (!(weights[i] >= 0.0) || !std::isfinite(weights[i])) {
      throw InputError("weights must be finite and nonnegative");
    }
  }
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (values[a] != values[b]) return values[a] < values[b];
    return tag_of(a) < tag_of(b);
  });

  WeightedECDF ecdf;
  Accumulator running;
  for (std::size_t pos = 0; pos < order.size(); ++pos) {
    const std::size_t i = order[pos];
    running.add(weights[i]);
    if (ecdf.values_.empty() || ecdf.values_.back() != values[i]) {
      ecdf.values_.push_back(values[i]);
      ecdf.representatives_.push_back(tag_of(i));
      ecdf.cumulative_.push_back(running.value());
    } else {
      ecdf.cumulative_.back() = running.value();
    }
  }
  ecdf.total_ = running.value();
  if (!(ecdf.total_ > 0.0)) throw DegenerateWeightsError("importance weights sum to zero");
  for (double& c : ecdf.cumulative_) c /= ecdf.total_;
  ecdf.cumulative_.back() = 1.0;
  return ecdf;
}

std::size_t weighted_quantile_position(const WeightedECDF& ecdf, double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw DomainError("quantile level must lie in (0, 1)");
  if (ecdf.size() == 0) throw UsageError("empty ECDF");
  const auto& cum = ecdf.cumulative();
  const auto it = std::lower_bound(cum.begin(), cum.end(), alpha);
  return std::min(static_cast<std::size_t>(it - cum.begin()), cum.size() - 1);
}

double weighted_quantile(const WeightedECDF& ecdf, double alpha) {
  return ecdf.values()[weighted_quantile_position(ecdf, alpha)];
}

std::pair<double, double> credible_interval(const WeightedECDF& ecdf, double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw DomainError("credible level must lie in (0, 1)");
  return {weighted_quantile(ecdf, alpha / 2.0), weighted_quantile(ecdf, 1.0 - alpha / 2.0)};
}

// ---------------------------------------------------------------------------
// Window estimators

double window_cdf(std::span<const WeightedStage> window, double h) {
  Accumulator acc;
  std::size_t count = 0;
  for (const WeightedStage& s : window) {
    if (s.log_weights.size() != s.estimates.size()) throw InputError("window stage misaligned");
    for (Eigen::Index i = 0; i < s.estimates.size(); ++i) {
      if (h >= s.estimates[i]) acc.add(std::exp(s.log_weights[i]));
    }
    count += static_cast<std::size_t>(s.estimates.size());
  }
  if (count == 0) throw UsageError("empty window");
  return acc.value() / static_cast<double>(count);
}

WeightedECDF window_ecdf(std::span<const WeightedStage> window) {
  double shift = kNegInf;
  std::size_t count = 0;
  for (const WeightedStage& s : window) {
    if (s.log_weights.size() != s.estimates.size()) throw InputError("window stage misaligned");
    if (s.log_weights.size() > 0) shift = std::max(shift, s.log_weights.maxCoeff());
    count += static_cast<std::size_t>(s.estimates.size());
  }
  if (count == 0) throw UsageError("empty window");
  if (std::isnan(shift)) throw DegenerateWeightsError("NaN importance weight");
  if (!std::isfinite(shift)) throw DegenerateWeightsError("importance weights sum to zero");

  std::vector<double> values, weights;
  std::vector<SampleTag> tags;
  values.reserve(count);
  weights.reserve(count);
  tags.reserve(count);
  for (const WeightedStage& s : window) {
    for (Eigen::Index i = 0; i < s.estimates.size(); ++i) {
      values.push_back(s.estimates[i]);
      weights.push_back(std::exp(s.log_weights[i] - shift));
      tags.push_back({static_cast<std::uint32_t>(s.stage), static_cast<std::uint32_t>(i)});
    }
  }
  return weighted_cdf(values, weights, tags);
}

WeightDiagnostics weight_diagnostics(std::span<const Eigen::ArrayXd> log_weights) {
  WeightDiagnostics d;
  double shift = kNegInf;
  std::size_t total = 0;
  for (const Eigen::ArrayXd& lw : log_weights) {
    if (lw.size() > 0) shift = std::max(shift, lw.maxCoeff());
    total += static_cast<std::size_t>(lw.size());
  }
  if (total == 0) throw UsageError("no weights");

  Accumulator sum, sum_sq;
  for (const Eigen::ArrayXd& lw : log_weights) {
    const double n = static_cast<double>(lw.size());
    const Eigen::ArrayXd w = lw.exp();
    const double mean = n > 0 ? compensated_sum(w) / n : 0.0;
    const double mean_sq = n > 0 ? compensated_sum(w.square()) / n : 0.0;
    d.stage_mean.push_back(mean);
    d.stage_variance.push_back(std::max(0.0, mean_sq - mean * mean));

    double stage_ess = 0.0;
    if (n > 0 && std::isfinite(lw.maxCoeff())) {
      const Eigen::ArrayXd ws = (lw - lw.maxCoeff()).exp();
      stage_ess = ws.sum() * ws.sum() / ws.square().sum();
    }
    d.stage_ess.push_back(stage_ess);

    if (std::isfinite(shift) && n > 0) {
      const Eigen::ArrayXd ws = (lw - shift).exp();
      sum.add(compensated_sum(ws));
      sum_sq.add(compensated_sum(ws.square()));
    }
  }
  d.ess = sum_sq.value() > 0.0 ? sum.value() * sum.value() / sum_sq.value() : 0.0;
  return d;
}

}  // namespace uqstream
