#include "uqstream/models.hpp"

#include <cmath>

namespace uqstream {

SimDraw Simulator::simulate(double theta, Rng& rng) const {
  const double xi = input_model().sample(theta, rng);
  return {xi, output(xi)};
}

NewsVendor::NewsVendor(double order, double price, double cost)
    : order_(order), price_(price), cost_(cost) {
  if (!(order > 0.0) || !(cost > 0.0) || !(price > cost) || !std::isfinite(price)) {
    throw DomainError("news vendor requires p > c > 0 and q > 0");
  }
}

double NewsVendor::output(double demand) const {
  return price_ * std::min(order_, demand) - cost_ * order_;
}

std::optional<double> NewsVendor::expected_performance(double theta) const {
  if (!(theta > 0.0) || !std::isfinite(theta)) throw DomainError("news vendor needs theta > 0");
  // E[min(q, D)] = (1 - exp(-θq)) / θ for D ~ Exp(θ).
  return price_ * (-std::expm1(-theta * order_)) / theta - cost_ * order_;
}

std::optional<double> LinearModel::expected_performance(double theta) const {
  if (!model_.in_parameter_space(theta)) throw DomainError("theta outside parameter space");
  return model_.family() == InputFamily::kExponentialRate ? 1.0 / theta : theta;
}

Monotonicity LinearModel::monotonicity() const {
  return model_.family() == InputFamily::kExponentialRate ? Monotonicity::kDecreasing
                                                          : Monotonicity::kIncreasing;
}

ZeroNoiseSimulator::ZeroNoiseSimulator(std::shared_ptr<const Simulator> inner)
    : inner_(std::move(inner)) {
  if (!inner_) throw UsageError("null simulator");
}

SimDraw ZeroNoiseSimulator::simulate(double theta, Rng& rng) const {
  const auto h = inner_->expected_performance(theta);
  if (!h) throw UnsupportedError("zero-noise stub needs a closed-form performance");
  return {input_model().sample(theta, rng), *h};
}

double simulate(const Simulator& sim, double theta, Rng& rng) {
  return sim.simulate(theta, rng).output;
}

double true_performance(const Simulator& sim, double theta) {
  const auto h = sim.expected_performance(theta);
  if (!h) throw UnsupportedError(sim.name() + " has no closed-form performance");
  return *h;
}

double true_quantile(const Simulator& sim, const ConjugatePosterior& post, double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw DomainError("quantile level must lie in (0, 1)");
  switch (sim.monotonicity()) {
    case Monotonicity::kDecreasing:
      return true_performance(sim, posterior_quantile(post, 1.0 - alpha));
    case Monotonicity::kIncreasing:
      return true_performance(sim, posterior_quantile(post, alpha));
    case Monotonicity::kUnknown:
      break;
  }
  throw UnsupportedError("true quantile requires monotone performance");
}

}  // namespace uqstream
