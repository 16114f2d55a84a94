#ifndef UQSTREAM_MODELS_HPP
#define UQSTREAM_MODELS_HPP

#include <atomic>
#include <memory>
#include <optional>
#include <string>

#include "uqstream/efd.hpp"
#include "uqstream/rng.hpp"

namespace uqstream {

enum class Monotonicity { kIncreasing, kDecreasing, kUnknown };

/// One simulation run: the sampled input and the resulting output h(ξ).
struct SimDraw {
  double input = 0.0;
  double output = 0.0;
};

/// A stochastic simulation driven by a parametric input model.
///
/// The default simulate() draws ξ ~ p(· | θ) and returns h(ξ). Models with a
/// closed-form expected performance H(θ) expose it through true_performance.
class Simulator {
 public:
  virtual ~Simulator() = default;

  virtual const InputModel& input_model() const = 0;
  virtual double output(double input) const = 0;
  virtual SimDraw simulate(double theta, Rng& rng) const;

  virtual std::optional<double> expected_performance(double theta) const {
    (void)theta;
    return std::nullopt;
  }
  virtual Monotonicity monotonicity() const { return Monotonicity::kUnknown; }
  virtual std::string name() const = 0;
};

/// Profit p·min(q, D) - c·q with exponential demand D.
class NewsVendor final : public Simulator {
 public:
  NewsVendor(double order = 0.5, double price = 1.5, double cost = 1.0);

  double order() const { return order_; }
  double price() const { return price_; }
  double cost() const { return cost_; }

  const InputModel& input_model() const override { return model_; }
  double output(double demand) const override;
  std::optional<double> expected_performance(double theta) const override;
  Monotonicity monotonicity() const override { return Monotonicity::kDecreasing; }
  std::string name() const override { return "news-vendor"; }

 private:
  InputModel model_ = InputModel::exponential_rate();
  double order_;
  double price_;
  double cost_;
};

/// h ≡ c.
class ConstantModel final : public Simulator {
 public:
  ConstantModel(InputModel model, double value) : model_(model), value_(value) {}

  const InputModel& input_model() const override { return model_; }
  double output(double) const override { return value_; }
  std::optional<double> expected_performance(double) const override { return value_; }
  std::string name() const override { return "constant"; }

 private:
  InputModel model_;
  double value_;
};

/// h(ξ) = ξ. H(θ) = 1/θ for exponential-rate inputs, θ for normal inputs.
class LinearModel final : public Simulator {
 public:
  explicit LinearModel(InputModel model) : model_(model) {}

  const InputModel& input_model() const override { return model_; }
  double output(double input) const override { return input; }
  std::optional<double> expected_performance(double theta) const override;
  Monotonicity monotonicity() const override;
  std::string name() const override { return "linear"; }

 private:
  InputModel model_;
};

/// Wraps a model with closed-form H and returns H(θ) as every output, while
/// still drawing inputs so that block caches stay well defined.
class ZeroNoiseSimulator final : public Simulator {
 public:
  explicit ZeroNoiseSimulator(std::shared_ptr<const Simulator> inner);

  const InputModel& input_model() const override { return inner_->input_model(); }
  double output(double input) const override { return inner_->output(input); }
  SimDraw simulate(double theta, Rng& rng) const override;
  std::optional<double> expected_performance(double theta) const override {
    return inner_->expected_performance(theta);
  }
  Monotonicity monotonicity() const override { return inner_->monotonicity(); }
  std::string name() const override { return "zero-noise(" + inner_->name() + ")"; }

 private:
  std::shared_ptr<const Simulator> inner_;
};

/// Counts simulate() calls. Thread-safe.
class CountingSimulator final : public Simulator {
 public:
  explicit CountingSimulator(std::shared_ptr<const Simulator> inner) : inner_(std::move(inner)) {}

  const InputModel& input_model() const override { return inner_->input_model(); }
  double output(double input) const override { return inner_->output(input); }
  SimDraw simulate(double theta, Rng& rng) const override {
    calls_.fetch_add(1, std::memory_order_relaxed);
    return inner_->simulate(theta, rng);
  }
  std::optional<double> expected_performance(double theta) const override {
    return inner_->expected_performance(theta);
  }
  Monotonicity monotonicity() const override { return inner_->monotonicity(); }
  std::string name() const override { return inner_->name(); }

  std::size_t calls() const { return calls_.load(std::memory_order_relaxed); }

 private:
  std::shared_ptr<const Simulator> inner_;
  mutable std::atomic<std::size_t> calls_{0};
};

/// One simulation output at θ.
double simulate(const Simulator& sim, double theta, Rng& rng);

/// H(θ). Throws UnsupportedError when the model has no closed form and
/// DomainError when θ is outside the parameter space.
double true_performance(const Simulator& sim, double theta);

/// α-quantile of the induced posterior of H(θ) for monotone H.
double true_quantile(const Simulator& sim, const ConjugatePosterior& post, double alpha);

}  // namespace uqstream

#endif  // UQSTREAM_MODELS_HPP
