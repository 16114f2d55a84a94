#ifndef UQSTREAM_EFD_HPP
#define UQSTREAM_EFD_HPP

#include <Eigen/Core>

#include <cmath>
#include <cstddef>
#include <numbers>
#include <optional>

#include "uqstream/errors.hpp"
#include "uqstream/rng.hpp"

/**
 * \file
 * \brief Exponential-family input models and their conjugate posteriors.
 *
 * Two conjugate pairs are implemented:
 *  - exponential data with unknown rate θ, Gamma(shape, rate) posterior;
 *  - normal data with known σ and unknown mean θ, normal posterior.
 *
 * All densities are evaluated in log space with closed-form normalizing
 * constants, so ratios between posteriors at different time stages are exact.
 */

namespace uqstream {

enum class InputFamily { kExponentialRate, kNormalKnownVariance };
enum class PosteriorFamily { kGamma, kNormal };

/// Compact parameter box Θ = [lower, upper].
class ParamBox {
 public:
  ParamBox(double lower, double upper);

  double lower() const { return lower_; }
  double upper() const { return upper_; }
  bool contains(double theta) const { return theta >= lower_ && theta <= upper_; }

 private:
  double lower_;
  double upper_;
};

/// Parametric input distribution p(x | θ).
class InputModel {
 public:
  static InputModel exponential_rate();
  static InputModel normal_known_variance(double sigma);

  InputFamily family() const { return family_; }
  double sigma() const { return sigma_; }

  bool in_support(double x) const;
  bool in_parameter_space(double theta) const;

  /// Draws ξ ~ p(· | θ).
  double sample(double theta, Rng& rng) const;

  /// The posterior family conjugate to this likelihood.
  PosteriorFamily conjugate_family() const;

 private:
  InputModel(InputFamily family, double sigma) : family_(family), sigma_(sigma) {}

  InputFamily family_;
  double sigma_;
};

/// log p(x | θ), exact.
double log_pdf(const InputModel& model, double x, double theta);

/// Elementwise log p(x_j | θ) for an array of inputs. No domain checks;
/// callers pass inputs previously drawn from the model.
template <typename Derived>
Eigen::Array<typename Derived::Scalar, Eigen::Dynamic, 1> log_pdf(
    const InputModel& model, const Eigen::ArrayBase<Derived>& x, typename Derived::Scalar theta) {
  using Scalar = typename Derived::Scalar;
  if (model.family() == InputFamily::kExponentialRate) {
    return std::log(theta) - theta * x.derived();
  }
  const Scalar s = model.sigma();
  const Scalar c = -Scalar(0.5) * std::log(Scalar(2) * std::numbers::pi_v<Scalar> * s * s);
  return c - (x.derived() - theta).square() / (Scalar(2) * s * s);
}

/// Conjugate posterior over a scalar input parameter.
///
/// Gamma posteriors are parameterized by (shape, rate); normal posteriors by
/// (mean, variance) together with the known observation σ. The running
/// sufficient statistic and the observation count are carried along.
class ConjugatePosterior {
 public:
  static ConjugatePosterior gamma(double shape, double rate);
  static ConjugatePosterior normal(double mean, double variance, double obs_sigma);

  PosteriorFamily family() const { return family_; }

  double shape() const { return first_; }
  double rate() const { return second_; }
  double mean() const;
  double variance() const;
  double obs_sigma() const { return obs_sigma_; }

  std::size_t count() const { return count_; }
  double sufficient_sum() const { return sufficient_sum_; }

  /// Whether num/den ratios between these two posteriors are defined.
  bool compatible_with(const ConjugatePosterior& other) const;

  friend ConjugatePosterior posterior_update(const ConjugatePosterior& post, double x);
  friend bool operator==(const ConjugatePosterior&, const ConjugatePosterior&) = default;

  /// Rebuilds a posterior from stored fields (snapshot loading).
  static ConjugatePosterior restore(PosteriorFamily family, double first, double second,
                                    double obs_sigma, std::size_t count, double sufficient_sum);

 private:
  ConjugatePosterior(PosteriorFamily family, double first, double second, double obs_sigma)
      : family_(family), first_(first), second_(second), obs_sigma_(obs_sigma) {}

  PosteriorFamily family_;
  double first_;   // shape (gamma) or mean (normal)
  double second_;  // rate (gamma) or variance (normal)
  double obs_sigma_ = 0.0;
  std::size_t count_ = 0;
  double sufficient_sum_ = 0.0;
};

/// Exact conjugate update with one observation.
ConjugatePosterior posterior_update(const ConjugatePosterior& post, double x);

double posterior_log_pdf(const ConjugatePosterior& post, double theta);
Eigen::ArrayXd posterior_log_pdf(const ConjugatePosterior& post, const Eigen::ArrayXd& theta);

double posterior_cdf(const ConjugatePosterior& post, double theta);

/// Inverse CDF, accurate to relative 1e-10.
double posterior_quantile(const ConjugatePosterior& post, double p);

/// Draws M independent samples. With a box, draws outside it are rejected.
/// Gamma draws that underflow to zero are rejected as well, since θ = 0 is
/// outside the natural parameter space of the exponential model.
Eigen::ArrayXd posterior_sample(const ConjugatePosterior& post, Rng& rng, std::size_t count,
                                const std::optional<ParamBox>& box = std::nullopt);

/// log(π_num(θ) / π_den(θ)).
double log_ratio_posteriors(const ConjugatePosterior& num, const ConjugatePosterior& den,
                            double theta);
Eigen::ArrayXd log_ratio_posteriors(const ConjugatePosterior& num,
                                    const ConjugatePosterior& den, const Eigen::ArrayXd& theta);

/// E_den[(π_num / π_den)²] = ∫ π_num² / π_den. Returns +infinity when the
/// integral diverges.
double ratio_second_moment(const ConjugatePosterior& num, const ConjugatePosterior& den);

/// Quantile root-finding controls.
inline constexpr double kQuantileRelTol = 1e-10;
inline constexpr int kQuantileMaxIter = 200;

}  // namespace uqstream

#endif  // UQSTREAM_EFD_HPP
