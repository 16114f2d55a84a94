#include "uqstream/efd.hpp"

#include <boost/math/special_functions/erf.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include <algorithm>
#include <limits>
#include <random>
#include <string>

namespace uqstream {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr std::size_t kMaxRejections = 100'000'000;

void require_compatible(const ConjugatePosterior& a, const ConjugatePosterior& b) {
  if (!a.compatible_with(b)) {
    throw UsageError("posterior family mismatch");
  }
}

double gamma_log_normalizer(double shape, double rate) {
  return shape * std::log(rate) - std::lgamma(shape);
}

double normal_quantile_std(double p) {
  return -std::numbers::sqrt2 * boost::math::erfc_inv(2.0 * p);
}

// Solves P(a, x) = p for x (regularized lower incomplete gamma) with a
// bracketed Newton iteration. Steps that leave the bracket fall back to
// geometric bisection, which handles roots spanning many decades.
double gamma_p_root(double a, double p) {
  auto f = [&](double x) { return boost::math::gamma_p(a, x) - p; };

  double lo = std::max(a, std::numeric_limits<double>::min());
  double hi = lo;
  for (int i = 0; f(lo) > 0.0; ++i) {
    if (i > 2100 || lo <= std::numeric_limits<double>::denorm_min()) return lo;
    hi = lo;
    lo *= 0.5;
  }
  for (int i = 0; f(hi) < 0.0; ++i) {
    if (i > 2100) throw DomainError("gamma quantile bracket failed");
    lo = hi;
    hi *= 2.0;
  }

  double x = 0.5 * (lo + hi);
  for (int iter = 0; iter < kQuantileMaxIter; ++iter) {
    const double fx = f(x);
    if (fx == 0.0) return x;
    if (fx < 0.0) {
      lo = x;
    } else {
      hi = x;
    }
    if (hi - lo <= kQuantileRelTol * 1e-2 * hi) return 0.5 * (lo + hi);

    const double deriv = boost::math::gamma_p_derivative(a, x);
    double next = (deriv > 0.0) ? x - fx / deriv : std::numeric_limits<double>::quiet_NaN();
    if (!(next > lo && next < hi)) {
      next = (lo > 0.0 && hi / lo > 4.0) ? std::sqrt(lo * hi) : 0.5 * (lo + hi);
    }
    if (std::abs(next - x) <= kQuantileRelTol * 1e-2 * std::abs(next)) return next;
    x = next;
  }
  return x;
}

}  // namespace

ParamBox::ParamBox(double lower, double upper) : lower_(lower), upper_(upper) {
  if (!std::isfinite(lower) || !std::isfinite(upper) || !(lower < upper)) {
    throw DomainError("parameter box requires finite lower < upper");
  }
}

InputModel InputModel::exponential_rate() { return {InputFamily::kExponentialRate, 0.0}; }

InputModel InputModel::normal_known_variance(double sigma) {
  if (!(sigma > 0.0) || !std::isfinite(sigma)) {
    throw DomainError("normal input model requires sigma > 0");
  }
  return {InputFamily::kNormalKnownVariance, sigma};
}

bool InputModel::in_support(double x) const {
  if (!std::isfinite(x)) return false;
  return family_ == InputFamily::kNormalKnownVariance || x >= 0.0;
}

bool InputModel::in_parameter_space(double theta) const {
  if (!std::isfinite(theta)) return false;
  return family_ == InputFamily::kNormalKnownVariance || theta > 0.0;
}

double InputModel::sample(double theta, Rng& rng) const {
  if (!in_parameter_space(theta)) throw DomainError("parameter outside natural space");
  if (family_ == InputFamily::kExponentialRate) {
    return std::exponential_distribution<double>(theta)(rng);
  }
  return std::normal_distribution<double>(theta, sigma_)(rng);
}

PosteriorFamily InputModel::conjugate_family() const {
  return family_ == InputFamily::kExponentialRate ? PosteriorFamily::kGamma
                                                  : PosteriorFamily::kNormal;
}

double log_pdf(const InputModel& model, double x, double theta) {
  if (!model.in_support(x)) throw DomainError("x outside support");
  if (!model.in_parameter_space(theta)) throw DomainError("theta outside natural space");
  if (model.family() == InputFamily::kExponentialRate) {
    return std::log(theta) - theta * x;
  }
  const double s = model.sigma();
  const double z = (x - theta) / s;
  return -0.5 * std::log(2.0 * std::numbers::pi * s * s) - 0.5 * z * z;
}

// ---------------------------------------------------------------------------

ConjugatePosterior ConjugatePosterior::gamma(double shape, double rate) {
  if (!(shape > 0.0) || !(rate > 0.0) || !std::isfinite(shape) || !std::isfinite(rate)) {
    throw DomainError("gamma posterior requires shape > 0 and rate > 0");
  }
  return {PosteriorFamily::kGamma, shape, rate, 0.0};
}

ConjugatePosterior ConjugatePosterior::normal(double mean, double variance, double obs_sigma) {
  if (!std::isfinite(mean) || !(variance > 0.0) || !std::isfinite(variance) ||
      !(obs_sigma > 0.0) || !std::isfinite(obs_sigma)) {
    throw DomainError("normal posterior requires finite mean, variance > 0, sigma > 0");
  }
  return {PosteriorFamily::kNormal, mean, variance, obs_sigma};
}

ConjugatePosterior ConjugatePosterior::restore(PosteriorFamily family, double first,
                                               double second, double obs_sigma,
                                               std::size_t count, double sufficient_sum) {
  ConjugatePosterior post = family == PosteriorFamily::kGamma
                                ? gamma(first, second)
                                : normal(first, second, obs_sigma);
  post.count_ = count;
  post.sufficient_sum_ = sufficient_sum;
  return post;
}

double ConjugatePosterior::mean() const {
  return family_ == PosteriorFamily::kGamma ? first_ / second_ : first_;
}

double ConjugatePosterior::variance() const {
  return family_ == PosteriorFamily::kGamma ? first_ / (second_ * second_) : second_;
}

bool ConjugatePosterior::compatible_with(const ConjugatePosterior& other) const {
  return family_ == other.family_ && obs_sigma_ == other.obs_sigma_;
}

ConjugatePosterior posterior_update(const ConjugatePosterior& post, double x) {
  if (!std::isfinite(x)) throw InputError("non-finite observation");
  ConjugatePosterior next = post;
  if (post.family_ == PosteriorFamily::kGamma) {
    if (x < 0.0) throw DomainError("exponential observation must be nonnegative");
    next.first_ = post.first_ + 1.0;
    next.second_ = post.second_ + x;
  } else {
    const double obs_var = post.obs_sigma_ * post.obs_sigma_;
    const double precision = 1.0 / post.second_ + 1.0 / obs_var;
    next.second_ = 1.0 / precision;
    next.first_ = (post.first_ / post.second_ + x / obs_var) / precision;
  }
  next.count_ = post.count_ + 1;
  next.sufficient_sum_ = post.sufficient_sum_ + x;
  return next;
}

double posterior_log_pdf(const ConjugatePosterior& post, double theta) {
  if (!std::isfinite(theta)) throw DomainError("non-finite theta");
  if (post.family() == PosteriorFamily::kGamma) {
    if (!(theta > 0.0)) throw DomainError("gamma posterior density requires theta > 0");
    return gamma_log_normalizer(post.shape(), post.rate()) +
           (post.shape() - 1.0) * std::log(theta) - post.rate() * theta;
  }
  const double v = post.variance();
  const double d = theta - post.mean();
  return -0.5 * std::log(2.0 * std::numbers::pi * v) - 0.5 * d * d / v;
}

Eigen::ArrayXd posterior_log_pdf(const ConjugatePosterior& post, const Eigen::ArrayXd& theta) {
  if (post.family() == PosteriorFamily::kGamma) {
    if ((theta <= 0.0).any()) throw DomainError("gamma posterior density requires theta > 0");
    return gamma_log_normalizer(post.shape(), post.rate()) +
           (post.shape() - 1.0) * theta.log() - post.rate() * theta;
  }
  const double v = post.variance();
  return -0.5 * std::log(2.0 * std::numbers::pi * v) - (theta - post.mean()).square() / (2.0 * v);
}

double posterior_cdf(const ConjugatePosterior& post, double theta) {
  if (post.family() == PosteriorFamily::kGamma) {
    if (theta <= 0.0) return 0.0;
    return boost::math::gamma_p(post.shape(), post.rate() * theta);
  }
  return 0.5 * std::erfc(-(theta - post.mean()) / std::sqrt(2.0 * post.variance()));
}

double posterior_quantile(const ConjugatePosterior& post, double p) {
  if (!(p > 0.0 && p < 1.0)) throw DomainError("quantile level must lie in (0, 1)");
  if (post.family() == PosteriorFamily::kGamma) {
    return gamma_p_root(post.shape(), p) / post.rate();
  }
  return post.mean() + std::sqrt(post.variance()) * normal_quantile_std(p);
}

Eigen::ArrayXd posterior_sample(const ConjugatePosterior& post, Rng& rng, std::size_t count,
                                const std::optional<ParamBox>& box) {
  if (count == 0) throw UsageError("sample count must be at least 1");
  Eigen::ArrayXd out(static_cast<Eigen::Index>(count));
  std::size_t rejections = 0;
  auto accept = [&](double theta) {
    if (box && !box->contains(theta)) return false;
    return post.family() == PosteriorFamily::kNormal || (theta > 0.0 && std::isfinite(theta));
  };

  if (post.family() == PosteriorFamily::kGamma) {
    std::gamma_distribution<double> dist(post.shape(), 1.0 / post.rate());
    for (Eigen::Index i = 0; i < out.size(); ++i) {
      double theta = dist(rng);
      while (!accept(theta)) {
        if (++rejections > kMaxRejections) throw DomainError("rejection sampling exhausted");
        theta = dist(rng);
      }
      out[i] = theta;
    }
  } else {
    std::normal_distribution<double> dist(post.mean(), std::sqrt(post.variance()));
    for (Eigen::Index i = 0; i < out.size(); ++i) {
      double theta = dist(rng);
      while (!accept(theta)) {
        if (++rejections > kMaxRejections) throw DomainError("rejection sampling exhausted");
        theta = dist(rng);
      }
      out[i] = theta;
    }
  }
  return out;
}

double log_ratio_posteriors(const ConjugatePosterior& num, const ConjugatePosterior& den,
                            double theta) {
  require_compatible(num, den);
  if (num == den) return 0.0;
  if (num.family() == PosteriorFamily::kGamma) {
    if (!(theta > 0.0) || !std::isfinite(theta)) throw DomainError("theta must be positive");
    return gamma_log_normalizer(num.shape(), num.rate()) -
           gamma_log_normalizer(den.shape(), den.rate()) +
           (num.shape() - den.shape()) * std::log(theta) - (num.rate() - den.rate()) * theta;
  }
  return posterior_log_pdf(num, theta) - posterior_log_pdf(den, theta);
}

Eigen::ArrayXd log_ratio_posteriors(const ConjugatePosterior& num,
                                    const ConjugatePosterior& den, const Eigen::ArrayXd& theta) {
  require_compatible(num, den);
  if (num == den) return Eigen::ArrayXd::Zero(theta.size());
  if (num.family() == PosteriorFamily::kGamma) {
    if ((theta <= 0.0).any()) throw DomainError("theta must be positive");
    const double c = gamma_log_normalizer(num.shape(), num.rate()) -
                     gamma_log_normalizer(den.shape(), den.rate());
    return c + (num.shape() - den.shape()) * theta.log() - (num.rate() - den.rate()) * theta;
  }
  const double v1 = num.variance();
  const double v2 = den.variance();
  return -0.5 * std::log(v1 / v2) - (theta - num.mean()).square() / (2.0 * v1) +
         (theta - den.mean()).square() / (2.0 * v2);
}

double ratio_second_moment(const ConjugatePosterior& num, const ConjugatePosterior& den) {
  require_compatible(num, den);
  if (num == den) return 1.0;
  if (num.family() == PosteriorFamily::kGamma) {
    const double a1 = num.shape(), b1 = num.rate();
    const double a2 = den.shape(), b2 = den.rate();
    const double a = 2.0 * a1 - a2;
    const double b = 2.0 * b1 - b2;
    if (!(a > 0.0) || !(b > 0.0)) return kInf;
    const double log_m = 2.0 * a1 * std::log(b1) + std::lgamma(a2) + std::lgamma(a) -
                         2.0 * std::lgamma(a1) - a2 * std::log(b2) - a * std::log(b);
    return std::exp(log_m);
  }
  const double v1 = num.variance(), v2 = den.variance();
  const double precision = 2.0 / v1 - 1.0 / v2;
  if (!(precision > 0.0)) return kInf;
  const double d = num.mean() - den.mean();
  const double log_m = 0.5 * std::log(v2 / precision) - std::log(v1) +
                       (2.0 / v1) * (1.0 / v2) * d * d / (2.0 * precision);
  return std::exp(log_m);
}

}  // namespace uqstream
