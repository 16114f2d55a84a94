#ifndef UQSTREAM_VERIFY_HPP
#define UQSTREAM_VERIFY_HPP

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "uqstream/efd.hpp"

namespace uqstream {

struct PropertyResult {
  std::string name;
  bool passed = false;
  std::string detail;
};

struct VerifyOptions {
  std::uint64_t seed = 1;
  /// Replications for the Monte Carlo mean tests.
  std::size_t replications = 2000;
  /// Width of the mean tests in standard errors.
  double sigmas = 4.0;
};

/// ratio-moment, cdf-unbiased, cis-unbiased, order-preservation, budget,
/// variance-explosion, ratio-moment-decay.
const std::vector<std::string>& property_names();

/// Throws UsageError for an unknown name.
PropertyResult run_property(const std::string& name, const VerifyOptions& opts);

/// ∫ π_num² / π_den by adaptive quadrature.
double ratio_second_moment_quadrature(const ConjugatePosterior& num,
                                      const ConjugatePosterior& den);

/// Posteriors π_0..π_T along an exponential stream at θc from a Gamma prior.
std::vector<ConjugatePosterior> posterior_path(double theta_c, std::size_t T,
                                               const ConjugatePosterior& prior,
                                               std::uint64_t seed);

/// m[t][k-1] = E[(π_t / π_{t-k})²] for t ≥ k, k = 1..K; NaN for t < k.
std::vector<std::vector<double>> ratio_moment_table(const std::vector<ConjugatePosterior>& path,
                                                    std::size_t K);

}  // namespace uqstream

#endif  // UQSTREAM_VERIFY_HPP
