#ifndef UQSTREAM_HARNESS_HPP
#define UQSTREAM_HARNESS_HPP

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "uqstream/algorithms.hpp"
#include "uqstream/models.hpp"

namespace uqstream {

struct ExperimentConfig {
  std::string name = "custom";
  std::vector<AlgoConfig> methods;
  double theta_c = 1.0;
  std::size_t T = 200;
  std::size_t R = 100;
  std::vector<double> alphas{0.05, 0.95};
  std::string out = "out";
  /// Worker threads; 0 means hardware concurrency.
  std::size_t jobs = 0;
  std::uint64_t seed = 1;
  /// Gamma prior on the demand rate (shape, rate).
  double prior_shape = 0.001;
  double prior_rate = 0.001;
  double order = 0.5;
  double price = 1.5;
  double cost = 1.0;
  /// Scales the t = 0 block of tlis1 / simple-is to T·N replications per θ.
  bool match_budget = false;
  /// Rejection box for θ draws; applied to every method.
  std::optional<ParamBox> box = ParamBox(0.2, 5.0);

  ConjugatePosterior prior() const { return ConjugatePosterior::gamma(prior_shape, prior_rate); }
  std::shared_ptr<const Simulator> simulator() const;
  /// The method list with experiment-wide fields (α, box, budget) applied.
  std::vector<AlgoConfig> resolved_methods() const;
};

/// Throws UsageError when a field violates its bounds.
void validate(const ExperimentConfig& cfg);

/// The four canned studies. Throws UsageError for other ids.
ExperimentConfig canned_experiment(int id);

/// T i.i.d. draws from the input model at θc.
std::vector<double> generate_stream(const InputModel& model, double theta_c, std::size_t T,
                                    Rng& rng);

struct MethodTrace {
  std::string label;
  std::vector<QuantReport> reports;
  std::size_t simulation_calls = 0;
  double seconds = 0.0;
  /// Wall time of the last min(T, 100) steps.
  double tail_seconds = 0.0;
};

/// Every method consumes the same data stream for replication `rep`.
std::vector<MethodTrace> run_replication(const ExperimentConfig& cfg, std::size_t rep);

/// Per-replication traces reduced to what the CSVs need.
struct ReplicationSummary {
  /// [method][alpha][t-1]
  std::vector<std::vector<std::vector<double>>> estimates;
  std::vector<std::vector<std::vector<double>>> truths;
  std::vector<std::size_t> simulation_calls;
  std::vector<double> seconds;
  std::vector<double> tail_seconds;
};

ReplicationSummary summarize(const std::vector<MethodTrace>& traces, std::size_t n_alphas);

struct MseSeries {
  std::vector<std::string> methods;
  std::vector<double> alphas;
  std::size_t T = 0;
  std::size_t n_reps = 0;
  /// [method][alpha][t-1]
  std::vector<std::vector<std::vector<double>>> mse;

  double at(std::size_t method, std::size_t alpha, std::size_t t) const {
    return mse[method][alpha][t - 1];
  }
  /// Mean of the MSE over t ∈ [t0, t1].
  double time_average(std::size_t method, std::size_t alpha, std::size_t t0, std::size_t t1) const;
  /// Index of a method label; throws InputError when absent.
  std::size_t method_index(const std::string& label) const;
};

/// MSE_t = (1/R) Σ_r (q̂_t^r - q_t)².
MseSeries mse_series(const std::vector<ReplicationSummary>& reps,
                     const std::vector<std::string>& methods, const std::vector<double>& alphas);

struct ExperimentResult {
  ExperimentConfig config;
  std::vector<ReplicationSummary> replications;
  MseSeries mse;
  /// Per method, summed over replications.
  std::vector<double> seconds;
  std::vector<double> tail_seconds;
};

/// Runs all replications on a worker pool and reduces in replication order.
ExperimentResult run_experiment(const ExperimentConfig& cfg);

/// Shortest round-trip decimal form.
std::string format_double(double x);

void write_estimates_csv(const ExperimentResult& result, std::ostream& out);
void write_mse_csv(const MseSeries& mse, std::ostream& out);
void write_manifest(const ExperimentResult& result, std::ostream& out);
/// Writes estimates.csv, mse.csv and manifest.txt into cfg.out.
void write_outputs(const ExperimentResult& result);

/// Parses an MSE CSV. Throws InputError on malformed or empty input.
MseSeries read_mse_csv(std::istream& in);

}  // namespace uqstream

#endif  // UQSTREAM_HARNESS_HPP
