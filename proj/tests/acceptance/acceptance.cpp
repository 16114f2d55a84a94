#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "uqstream/harness.hpp"
#include "uqstream/verify.hpp"

namespace {

using namespace uqstream;

int failures = 0;

void report(const std::string& name, bool passed, std::string detail) {
  while (!detail.empty() && detail.back() == '\n') detail.pop_back();
  for (std::size_t p; (p = detail.find('\n')) != std::string::npos;) detail.replace(p, 1, "; ");
  std::cout << (passed ? "PASS " : "FAIL ") << name << ": " << detail << std::endl;
  if (!passed) ++failures;
}

std::string sci(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3e", x);
  return buf;
}

std::string fixed(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3f", x);
  return buf;
}

std::string alpha_name(double a) { return a < 0.5 ? "0.05" : "0.95"; }

ExperimentResult run_canned(int id, const std::filesystem::path& out, double* wall = nullptr) {
  ExperimentConfig cfg = canned_experiment(id);
  cfg.out = (out / ("experiment" + std::to_string(id))).string();
  const auto start = std::chrono::steady_clock::now();
  ExperimentResult result = run_experiment(cfg);
  if (wall) {
    *wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  }
  write_outputs(result);
  return result;
}

void experiment1(const std::filesystem::path& out) {
  double wall = 0.0;
  const auto r = run_canned(1, out, &wall);
  const auto& m = r.mse;
  const auto tl = m.method_index("tlis1");
  const auto is = m.method_index("simple-is");
  const auto mc = m.method_index("direct-mc");
  bool beats = true;
  bool small = true;
  std::ostringstream d, s;
  for (std::size_t a = 0; a < m.alphas.size(); ++a) {
    const double x = m.time_average(tl, a, 50, 200);
    const double y = m.time_average(is, a, 50, 200);
    const double z = m.time_average(mc, a, 50, 200);
    beats = beats && x < y && x < z;
    small = small && x < 5e-4;
    d << " a=" << alpha_name(m.alphas[a]) << " tlis1=" << sci(x) << " simple-is=" << sci(y)
      << " direct-mc=" << sci(z);
    s << " a=" << alpha_name(m.alphas[a]) << " " << sci(x);
  }
  report("exp1-tlis1-lowest-mse", beats, "mean MSE over t in [50,200]" + d.str());
  report("exp1-tlis1-mse-level", small, "tlis1 mean MSE < 5e-4:" + s.str());
  report("exp1-runtime", wall <= 600.0, "R=100 wall time " + fixed(wall) + " s (limit 600 s)");
}

void experiment2(const std::filesystem::path& out) {
  const auto r = run_canned(2, out);
  const auto& m = r.mse;
  const auto tw = m.method_index("tlis2-warmup");
  const auto g10 = m.method_index("green-N10");
  const auto g300 = m.method_index("green-N300");
  const auto mc = m.method_index("direct-mc");
  bool beats = true;
  bool close = true;
  std::ostringstream d, c;
  for (std::size_t a = 0; a < m.alphas.size(); ++a) {
    const double x = m.time_average(tw, a, 20, 200);
    const double y = m.time_average(g10, a, 20, 200);
    const double z = m.time_average(mc, a, 20, 200);
    const double w = m.time_average(g300, a, 20, 200);
    beats = beats && x < y && x < z;
    close = close && x <= 3.0 * w;
    d << " a=" << alpha_name(m.alphas[a]) << " tlis2=" << sci(x) << " green-N10=" << sci(y)
      << " direct-mc=" << sci(z);
    c << " a=" << alpha_name(m.alphas[a]) << " ratio=" << fixed(x / w);
  }
  report("exp2-tlis2-beats-equal-budget", beats, "mean MSE over t in [20,200]" + d.str());
  report("exp2-tlis2-near-green-N300", close, "tlis2 / green-N300 <= 3:" + c.str());
}

void table1(const std::filesystem::path& out) {
  const auto r = run_canned(3, out);
  const auto& m = r.mse;
  const auto m50 = m.method_index("tlis2-M50-N6");
  int wins = 0;
  int cells = 0;
  bool in_range = true;
  double lo = INFINITY, hi = 0.0;
  for (std::size_t a = 0; a < m.alphas.size(); ++a) {
    for (std::size_t t : {50u, 100u, 150u, 200u}) {
      ++cells;
      bool best = true;
      for (std::size_t k = 0; k < m.methods.size(); ++k) {
        const double v = m.at(k, a, t);
        lo = std::min(lo, v);
        hi = std::max(hi, v);
        in_range = in_range && v >= 1e-5 && v <= 1e-3;
        if (k != m50 && v < m.at(m50, a, t)) best = false;
      }
      wins += best;
    }
  }
  report("table1-m50-smallest", wins >= 6,
         "M=50 smallest in " + std::to_string(wins) + " of " + std::to_string(cells) + " cells");
  report("table1-magnitude", in_range, "MSE range [" + sci(lo) + ", " + sci(hi) + "]");
}

void table2(const std::filesystem::path& out) {
  const auto r = run_canned(4, out);
  const auto& m = r.mse;
  const auto k10 = m.method_index("tlis2-K10");
  const auto k100 = m.method_index("tlis2-K100");
  const auto k200 = m.method_index("tlis2-K200");
  bool grows = true;
  bool saturates = true;
  std::ostringstream g, s;
  for (std::size_t a = 0; a < m.alphas.size(); ++a) {
    const double x10 = m.at(k10, a, 200);
    const double x100 = m.at(k100, a, 200);
    const double x200 = m.at(k200, a, 200);
    grows = grows && x100 <= x10;
    saturates = saturates && x100 <= 2.0 * x200;
    g << " a=" << alpha_name(m.alphas[a]) << " K10=" << sci(x10) << " K100=" << sci(x100);
    s << " a=" << alpha_name(m.alphas[a]) << " K100/K200=" << fixed(x100 / x200);
  }
  report("table2-window-helps", grows, "MSE at t=200:" + g.str());
  report("table2-window-saturates", saturates, "K=200 within 2x of K=100:" + s.str());
  const double ratio = r.tail_seconds[k200] / r.tail_seconds[k100];
  report("table2-runtime-grows", ratio >= 1.4,
         "tail time K=200 / K=100 = " + fixed(ratio) + " (" + sci(r.tail_seconds[k200] / r.config.R) +
             " s vs " + sci(r.tail_seconds[k100] / r.config.R) + " s per replication)");
}

void properties() {
  VerifyOptions opts;
  opts.replications = 2000;
  for (const auto& name : property_names()) {
    const auto res = run_property(name, opts);
    report(name, res.passed, res.detail);
  }
}

double brute_force_cdf(const AlgoState& st, Method method, const Simulator& sim, double h,
                       double* worst_estimate_error) {
  const auto& model = sim.input_model();
  double acc = 0.0;
  std::size_t count = 0;
  for (const auto& rec : st.buffer().stages()) {
    const SimulationBlock& block =
        method == Method::kTlis1 ? *st.pinned_block() : *rec.simulation;
    for (Eigen::Index i = 0; i < rec.thetas.size(); ++i, ++count) {
      const double th = rec.thetas[i];
      double est = 0.0;
      for (Eigen::Index l = 0; l < block.rows(); ++l) {
        for (Eigen::Index j = 0; j < block.cols(); ++j) {
          const double x = block.inputs(l, j);
          est += std::exp(log_pdf(model, x, th) - log_pdf(model, x, block.thetas[l])) *
                 block.outputs(l, j);
        }
      }
      est /= static_cast<double>(block.rows() * block.cols());
      *worst_estimate_error = std::max(*worst_estimate_error, std::abs(est - rec.estimates[i]));
      const double w = std::exp(posterior_log_pdf(st.posterior(), th) -
                                posterior_log_pdf(rec.posterior, th));
      if (est <= h) acc += w;
    }
  }
  return acc / static_cast<double>(count);
}

void oracle() {
  std::mt19937_64 rng(20240601);
  std::uniform_int_distribution<std::size_t> small(1, 5), window(1, 3), reps(1, 4), len(0, 6);
  const NewsVendor sim;
  const auto prior = ConjugatePosterior::gamma(2.0, 2.0);
  double worst = 0.0;
  double worst_est = 0.0;
  for (int instance = 0; instance < 50; ++instance) {
    AlgoConfig c;
    c.method = instance % 2 ? Method::kTlis1 : Method::kTlis2;
    c.M = small(rng);
    c.N = reps(rng);
    c.K = window(rng);
    const StreamSet s{static_cast<std::uint64_t>(instance), 0, 7};
    AlgoState st = initialize(c, prior, sim, s);
    Rng data = s.data();
    const auto stream = generate_stream(sim.input_model(), 1.0, len(rng), data);
    for (double x : stream) step(st, x, c, sim, s);
    std::vector<WeightedStage> win;
    for (const auto& rec : st.buffer().stages()) {
      win.push_back({rec.stage, outer_log_weights(st.posterior(), rec), rec.estimates});
    }
    for (double h : {-0.3, -0.05, 0.0, 0.05, 0.1, 0.3}) {
      const double want = brute_force_cdf(st, c.method, sim, h, &worst_est);
      worst = std::max(worst, std::abs(window_cdf(win, h) - want));
    }
  }
  report("oracle-triple-loop", worst <= 1e-12 && worst_est <= 1e-12,
         "50 instances, max |cdf diff| " + sci(worst) + ", max |estimate diff| " +
             sci(worst_est));
}

double rmse(const std::vector<double>& errors) {
  double s = 0.0;
  for (double e : errors) s += e * e;
  return std::sqrt(s / static_cast<double>(errors.size()));
}

void outer_rate() {
  const ExperimentConfig base = canned_experiment(2);
  const auto nv = std::make_shared<NewsVendor>();
  const ZeroNoiseSimulator sim(nv);
  constexpr std::size_t kReps = 500;
  constexpr std::size_t kT = 40;
  std::vector<std::vector<double>> err2(2), err8(2);
  for (std::size_t rep = 0; rep < kReps; ++rep) {
    const StreamSet data_streams{11, rep, 0};
    Rng data = data_streams.data();
    const auto stream = generate_stream(sim.input_model(), 1.0, kT, data);
    for (std::size_t K : {2u, 8u}) {
      AlgoConfig c;
      c.method = Method::kGreen;
      c.M = 64;
      c.N = 1;
      c.K = K;
      c.box = base.box;
      const StreamSet s{11, rep, K};
      AlgoState st = initialize(c, base.prior(), sim, s);
      QuantReport last;
      for (double x : stream) last = step(st, x, c, sim, s);
      for (std::size_t a = 0; a < 2; ++a) {
        const double e = last.quantiles[a].estimate - last.quantiles[a].truth;
        (K == 2 ? err2 : err8)[a].push_back(e);
      }
    }
  }
  bool ok = true;
  std::ostringstream d;
  for (std::size_t a = 0; a < 2; ++a) {
    const double ratio = rmse(err2[a]) / rmse(err8[a]);
    ok = ok && ratio >= 1.4 && ratio <= 2.6;
    d << " a=" << (a ? "0.95" : "0.05") << " RMSE(K=2)/RMSE(K=8)=" << fixed(ratio);
  }
  report("rate-outer", ok, "zero-noise green, M=64, t=40:" + d.str());
}

void inner_rate() {
  const NewsVendor sim;
  const auto& model = sim.input_model();
  const auto proposal = ConjugatePosterior::gamma(20.0, 20.0);
  constexpr std::size_t kReps = 500;
  constexpr std::size_t kN = 10;
  const std::vector<std::size_t> sizes{16, 32, 64};
  const double truth = true_performance(sim, 1.0);
  Eigen::ArrayXd target(1);
  target << 1.0;
  std::vector<double> cis_rmse, mean_rmse;
  for (std::size_t M : sizes) {
    std::vector<double> cis_err, mean_err;
    for (std::size_t rep = 0; rep < kReps; ++rep) {
      Rng rng = make_stream(13, rep, Stream::kSimulation, M);
      const Eigen::ArrayXd thetas = posterior_sample(proposal, rng, M);
      const SimulationBlock block = run_block(sim, thetas, kN, rng);
      cis_err.push_back(cis_estimate(model, target, block)[0] - truth);
      const Eigen::ArrayXd means = sample_mean_estimate(block);
      for (Eigen::Index i = 0; i < means.size(); ++i) {
        mean_err.push_back(means[i] - true_performance(sim, thetas[i]));
      }
    }
    cis_rmse.push_back(rmse(cis_err));
    mean_rmse.push_back(rmse(mean_err));
  }
  const double ratio = cis_rmse.front() / cis_rmse.back();
  report("rate-inner-cis", ratio >= 1.2 && ratio <= 2.8,
         "RMSE(M=16)/RMSE(M=64) = " + fixed(ratio) + " at theta=1, N=10");
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < sizes.size(); ++i) {
    const double x = std::log(static_cast<double>(sizes[i]));
    const double y = std::log(mean_rmse[i]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  const double n = static_cast<double>(sizes.size());
  const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  report("rate-inner-sample-mean", std::abs(slope) <= 0.2,
         "log-log slope of per-theta RMSE vs M = " + fixed(slope));
}

}  // namespace

int main(int argc, char** argv) {
  const std::filesystem::path out = argc > 1 ? argv[1] : "acceptance_out";
  try {
    properties();
    oracle();
    outer_rate();
    inner_rate();
    experiment1(out);
    experiment2(out);
    table1(out);
    table2(out);
  } catch (const std::exception& e) {
    std::cout << "FAIL acceptance-run: " << e.what() << std::endl;
    return 1;
  }
  std::cout << (failures ? "acceptance: " + std::to_string(failures) + " criteria failed"
                         : std::string("acceptance: all criteria passed"))
            << std::endl;
  return failures ? 1 : 0;
}
