#include "uqstream/harness.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <exception>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <ostream>
#include <sstream>
#include <thread>

namespace uqstream {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr std::size_t kTailSteps = 100;

std::uint64_t label_salt(const std::string& label) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : label) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return mix64(h);
}

AlgoConfig make_method(Method m, std::size_t M, std::size_t N, std::size_t K,
                       std::string label = {}) {
  AlgoConfig a;
  a.method = m;
  a.M = M;
  a.N = N;
  a.K = K;
  a.label = std::move(label);
  return a;
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, sep)) out.push_back(field);
  if (!line.empty() && line.back() == sep) out.emplace_back();
  return out;
}

double parse_double(const std::string& s) {
  if (s == "nan") return kNaN;
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw InputError("not a number: '" + s + "'");
  }
  return v;
}

std::size_t parse_size(const std::string& s) {
  std::size_t v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw InputError("not a count: '" + s + "'");
  }
  return v;
}

}  // namespace

std::shared_ptr<const Simulator> ExperimentConfig::simulator() const {
  return std::make_shared<NewsVendor>(order, price, cost);
}

std::vector<AlgoConfig> ExperimentConfig::resolved_methods() const {
  std::vector<AlgoConfig> out = methods;
  for (AlgoConfig& a : out) {
    a.alphas = alphas;
    a.box = box;
    a.seed = seed;
    if (match_budget && (a.method == Method::kTlis1 || a.method == Method::kSimpleIs)) {
      a.initial_replications = T * a.N;
    }
  }
  return out;
}

void validate(const ExperimentConfig& cfg) {
  if (cfg.T < 1) throw UsageError("T must be at least 1");
  if (cfg.R < 1) throw UsageError("R must be at least 1");
  if (cfg.methods.empty()) throw UsageError("no methods configured");
  if (!(cfg.theta_c > 0.0) || !std::isfinite(cfg.theta_c)) {
    throw UsageError("theta_c must be positive");
  }
  if (!(cfg.prior_shape > 0.0) || !(cfg.prior_rate > 0.0)) {
    throw UsageError("prior shape and rate must be positive");
  }
  std::vector<std::string> labels;
  for (const AlgoConfig& a : cfg.resolved_methods()) {
    validate(a);
    labels.push_back(a.display_name());
  }
  std::sort(labels.begin(), labels.end());
  if (std::adjacent_find(labels.begin(), labels.end()) != labels.end()) {
    throw UsageError("method labels must be distinct");
  }
  (void)NewsVendor(cfg.order, cfg.price, cfg.cost);
}

ExperimentConfig canned_experiment(int id) {
  ExperimentConfig cfg;
  cfg.name = "experiment" + std::to_string(id);
  switch (id) {
    case 1:
      cfg.methods = {make_method(Method::kTlis1, 30, 10, 20),
                     make_method(Method::kSimpleIs, 30, 10, 20),
                     make_method(Method::kDirectMc, 30, 10, 20)};
      cfg.match_budget = true;
      break;
    case 2: {
      AlgoConfig warm = make_method(Method::kTlis2, 30, 10, 20, "tlis2-warmup");
      warm.warmup = 5;
      cfg.methods = {warm, make_method(Method::kTlis2, 30, 10, 20, "tlis2"),
                     make_method(Method::kGreen, 30, 10, 20, "green-N10"),
                     make_method(Method::kGreen, 30, 300, 20, "green-N300"),
                     make_method(Method::kDirectMc, 30, 10, 20)};
      break;
    }
    case 3:
      for (auto [m, n] : {std::pair<std::size_t, std::size_t>{10, 30}, {30, 10}, {50, 6}}) {
        AlgoConfig a = make_method(Method::kTlis2, m, n, 20,
                                   "tlis2-M" + std::to_string(m) + "-N" + std::to_string(n));
        a.warmup = 5;
        cfg.methods.push_back(a);
      }
      break;
    case 4:
      for (std::size_t k : {10, 50, 100, 200}) {
        AlgoConfig a = make_method(Method::kTlis2, 30, 1000, k, "tlis2-K" + std::to_string(k));
        a.warmup = 5;
        cfg.methods.push_back(a);
      }
      break;
    default:
      throw UsageError("unknown experiment id " + std::to_string(id));
  }
  return cfg;
}

std::vector<double> generate_stream(const InputModel& model, double theta_c, std::size_t T,
                                    Rng& rng) {
  if (!model.in_parameter_space(theta_c)) throw DomainError("theta_c outside parameter space");
  std::vector<double> data(T);
  for (double& x : data) x = model.sample(theta_c, rng);
  return data;
}

std::vector<MethodTrace> run_replication(const ExperimentConfig& cfg, std::size_t rep) {
  const auto sim = cfg.simulator();
  const auto methods = cfg.resolved_methods();
  Rng data_rng = StreamSet{cfg.seed, rep, 0}.data();
  const std::vector<double> data = generate_stream(sim->input_model(), cfg.theta_c, cfg.T, data_rng);

  std::vector<MethodTrace> traces;
  traces.reserve(methods.size());
  for (const AlgoConfig& a : methods) {
    using Clock = std::chrono::steady_clock;
    MethodTrace trace;
    trace.label = a.display_name();
    trace.reports.reserve(cfg.T);
    const StreamSet streams{cfg.seed, rep, label_salt(trace.label)};

    const auto start = Clock::now();
    AlgoState state = initialize(a, cfg.prior(), *sim, streams);
    auto tail_start = Clock::now();
    for (std::size_t t = 1; t <= cfg.T; ++t) {
      if (t + kTailSteps == cfg.T + 1) tail_start = Clock::now();
      QuantReport r = step(state, data[t - 1], a, *sim, streams);
      r.diagnostics = {};
      trace.reports.push_back(std::move(r));
    }
    const auto stop = Clock::now();
    trace.seconds = std::chrono::duration<double>(stop - start).count();
    trace.tail_seconds = std::chrono::duration<double>(stop - tail_start).count();
    trace.simulation_calls = state.simulation_calls();
    traces.push_back(std::move(trace));
  }
  return traces;
}

ReplicationSummary summarize(const std::vector<MethodTrace>& traces, std::size_t n_alphas) {
  ReplicationSummary s;
  for (const MethodTrace& tr : traces) {
    std::vector<std::vector<double>> est(n_alphas), tru(n_alphas);
    for (const QuantReport& r : tr.reports) {
      for (std::size_t a = 0; a < n_alphas; ++a) {
        est[a].push_back(r.quantiles.at(a).estimate);
        tru[a].push_back(r.quantiles.at(a).truth);
      }
    }
    s.estimates.push_back(std::move(est));
    s.truths.push_back(std::move(tru));
    s.simulation_calls.push_back(tr.simulation_calls);
    s.seconds.push_back(tr.seconds);
    s.tail_seconds.push_back(tr.tail_seconds);
  }
  return s;
}

double MseSeries::time_average(std::size_t method, std::size_t alpha, std::size_t t0,
                               std::size_t t1) const {
  if (t0 < 1 || t1 > T || t0 > t1) throw UsageError("time window outside the series");
  double sum = 0.0;
  for (std::size_t t = t0; t <= t1; ++t) sum += at(method, alpha, t);
  return sum / static_cast<double>(t1 - t0 + 1);
}

std::size_t MseSeries::method_index(const std::string& label) const {
  const auto it = std::find(methods.begin(), methods.end(), label);
  if (it == methods.end()) throw InputError("no method '" + label + "' in the series");
  return static_cast<std::size_t>(it - methods.begin());
}

MseSeries mse_series(const std::vector<ReplicationSummary>& reps,
                     const std::vector<std::string>& methods, const std::vector<double>& alphas) {
  MseSeries s;
  s.methods = methods;
  s.alphas = alphas;
  s.n_reps = reps.size();
  if (reps.empty()) return s;
  s.T = reps.front().estimates.front().front().size();
  s.mse.assign(methods.size(), std::vector<std::vector<double>>(
                                   alphas.size(), std::vector<double>(s.T, 0.0)));
  for (const ReplicationSummary& r : reps) {
    for (std::size_t m = 0; m < methods.size(); ++m) {
      for (std::size_t a = 0; a < alphas.size(); ++a) {
        for (std::size_t t = 0; t < s.T; ++t) {
          const double e = r.estimates[m][a][t] - r.truths[m][a][t];
          s.mse[m][a][t] += e * e;
        }
      }
    }
  }
  for (auto& per_alpha : s.mse) {
    for (auto& series : per_alpha) {
      for (double& v : series) v /= static_cast<double>(s.n_reps);
    }
  }
  return s;
}

ExperimentResult run_experiment(const ExperimentConfig& cfg) {
  validate(cfg);
  ExperimentResult result;
  result.config = cfg;
  result.replications.resize(cfg.R);

  std::size_t jobs = cfg.jobs == 0 ? std::max(1u, std::thread::hardware_concurrency()) : cfg.jobs;
  jobs = std::min(jobs, cfg.R);
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;

  auto worker = [&] {
    for (std::size_t rep = next++; rep < cfg.R; rep = next++) {
      try {
        result.replications[rep] = summarize(run_replication(cfg, rep), cfg.alphas.size());
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next = cfg.R;
      }
    }
  };
  if (jobs <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t j = 0; j < jobs; ++j) pool.emplace_back(worker);
  }
  if (failure) std::rethrow_exception(failure);

  std::vector<std::string> labels;
  for (const AlgoConfig& a : cfg.methods) labels.push_back(a.display_name());
  result.mse = mse_series(result.replications, labels, cfg.alphas);
  result.seconds.assign(labels.size(), 0.0);
  result.tail_seconds.assign(labels.size(), 0.0);
  for (const ReplicationSummary& r : result.replications) {
    for (std::size_t m = 0; m < labels.size(); ++m) {
      result.seconds[m] += r.seconds[m];
      result.tail_seconds[m] += r.tail_seconds[m];
    }
  }
  return result;
}

std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, ptr);
}

void write_estimates_csv(const ExperimentResult& result, std::ostream& out) {
  out << "method,alpha,t,rep,estimate,truth,sq_err\n";
  const MseSeries& s = result.mse;
  for (std::size_t m = 0; m < s.methods.size(); ++m) {
    for (std::size_t a = 0; a < s.alphas.size(); ++a) {
      const std::string alpha = format_double(s.alphas[a]);
      for (std::size_t t = 1; t <= s.T; ++t) {
        for (std::size_t r = 0; r < result.replications.size(); ++r) {
          const double est = result.replications[r].estimates[m][a][t - 1];
          const double tru = result.replications[r].truths[m][a][t - 1];
          out << s.methods[m] << ',' << alpha << ',' << t << ',' << r << ','
              << format_double(est) << ',' << format_double(tru) << ','
              << format_double((est - tru) * (est - tru)) << '\n';
        }
      }
    }
  }
}

void write_mse_csv(const MseSeries& s, std::ostream& out) {
  out << "method,alpha,t,mse,n_reps\n";
  for (std::size_t m = 0; m < s.methods.size(); ++m) {
    for (std::size_t a = 0; a < s.alphas.size(); ++a) {
      const std::string alpha = format_double(s.alphas[a]);
      for (std::size_t t = 1; t <= s.T; ++t) {
        out << s.methods[m] << ',' << alpha << ',' << t << ',' << format_double(s.at(m, a, t))
            << ',' << s.n_reps << '\n';
      }
    }
  }
}

void write_manifest(const ExperimentResult& result, std::ostream& out) {
  const ExperimentConfig& c = result.config;
  out << "name=" << c.name << '\n'
      << "seed=" << c.seed << '\n'
      << "T=" << c.T << '\n'
      << "R=" << c.R << '\n'
      << "theta_c=" << format_double(c.theta_c) << '\n'
      << "match_budget=" << (c.match_budget ? "true" : "false") << '\n';
  const auto methods = c.resolved_methods();
  for (std::size_t m = 0; m < methods.size(); ++m) {
    const AlgoConfig& a = methods[m];
    const std::string key = "method." + a.display_name();
    out << key << ".kind=" << to_string(a.method) << '\n'
        << key << ".M=" << a.M << '\n'
        << key << ".N=" << a.N << '\n'
        << key << ".K=" << a.K << '\n'
        << key << ".W=" << a.warmup << '\n'
        << key << ".N0=" << a.initial_block_replications() << '\n';
    if (!result.replications.empty()) {
      out << key << ".simulation_calls=" << result.replications.front().simulation_calls[m]
          << '\n';
    }
    const double reps = static_cast<double>(std::max<std::size_t>(1, result.replications.size()));
    out << key << ".seconds=" << format_double(result.seconds[m] / reps) << '\n'
        << key << ".tail_seconds=" << format_double(result.tail_seconds[m] / reps) << '\n';
  }
}

void write_outputs(const ExperimentResult& result) {
  namespace fs = std::filesystem;
  const fs::path dir(result.config.out);
  fs::create_directories(dir);
  auto open = [&](const char* name) {
    std::ofstream f(dir / name, std::ios::binary);
    if (!f) throw InputError("cannot write " + (dir / name).string());
    return f;
  };
  {
    auto f = open("estimates.csv");
    write_estimates_csv(result, f);
  }
  {
    auto f = open("mse.csv");
    write_mse_csv(result.mse, f);
  }
  {
    auto f = open("manifest.txt");
    write_manifest(result, f);
  }
}

MseSeries read_mse_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw InputError("empty MSE file");
  if (line != "method,alpha,t,mse,n_reps") throw InputError("unexpected MSE header: " + line);

  struct Row {
    std::size_t m, a, t;
    double mse;
  };
  std::vector<Row> rows;
  MseSeries s;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto f = split(line, ',');
    if (f.size() != 5) throw InputError("malformed MSE row: " + line);
    const double alpha = parse_double(f[1]);
    const std::size_t t = parse_size(f[2]);
    if (t < 1) throw InputError("stage index must be positive");
    auto mi = std::find(s.methods.begin(), s.methods.end(), f[0]);
    if (mi == s.methods.end()) mi = s.methods.insert(s.methods.end(), f[0]);
    auto ai = std::find(s.alphas.begin(), s.alphas.end(), alpha);
    if (ai == s.alphas.end()) ai = s.alphas.insert(s.alphas.end(), alpha);
    rows.push_back({static_cast<std::size_t>(mi - s.methods.begin()),
                    static_cast<std::size_t>(ai - s.alphas.begin()), t, parse_double(f[3])});
    s.n_reps = parse_size(f[4]);
    s.T = std::max(s.T, t);
  }
  if (rows.empty()) throw InputError("MSE file has no rows");
  s.mse.assign(s.methods.size(), std::vector<std::vector<double>>(
                                     s.alphas.size(), std::vector<double>(s.T, kNaN)));
  for (const Row& r : rows) s.mse[r.m][r.a][r.t - 1] = r.mse;
  return s;
}

}  // namespace uqstream
