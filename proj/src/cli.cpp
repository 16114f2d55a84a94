#include "uqstream/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <charconv>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>

#include "uqstream/config.hpp"
#include "uqstream/harness.hpp"
#include "uqstream/verify.hpp"

namespace uqstream {

namespace {

struct RunOptions {
  std::optional<int> experiment;
  std::optional<std::string> method;
  std::optional<std::size_t> M, N, K, T, R, W, jobs;
  std::optional<std::vector<double>> alpha;
  std::optional<std::uint64_t> seed;
  std::optional<bool> match_budget;
  std::optional<std::string> out;
  std::optional<double> theta_c, prior_shape, prior_rate, order, price, cost;
  std::optional<std::string> box;
};

template <class T>
T parse_number(const std::string& key, const std::string& text) {
  T v{};
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw UsageError("invalid value '" + text + "' for " + key);
  }
  return v;
}

std::vector<double> parse_list(const std::string& key, const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item.erase(std::remove(item.begin(), item.end(), ' '), item.end());
    out.push_back(parse_number<double>(key, item));
  }
  if (out.empty()) throw UsageError("empty list for " + key);
  return out;
}

bool parse_bool(const std::string& key, const std::string& text) {
  if (text == "true" || text == "1" || text == "yes") return true;
  if (text == "false" || text == "0" || text == "no") return false;
  throw UsageError("invalid boolean '" + text + "' for " + key);
}

RunOptions options_from_config(const ConfigEntries& entries) {
  RunOptions o;
  for (const auto& [key, value] : entries) {
    if (key == "experiment") o.experiment = parse_number<int>(key, value);
    else if (key == "method") o.method = value;
    else if (key == "M") o.M = parse_number<std::size_t>(key, value);
    else if (key == "N") o.N = parse_number<std::size_t>(key, value);
    else if (key == "K") o.K = parse_number<std::size_t>(key, value);
    else if (key == "T") o.T = parse_number<std::size_t>(key, value);
    else if (key == "R") o.R = parse_number<std::size_t>(key, value);
    else if (key == "W") o.W = parse_number<std::size_t>(key, value);
    else if (key == "jobs") o.jobs = parse_number<std::size_t>(key, value);
    else if (key == "alpha") o.alpha = parse_list(key, value);
    else if (key == "seed") o.seed = parse_number<std::uint64_t>(key, value);
    else if (key == "match_budget") o.match_budget = parse_bool(key, value);
    else if (key == "out") o.out = value;
    else if (key == "theta_c") o.theta_c = parse_number<double>(key, value);
    else if (key == "prior_shape") o.prior_shape = parse_number<double>(key, value);
    else if (key == "prior_rate") o.prior_rate = parse_number<double>(key, value);
    else if (key == "order") o.order = parse_number<double>(key, value);
    else if (key == "price") o.price = parse_number<double>(key, value);
    else if (key == "cost") o.cost = parse_number<double>(key, value);
    else if (key == "box") o.box = value;
    else throw UsageError("unknown config key '" + key + "'");
  }
  return o;
}

template <class T>
void prefer(std::optional<T>& flag, const std::optional<T>& file) {
  if (!flag && file) flag = file;
}

RunOptions merge(RunOptions flags, const RunOptions& file) {
  prefer(flags.experiment, file.experiment);
  prefer(flags.method, file.method);
  prefer(flags.M, file.M);
  prefer(flags.N, file.N);
  prefer(flags.K, file.K);
  prefer(flags.T, file.T);
  prefer(flags.R, file.R);
  prefer(flags.W, file.W);
  prefer(flags.jobs, file.jobs);
  prefer(flags.alpha, file.alpha);
  prefer(flags.seed, file.seed);
  prefer(flags.match_budget, file.match_budget);
  prefer(flags.out, file.out);
  prefer(flags.theta_c, file.theta_c);
  prefer(flags.prior_shape, file.prior_shape);
  prefer(flags.prior_rate, file.prior_rate);
  prefer(flags.order, file.order);
  prefer(flags.price, file.price);
  prefer(flags.cost, file.cost);
  prefer(flags.box, file.box);
  return flags;
}

ExperimentConfig build_experiment(const RunOptions& o) {
  ExperimentConfig cfg;
  if (o.experiment) {
    cfg = canned_experiment(*o.experiment);
    if (o.method) {
      const Method m = parse_method(*o.method);
      std::erase_if(cfg.methods, [&](const AlgoConfig& a) { return a.method != m; });
      if (cfg.methods.empty()) {
        throw UsageError("experiment " + std::to_string(*o.experiment) + " has no " + *o.method);
      }
    }
  } else {
    AlgoConfig a;
    a.method = parse_method(o.method.value_or("tlis2"));
    cfg.methods = {a};
  }
  for (AlgoConfig& a : cfg.methods) {
    if (o.M) a.M = *o.M;
    if (o.N) a.N = *o.N;
    if (o.K) a.K = *o.K;
    if (o.W) a.warmup = *o.W;
  }
  if (o.T) cfg.T = *o.T;
  if (o.R) cfg.R = *o.R;
  if (o.jobs) cfg.jobs = *o.jobs;
  if (o.alpha) cfg.alphas = *o.alpha;
  if (o.match_budget) cfg.match_budget = *o.match_budget;
  if (o.out) cfg.out = *o.out;
  if (o.theta_c) cfg.theta_c = *o.theta_c;
  if (o.prior_shape) cfg.prior_shape = *o.prior_shape;
  if (o.prior_rate) cfg.prior_rate = *o.prior_rate;
  if (o.order) cfg.order = *o.order;
  if (o.price) cfg.price = *o.price;
  if (o.cost) cfg.cost = *o.cost;
  if (o.box) {
    if (*o.box == "none") {
      cfg.box.reset();
    } else {
      const auto b = parse_list("box", *o.box);
      if (b.size() != 2) throw UsageError("box takes two bounds: lower,upper");
      try {
        cfg.box = ParamBox(b[0], b[1]);
      } catch (const std::exception& e) {
        throw UsageError(std::string("box: ") + e.what());
      }
    }
  }
  if (o.seed) {
    cfg.seed = *o.seed;
  } else if (const char* env = std::getenv("UQSTREAM_SEED"); env && *env) {
    cfg.seed = parse_number<std::uint64_t>("UQSTREAM_SEED", env);
  }
  try {
    validate(cfg);
  } catch (const DomainError& e) {
    throw UsageError(e.what());
  }
  return cfg;
}

void add_run_flags(CLI::App& app, RunOptions& o, std::string& config_path) {
  app.add_option("--config", config_path, "Flat key=value config file");
  app.add_option("--experiment", o.experiment, "Canned experiment 1-4")
      ->check(CLI::Range(1, 4));
  app.add_option("--method", o.method, "tlis1 | tlis2 | direct-mc | simple-is | green");
  app.add_option("--M", o.M, "Outer sample size");
  app.add_option("--N", o.N, "Inner sample size");
  app.add_option("--K", o.K, "Reused stages");
  app.add_option("--T", o.T, "Time horizon");
  app.add_option("--R", o.R, "Macro replications");
  app.add_option("--W", o.W, "Warm-up stages for tlis2");
  app.add_option("--alpha", o.alpha, "Quantile levels")->delimiter(',');
  app.add_option("--seed", o.seed, "Master seed (fallback: UQSTREAM_SEED)");
  app.add_option("--jobs", o.jobs, "Worker threads (0 = all cores)");
  app.add_flag("--match-budget", o.match_budget, "Scale the t=0 block of tlis1/simple-is to T*N");
  app.add_option("--out", o.out, "Output directory");
  app.add_option("--theta-c", o.theta_c, "True input parameter");
}

void print_summary(const MseSeries& s, std::ostream& out) {
  out << std::left << std::setw(16) << "method" << std::setw(8) << "alpha" << std::right
      << std::setw(16) << "avg MSE" << std::setw(16) << "final MSE" << '\n';
  for (std::size_t m = 0; m < s.methods.size(); ++m) {
    for (std::size_t a = 0; a < s.alphas.size(); ++a) {
      out << std::left << std::setw(16) << s.methods[m] << std::setw(8) << s.alphas[a]
          << std::right << std::scientific << std::setprecision(4) << std::setw(16)
          << s.time_average(m, a, 1, s.T) << std::setw(16) << s.at(m, a, s.T)
          << std::defaultfloat << '\n';
    }
  }
}

MseSeries load_mse(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw InputError("cannot open " + path);
  return read_mse_csv(f);
}

std::map<std::string, std::string> load_manifest(const std::filesystem::path& path) {
  std::map<std::string, std::string> kv;
  std::ifstream f(path);
  std::string line;
  while (std::getline(f, line)) {
    const auto eq = line.find('=');
    if (eq != std::string::npos) kv[line.substr(0, eq)] = line.substr(eq + 1);
  }
  return kv;
}

int cmd_run(const RunOptions& flags, const std::string& config_path, std::ostream& out) {
  const RunOptions file = config_path.empty() ? RunOptions{}
                                              : options_from_config(load_config(config_path));
  const ExperimentConfig cfg = build_experiment(merge(flags, file));
  const ExperimentResult result = run_experiment(cfg);
  write_outputs(result);
  out << cfg.name << ": T=" << cfg.T << " R=" << cfg.R << " seed=" << cfg.seed << '\n';
  for (const AlgoConfig& a : cfg.resolved_methods()) {
    out << "  " << a.display_name() << " [" << to_string(a.method) << " M=" << a.M
        << " N=" << a.N << " K=" << a.K << " W=" << a.warmup
        << " N0=" << a.initial_block_replications() << "]\n";
  }
  print_summary(result.mse, out);
  out << "wrote " << (std::filesystem::path(cfg.out) / "estimates.csv").string() << ", "
      << (std::filesystem::path(cfg.out) / "mse.csv").string() << '\n';
  return kExitOk;
}

int cmd_compare(const std::string& csv, std::size_t from, std::optional<std::size_t> to,
                std::ostream& out) {
  const MseSeries s = load_mse(csv);
  const std::size_t t1 = to.value_or(s.T);
  if (from < 1 || t1 > s.T || from > t1) throw UsageError("window outside 1.." + std::to_string(s.T));
  for (std::size_t a = 0; a < s.alphas.size(); ++a) {
    std::vector<std::pair<double, std::string>> rows;
    for (std::size_t m = 0; m < s.methods.size(); ++m) {
      rows.emplace_back(s.time_average(m, a, from, t1), s.methods[m]);
    }
    std::sort(rows.begin(), rows.end());
    out << "alpha=" << s.alphas[a] << " mean MSE over t in [" << from << ", " << t1 << "]\n";
    for (std::size_t i = 0; i < rows.size(); ++i) {
      out << "  " << i + 1 << ". " << std::left << std::setw(16) << rows[i].second << std::right
          << std::scientific << std::setprecision(4) << rows[i].first << std::defaultfloat
          << '\n';
    }
  }
  return kExitOk;
}

int cmd_verify(const std::vector<std::string>& props, std::optional<std::uint64_t> seed,
               std::optional<std::size_t> reps, std::ostream& out) {
  VerifyOptions opts;
  if (seed) {
    opts.seed = *seed;
  } else if (const char* env = std::getenv("UQSTREAM_SEED"); env && *env) {
    opts.seed = parse_number<std::uint64_t>("UQSTREAM_SEED", env);
  }
  if (reps) opts.replications = *reps;
  if (opts.replications < 2) throw UsageError("--reps must be at least 2");
  const auto& names = props.empty() ? property_names() : props;
  for (const auto& n : names) {
    if (std::find(property_names().begin(), property_names().end(), n) ==
        property_names().end()) {
      throw UsageError("unknown property '" + n + "'");
    }
  }
  bool all = true;
  for (const auto& n : names) {
    const PropertyResult r = run_property(n, opts);
    all &= r.passed;
    out << (r.passed ? "PASS " : "FAIL ") << r.name << '\n';
    std::istringstream detail(r.detail);
    for (std::string line; std::getline(detail, line);) out << "    " << line << '\n';
  }
  return all ? kExitOk : kExitFailure;
}

int cmd_table(const std::string& csv, const std::vector<std::size_t>& ts, std::ostream& out) {
  const MseSeries s = load_mse(csv);
  for (std::size_t t : ts) {
    if (t < 1 || t > s.T) throw UsageError("t=" + std::to_string(t) + " outside the series");
  }
  const auto manifest = load_manifest(std::filesystem::path(csv).parent_path() / "manifest.txt");
  const bool runtime = std::any_of(s.methods.begin(), s.methods.end(), [&](const auto& m) {
    return manifest.count("method." + m + ".tail_seconds") > 0;
  });

  out << "MSE (x1e-3)\n" << std::left << std::setw(16) << "method" << std::right;
  for (double a : s.alphas) {
    for (std::size_t t : ts) {
      std::ostringstream h;
      h << "a=" << a << ",t=" << t;
      out << std::setw(14) << h.str();
    }
  }
  if (runtime) out << std::setw(14) << "runtime(s)";
  out << '\n';
  for (std::size_t m = 0; m < s.methods.size(); ++m) {
    out << std::left << std::setw(16) << s.methods[m] << std::right << std::fixed
        << std::setprecision(4);
    for (std::size_t a = 0; a < s.alphas.size(); ++a) {
      for (std::size_t t : ts) out << std::setw(14) << s.at(m, a, t) * 1e3;
    }
    if (runtime) {
      const auto it = manifest.find("method." + s.methods[m] + ".tail_seconds");
      out << std::setw(14);
      if (it == manifest.end()) {
        out << "-";
      } else {
        out << std::setprecision(3) << std::stod(it->second);
      }
    }
    out << std::defaultfloat << '\n';
  }
  return kExitOk;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Streaming input uncertainty quantification", "uqstream"};
  app.require_subcommand(1);

  RunOptions run_opts;
  std::string config_path;
  auto* run = app.add_subcommand("run", "Run an experiment and write CSVs");
  add_run_flags(*run, run_opts, config_path);

  std::string compare_csv;
  std::size_t compare_from = 1;
  std::optional<std::size_t> compare_to;
  auto* compare = app.add_subcommand("compare", "Rank methods by time-averaged MSE");
  compare->add_option("csv", compare_csv, "MSE CSV")->required();
  compare->add_option("--from", compare_from, "First stage of the window");
  compare->add_option("--to", compare_to, "Last stage of the window");

  std::vector<std::string> props;
  std::optional<std::uint64_t> verify_seed;
  std::optional<std::size_t> verify_reps;
  auto* verify = app.add_subcommand("verify", "Check invariant properties");
  verify->add_option("--property", props, "Property to check (repeatable)");
  verify->add_option("--seed", verify_seed, "Seed (fallback: UQSTREAM_SEED)");
  verify->add_option("--reps", verify_reps, "Replications for the mean tests");

  std::string table_csv;
  std::vector<std::size_t> table_ts{50, 100, 150, 200};
  auto* table = app.add_subcommand("table", "Render MSE x1e-3 at selected stages");
  table->add_option("csv", table_csv, "MSE CSV")->required();
  table->add_option("--t", table_ts, "Stages")->delimiter(',');

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (run->parsed()) return cmd_run(run_opts, config_path, out);
    if (compare->parsed()) return cmd_compare(compare_csv, compare_from, compare_to, out);
    if (verify->parsed()) return cmd_verify(props, verify_seed, verify_reps, out);
    if (table->parsed()) return cmd_table(table_csv, table_ts, out);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const InputError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitFailure;
  }
  return kExitUsage;
}

}  // namespace uqstream
