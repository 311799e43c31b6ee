#include "mcml/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>
#include <thread>

namespace mcml {

void write_lattice(std::ostream& os, const BinaryLattice& y) {
  os << "d=" << y.side() << '\n';
  for (int r = 0; r < y.side(); ++r) {
    for (int c = 0; c < y.side(); ++c) os << (y(r, c) ? '1' : '0');
    os << '\n';
  }
}

BinaryLattice read_lattice(std::istream& is) {
  std::string line;
  if (std::getline(is, line) && !line.empty() && line.back() == '\r') line.pop_back();
  if (!is || line.rfind("d=", 0) != 0)
    throw ConfigError("lattice file must start with a 'd=<int>' line");
  int side = 0;
  try {
    std::size_t used = 0;
    side = std::stoi(line.substr(2), &used);
    if (used != line.size() - 2) throw ConfigError("");
  } catch (const std::exception&) {
    throw ConfigError("malformed lattice header: " + line);
  }
  if (side < 1) throw ConfigError("lattice side must be >= 1");
  std::vector<std::uint8_t> sites;
  sites.reserve(std::size_t(side) * side);
  for (int r = 0; r < side; ++r) {
    if (!std::getline(is, line)) throw ConfigError("lattice file has too few rows");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (int(line.size()) != side) throw ConfigError("lattice row has the wrong length");
    for (char ch : line) {
      if (ch != '0' && ch != '1') throw ConfigError("lattice rows may only contain 0 and 1");
      sites.push_back(std::uint8_t(ch - '0'));
    }
  }
  return BinaryLattice(side, std::move(sites));
}

void write_lattice_file(const std::string& path, const BinaryLattice& y) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw ConfigError("cannot open " + path + " for writing");
  write_lattice(os, y);
  if (!os) throw ConfigError("failed writing " + path);
}

BinaryLattice read_lattice_file(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw ConfigError("cannot open " + path);
  return read_lattice(is);
}

BinaryLattice generate_lattice(int side, const Theta& theta_true, long sweeps, std::uint64_t seed) {
  if (sweeps < 1) throw ConfigError("generate needs sweeps >= 1");
  AutologisticModel{side}.validate();
  const GibbsKernel kernel(theta_true);
  RngStream rng(seed);
  BinaryLattice y(side);
  for (long i = 0; i < sweeps; ++i) kernel(y, rng);
  return y;
}

Algorithm parse_algorithm(const std::string& name) {
  if (name == "benchmark") return Algorithm::Benchmark;
  if (name == "adaptive") return Algorithm::Adaptive;
  if (name == "exact") return Algorithm::Exact;
  if (name == "mpl") return Algorithm::Mpl;
  throw ConfigError("unknown algorithm '" + name + "'");
}

std::string to_string(Algorithm algorithm) {
  switch (algorithm) {
    case Algorithm::Benchmark: return "benchmark";
    case Algorithm::Adaptive: return "adaptive";
    case Algorithm::Exact: return "exact";
    case Algorithm::Mpl: return "mpl";
  }
  return "?";
}

void ExperimentConfig::validate() const {
  AutologisticModel{side}.validate();
  if (data && data->side() != side) throw ConfigError("data lattice side does not match d");
  if (!data && !suffstat) throw ConfigError("either a data lattice or a statistic is required");
  if (suffstat && suffstat->size() != 2) throw ConfigError("statistic must have two components");
  if (replications < 1) throw ConfigError("replications must be >= 1");
  if (threads < 1) throw ConfigError("threads must be >= 1");
  if (burn_in < 0 || samples < 1 || iters < 1) throw ConfigError("counts must be positive");
  isremc.validate();
  box.validate();
  newton.validate();
  if (start == StartKind::Explicit) require_finite(start_theta, "start");
  if (!data && (start == StartKind::Mpl || algorithm == Algorithm::Mpl))
    throw ConfigError("MPL needs a full lattice; use an explicit or zero start with a statistic");
}

Vector ExperimentConfig::observed_statistic() const {
  if (suffstat) return *suffstat;
  return suff_stat(*data).vector();
}

Theta resolve_start(const ExperimentConfig& config) {
  switch (config.start) {
    case StartKind::Zero: return Vector::Zero(2);
    case StartKind::Explicit: return config.start_theta;
    case StartKind::Mpl: {
      const FitResult mpl = mpl_estimate(*config.data, NewtonConfig::exact());
      return mpl.converged ? mpl.theta_hat : Vector::Zero(2);
    }
  }
  return Vector::Zero(2);
}

RunRecord run_replication(const ExperimentConfig& config, const Theta& start, long rep) {
  RunRecord record;
  record.rep = rep;
  record.seed = RngStream::derive_seed(config.master_seed, std::uint64_t(rep));
  const auto t0 = std::chrono::steady_clock::now();
  const AutologisticModel model{config.side};
  const Vector t_obs = config.observed_statistic();
  RngStream rng(record.seed);
  try {
    FitResult fit;
    switch (config.algorithm) {
      case Algorithm::Benchmark:
        fit = benchmark_mcml(model, t_obs, start, config.burn_in, config.samples, config.newton,
                             rng);
        break;
      case Algorithm::Adaptive: {
        const BinaryLattice reference = config.data ? *config.data : BinaryLattice(config.side);
        fit = adap_mcml(model, t_obs, reference, start, config.iters, config.isremc, config.box,
                        config.newton, rng);
        break;
      }
      case Algorithm::Exact:
        fit = exact_mle(model, t_obs, NewtonConfig::exact());
        break;
      case Algorithm::Mpl:
        fit = mpl_estimate(*config.data, NewtonConfig::exact());
        break;
    }
    record.theta_hat = fit.theta_hat;
    record.iterations = fit.iterations;
    record.converged = fit.converged;
    record.clamp_events = fit.clamp_events;
    record.fallback_steps = fit.fallback_steps;
    record.diagnostic = fit.diagnostic;
    if (config.side <= kDefaultExactCap && fit.theta_hat.allFinite()) {
      record.exact_loglik =
          fit.theta_hat.dot(t_obs) - exact_moments(model, fit.theta_hat).log_norm;
    }
  } catch (const Error& e) {
    record.converged = false;
    record.diagnostic = e.what();
  }
  if (config.record_time) {
    record.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0)
                         .count();
  }
  return record;
}

std::vector<RunRecord> run_experiment(const ExperimentConfig& config) {
  config.validate();
  const Theta start = resolve_start(config);
  std::vector<RunRecord> records(static_cast<std::size_t>(config.replications));
  std::atomic<long> next{0};
  auto worker = [&] {
    for (long rep = next++; rep < config.replications; rep = next++)
      records[std::size_t(rep)] = run_replication(config, start, rep);
  };
  const int workers = int(std::min<long>(config.threads, config.replications));
  if (workers <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (int i = 0; i < workers; ++i) pool.emplace_back(worker);
  }
  return records;
}

std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::string csv_header() {
  return "rep,seed,theta0_hat,theta1_hat,exact_loglik,iterations,converged,wall_ms";
}

std::string csv_row(const RunRecord& r) {
  std::ostringstream os;
  os << r.rep << ',' << r.seed << ',' << format_double(r.theta_hat[0]) << ','
     << format_double(r.theta_hat.size() > 1 ? r.theta_hat[1]
                                             : std::numeric_limits<double>::quiet_NaN())
     << ',' << format_double(r.exact_loglik) << ',' << r.iterations << ','
     << (r.converged ? 1 : 0) << ',' << format_double(r.wall_ms);
  return os.str();
}

void write_csv(std::ostream& os, const std::vector<RunRecord>& records) {
  os << csv_header() << '\n';
  for (const auto& r : records) os << csv_row(r) << '\n';
}

std::vector<RunRecord> read_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line) || line != csv_header())
    throw ConfigError("CSV header does not match the run-record schema");
  std::vector<RunRecord> out;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (cells.size() != 8) throw ConfigError("CSV row has the wrong number of columns");
    auto num = [](const std::string& s) {
      return s == "nan" ? std::numeric_limits<double>::quiet_NaN() : std::stod(s);
    };
    RunRecord r;
    r.rep = std::stol(cells[0]);
    r.seed = std::stoull(cells[1]);
    r.theta_hat = Eigen::Vector2d(num(cells[2]), num(cells[3]));
    r.exact_loglik = num(cells[4]);
    r.iterations = std::stoi(cells[5]);
    r.converged = cells[6] == "1";
    r.wall_ms = num(cells[7]);
    out.push_back(std::move(r));
  }
  return out;
}

namespace {

ComponentSummary summarize_values(std::vector<double> values) {
  values.erase(std::remove_if(values.begin(), values.end(), [](double v) { return !std::isfinite(v); }),
               values.end());
  ComponentSummary s;
  s.count = long(values.size());
  if (values.empty()) {
    s.mean = s.median = s.sd = std::numeric_limits<double>::quiet_NaN();
    return s;
  }
  double total = 0;
  for (double v : values) total += v;
  s.mean = total / double(values.size());
  double ss = 0;
  for (double v : values) ss += (v - s.mean) * (v - s.mean);
  s.sd = values.size() > 1 ? std::sqrt(ss / double(values.size() - 1)) : 0.0;
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  s.median = n % 2 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
  return s;
}

}  // namespace

Summary summarize(const std::vector<RunRecord>& records) {
  Summary s;
  s.records = long(records.size());
  const int dim = records.empty() ? 2 : int(records.front().theta_hat.size());
  for (int k = 0; k < dim; ++k) {
    std::vector<double> values;
    for (const auto& r : records) values.push_back(r.theta_hat[k]);
    s.theta.push_back(summarize_values(std::move(values)));
  }
  std::vector<double> ll;
  for (const auto& r : records) {
    s.converged += r.converged ? 1 : 0;
    ll.push_back(r.exact_loglik);
  }
  s.exact_loglik = summarize_values(std::move(ll));
  return s;
}

void write_summary(std::ostream& os, const Summary& s) {
  os << "# summary: records=" << s.records << " converged=" << s.converged << '\n';
  os << "# quantity,count,mean,median,sd\n";
  auto line = [&](const std::string& name, const ComponentSummary& c) {
    os << name << ',' << c.count << ',' << format_double(c.mean) << ',' << format_double(c.median)
       << ',' << format_double(c.sd) << '\n';
  };
  for (std::size_t k = 0; k < s.theta.size(); ++k) line("theta" + std::to_string(k) + "_hat", s.theta[k]);
  line("exact_loglik", s.exact_loglik);
}

CltReport binomial_demo(const BinomialDemoConfig& config, std::ostream& report, std::ostream* csv) {
  if (config.y_obs < 0 || config.y_obs > config.trials)
    throw ConfigError("binomial demo needs 0 <= y_obs <= n");
  const BinomialModel model{config.trials};
  model.validate();
  if (config.y_obs == 0 || config.y_obs == config.trials)
    throw ConfigError("y_obs on the boundary {0, n}: the MLE is infinite");
  const int n = config.trials;
  const double theta_star = std::log(double(config.y_obs) / double(n - config.y_obs));
  const Theta ts = Vector::Constant(1, theta_star);
  const EnumeratedSpace space = enumerate_space(model);

  BinomialPmf h = BinomialPmf::uniform(n);
  if (config.h_kind == "optimal") {
    h = optimal_h(model, ts);
  } else if (config.h_kind == "target") {
    h = BinomialPmf::exponential_family(n, theta_star);
  } else if (config.h_kind != "uniform") {
    throw ConfigError("h kind must be uniform, optimal or target");
  }

  CltSettings settings;
  settings.kind = CltEstimator::ImportanceSampling;
  settings.trials = n;
  settings.y_obs = config.y_obs;
  const Vector masses = exp_elementwise(h.log_masses());
  settings.h_masses.assign(masses.data(), masses.data() + masses.size());
  settings.m = config.m;
  settings.reps = config.reps;
  settings.seed = config.seed;
  const CltReport clt = clt_validate(settings);

  const double fisher_inverse = 1.0 / exact_moments(model, ts).cov(0, 0);
  report << "binomial n=" << n << " y_obs=" << config.y_obs << " h=" << config.h_kind
         << " m=" << config.m << " reps=" << config.reps << " seed=" << config.seed << '\n';
  report << "theta_star," << format_double(theta_star) << '\n';
  report << "exact_sandwich_variance," << format_double(clt.target_sigma) << '\n';
  report << "empirical_variance," << format_double(clt.empirical_var) << '\n';
  report << "relative_error," << format_double(clt.rel_error) << '\n';
  report << "inverse_fisher_information," << format_double(fisher_inverse) << '\n';
  report << "anderson_darling," << format_double(clt.normality.statistic) << ",critical,"
         << format_double(clt.normality.critical) << '\n';
  report << "failures," << clt.failures << '\n';

  report << "# instrumental density comparison: h,trace_sigma,ratio_to_optimal\n";
  const double best = exact_sandwich(space, ts, optimal_log_masses(space, ts)).trace_sigma;
  auto row = [&](const std::string& name, const Vector& log_h) {
    const double tr = exact_sandwich(space, ts, log_h).trace_sigma;
    report << name << ',' << format_double(tr) << ',' << format_double(tr / best) << '\n';
  };
  row("optimal", optimal_log_masses(space, ts));
  row("uniform", BinomialPmf::uniform(n).log_masses());
  row("target", target_log_masses(space, ts));
  RngStream rng(RngStream::derive_seed(config.seed, 0xB1A5ULL));
  for (int i = 0; i < 5; ++i) {
    Vector m(n + 1);
    for (int y = 0; y <= n; ++y) m[y] = 0.05 + rng.uniform();
    row("random" + std::to_string(i + 1), BinomialPmf("random", m).log_masses());
  }
  report << "schwarz_bound," << format_double(schwarz_bound(space, ts)) << '\n';

  if (csv) {
    *csv << "rep,seed,theta_hat,scaled_error,converged\n";
    for (std::size_t i = 0; i < clt.seeds.size(); ++i) {
      *csv << i << ',' << clt.seeds[i] << ',' << format_double(clt.theta_hat[i]) << ','
           << format_double(std::sqrt(double(config.m)) * (clt.theta_hat[i] - theta_star)) << ','
           << (clt.converged[i] ? 1 : 0) << '\n';
    }
  }
  return clt;
}

}  // namespace mcml
