// Command-line front end: data generation, MCML fits, exact oracles and the
// binomial asymptotics studies.

#include "mcml/experiment.hpp"

#include "CLI11.hpp"

#include <fstream>
#include <iostream>
#include <sstream>

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;

mcml::Vector parse_pair(const std::string& text, const char* what) {
  std::stringstream ss(text);
  std::string a, b, extra;
  if (!std::getline(ss, a, ',') || !std::getline(ss, b, ',') || std::getline(ss, extra, ','))
    throw mcml::ConfigError(std::string(what) + " must be two comma-separated numbers");
  try {
    return Eigen::Vector2d(std::stod(a), std::stod(b));
  } catch (const std::exception&) {
    throw mcml::ConfigError(std::string(what) + ": cannot parse '" + text + "'");
  }
}

std::ostream& open_out(const std::string& path, std::ofstream& file) {
  if (path.empty() || path == "-") return std::cout;
  file.open(path, std::ios::binary);
  if (!file) throw mcml::ConfigError("cannot open " + path + " for writing");
  return file;
}

void print_fit(std::ostream& os, const mcml::FitResult& fit) {
  os << "theta_hat," << mcml::format_double(fit.theta_hat[0]);
  for (Eigen::Index k = 1; k < fit.theta_hat.size(); ++k)
    os << ',' << mcml::format_double(fit.theta_hat[k]);
  os << "\nloglik," << mcml::format_double(fit.loglik_at_hat) << "\niterations," << fit.iterations
     << "\nconverged," << (fit.converged ? 1 : 0) << '\n';
  if (!fit.diagnostic.empty()) os << "diagnostic," << fit.diagnostic << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Monte Carlo maximum likelihood for autologistic and binomial models"};
  app.set_config("--config", "", "key=value config file; [section] per subcommand");
  app.require_subcommand(1);

  std::uint64_t seed = 1;
  std::string out;

  // generate
  auto* gen = app.add_subcommand("generate", "Simulate an autologistic lattice by Gibbs sampling");
  int gen_d = 10;
  std::string gen_theta = "-1.21,0.75";
  long gen_sweeps = 100000;
  gen->add_option("--d", gen_d, "lattice side")->capture_default_str();
  gen->add_option("--theta", gen_theta, "theta_true as t0,t1")->capture_default_str();
  gen->add_option("--sweeps", gen_sweeps, "Gibbs sweeps from the all-zero lattice")
      ->capture_default_str();
  gen->add_option("--seed", seed, "RNG seed")->capture_default_str();
  gen->add_option("--out", out, "lattice file (stdout when omitted)");

  // fit
  auto* fit = app.add_subcommand("fit", "Replicated MCML fits written as CSV");
  std::string data, suffstat_only, algo = "benchmark", start = "mpl";
  int fit_d = 0;
  long reps = 1;
  int threads = 1;
  bool no_damping = false, wall_time = false;
  mcml::ExperimentConfig cfg;
  fit->add_option("--data", data, "observed lattice file");
  fit->add_option("--suffstat-only", suffstat_only, "observed statistic T0,T1 instead of a lattice");
  fit->add_option("--d", fit_d, "lattice side (required with --suffstat-only)");
  fit->add_option("--algo", algo, "benchmark|adaptive|exact|mpl")->capture_default_str();
  fit->add_option("--start", start, "mpl|zero|t0,t1")->capture_default_str();
  fit->add_option("--reps", reps, "replications")->capture_default_str();
  fit->add_option("--seed", seed, "master seed")->capture_default_str();
  fit->add_option("--threads", threads, "worker threads")->capture_default_str();
  fit->add_option("--out", out, "CSV path (stdout when omitted)");
  fit->add_option("--burn-in", cfg.burn_in, "benchmark burn-in sweeps")->capture_default_str();
  fit->add_option("--samples", cfg.samples, "benchmark collected sweeps")->capture_default_str();
  fit->add_option("--iters", cfg.iters, "adaptive outer iterations")->capture_default_str();
  fit->add_option("--l", cfg.isremc.l, "importance samples per increment")->capture_default_str();
  fit->add_option("--r", cfg.isremc.r, "resampled chains per increment")->capture_default_str();
  fit->add_option("--s", cfg.isremc.s, "chain burn-in per increment")->capture_default_str();
  fit->add_option("--n", cfg.isremc.n, "chain length per increment")->capture_default_str();
  fit->add_option("--newton-iters", cfg.newton.max_iters, "Newton iterations")
      ->capture_default_str();
  fit->add_option("--grad-tol", cfg.newton.grad_tol, "Newton gradient tolerance")
      ->capture_default_str();
  fit->add_flag("--no-damping", no_damping, "raw Newton-Raphson steps without backtracking");
  fit->add_flag("--wall-time", wall_time, "record wall time per replication");

  // exact
  auto* exact = app.add_subcommand("exact", "Exact MLE and maximized log-likelihood");
  int exact_d = 0, exact_n = 0, exact_y = -1;
  std::string exact_t;
  exact->add_option("--d", exact_d, "autologistic lattice side");
  exact->add_option("--T", exact_t, "observed statistic T0,T1");
  exact->add_option("--n", exact_n, "binomial trials");
  exact->add_option("--y", exact_y, "binomial observation");

  // mpl
  auto* mpl = app.add_subcommand("mpl", "Maximum pseudo-likelihood estimate of a lattice");
  std::string mpl_data;
  mpl->add_option("--data", mpl_data, "observed lattice file")->required();

  // binomial-demo
  auto* demo = app.add_subcommand("binomial-demo", "IS MCML on the binomial toy model");
  demo->set_help_flag("--help", "Print this help message and exit");
  mcml::BinomialDemoConfig demo_cfg;
  demo->add_option("--n", demo_cfg.trials, "trials")->capture_default_str();
  demo->add_option("--y", demo_cfg.y_obs, "observation")->capture_default_str();
  demo->add_option("--h", demo_cfg.h_kind, "uniform|optimal|target")->capture_default_str();
  demo->add_option("--m", demo_cfg.m, "importance samples per fit")->capture_default_str();
  demo->add_option("--reps", demo_cfg.reps, "replications")->capture_default_str();
  demo->add_option("--seed", seed, "master seed")->capture_default_str();
  demo->add_option("--out", out, "per-replication CSV");

  // clt-check
  auto* clt = app.add_subcommand("clt-check", "Empirical check of the MCML central limit theorem");
  mcml::CltSettings clt_cfg;
  std::string clt_kind = "is";
  clt->add_option("--kind", clt_kind, "is|adaptive|isremc")->capture_default_str();
  clt->add_option("--n", clt_cfg.trials, "trials")->capture_default_str();
  clt->add_option("--y", clt_cfg.y_obs, "observation")->capture_default_str();
  clt->add_option("--m", clt_cfg.m, "samples per fit")->capture_default_str();
  clt->add_option("--reps", clt_cfg.reps, "replications")->capture_default_str();
  clt->add_option("--seed", seed, "master seed")->capture_default_str();
  clt->add_option("--tol", clt_cfg.rel_tol, "relative tolerance")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  try {
    if (*gen) {
      const auto y = mcml::generate_lattice(gen_d, parse_pair(gen_theta, "--theta"), gen_sweeps, seed);
      std::ofstream file;
      mcml::write_lattice(open_out(out, file), y);
      const auto t = mcml::suff_stat(y);
      (out.empty() ? std::cerr : std::cout) << "T=" << t.ones << ',' << t.pairs << '\n';
      return 0;
    }

    if (*fit) {
      if (!data.empty()) {
        cfg.data = mcml::read_lattice_file(data);
        cfg.side = cfg.data->side();
        if (fit_d && fit_d != cfg.side) throw mcml::ConfigError("--d does not match the data file");
      } else if (!suffstat_only.empty()) {
        if (fit_d < 1) throw mcml::ConfigError("--suffstat-only needs --d");
        cfg.side = fit_d;
        cfg.suffstat = parse_pair(suffstat_only, "--suffstat-only");
      } else {
        throw mcml::ConfigError("fit needs --data or --suffstat-only");
      }
      cfg.algorithm = mcml::parse_algorithm(algo);
      if (start == "mpl") {
        cfg.start = mcml::StartKind::Mpl;
      } else if (start == "zero") {
        cfg.start = mcml::StartKind::Zero;
      } else {
        cfg.start = mcml::StartKind::Explicit;
        cfg.start_theta = parse_pair(start, "--start");
      }
      cfg.replications = reps;
      cfg.master_seed = seed;
      cfg.threads = threads;
      cfg.newton.line_search = !no_damping;
      cfg.record_time = wall_time;
      const auto records = mcml::run_experiment(cfg);
      std::ofstream file;
      mcml::write_csv(open_out(out, file), records);
      std::ostream& summary_os = out.empty() ? std::cerr : std::cout;
      mcml::write_summary(summary_os, mcml::summarize(records));
      return 0;
    }

    if (*exact) {
      mcml::ModelSpec model;
      mcml::Vector t;
      if (exact_d > 0) {
        model = mcml::AutologisticModel{exact_d};
        t = parse_pair(exact_t, "--T");
      } else if (exact_n > 0) {
        model = mcml::BinomialModel{exact_n};
        t = mcml::Vector::Constant(1, double(exact_y));
      } else {
        throw mcml::ConfigError("exact needs --d with --T, or --n with --y");
      }
      const auto result = mcml::exact_mle(model, t, mcml::NewtonConfig::exact());
      std::cout << "model," << mcml::describe(model) << '\n';
      print_fit(std::cout, result);
      return result.converged ? 0 : kExitNumerical;
    }

    if (*mpl) {
      const auto result = mcml::mpl_estimate(mcml::read_lattice_file(mpl_data),
                                             mcml::NewtonConfig::exact());
      print_fit(std::cout, result);
      return result.converged ? 0 : kExitNumerical;
    }

    if (*demo) {
      demo_cfg.seed = seed;
      std::ofstream file;
      std::ostream* csv = nullptr;
      if (!out.empty()) csv = &open_out(out, file);
      const auto report = mcml::binomial_demo(demo_cfg, std::cout, csv);
      return report.valid ? 0 : kExitNumerical;
    }

    if (*clt) {
      if (clt_kind == "is") {
        clt_cfg.kind = mcml::CltEstimator::ImportanceSampling;
      } else if (clt_kind == "adaptive") {
        clt_cfg.kind = mcml::CltEstimator::AdaptiveIS;
      } else if (clt_kind == "isremc") {
        clt_cfg.kind = mcml::CltEstimator::Isremc;
        clt_cfg.rel_tol = std::max(clt_cfg.rel_tol, 0.25);
      } else {
        throw mcml::ConfigError("--kind must be is, adaptive or isremc");
      }
      clt_cfg.seed = seed;
      const auto r = mcml::clt_validate(clt_cfg);
      std::cout << "theta_star," << mcml::format_double(r.theta_star) << "\ntarget_sigma,"
                << mcml::format_double(r.target_sigma) << "\nempirical_variance,"
                << mcml::format_double(r.empirical_var) << "\nrelative_error,"
                << mcml::format_double(r.rel_error) << "\nanderson_darling,"
                << mcml::format_double(r.normality.statistic) << "\nfailures," << r.failures
                << "\nresult," << (r.passed ? "PASS" : "FAIL") << '\n';
      return r.passed ? 0 : kExitNumerical;
    }
  } catch (const mcml::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const mcml::InfeasibleExactError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const mcml::Error& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return kExitNumerical;
  }
  return 0;
}
