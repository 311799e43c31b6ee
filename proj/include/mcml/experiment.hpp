#pragma once

#include "mcml/asymptotics.hpp"
#include "mcml/optimizer.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace mcml {

// ---------------------------------------------------------------------------
// Lattice files: a "d=<int>" line followed by d lines of d characters in {0,1}.

void write_lattice(std::ostream& os, const BinaryLattice& y);
BinaryLattice read_lattice(std::istream& is);
void write_lattice_file(const std::string& path, const BinaryLattice& y);
BinaryLattice read_lattice_file(const std::string& path);

/// Gibbs run from the all-zero lattice for `sweeps` sweeps at theta_true.
BinaryLattice generate_lattice(int side, const Theta& theta_true, long sweeps, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Replication experiments

enum class Algorithm { Benchmark, Adaptive, Exact, Mpl };
enum class StartKind { Mpl, Zero, Explicit };

Algorithm parse_algorithm(const std::string& name);
std::string to_string(Algorithm algorithm);

struct ExperimentConfig {
  int side = 10;
  /// Observed lattice; absent in suffstat-only mode.
  std::optional<BinaryLattice> data;
  /// Observed statistic for suffstat-only mode.
  std::optional<Vector> suffstat;

  Algorithm algorithm = Algorithm::Benchmark;
  // Benchmark: burn-in sweeps and collected sweeps.
  long burn_in = 1000;
  long samples = 39000;
  // Adaptive: outer iterations and per-increment controls.
  long iters = 20;
  IsremcConfig isremc{1000, 1, 100, 900};
  PsiBox box = PsiBox::uniform(2, -10, 10);
  NewtonConfig newton = NewtonConfig::monte_carlo();

  StartKind start = StartKind::Mpl;
  Theta start_theta = Vector::Zero(2);

  long replications = 1;
  std::uint64_t master_seed = 1;
  int threads = 1;
  /// Record wall time per replication. Off by default so output bytes depend
  /// only on the config and seed.
  bool record_time = false;

  void validate() const;
  Vector observed_statistic() const;
};

struct RunRecord {
  long rep = 0;
  std::uint64_t seed = 0;
  Theta theta_hat = Vector::Constant(2, std::numeric_limits<double>::quiet_NaN());
  /// Exact log-likelihood at theta_hat; NaN when the oracle is infeasible.
  double exact_loglik = std::numeric_limits<double>::quiet_NaN();
  int iterations = 0;
  bool converged = false;
  double wall_ms = 0.0;
  int clamp_events = 0;
  int fallback_steps = 0;
  std::string diagnostic;
};

/// Starting point implied by the config: MPL (falls back to zero when the
/// MPL does not exist), zero or explicit.
Theta resolve_start(const ExperimentConfig& config);

RunRecord run_replication(const ExperimentConfig& config, const Theta& start, long rep);

/// Runs every replication on `config.threads` workers. Each replication uses
/// RngStream::derive_seed(master_seed, rep); records come back in
/// replication order.
std::vector<RunRecord> run_experiment(const ExperimentConfig& config);

/// 17 significant digits, round-trip exact; "nan" for NaN.
std::string format_double(double x);

std::string csv_header();
std::string csv_row(const RunRecord& record);
void write_csv(std::ostream& os, const std::vector<RunRecord>& records);
std::vector<RunRecord> read_csv(std::istream& is);

struct ComponentSummary {
  long count = 0;
  double mean = 0, median = 0, sd = 0;
};

struct Summary {
  long records = 0;
  long converged = 0;
  std::vector<ComponentSummary> theta;
  ComponentSummary exact_loglik;
};

Summary summarize(const std::vector<RunRecord>& records);
void write_summary(std::ostream& os, const Summary& summary);

// ---------------------------------------------------------------------------
// Binomial toy study

struct BinomialDemoConfig {
  int trials = 20;
  int y_obs = 14;
  /// uniform | optimal | target
  std::string h_kind = "uniform";
  long m = 10000;
  long reps = 2000;
  std::uint64_t seed = 1;
};

/// Runs the IS MCML study, prints empirical vs exact sandwich variance and
/// the instrumental-density comparison table; optionally writes per-rep CSV.
/// Returns the CLT report.
CltReport binomial_demo(const BinomialDemoConfig& config, std::ostream& report, std::ostream* csv);

}  // namespace mcml
