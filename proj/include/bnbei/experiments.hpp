#pragma once

#include <filesystem>
#include <functional>
#include <optional>
#include <ostream>
#include <string>

#include "bnbei/sequential.hpp"

namespace bnbei {

enum class ExperimentKind { Study, Direct, LongRun, DerivPlots };

std::string to_string(ExperimentKind kind);

struct ExperimentConfig {
  ExperimentKind experiment = ExperimentKind::Direct;
  std::string function = "branin";
  FeatureTarget target = FeatureTarget::max_min();
  std::vector<std::size_t> n0 = {20};
  std::size_t n_new = 30;
  std::size_t replications = 10;
  std::optional<std::size_t> budget;  // defaults to 500 in 2-D, 3000 otherwise
  std::uint64_t seed = 1;
  std::filesystem::path output_dir = "results";

  // Local/global study: band (lo, hi) of "local" responses and reporting k's.
  std::optional<double> band_lo;
  std::optional<double> band_hi;
  std::vector<std::size_t> study_k = {5, 10, 20, 30};

  std::size_t threads = 0;  // 0: hardware concurrency
  std::size_t lhd_candidates = 1000;
  std::size_t contour_resolution = 201;
  FitOptions fit;

  // A replication is excluded when sigma2 exceeds this multiple of the sample
  // variance of the responses.
  double bad_fit_ratio = 1e6;

  // Replication indices whose GP fit is forced to fail (exercises the
  // exclusion path).
  std::vector<std::size_t> inject_fit_failure;

  void validate() const;
  std::size_t dim() const;
  std::size_t effective_budget() const;
  std::pair<double, double> band() const;
};

// Mean and standard error s / sqrt(n) of one group of replications.
struct AggregateRow {
  std::string method;
  std::size_t group = 0;  // k or n0
  std::string metric;
  double mean = 0.0;
  double std_error = std::numeric_limits<double>::quiet_NaN();  // undefined for n = 1
  std::size_t n_included = 0;
  std::size_t n_excluded = 0;
};

AggregateRow aggregate(std::string method, std::size_t group, std::string metric,
                       const std::vector<double>& values, std::size_t n_excluded);

// method,<group_name>,metric,mean,stderr,n_included,n_excluded
void write_aggregate_csv(std::ostream& os, const std::vector<AggregateRow>& rows,
                         const std::string& group_name);

// Hash of a fitted surrogate's design, responses and parameters.
std::uint64_t fit_fingerprint(const GPFit& fit);

// ---- direct comparison -----------------------------------------------------

struct DirectRaw {
  std::size_t replication = 0;
  std::uint64_t seed = 0;
  std::size_t n0 = 0;
  std::string method;
  double max_ei = std::numeric_limits<double>::quiet_NaN();
  std::size_t evals = 0;
  std::uint64_t fingerprint = 0;
  bool excluded = false;
  std::string note;
};

// One-sided paired t-test of mean(BNB - GA) > 0.
struct PairedTest {
  std::size_t n0 = 0;
  std::size_t n = 0;
  double mean_diff = 0.0;
  double t_stat = 0.0;
  double p_value = 1.0;
};

struct DirectResult {
  std::vector<DirectRaw> raw;
  std::vector<AggregateRow> table;
  std::vector<PairedTest> tests;
};

// For every replication and n0: one maximin LHD and one GP fit shared by BNB
// and GA under the same evaluation budget. Throws Error when no replication
// of some n0 succeeds.
DirectResult run_direct_comparison(const ExperimentConfig& cfg);

void write_direct_raw_csv(std::ostream& os, const std::vector<DirectRaw>& raw);

// ---- long-run comparison ---------------------------------------------------

struct LongRunRaw {
  std::size_t run_id = 0;
  std::uint64_t seed = 0;
  std::string method;
  std::size_t k = 0;
  double y_new = std::numeric_limits<double>::quiet_NaN();
  double fmin_est = 0.0;
  double fmax_est = 0.0;
  double max_ei = std::numeric_limits<double>::quiet_NaN();
  double d_k = std::numeric_limits<double>::quiet_NaN();
};

struct LongRunResult {
  std::vector<LongRunRaw> raw;  // included replications only
  std::vector<AggregateRow> table;
  std::vector<std::size_t> excluded;
  std::vector<std::string> exclusion_log;
};

// Sequential BNB, sequential GA and the static baseline per replication
// (BNB and GA share the initial design). Aggregates fmin_est, fmax_est and,
// for contour targets, d_k per method and k.
LongRunResult run_long_run(const ExperimentConfig& cfg);

void write_long_run_raw_csv(std::ostream& os, const std::vector<LongRunRaw>& raw);

// ---- local/global study ----------------------------------------------------

struct StudyRaw {
  std::size_t replication = 0;
  std::uint64_t seed = 0;
  std::string criterion;
  std::size_t k = 0;
  double proportion = std::numeric_limits<double>::quiet_NaN();  // undefined for k = 0
};

struct StudyResult {
  std::vector<StudyRaw> raw;
  std::vector<AggregateRow> table;
  std::vector<std::size_t> excluded;
};

// GA-driven sequential contour runs under the full and modified criteria from
// a shared initial design; proportion of added points whose true response
// falls inside the band, after the first k additions.
StudyResult run_local_global_study(const ExperimentConfig& cfg);

// Fraction of `responses` strictly inside (lo, hi); NaN when empty.
double band_proportion(std::span<const double> responses, double lo, double hi);

void write_study_raw_csv(std::ostream& os, const std::vector<StudyRaw>& raw);

// ---- derivative plots ------------------------------------------------------

struct DerivRow {
  double s = 0.0;
  double t = 0.0;
  double d_dt = 0.0;
  double d_ds = 0.0;
};

// Partials of the modified contour criterion over t in [-6, 6] (step 0.01)
// for s in {0.5, 1, 2}.
std::vector<DerivRow> derivative_table(double alpha);

// Writes derivplots.csv, d_dt.svg and d_ds.svg into cfg.output_dir.
std::vector<DerivRow> emit_derivative_plots(const ExperimentConfig& cfg);

// Runs the configured experiment and writes <name>_raw.csv and
// <name>_aggregate.csv into cfg.output_dir. Returns the written files.
std::vector<std::filesystem::path> run_experiment(const ExperimentConfig& cfg);

// Calls body(i) for i in [0, n) on up to `threads` workers.
void parallel_for(std::size_t n, std::size_t threads, const std::function<void(std::size_t)>& body);

}  // namespace bnbei
