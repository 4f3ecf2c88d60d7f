#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include <gtest/gtest.h>

#include "bnbei/experiments.hpp"

using namespace bnbei;
namespace fs = std::filesystem;

namespace {

std::vector<std::vector<std::string>> read_csv(const fs::path& p) {
  std::ifstream is(p);
  std::vector<std::vector<std::string>> rows;
  std::string line;
  while (std::getline(is, line)) {
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    rows.push_back(cells);
  }
  return rows;
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(is), {}};
}

ExperimentConfig small_direct() {
  ExperimentConfig c;
  c.experiment = ExperimentKind::Direct;
  c.n0 = {10};
  c.replications = 4;
  c.lhd_candidates = 50;
  c.seed = 3;
  return c;
}

fs::path scratch(const std::string& name) {
  auto p = fs::temp_directory_path() / ("bnbei_test_" + name);
  fs::remove_all(p);
  return p;
}

}  // namespace

TEST(Aggregate, MeanAndStandardError) {
  auto r = aggregate("bnb", 10, "max_ei", {1.0, 2.0, 3.0, 4.0}, 1);
  EXPECT_DOUBLE_EQ(r.mean, 2.5);
  EXPECT_DOUBLE_EQ(r.std_error, std::sqrt(5.0 / 3.0) / 2.0);
  EXPECT_EQ(r.n_included, 4u);
  EXPECT_EQ(r.n_excluded, 1u);
  EXPECT_TRUE(std::isnan(aggregate("ga", 1, "m", {5.0}, 0).std_error));
}

TEST(ExperimentConfig, Validation) {
  auto c = small_direct();
  c.replications = 0;
  EXPECT_THROW(c.validate(), ConfigError);
  c = small_direct();
  c.budget = 0;
  EXPECT_THROW(c.validate(), ConfigError);
  c = small_direct();
  c.n0 = {3};
  EXPECT_THROW(c.validate(), ConfigError);
  c = small_direct();
  c.function = "levy4";
  c.n0 = {5};
  EXPECT_THROW(c.validate(), ConfigError);
  EXPECT_EQ(c.effective_budget(), 3000u);
  c = small_direct();
  c.experiment = ExperimentKind::Study;
  EXPECT_THROW(c.validate(), ConfigError);
}

TEST(DirectComparison, PairedRowsShareFit) {
  auto res = run_direct_comparison(small_direct());
  ASSERT_EQ(res.raw.size(), 8u);
  for (std::size_t i = 0; i < res.raw.size(); i += 2) {
    EXPECT_EQ(res.raw[i].method, "bnb");
    EXPECT_EQ(res.raw[i + 1].method, "ga");
    EXPECT_EQ(res.raw[i].fingerprint, res.raw[i + 1].fingerprint);
    EXPECT_NE(res.raw[i].fingerprint, 0u);
    EXPECT_LE(res.raw[i].evals, 500u);
    EXPECT_LE(res.raw[i + 1].evals, 500u);
  }
  ASSERT_EQ(res.tests.size(), 1u);
  EXPECT_EQ(res.tests[0].n, 4u);
}

TEST(DirectComparison, SingleReplicationHasUndefinedError) {
  auto c = small_direct();
  c.replications = 1;
  auto res = run_direct_comparison(c);
  for (const auto& row : res.table) EXPECT_TRUE(std::isnan(row.std_error));
}

TEST(DirectComparison, InjectedFailureExcludesBothMethods) {
  auto c = small_direct();
  auto full = run_direct_comparison(c);
  c.inject_fit_failure = {1};
  auto res = run_direct_comparison(c);
  EXPECT_TRUE(res.raw[2].excluded);
  EXPECT_TRUE(res.raw[3].excluded);
  for (const auto& row : res.table) {
    EXPECT_EQ(row.n_included, 3u);
    EXPECT_EQ(row.n_excluded, 1u);
  }
  double bnb = 0.0;
  for (std::size_t r : {0, 2, 3}) bnb += full.raw[2 * r].max_ei;
  EXPECT_NEAR(res.table[0].mean, bnb / 3.0, 1e-12);
}

TEST(DirectComparison, AllFailedIsAnError) {
  auto c = small_direct();
  c.replications = 2;
  c.inject_fit_failure = {0, 1};
  EXPECT_THROW(run_direct_comparison(c), Error);
}

TEST(RunExperiment, AggregateReproducibleFromRaw) {
  auto c = small_direct();
  c.output_dir = scratch("agg");
  run_experiment(c);
  auto raw = read_csv(c.output_dir / "direct_raw.csv");
  auto agg = read_csv(c.output_dir / "direct_aggregate.csv");
  ASSERT_EQ(raw[0][4], "max_ei");
  std::map<std::string, std::vector<double>> by_method;
  for (std::size_t i = 1; i < raw.size(); ++i) by_method[raw[i][3]].push_back(std::stod(raw[i][4]));
  for (std::size_t i = 1; i < agg.size(); ++i) {
    auto row = aggregate(agg[i][0], 10, "max_ei", by_method[agg[i][0]], 0);
    EXPECT_EQ(std::stod(agg[i][3]), row.mean);
    EXPECT_EQ(std::stod(agg[i][4]), row.std_error);
  }
  fs::remove_all(c.output_dir);
}

TEST(RunExperiment, BitIdenticalRerun) {
  auto c = small_direct();
  c.threads = 2;
  c.output_dir = scratch("rerun_a");
  run_experiment(c);
  auto d = c;
  d.threads = 1;
  d.output_dir = scratch("rerun_b");
  run_experiment(d);
  EXPECT_EQ(slurp(c.output_dir / "direct_raw.csv"), slurp(d.output_dir / "direct_raw.csv"));
  EXPECT_EQ(slurp(c.output_dir / "direct_aggregate.csv"), slurp(d.output_dir / "direct_aggregate.csv"));
  fs::remove_all(c.output_dir);
  fs::remove_all(d.output_dir);
}

TEST(LongRun, ZeroNewPointsAndSchema) {
  ExperimentConfig c;
  c.experiment = ExperimentKind::LongRun;
  c.function = "branin";
  c.target = FeatureTarget::contour(45.0);
  c.n0 = {10};
  c.n_new = 0;
  c.replications = 3;
  c.lhd_candidates = 50;
  c.contour_resolution = 51;
  auto res = run_long_run(c);
  EXPECT_EQ(res.raw.size(), 9u);
  // BNB and GA share the initial design, so their k = 0 extremes agree.
  std::map<std::string, double> fmax;
  for (const auto& r : res.table)
    if (r.metric == "fmax_est") fmax[r.method] = r.mean;
  EXPECT_EQ(fmax["bnb"], fmax["ga"]);
  for (const auto& r : res.table) EXPECT_EQ(r.group, 0u);

  std::ostringstream os;
  write_long_run_raw_csv(os, res.raw);
  EXPECT_EQ(os.str().substr(0, os.str().find('\n')), "run_id,seed,method,k,y_new,fmin_est,fmax_est,max_ei,d_k");
}

TEST(LongRun, DivergenceDecreasesForBraninContour) {
  ExperimentConfig c;
  c.experiment = ExperimentKind::LongRun;
  c.target = FeatureTarget::contour(45.0);
  c.n0 = {20};
  c.n_new = 30;
  c.replications = 10;
  auto res = run_long_run(c);
  std::map<std::string, std::map<std::size_t, double>> d;
  for (const auto& r : res.table)
    if (r.metric == "d_k") d[r.method][r.group] = r.mean;
  for (const std::string m : {"bnb", "ga"}) {
    EXPECT_LT(d[m][10], d[m][0]) << m;
    EXPECT_LT(d[m][30], d[m][10]) << m;
  }
}

TEST(LongRun, InjectedFailureLogged) {
  ExperimentConfig c;
  c.experiment = ExperimentKind::LongRun;
  c.n0 = {10};
  c.n_new = 2;
  c.replications = 3;
  c.lhd_candidates = 20;
  c.inject_fit_failure = {2};
  auto res = run_long_run(c);
  ASSERT_EQ(res.excluded, std::vector<std::size_t>{2});
  ASSERT_EQ(res.exclusion_log.size(), 1u);
  for (const auto& r : res.raw) EXPECT_NE(r.run_id, 2u);
}

TEST(Study, BandProportions) {
  std::vector<double> v = {1.0, 5.0, 9.0, 45.0};
  EXPECT_DOUBLE_EQ(band_proportion(v, 0.0, 10.0), 0.75);
  EXPECT_DOUBLE_EQ(band_proportion(v, -1e9, 1e9), 1.0);
  EXPECT_TRUE(std::isnan(band_proportion({}, 0.0, 1.0)));
}

TEST(Study, WholeRangeBandAndEmptyK) {
  ExperimentConfig c;
  c.experiment = ExperimentKind::Study;
  c.target = FeatureTarget::contour(45.0);
  c.n0 = {10};
  c.n_new = 5;
  c.replications = 2;
  c.lhd_candidates = 20;
  c.band_lo = -1e9;
  c.band_hi = 1e9;
  c.study_k = {0, 5};
  auto res = run_local_global_study(c);
  for (const auto& r : res.table) {
    if (r.group == 0) {
      EXPECT_EQ(r.n_included, 0u);
      EXPECT_TRUE(std::isnan(r.mean));
    } else {
      EXPECT_DOUBLE_EQ(r.mean, 1.0);
    }
  }
}

TEST(DerivPlots, TableProperties) {
  auto rows = derivative_table(2.0);
  ASSERT_EQ(rows.size(), 3u * 1201u);
  std::map<double, double> peak;
  for (const auto& r : rows) {
    if (r.t == 0.0) EXPECT_NEAR(r.d_dt, 0.0, 1e-12);
    EXPECT_GE(r.d_ds, 0.0);
    peak[r.s] = std::max(peak[r.s], std::abs(r.d_dt));
  }
  EXPECT_LT(peak[0.5], peak[1.0]);
  EXPECT_LT(peak[1.0], peak[2.0]);
}

TEST(DerivPlots, FilesWritten) {
  ExperimentConfig c;
  c.experiment = ExperimentKind::DerivPlots;
  c.output_dir = scratch("deriv");
  auto files = run_experiment(c);
  ASSERT_EQ(files.size(), 3u);
  for (const auto& f : files) EXPECT_GT(fs::file_size(f), 100u);
  auto csv = read_csv(c.output_dir / "derivplots.csv");
  EXPECT_EQ(csv[0], (std::vector<std::string>{"s", "t", "d_dt", "d_ds"}));
  EXPECT_EQ(csv.size(), 3u * 1201u + 1u);
  fs::remove_all(c.output_dir);
}

TEST(ParallelFor, RethrowsWorkerException) {
  std::vector<int> hit(100, 0);
  parallel_for(100, 3, [&](std::size_t i) { hit[i] = 1; });
  EXPECT_EQ(std::count(hit.begin(), hit.end(), 1), 100);
  EXPECT_THROW(parallel_for(10, 2, [](std::size_t i) {
                 if (i == 7) throw ConfigError("boom");
               }),
               ConfigError);
}
