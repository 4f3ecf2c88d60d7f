#include "bnbei/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstring>
#include <exception>
#include <fstream>
#include <mutex>
#include <numeric>
#include <thread>

#include <boost/math/distributions/students_t.hpp>
#include <fmt/format.h>
#include <fmt/ostream.h>

#include "svg_plot.hpp"

namespace bnbei {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::uint64_t fnv1a(std::uint64_t h, const void* data, std::size_t len) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < len; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

double sample_variance(const Eigen::VectorXd& y) {
  if (y.size() < 2) return 0.0;
  double m = y.mean();
  return (y.array() - m).square().sum() / static_cast<double>(y.size() - 1);
}

std::ofstream open_output(const std::filesystem::path& path) {
  std::filesystem::create_directories(path.parent_path());
  std::ofstream os(path);
  if (!os) throw Error("cannot open output file " + path.string());
  return os;
}

// Target handed to both optimizers: the full contour criterion has no bound
// rule, so BNB comparisons always run on the modified one.
FeatureTarget comparison_target(const FeatureTarget& t) {
  if (t.kind == FeatureKind::ContourFull) return FeatureTarget::contour(t.level, t.alpha, true);
  return t;
}

SequentialConfig sequential_config(const ExperimentConfig& cfg, std::size_t n0,
                                   const std::vector<Point>& contour) {
  SequentialConfig sc;
  sc.n0 = n0;
  sc.n_new = cfg.n_new;
  sc.bnb = BnbConfig::for_dimension(cfg.dim());
  sc.bnb.ei_eval_budget = cfg.effective_budget();
  sc.ga = GaConfig::for_budget(cfg.effective_budget());
  sc.fit = cfg.fit;
  sc.lhd_candidates = cfg.lhd_candidates;
  sc.contour_points = contour;
  return sc;
}

std::vector<Point> contour_for(const ExperimentConfig& cfg, const TestFunction& f) {
  if (!cfg.target.is_contour()) return {};
  return discretize_contour(f, cfg.target.level, cfg.contour_resolution);
}

bool contains(const std::vector<std::size_t>& v, std::size_t x) {
  return std::find(v.begin(), v.end(), x) != v.end();
}

}  // namespace

std::string to_string(ExperimentKind kind) {
  switch (kind) {
    case ExperimentKind::Study:
      return "study";
    case ExperimentKind::Direct:
      return "direct";
    case ExperimentKind::LongRun:
      return "longrun";
    case ExperimentKind::DerivPlots:
      return "derivplots";
  }
  return "unknown";
}

void ExperimentConfig::validate() const {
  if (experiment == ExperimentKind::DerivPlots) {
    target.validate();
    return;
  }
  auto f = make_test_function(function);
  target.validate();
  if (replications < 1) throw ConfigError("replications must be at least 1");
  if (budget && *budget == 0) throw ConfigError("budget must be positive");
  if (n0.empty()) throw ConfigError("at least one n0 is required");
  for (std::size_t n : n0) {
    if (n < f.dim + 2) throw ConfigError(fmt::format("n0 = {} is below d + 2 = {}", n, f.dim + 2));
  }
  if (experiment == ExperimentKind::Study) {
    if (!target.is_contour()) throw ConfigError("study: a contour target is required");
    auto [lo, hi] = band();
    if (!(lo < hi)) throw ConfigError("study: band must satisfy lo < hi");
  }
}

std::size_t ExperimentConfig::dim() const { return make_test_function(function).dim; }

std::size_t ExperimentConfig::effective_budget() const {
  if (budget) return *budget;
  return dim() <= 2 ? 500 : 3000;
}

std::pair<double, double> ExperimentConfig::band() const {
  double lo = 0.0, hi = 0.0;
  if (function == "branin") {
    lo = 40.0;
    hi = 50.0;
  } else if (function == "levy2") {
    lo = 60.0;
    hi = 80.0;
  } else {
    lo = target.level - 0.1 * std::abs(target.level);
    hi = target.level + 0.1 * std::abs(target.level);
  }
  return {band_lo.value_or(lo), band_hi.value_or(hi)};
}

AggregateRow aggregate(std::string method, std::size_t group, std::string metric,
                       const std::vector<double>& values, std::size_t n_excluded) {
  AggregateRow row{std::move(method), group, std::move(metric), kNaN, kNaN, values.size(), n_excluded};
  if (values.empty()) return row;
  const double n = static_cast<double>(values.size());
  row.mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
  if (values.size() > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - row.mean) * (v - row.mean);
    row.std_error = std::sqrt(ss / (n - 1.0)) / std::sqrt(n);
  }
  return row;
}

void write_aggregate_csv(std::ostream& os, const std::vector<AggregateRow>& rows,
                         const std::string& group_name) {
  fmt::print(os, "method,{},metric,mean,stderr,n_included,n_excluded\n", group_name);
  for (const auto& r : rows) {
    fmt::print(os, "{},{},{},{},{},{},{}\n", r.method, r.group, r.metric, r.mean, r.std_error,
               r.n_included, r.n_excluded);
  }
}

std::uint64_t fit_fingerprint(const GPFit& fit) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  const auto& d = fit.data();
  const auto& p = fit.params();
  h = fnv1a(h, d.X.data(), sizeof(double) * static_cast<std::size_t>(d.X.size()));
  h = fnv1a(h, d.y.data(), sizeof(double) * static_cast<std::size_t>(d.y.size()));
  h = fnv1a(h, p.theta.data(), sizeof(double) * static_cast<std::size_t>(p.theta.size()));
  for (double v : {p.mu, p.sigma2, p.delta}) h = fnv1a(h, &v, sizeof v);
  return h;
}

void parallel_for(std::size_t n, std::size_t threads,
                  const std::function<void(std::size_t)>& body) {
  if (threads == 0) threads = std::max(1U, std::thread::hardware_concurrency());
  threads = std::min(threads, n);
  if (threads <= 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  {
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < threads; ++t) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < n; i = next++) {
          try {
            body(i);
          } catch (...) {
            std::lock_guard lock(error_mutex);
            if (!error) error = std::current_exception();
          }
        }
      });
    }
  }
  if (error) std::rethrow_exception(error);
}

// ---- direct comparison -----------------------------------------------------

DirectResult run_direct_comparison(const ExperimentConfig& cfg) {
  cfg.validate();
  const auto f = make_test_function(cfg.function);
  const FeatureTarget target = comparison_target(cfg.target);
  const std::size_t budget = cfg.effective_budget();
  const std::size_t n_n0 = cfg.n0.size();

  // Two rows (BNB, GA) per replication and n0, filled in place.
  std::vector<DirectRaw> raw(cfg.replications * n_n0 * 2);
  parallel_for(cfg.replications * n_n0, cfg.threads, [&](std::size_t job) {
    const std::size_t rep = job / n_n0;
    const std::size_t n0 = cfg.n0[job % n_n0];
    const std::uint64_t seed = derive_seed(cfg.seed, rep);
    Rng rng(derive_seed(seed, n0));

    DirectRaw& bnb_row = raw[2 * job];
    DirectRaw& ga_row = raw[2 * job + 1];
    for (DirectRaw* r : {&bnb_row, &ga_row}) {
      r->replication = rep;
      r->seed = seed;
      r->n0 = n0;
    }
    bnb_row.method = "bnb";
    ga_row.method = "ga";
    auto exclude = [&](const std::string& why) {
      for (DirectRaw* r : {&bnb_row, &ga_row}) {
        r->excluded = true;
        r->note = why;
      }
    };

    auto pts = maximin_lhd(n0, f.dim, cfg.lhd_candidates, rng);
    std::vector<double> y;
    for (const auto& x : pts) y.push_back(f(x));
    auto data = DesignData::from_points(pts, y);
    FitOptions fo = cfg.fit;
    fo.seed = rng();
    const std::uint64_t bnb_seed = rng();
    const std::uint64_t ga_seed = rng();

    if (contains(cfg.inject_fit_failure, rep)) {
      exclude("injected fit failure");
      return;
    }
    std::optional<GPFit> fit;
    try {
      fit = fit_gp(data, fo);
    } catch (const Error& e) {
      exclude(std::string("fit failed: ") + e.what());
      return;
    }
    if (fit->params().sigma2 > cfg.bad_fit_ratio * sample_variance(data.y)) {
      exclude("bad fit: sigma2 exceeds ratio x sample variance");
      return;
    }

    const auto bests = BestEstimates::from_responses(data.y);
    const std::uint64_t fp = fit_fingerprint(*fit);

    BnbConfig bc = BnbConfig::for_dimension(f.dim);
    bc.ei_eval_budget = budget;
    bc.rng_seed = bnb_seed;
    auto br = bnb_maximize(*fit, target, bests, bc);
    bnb_row.max_ei = br.ei_best;
    bnb_row.evals = br.evals_used;
    bnb_row.fingerprint = fp;

    GaConfig gc = GaConfig::for_budget(budget);
    gc.rng_seed = ga_seed;
    auto gr = ga_maximize(*fit, target, bests, gc);
    ga_row.max_ei = gr.ei_best;
    ga_row.evals = gr.evals_used;
    ga_row.fingerprint = fp;
  });

  DirectResult res;
  res.raw = std::move(raw);
  for (std::size_t n0 : cfg.n0) {
    std::vector<double> bnb, ga;
    std::size_t excluded = 0;
    for (std::size_t i = 0; i < res.raw.size(); i += 2) {
      const auto& b = res.raw[i];
      if (b.n0 != n0) continue;
      if (b.excluded) {
        ++excluded;
        continue;
      }
      bnb.push_back(b.max_ei);
      ga.push_back(res.raw[i + 1].max_ei);
    }
    if (bnb.empty())
      throw Error(fmt::format("direct comparison: no successful replication for n0 = {}", n0));
    res.table.push_back(aggregate("bnb", n0, "max_ei", bnb, excluded));
    res.table.push_back(aggregate("ga", n0, "max_ei", ga, excluded));

    std::vector<double> diff(bnb.size());
    for (std::size_t i = 0; i < bnb.size(); ++i) diff[i] = bnb[i] - ga[i];
    auto d = aggregate("diff", n0, "max_ei", diff, excluded);
    PairedTest test{n0, diff.size(), d.mean, kNaN, kNaN};
    if (diff.size() > 1) {
      if (d.std_error > 0.0) {
        test.t_stat = d.mean / d.std_error;
        boost::math::students_t dist(static_cast<double>(diff.size() - 1));
        test.p_value = boost::math::cdf(boost::math::complement(dist, test.t_stat));
      } else {
        test.t_stat = d.mean > 0.0 ? std::numeric_limits<double>::infinity() : 0.0;
        test.p_value = d.mean > 0.0 ? 0.0 : 1.0;
      }
    }
    res.tests.push_back(test);
  }
  return res;
}

void write_direct_raw_csv(std::ostream& os, const std::vector<DirectRaw>& raw) {
  os << "run_id,seed,n0,method,max_ei,evals_used,fit_fingerprint,excluded,note\n";
  for (const auto& r : raw) {
    fmt::print(os, "{},{},{},{},{},{},{:016x},{},\"{}\"\n", r.replication, r.seed, r.n0, r.method,
               r.max_ei, r.evals, r.fingerprint, r.excluded ? 1 : 0, r.note);
  }
}

// ---- long-run comparison ---------------------------------------------------

LongRunResult run_long_run(const ExperimentConfig& cfg) {
  cfg.validate();
  const auto f = make_test_function(cfg.function);
  const FeatureTarget target = comparison_target(cfg.target);
  const std::size_t n0 = cfg.n0.front();
  const auto contour = contour_for(cfg, f);
  const SequentialConfig base = sequential_config(cfg, n0, contour);

  std::vector<std::size_t> ks(cfg.n_new + 1);
  std::iota(ks.begin(), ks.end(), 0);

  struct Rep {
    std::vector<LongRunRaw> rows;
    std::string failure;
  };
  std::vector<Rep> reps(cfg.replications);

  parallel_for(cfg.replications, cfg.threads, [&](std::size_t rep) {
    const std::uint64_t seed = derive_seed(cfg.seed, rep);
    Rep& out = reps[rep];
    if (contains(cfg.inject_fit_failure, rep)) {
      out.failure = "injected fit failure";
      return;
    }
    Rng design_rng(derive_seed(seed, 0));
    auto initial = maximin_lhd(n0, f.dim, cfg.lhd_candidates, design_rng);

    for (auto kind : {OptimizerKind::Bnb, OptimizerKind::Ga}) {
      SequentialConfig sc = base;
      sc.optimizer = kind;
      Rng rng(derive_seed(seed, kind == OptimizerKind::Bnb ? 1 : 2));
      auto trace = run_sequential_from(f, target, initial, sc, rng);
      if (trace.failed) {
        out.failure = to_string(kind) + ": " + trace.failure;
        return;
      }
      for (const auto& r : trace.records) {
        out.rows.push_back(
            {rep, seed, to_string(kind), r.k, r.y, r.fmin_est, r.fmax_est, r.max_ei, r.divergence});
      }
    }

    Rng static_rng(derive_seed(seed, 3));
    auto st = static_baseline(f, target, n0, ks, base, static_rng);
    for (const auto& lvl : st.levels) {
      if (lvl.failed) {
        out.failure = fmt::format("static: fit failed at k = {}", lvl.k);
        return;
      }
      out.rows.push_back({rep, seed, "static", lvl.k, kNaN, lvl.fmin_est, lvl.fmax_est, kNaN,
                          lvl.divergence});
    }
  });

  LongRunResult res;
  for (std::size_t rep = 0; rep < reps.size(); ++rep) {
    if (!reps[rep].failure.empty()) {
      res.excluded.push_back(rep);
      res.exclusion_log.push_back(fmt::format("replication {}: {}", rep, reps[rep].failure));
      continue;
    }
    for (auto& r : reps[rep].rows) res.raw.push_back(std::move(r));
  }
  if (res.excluded.size() == reps.size()) throw Error("long run: every replication failed");

  std::vector<std::string> metrics = {"fmin_est", "fmax_est"};
  if (target.is_contour()) metrics.push_back("d_k");
  for (const std::string method : {"bnb", "ga", "static"}) {
    for (std::size_t k : ks) {
      for (const auto& metric : metrics) {
        std::vector<double> vals;
        for (const auto& r : res.raw) {
          if (r.method != method || r.k != k) continue;
          vals.push_back(metric == "fmin_est" ? r.fmin_est
                         : metric == "fmax_est" ? r.fmax_est
                                                : r.d_k);
        }
        res.table.push_back(aggregate(method, k, metric, vals, res.excluded.size()));
      }
    }
  }
  return res;
}

void write_long_run_raw_csv(std::ostream& os, const std::vector<LongRunRaw>& raw) {
  os << "run_id,seed,method,k,y_new,fmin_est,fmax_est,max_ei,d_k\n";
  for (const auto& r : raw) {
    fmt::print(os, "{},{},{},{},{},{},{},{},{}\n", r.run_id, r.seed, r.method, r.k, r.y_new,
               r.fmin_est, r.fmax_est, r.max_ei, r.d_k);
  }
}

// ---- local/global study ----------------------------------------------------

double band_proportion(std::span<const double> responses, double lo, double hi) {
  if (responses.empty()) return kNaN;
  std::size_t inside = 0;
  for (double v : responses) inside += (v > lo && v < hi) ? 1 : 0;
  return static_cast<double>(inside) / static_cast<double>(responses.size());
}

StudyResult run_local_global_study(const ExperimentConfig& cfg) {
  cfg.validate();
  const auto f = make_test_function(cfg.function);
  const std::size_t n0 = cfg.n0.front();
  const auto [lo, hi] = cfg.band();
  const std::size_t n_new = std::max(cfg.n_new, *std::max_element(cfg.study_k.begin(), cfg.study_k.end()));

  ExperimentConfig run_cfg = cfg;
  run_cfg.n_new = n_new;
  SequentialConfig base = sequential_config(run_cfg, n0, {});
  base.optimizer = OptimizerKind::Ga;

  struct Rep {
    std::vector<StudyRaw> rows;
    bool failed = false;
  };
  std::vector<Rep> reps(cfg.replications);
  const std::pair<std::string, bool> criteria[] = {{"contour-full", false}, {"contour-mod", true}};

  parallel_for(cfg.replications, cfg.threads, [&](std::size_t rep) {
    const std::uint64_t seed = derive_seed(cfg.seed, rep);
    Rep& out = reps[rep];
    if (contains(cfg.inject_fit_failure, rep)) {
      out.failed = true;
      return;
    }
    Rng design_rng(derive_seed(seed, 0));
    auto initial = maximin_lhd(n0, f.dim, cfg.lhd_candidates, design_rng);
    std::uint64_t stream = 1;
    for (const auto& [name, modified] : criteria) {
      Rng rng(derive_seed(seed, stream++));
      auto target = FeatureTarget::contour(cfg.target.level, cfg.target.alpha, modified);
      auto trace = run_sequential_from(f, target, initial, base, rng);
      if (trace.failed) {
        out.failed = true;
        return;
      }
      std::vector<double> added(trace.responses.begin() + static_cast<std::ptrdiff_t>(n0),
                                trace.responses.end());
      for (std::size_t k : cfg.study_k) {
        std::span<const double> first(added.data(), std::min(k, added.size()));
        out.rows.push_back({rep, seed, name, k, band_proportion(first, lo, hi)});
      }
    }
  });

  StudyResult res;
  for (std::size_t rep = 0; rep < reps.size(); ++rep) {
    if (reps[rep].failed) {
      res.excluded.push_back(rep);
      continue;
    }
    for (auto& r : reps[rep].rows) res.raw.push_back(std::move(r));
  }
  if (res.excluded.size() == reps.size()) throw Error("study: every replication failed");
  for (const auto& [name, modified] : criteria) {
    for (std::size_t k : cfg.study_k) {
      std::vector<double> vals;
      for (const auto& r : res.raw) {
        if (r.criterion == name && r.k == k && !std::isnan(r.proportion)) vals.push_back(r.proportion);
      }
      res.table.push_back(aggregate(name, k, "band_proportion", vals, res.excluded.size()));
    }
  }
  return res;
}

void write_study_raw_csv(std::ostream& os, const std::vector<StudyRaw>& raw) {
  os << "run_id,seed,criterion,k,proportion\n";
  for (const auto& r : raw)
    fmt::print(os, "{},{},{},{},{}\n", r.replication, r.seed, r.criterion, r.k, r.proportion);
}

// ---- derivative plots ------------------------------------------------------

std::vector<DerivRow> derivative_table(double alpha) {
  std::vector<DerivRow> rows;
  for (double s : {0.5, 1.0, 2.0}) {
    for (int i = 0; i <= 1200; ++i) {
      double t = static_cast<double>(i - 600) / 100.0;
      auto p = d_ei_contour_mod_ts(t, s, alpha);
      rows.push_back({s, t, p.d_dt, p.d_ds});
    }
  }
  return rows;
}

std::vector<DerivRow> emit_derivative_plots(const ExperimentConfig& cfg) {
  cfg.target.validate();
  auto rows = derivative_table(cfg.target.alpha);
  {
    auto os = open_output(cfg.output_dir / "derivplots.csv");
    os << "s,t,d_dt,d_ds\n";
    for (const auto& r : rows) fmt::print(os, "{},{},{},{}\n", r.s, r.t, r.d_dt, r.d_ds);
  }
  for (bool wrt_t : {true, false}) {
    std::vector<SvgSeries> series;
    for (double s : {0.5, 1.0, 2.0}) {
      SvgSeries ser{fmt::format("s = {}", s), {}, {}};
      for (const auto& r : rows) {
        if (r.s != s) continue;
        ser.x.push_back(r.t);
        ser.y.push_back(wrt_t ? r.d_dt : r.d_ds);
      }
      series.push_back(std::move(ser));
    }
    auto os = open_output(cfg.output_dir / (wrt_t ? "d_dt.svg" : "d_ds.svg"));
    write_svg_plot(os,
                   fmt::format("Partial derivative w.r.t. {} (alpha = {})", wrt_t ? "t" : "s",
                               cfg.target.alpha),
                   "t", wrt_t ? "dEI/dt" : "dEI/ds", series);
  }
  return rows;
}

std::vector<std::filesystem::path> run_experiment(const ExperimentConfig& cfg) {
  const auto dir = cfg.output_dir;
  const std::string name = to_string(cfg.experiment);
  std::vector<std::filesystem::path> written;
  auto raw_path = dir / (name + "_raw.csv");
  auto agg_path = dir / (name + "_aggregate.csv");

  switch (cfg.experiment) {
    case ExperimentKind::Direct: {
      auto res = run_direct_comparison(cfg);
      {
        auto os = open_output(raw_path);
        write_direct_raw_csv(os, res.raw);
      }
      {
        auto os = open_output(agg_path);
        write_aggregate_csv(os, res.table, "n0");
      }
      {
        auto os = open_output(dir / "direct_tests.csv");
        os << "n0,n,mean_diff,t_stat,p_value\n";
        for (const auto& t : res.tests)
          fmt::print(os, "{},{},{},{},{}\n", t.n0, t.n, t.mean_diff, t.t_stat, t.p_value);
        written.push_back(dir / "direct_tests.csv");
      }
      break;
    }
    case ExperimentKind::LongRun: {
      auto res = run_long_run(cfg);
      {
        auto os = open_output(raw_path);
        write_long_run_raw_csv(os, res.raw);
      }
      {
        auto os = open_output(agg_path);
        write_aggregate_csv(os, res.table, "k");
      }
      if (!res.exclusion_log.empty()) {
        auto os = open_output(dir / "longrun_exclusions.txt");
        for (const auto& line : res.exclusion_log) os << line << '\n';
        written.push_back(dir / "longrun_exclusions.txt");
      }
      break;
    }
    case ExperimentKind::Study: {
      auto res = run_local_global_study(cfg);
      {
        auto os = open_output(raw_path);
        write_study_raw_csv(os, res.raw);
      }
      {
        auto os = open_output(agg_path);
        write_aggregate_csv(os, res.table, "k");
      }
      break;
    }
    case ExperimentKind::DerivPlots:
      emit_derivative_plots(cfg);
      return {dir / "derivplots.csv", dir / "d_dt.svg", dir / "d_ds.svg"};
  }
  written.insert(written.begin(), {raw_path, agg_path});
  return written;
}

}  // namespace bnbei
