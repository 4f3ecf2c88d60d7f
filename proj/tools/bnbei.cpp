// Experiment driver: bnbei <direct|longrun|study|derivplots> [--config FILE] [overrides]

#include <cstdlib>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "bnbei/experiments.hpp"

namespace {

struct Options {
  std::string function = "branin";
  std::string target = "maxmin";
  double level = 0.0;
  double alpha = 2.0;
  std::vector<std::size_t> n0;
  std::size_t n_new = 30;
  std::size_t reps = 0;
  std::size_t budget = 0;
  std::uint64_t seed = 1;
  std::string out = "results";
  std::size_t threads = 0;
  std::vector<double> band;
  std::vector<std::size_t> study_k;
  std::size_t lhd_candidates = 1000;
  std::size_t contour_resolution = 201;
  std::vector<std::size_t> inject_fit_failure;
};

// Options live on the root app; subcommands fall through to them so that
// `bnbei direct --config f.toml --reps 5` works with top-level config keys.
void add_options(CLI::App& app, Options& o) {
  app.set_config("--config", "", "Key-value config file (TOML/INI); flags override it");
  app.add_option("--function", o.function, "branin, levy2 or levy4")->capture_default_str();
  app.add_option("--target", o.target, "min, maxmin, contour-full or contour-mod")
      ->capture_default_str();
  app.add_option("--level", o.level, "Contour level a");
  app.add_option("--alpha", o.alpha, "Contour neighbourhood multiplier")->capture_default_str();
  app.add_option("--n0", o.n0, "Initial design size(s)")->delimiter(',');
  app.add_option("--n-new", o.n_new, "Sequential additions per run")->capture_default_str();
  app.add_option("--reps", o.reps, "Replications");
  app.add_option("--budget", o.budget, "EI evaluations per optimization");
  app.add_option("--seed", o.seed, "Base seed")->capture_default_str();
  app.add_option("--out", o.out, "Output directory")->capture_default_str();
  app.add_option("--threads", o.threads, "Worker threads (0: all cores)");
  app.add_option("--band", o.band, "Study band lo,hi")->delimiter(',')->expected(2);
  app.add_option("--study-k", o.study_k, "Study reporting points")->delimiter(',');
  app.add_option("--lhd-candidates", o.lhd_candidates, "Random LHDs per maximin design");
  app.add_option("--contour-resolution", o.contour_resolution, "Grid size for the true contour");
  app.add_option("--inject-fit-failure", o.inject_fit_failure,
                  "Replications whose fit is forced to fail")
      ->delimiter(',');
}

bnbei::ExperimentConfig to_config(bnbei::ExperimentKind kind, const Options& o) {
  using namespace bnbei;
  ExperimentConfig c;
  c.experiment = kind;
  c.function = o.function;
  c.target.kind = parse_feature_kind(o.target);
  c.target.level = o.level;
  c.target.alpha = o.alpha;
  if (!o.n0.empty()) c.n0 = o.n0;
  c.n_new = o.n_new;
  switch (kind) {
    case ExperimentKind::Direct:
      c.replications = 50;
      break;
    case ExperimentKind::LongRun:
      c.replications = 10;
      break;
    default:
      c.replications = 20;
  }
  if (o.reps > 0) c.replications = o.reps;
  if (o.budget > 0) c.budget = o.budget;
  c.seed = o.seed;
  c.output_dir = o.out;
  c.threads = o.threads;
  if (o.band.size() == 2) {
    c.band_lo = o.band[0];
    c.band_hi = o.band[1];
  }
  if (!o.study_k.empty()) c.study_k = o.study_k;
  c.lhd_candidates = o.lhd_candidates;
  c.contour_resolution = o.contour_resolution;
  c.inject_fit_failure = o.inject_fit_failure;
  return c;
}

}  // namespace

int main(int argc, char** argv) {
  using bnbei::ExperimentKind;
  CLI::App app{"Sequential design experiments with branch-and-bound EI maximization"};
  app.require_subcommand(1);
  app.fallthrough();
  Options opts;
  add_options(app, opts);
  auto add_experiment = [&](const std::string& name, const std::string& help) {
    return app.add_subcommand(name, help)->fallthrough();
  };
  std::vector<std::pair<CLI::App*, ExperimentKind>> subs = {
      {add_experiment("direct", "BNB vs GA max EI on shared fits"), ExperimentKind::Direct},
      {add_experiment("longrun", "Sequential BNB, GA and static baseline curves"),
       ExperimentKind::LongRun},
      {add_experiment("study", "Band-local proportions, full vs modified contour EI"),
       ExperimentKind::Study},
      {add_experiment("derivplots", "Partials of the modified contour criterion"),
       ExperimentKind::DerivPlots},
  };
  CLI11_PARSE(app, argc, argv);

  try {
    for (auto& [sub, kind] : subs) {
      if (!sub->parsed()) continue;
      auto cfg = to_config(kind, opts);
      for (const auto& path : bnbei::run_experiment(cfg)) std::cout << path.string() << '\n';
    }
  } catch (const std::exception& e) {
    std::cerr << "bnbei: " << e.what() << '\n';
    return EXIT_FAILURE;
  }
  return EXIT_SUCCESS;
}
