// egpbo: run ensemble-GP Thompson sampling benchmarks and aggregate results.

#include <iostream>
#include <map>
#include <string>

#include <CLI11.hpp>

#include "egpbo/egpbo.hpp"

namespace {

int run_command(const egpbo::ExperimentConfig& cfg) {
  const auto result = egpbo::run_experiment(cfg);
  for (const auto& run : result.runs) {
    if (run.size() == 0) continue;
    std::cout << "run " << run.run_id << ": " << run.size() << " evaluations, best y "
              << run.rows.back().best << ", simple regret " << run.rows.back().simple_regret
              << '\n';
  }
  if (!result.aggregate.empty()) {
    const auto& last = result.aggregate.back();
    std::cout << "final simple regret: median " << last.median << " [q25 " << last.q25 << ", q75 "
              << last.q75 << "], mean " << last.mean << " (sd " << last.sd << ")\n";
  }
  for (const auto& f : result.failures) std::cerr << "failed: " << f << '\n';
  if (!cfg.out_dir.empty()) std::cout << "wrote " << cfg.out_dir.string() << '\n';
  return result.partial() ? 2 : 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Ensemble Gaussian-process Thompson sampling for black-box maximization"};
  app.require_subcommand(1);

  egpbo::ExperimentConfig cfg;
  std::string mode = "seq";
  std::string acq = "ts";
  std::string durations = "constant";
  double noise_sd = -1.0;
  std::string checkpoint;

  auto* run = app.add_subcommand("run", "run R repeats of one method on a synthetic function");
  run->add_option("--function", cfg.objective, "ackley5d | zakharov | dropwave | eggholder")
      ->required();
  run->add_option("--dict", cfg.dictionary,
                  "kernel dictionary: comma list, rbf:logspace(lo,hi,n), or a .json file")
      ->capture_default_str();
  run->add_option("--method", cfg.method, "egp | gp:<kernel> | random")->capture_default_str();
  run->add_option("--budget", cfg.bo.budget, "total evaluations T")->capture_default_str();
  run->add_option("--init", cfg.bo.t0, "initial random evaluations")->capture_default_str();
  run->add_option("--rf-dim", cfg.bo.rf_dim, "random features per expert")->capture_default_str();
  run->add_option("--refit-every", cfg.bo.refit_interval, "observations between refits")
      ->capture_default_str();
  run->add_option("--mode", mode, "seq | sync | async")
      ->check(CLI::IsMember({"seq", "sync", "async"}))
      ->capture_default_str();
  run->add_option("--workers", cfg.bo.workers, "parallel workers K")->capture_default_str();
  run->add_option("--acq", acq, "ts | ei")->check(CLI::IsMember({"ts", "ei"}))->capture_default_str();
  run->add_option("--repeats", cfg.repeats, "independent runs")->capture_default_str();
  run->add_option("--seed", cfg.bo.seed, "root seed (repeat r uses seed + r)")->capture_default_str();
  run->add_option("--out", cfg.out_dir, "output directory");
  run->add_option("--noise-sd", noise_sd, "observation noise sd (default: 1% of value range)");
  run->add_option("--restarts", cfg.bo.restarts, "acquisition ascent restarts")->capture_default_str();
  run->add_option("--ascent-iters", cfg.bo.ascent_iters, "acquisition ascent iterations")
      ->capture_default_str();
  run->add_option("--weight-floor", cfg.bo.weight_floor, "minimum model weight (0 disables)")
      ->capture_default_str();
  run->add_option("--durations", durations, "constant | lognormal")
      ->check(CLI::IsMember({"constant", "lognormal"}))
      ->capture_default_str();
  run->add_option("--duration-mean", cfg.bo.durations.mean)->capture_default_str();
  run->add_option("--duration-sigma", cfg.bo.durations.sigma)->capture_default_str();
  run->add_flag("--concurrent-eval", cfg.bo.concurrent_eval,
                "evaluate each synchronous round on K threads");
  run->add_option("--checkpoint", checkpoint, "directory for state snapshots at every refit");
  run->add_option("--threads", cfg.threads, "concurrent repeats (default EGPBO_THREADS)");

  std::string agg_dir;
  auto* agg = app.add_subcommand("aggregate", "summarize run_*.csv files into aggregate.csv");
  agg->add_option("dir", agg_dir, "experiment output directory")->required();

  app.add_subcommand("functions", "list the synthetic functions");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) {
      static const std::map<std::string, egpbo::RunMode> modes{
          {"seq", egpbo::RunMode::Sequential},
          {"sync", egpbo::RunMode::SyncParallel},
          {"async", egpbo::RunMode::AsyncParallel}};
      cfg.bo.mode = modes.at(mode);
      cfg.bo.acquisition = acq == "ei" ? egpbo::AcquisitionKind::ExpectedImprovement
                                       : egpbo::AcquisitionKind::ThompsonSampling;
      cfg.bo.durations.kind = durations == "lognormal" ? egpbo::DurationModel::Kind::LogNormal
                                                       : egpbo::DurationModel::Kind::Constant;
      if (noise_sd >= 0.0) cfg.noise_sd = noise_sd;
      cfg.bo.checkpoint_dir = checkpoint;
      return run_command(cfg);
    }
    if (*agg) {
      const auto rows = egpbo::aggregate_dir(agg_dir);
      if (!rows.empty()) {
        std::cout << "final simple regret: median " << rows.back().median << " over "
                  << rows.back().n << " runs\n";
      }
      std::cout << "wrote " << (std::filesystem::path(agg_dir) / "aggregate.csv").string() << '\n';
      return 0;
    }
    for (const auto& name : egpbo::objective_names()) {
      const auto obj = egpbo::make_objective(name);
      std::cout << name << "  d=" << obj.spec().box.dim() << "  f*=" << obj.spec().f_star
                << "  noise_sd=" << obj.spec().noise_sd << '\n';
    }
    return 0;
  } catch (const egpbo::UsageError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 64;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
