#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "usual/brr.hpp"
#include "usual/config.hpp"
#include "usual/csv.hpp"
#include "usual/error.hpp"
#include "usual/estimates.hpp"
#include "usual/kernels.hpp"
#include "usual/pipeline.hpp"
#include "usual/rng.hpp"
#include "usual/synthetic.hpp"

namespace fs = std::filesystem;
using namespace usual;

namespace {

struct Options {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out = ".";
  std::optional<std::size_t> iterations;
  std::optional<std::size_t> burn_in;
  std::optional<std::size_t> replicates;
  std::optional<std::size_t> b_draws;
  std::string data;
  std::string estimates;
  std::string weights;
};

void add_common(CLI::App* cmd, Options& o) {
  cmd->add_option("--config", o.config, "Run configuration (JSON)")->required()->check(CLI::ExistingFile);
  cmd->add_option("--seed", o.seed, "Master seed; overrides the config");
  cmd->add_option("--out", o.out, "Output directory");
  cmd->add_option("--iterations", o.iterations, "Total MCMC iterations");
  cmd->add_option("--burnin", o.burn_in, "Burn-in iterations");
  cmd->add_option("--replicates", o.replicates, "Number of BRR replicate sets");
  cmd->add_option("--b-draws", o.b_draws, "Monte Carlo draws per individual");
}

std::string out_path(const Options& o, const std::string& file) {
  return (fs::path(o.out) / file).string();
}

RunConfig load(const Options& o) {
  RunConfig cfg = load_config(o.config);
  if (o.seed) cfg.seed = *o.seed;
  if (o.iterations) cfg.chain.iterations = *o.iterations;
  if (o.burn_in) cfg.chain.burn_in = *o.burn_in;
  if (o.b_draws) cfg.population.b_draws = *o.b_draws;
  if (o.replicates) {
    cfg.brr.replicates = *o.replicates;
    cfg.brr.simulate_replicates = *o.replicates;
  }
  fs::create_directories(o.out);
  return cfg;
}

// Survey file: --data, then the config's data entry, then <out>/survey.csv
// as written by `simulate`.
std::string data_path(const Options& o, const RunConfig& cfg) {
  if (!o.data.empty()) return o.data;
  if (!cfg.data.empty()) return cfg.resolve(cfg.data);
  return out_path(o, "survey.csv");
}

std::string estimates_path(const Options& o) {
  return o.estimates.empty() ? out_path(o, "estimates.json") : o.estimates;
}

int run_simulate(const Options& o) {
  const RunConfig cfg = load(o);
  if (!cfg.synthetic) throw ValidationError("simulate needs a 'synthetic' block in the config");
  const SyntheticTruth& truth = *cfg.synthetic;
  std::size_t resampled = 0;
  const csv::Table table = synthetic_table(truth, cfg.seed, &resampled);
  csv::write(out_path(o, "survey.csv"), table.header, table.rows);
  write_estimates(out_path(o, "truth.json"), truth_estimates(truth));

  const SurveyDataset d = ingest_table(table.header, table.rows, truth.spec, Schema{}, "<synthetic>");
  if (cfg.brr.simulate_replicates > 0) {
    write_brr_weights(out_path(o, "brr_weights.csv"),
                      fay_replicate_weights(d, cfg.brr.simulate_replicates, cfg.brr.factor));
  }
  std::cout << "simulated " << truth.individuals << " individuals x " << truth.recalls
            << " recalls (" << resampled << " error draws resampled)\n";
  return 0;
}

int run_fit(const Options& o) {
  const RunConfig cfg = load(o);
  const SurveyDataset prepared = prepare_dataset(cfg, load_survey(cfg, data_path(o, cfg)));
  std::ofstream log(out_path(o, "diagnostics.log"));
  if (!log) throw ValidationError("cannot write " + out_path(o, "diagnostics.log"));
  const FitOutput fit = fit_model(cfg, prepared, cfg.seed, &log);
  write_estimates(out_path(o, "estimates.json"), fit.estimates);
  write_mcse_table(out_path(o, "mcse.csv"), fit.summary);

  double worst = 0.0;
  for (const auto& s : fit.summary) {
    if (s.sd > 0.0) worst = std::max(worst, s.mcse / s.sd);
  }
  std::cout << "fit " << fit.chain.retained << " retained draws; max mcse/sd " << worst << "\n";
  return 0;
}

struct PopulationRun {
  RunConfig cfg;
  UsualIntakeSamples samples;
};

PopulationRun population_run(const Options& o) {
  PopulationRun run{load(o), {}};
  const ParameterEstimates est = read_estimates(estimates_path(o));
  const SurveyDataset prepared = prepare_dataset(run.cfg, load_survey(run.cfg, data_path(o, run.cfg)));
  run.samples = estimate_population(run.cfg, est, prepared, run.cfg.population.b_draws, run.cfg.seed);
  if (run.samples.clamped > 0) {
    std::cerr << "warning: " << run.samples.clamped
              << " back-transform arguments clamped to the domain\n";
  }
  return run;
}

int run_estimate(const Options& o) {
  const PopulationRun run = population_run(o);
  usual_intake_reports(run.cfg, run.samples).write(o.out);
  return 0;
}

int run_score(const Options& o) {
  const PopulationRun run = population_run(o);
  ReportSet set = usual_intake_reports(run.cfg, run.samples);
  for (auto& t : score_reports(run.cfg, run.samples).tables) set.tables.push_back(std::move(t));
  set.write(o.out);
  return 0;
}

int run_brr_command(const Options& o) {
  const RunConfig cfg = load(o);
  const SurveyDataset raw = load_survey(cfg, data_path(o, cfg));
  std::string wpath = o.weights;
  if (wpath.empty()) wpath = cfg.brr.weights.empty() ? out_path(o, "brr_weights.csv") : cfg.resolve(cfg.brr.weights);
  BRRWeights w = read_brr_weights(wpath, cfg.brr.factor, cfg.schema.id);
  if (cfg.brr.replicates > 0) {
    if (cfg.brr.replicates > w.replicates()) {
      throw ValidationError("requested more replicates than the weight file provides");
    }
    w.weights = w.weights.leftCols(static_cast<Eigen::Index>(cfg.brr.replicates)).eval();
  }

  ReportSet layout;
  const BRRPipeline pipeline = [&](const SurveyDataset& d, std::size_t replicate) {
    const std::uint64_t seed =
        replicate == 0 ? cfg.seed : derive_seed(cfg.seed, StreamFamily::replicate, replicate);
    ReportSet set = run_full_pipeline(cfg, d, seed, true);
    if (replicate == 0) layout = set;
    return set.flatten();
  };
  const BRRResult result = run_brr(raw, w, pipeline, cfg.parallel);
  layout.write(o.out, &result.standard_error);

  std::vector<std::vector<std::string>> rows;
  for (std::size_t r = 0; r < result.replicates.size(); ++r) {
    const auto& rep = result.replicates[r];
    rows.push_back({std::to_string(r + 1), rep.ok ? "1" : "0", rep.error});
  }
  csv::write(out_path(o, "brr_replicates.csv"), {"replicate", "ok", "error"}, rows);
  if (result.failures > 0) {
    std::cerr << "warning: " << result.failures << " of " << w.replicates()
              << " replicates failed; standard errors use the rest\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  kernels::configure_threads_from_env();

  CLI::App app{"Usual dietary intake estimation"};
  app.require_subcommand(1);
  Options o;

  auto* simulate = app.add_subcommand("simulate", "Generate a synthetic survey from a known truth");
  auto* fit = app.add_subcommand("fit", "Fit the measurement-error model by MCMC");
  auto* estimate = app.add_subcommand("estimate", "Usual-intake distributions from fitted estimates");
  auto* score = app.add_subcommand("score", "HEI-2005 score distributions and related tables");
  auto* brr = app.add_subcommand("brr", "Full pipeline with BRR standard errors");
  for (auto* cmd : {simulate, fit, estimate, score, brr}) add_common(cmd, o);
  for (auto* cmd : {fit, estimate, score, brr}) {
    cmd->add_option("--data", o.data, "Survey CSV; overrides the config");
  }
  for (auto* cmd : {estimate, score}) {
    cmd->add_option("--estimates", o.estimates, "Parameter estimates (default <out>/estimates.json)");
  }
  brr->add_option("--weights", o.weights, "Replicate weight CSV; overrides the config");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n\n" << app.help();
    return 64;
  }

  try {
    if (simulate->parsed()) return run_simulate(o);
    if (fit->parsed()) return run_fit(o);
    if (estimate->parsed()) return run_estimate(o);
    if (score->parsed()) return run_score(o);
    return run_brr_command(o);
  } catch (const ValidationError& e) {
    std::cerr << "validation error: " << e.what() << "\n";
    return 1;
  } catch (const NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
