#include "usual/pipeline.hpp"

#include <cmath>
#include <filesystem>

#include "usual/csv.hpp"
#include "usual/error.hpp"

namespace usual {

namespace {

std::string percentile_label(double p) {
  return "p" + csv::format(std::round(p * 1e6) / 1e4);
}

Report distribution_report(const std::string& name, const SampleTable& t,
                           const std::vector<std::string>& stats,
                           const std::vector<std::string>& labels, const std::vector<double>& ps) {
  Report r;
  r.name = name;
  r.row_labels = labels;
  r.columns.push_back("mean");
  for (double p : ps) r.columns.push_back(percentile_label(p));
  r.values.resize(static_cast<Eigen::Index>(stats.size()), static_cast<Eigen::Index>(r.columns.size()));
  for (std::size_t s = 0; s < stats.size(); ++s) {
    const DistributionSummary d = summarize_distribution(t, stats[s], ps);
    const Eigen::Index row = static_cast<Eigen::Index>(s);
    r.values(row, 0) = d.mean;
    for (std::size_t j = 0; j < ps.size(); ++j) {
      r.values(row, static_cast<Eigen::Index>(j + 1)) = d.percentiles[j];
    }
  }
  return r;
}

bool compare(double a, const std::string& op, double b) {
  if (op == ">") return a > b;
  if (op == ">=") return a >= b;
  if (op == "<") return a < b;
  return a <= b;
}

}  // namespace

std::vector<double> ReportSet::flatten() const {
  std::vector<double> out;
  for (const auto& t : tables) {
    for (Eigen::Index r = 0; r < t.values.rows(); ++r) {
      for (Eigen::Index c = 0; c < t.values.cols(); ++c) out.push_back(t.values(r, c));
    }
  }
  return out;
}

void ReportSet::write(const std::string& dir, const std::vector<double>* standard_errors) const {
  std::size_t offset = 0;
  for (const auto& t : tables) {
    std::vector<std::string> header{t.label_header};
    for (const auto& c : t.columns) {
      header.push_back(c);
      if (standard_errors) header.push_back(c + "_se");
    }
    std::vector<std::vector<std::string>> rows;
    for (Eigen::Index r = 0; r < t.values.rows(); ++r) {
      std::vector<std::string> row{t.row_labels[static_cast<std::size_t>(r)]};
      for (Eigen::Index c = 0; c < t.values.cols(); ++c) {
        row.push_back(csv::format(t.values(r, c)));
        if (standard_errors) row.push_back(csv::format((*standard_errors)[offset]));
        ++offset;
      }
      rows.push_back(std::move(row));
    }
    csv::write((std::filesystem::path(dir) / (t.name + ".csv")).string(), header, rows);
  }
}

SurveyDataset load_survey(const RunConfig& cfg, const std::string& path) {
  if (path.empty()) throw ValidationError("no survey data file configured");
  return ingest_survey(path, cfg.spec, cfg.schema);
}

SurveyDataset prepare_dataset(const RunConfig& cfg, const SurveyDataset& raw) {
  SurveyDataset d = cfg.preprocess ? preprocess(raw) : raw;
  validate_for_fit(d);
  if (cfg.normalize_weights) d = with_normalized_weights(d);
  return standardize(d);
}

FitOutput fit_model(const RunConfig& cfg, const SurveyDataset& prepared, std::uint64_t seed,
                    std::ostream* diagnostics) {
  const DesignMatrices design = build_design(prepared, cfg.formula);
  const ModelData md = ModelData::build(prepared, design);
  ChainConfig chain = cfg.chain;
  chain.seed = seed;
  chain.parallel = cfg.parallel;

  FitOutput out;
  out.chain = run_chain(md, cfg.priors, chain, diagnostics);
  out.estimates = out.chain.estimates;
  out.estimates.spec = prepared.spec;
  out.estimates.formula = cfg.formula;
  out.estimates.scaling = design.scaling;
  out.estimates.design_columns = design.column_names;
  out.estimates.row_names = row_names(prepared.spec);
  if (out.chain.draws.rows() >= 4) out.summary = out.chain.summarize(chain.batch_count);

  if (diagnostics) {
    const auto& a = out.chain.acceptance;
    *diagnostics << "acceptance r=" << AcceptanceCounts::rate(a.r_moves, a.r_proposals)
                 << " theta=" << AcceptanceCounts::rate(a.theta_moves, a.theta_proposals)
                 << " v_diag=" << AcceptanceCounts::rate(a.v_diag_accepts, a.v_diag_proposals)
                 << " v_free=" << AcceptanceCounts::rate(a.v_free_accepts, a.v_free_proposals)
                 << "\nretained draws " << out.chain.retained << "\n";
  }
  return out;
}

UsualIntakeSamples estimate_population(const RunConfig& cfg, const ParameterEstimates& est,
                                       const SurveyDataset& prepared, std::size_t B,
                                       std::uint64_t seed) {
  return monte_carlo_population(est, prepared, B, seed, cfg.population.policy, cfg.parallel);
}

ReportSet usual_intake_reports(const RunConfig& cfg, const UsualIntakeSamples& samples) {
  ReportSet set;
  const auto& names = samples.table.names;
  set.tables.push_back(
      distribution_report("usual_intake", samples.table, names, names, cfg.population.percentiles));
  set.tables.back().label_header = "component";
  return set;
}

ReportSet score_reports(const RunConfig& cfg, const UsualIntakeSamples& samples) {
  const auto& rules = cfg.scoring.rules;
  if (rules.empty()) throw ValidationError("no scoring rules configured");
  const std::string energy =
      cfg.scoring.energy.empty() ? reported_energy_name(cfg.spec) : cfg.scoring.energy;
  bool complete = false;
  const SampleTable scored = score_samples(samples.table, rules, energy, &complete);
  const auto& ps = cfg.population.percentiles;

  std::vector<std::string> rule_names, densities, scores;
  for (const auto& r : rules) {
    rule_names.push_back(r.name);
    densities.push_back("density." + r.name);
    scores.push_back("score." + r.name);
  }
  const std::string total_label = complete ? "total" : "total_partial";

  ReportSet set;
  set.tables.push_back(distribution_report("energy_adjusted", scored, densities, rule_names, ps));
  set.tables.back().label_header = "component";

  std::vector<std::string> score_stats = scores;
  score_stats.push_back("total");
  std::vector<std::string> score_labels = rule_names;
  score_labels.push_back(total_label);
  set.tables.push_back(distribution_report("hei_scores", scored, score_stats, score_labels, ps));
  set.tables.back().label_header = "component";

  Report corr;
  corr.name = "density_correlations";
  corr.label_header = "component";
  corr.row_labels = rule_names;
  corr.columns = rule_names;
  corr.values = usual_correlations(scored, densities);
  set.tables.push_back(std::move(corr));

  Report rest;
  rest.name = "score_rest_correlations";
  rest.label_header = "component";
  rest.row_labels = rule_names;
  rest.columns = {"correlation"};
  const auto rc = score_rest_correlation(scored, scores);
  rest.values = Eigen::Map<const Eigen::VectorXd>(rc.data(), static_cast<Eigen::Index>(rc.size()));
  set.tables.push_back(std::move(rest));

  std::vector<double> grid;
  std::vector<std::string> grid_labels;
  for (int j = 1; j <= 99; ++j) {
    grid.push_back(j / 100.0);
    grid_labels.push_back(csv::format(j / 100.0));
  }
  for (std::size_t s = 0; s < score_stats.size(); ++s) {
    Report curve;
    curve.name = "curve_" + score_labels[s];
    curve.label_header = "percentile";
    curve.row_labels = grid_labels;
    curve.columns = {"value"};
    const auto v = weighted_percentiles(scored.column(score_stats[s]), scored.weights, grid);
    curve.values = Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
    set.tables.push_back(std::move(curve));
  }

  if (!cfg.scoring.conditional.empty()) {
    Report cond;
    cond.name = "conditional";
    cond.label_header = "condition";
    cond.columns = {"share", "mean"};
    for (double p : ps) cond.columns.push_back(percentile_label(p));
    cond.values.resize(static_cast<Eigen::Index>(cfg.scoring.conditional.size()),
                       static_cast<Eigen::Index>(cond.columns.size()));
    auto column = [&](const std::string& name) {
      if (scored.has(name)) return scored.column(name);
      if (!samples.table.has(name)) throw ValidationError("unknown statistic '" + name + "'");
      return samples.table.column(name);
    };
    for (std::size_t k = 0; k < cfg.scoring.conditional.size(); ++k) {
      const ConditionalSpec& c = cfg.scoring.conditional[k];
      const Eigen::VectorXd target = column(c.target);
      const Eigen::VectorXd given = column(c.given);
      const double threshold =
          c.value_is_median ? weighted_percentile(given, scored.weights, 0.5) : *c.value;
      std::vector<bool> keep(static_cast<std::size_t>(given.size()));
      double kept = 0.0;
      for (Eigen::Index t = 0; t < given.size(); ++t) {
        keep[static_cast<std::size_t>(t)] = compare(given(t), c.op, threshold);
        if (keep[static_cast<std::size_t>(t)]) kept += scored.weights(t);
      }
      const Eigen::Index row = static_cast<Eigen::Index>(k);
      cond.row_labels.push_back(c.name);
      cond.values(row, 0) = kept / scored.weights.sum();
      if (kept == 0.0) {
        for (Eigen::Index j = 1; j < cond.values.cols(); ++j) cond.values(row, j) = std::nan("");
        continue;
      }
      double mean_num = 0.0;
      for (Eigen::Index t = 0; t < given.size(); ++t) {
        if (keep[static_cast<std::size_t>(t)]) mean_num += scored.weights(t) * target(t);
      }
      cond.values(row, 1) = mean_num / kept;
      for (std::size_t j = 0; j < ps.size(); ++j) {
        cond.values(row, static_cast<Eigen::Index>(j + 2)) =
            conditional_percentile(target, keep, scored.weights, ps[j]);
      }
    }
    set.tables.push_back(std::move(cond));
  }

  Report joint;
  joint.name = "joint_exceedance";
  joint.label_header = "event";
  joint.row_labels = {"all_components"};
  joint.columns = {"probability"};
  std::vector<double> thresholds = cfg.scoring.joint_thresholds;
  if (thresholds.empty()) {
    for (const auto& s : scores) thresholds.push_back(weighted_percentile(scored.column(s), scored.weights, 0.5));
  }
  joint.values = Eigen::MatrixXd::Constant(1, 1, joint_exceedance(scored, scores, thresholds));
  set.tables.push_back(std::move(joint));
  return set;
}

ReportSet run_full_pipeline(const RunConfig& cfg, const SurveyDataset& raw, std::uint64_t seed,
                            bool brr_settings) {
  RunConfig local = cfg;
  if (brr_settings) {
    if (cfg.brr.iterations > 0) local.chain.iterations = cfg.brr.iterations;
    if (cfg.brr.burn_in > 0) local.chain.burn_in = cfg.brr.burn_in;
    if (cfg.brr.b_draws > 0) local.population.b_draws = cfg.brr.b_draws;
  }
  local.chain.retain_draws = false;
  local.chain.diagnostics_every = 0;
  const SurveyDataset prepared = prepare_dataset(local, raw);
  const FitOutput fit = fit_model(local, prepared, seed);
  const UsualIntakeSamples samples =
      estimate_population(local, fit.estimates, prepared, local.population.b_draws, seed);
  ReportSet set = usual_intake_reports(local, samples);
  if (!local.scoring.rules.empty()) {
    ReportSet scores = score_reports(local, samples);
    for (auto& t : scores.tables) set.tables.push_back(std::move(t));
  }
  return set;
}

void write_mcse_table(const std::string& path, const std::vector<TraceSummary>& summary) {
  std::vector<std::vector<std::string>> rows;
  for (const auto& s : summary) {
    rows.push_back({s.name, csv::format(s.mean), csv::format(s.sd), csv::format(s.mcse),
                    csv::format(s.sd > 0.0 ? s.mcse / s.sd : std::nan(""))});
  }
  csv::write(path, {"parameter", "mean", "sd", "mcse", "mcse_over_sd"}, rows);
}

}  // namespace usual
