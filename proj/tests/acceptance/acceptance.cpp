// Acceptance suite: one line per criterion, exit status 0 only when all pass.
//
//   acceptance            run criteria 1-9
//   acceptance 3 5        run the listed criteria only

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <iterator>
#include <map>
#include <numbers>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "../support/fixtures.hpp"
#include "usual/brr.hpp"
#include "usual/config.hpp"
#include "usual/covariance.hpp"
#include "usual/error.hpp"
#include "usual/hei.hpp"
#include "usual/pipeline.hpp"
#include "usual/population.hpp"
#include "usual/sampler.hpp"
#include "usual/synthetic.hpp"
#include "usual/transforms.hpp"
#include "usual/truncated_normal.hpp"

namespace fs = std::filesystem;
using namespace usual;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(double x, int precision = 4) {
  std::ostringstream o;
  o.precision(precision);
  o << x;
  return o.str();
}

// ---------------------------------------------------------------------------
// 1. Covariance pattern

Outcome covariance_pattern() {
  RngStream rng(101, 1);
  const std::vector<std::size_t> Js{1, 2, 3, 6};
  const std::vector<std::size_t> Ks{0, 1, 7};
  double worst_sym = 0.0, worst_pattern = 0.0, min_eig = 1e300, worst_logdet = 0.0;
  for (int draw = 0; draw < 1000; ++draw) {
    const std::size_t J = Js[static_cast<std::size_t>(draw) % Js.size()];
    const std::size_t K = Ks[static_cast<std::size_t>(draw / 4) % Ks.size()];
    const PatternedCovParams p = fixtures::random_eps(J, K, rng, 0.98);
    const CovMatrix cov = sigma_eps(p);
    const Eigen::MatrixXd& S = cov.matrix();
    worst_sym = std::max(worst_sym, (S - S.transpose()).cwiseAbs().maxCoeff());
    for (std::size_t l = 0; l < J; ++l) {
      const Eigen::Index c = static_cast<Eigen::Index>(2 * l);
      worst_pattern = std::max(worst_pattern, std::abs(S(c, c) - 1.0));
      worst_pattern = std::max(worst_pattern, std::abs(S(c, c + 1)));
    }
    min_eig = std::min(min_eig, Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(S).eigenvalues().minCoeff());
    const double generic = std::log(S.partialPivLu().determinant());
    const double closed = logdet_sigma_eps(p);
    worst_logdet = std::max(worst_logdet, std::abs(closed - generic) / std::max(1.0, std::abs(generic)));
  }
  Outcome o;
  o.pass = worst_sym == 0.0 && worst_pattern <= 1e-12 && min_eig >= -1e-10 && worst_logdet <= 1e-8;
  o.detail = "max asym " + fmt(worst_sym) + ", max pattern error " + fmt(worst_pattern) +
             ", min eigenvalue " + fmt(min_eig) + ", max logdet rel error " + fmt(worst_logdet);
  return o;
}

// ---------------------------------------------------------------------------
// 2. HEI scoring table

Outcome hei_table() {
  const ScoringRule fruit = hei2005_rule("total_fruit");
  const ScoringRule satfat = hei2005_rule("saturated_fat");
  const ScoringRule sodium = hei2005_rule("sodium");
  const ScoringRule sofaas = hei2005_rule("sofaas");
  struct Case {
    const ScoringRule* rule;
    double density, expected;
  };
  const std::vector<Case> cases{
      {&fruit, 0.8, 5},    {&fruit, 0.4, 2.5},   {&fruit, 0, 0},       {&satfat, 7, 10},
      {&satfat, 10, 8},    {&satfat, 12.5, 4},   {&satfat, 15, 0},     {&sodium, 700, 10},
      {&sodium, 1100, 8},  {&sodium, 2000, 0},   {&sofaas, 20, 20},    {&sofaas, 35, 10},
      {&sofaas, 50, 0},
  };
  int exact = 0;
  for (const auto& c : cases) exact += score_from_density(*c.rule, c.density) == c.expected;

  // Knot continuity: the score at the knot equals the limit from both sides.
  struct Knot {
    const ScoringRule* rule;
    double at;
  };
  const std::vector<Knot> knots{{&satfat, 7},   {&satfat, 10},   {&sodium, 700},
                                {&sodium, 1100}, {&sofaas, 20}, {&sofaas, 50}};
  int continuous = 0;
  for (const auto& k : knots) {
    const double h = 1e-9 * std::max(1.0, k.at);
    const double at = score_from_density(*k.rule, k.at);
    const double lo = score_from_density(*k.rule, k.at - h);
    const double hi = score_from_density(*k.rule, k.at + h);
    continuous += std::abs(lo - at) < 1e-6 && std::abs(hi - at) < 1e-6;
  }
  Outcome o;
  o.pass = exact == static_cast<int>(cases.size()) && continuous == static_cast<int>(knots.size());
  o.detail = std::to_string(exact) + "/" + std::to_string(cases.size()) + " table values exact, " +
             std::to_string(continuous) + "/" + std::to_string(knots.size()) + " knots continuous";
  return o;
}

// ---------------------------------------------------------------------------
// 3. Conditional distributions at a frozen state

Outcome conditionals() {
  const ModelData md = fixtures::tiny_model();
  const ChainState frozen = fixtures::tiny_state(md);
  const Priors pr;
  const std::size_t draws = 100000;
  RngStream rng(303, 1);
  std::vector<std::string> parts;
  bool pass = true;

  double beta_z = 0.0;
  for (Eigen::Index j = 0; j < 4; ++j) {
    const fixtures::Moments truth = fixtures::beta_oracle(frozen, md, pr.beta_variance, j);
    ChainState s = frozen;
    std::vector<Eigen::VectorXd> xs;
    xs.reserve(draws);
    for (std::size_t t = 0; t < draws; ++t) {
      update_beta(s, md, pr, static_cast<std::size_t>(j), rng);
      xs.push_back(s.beta.row(j).transpose());
      s.beta.row(j) = frozen.beta.row(j);
    }
    beta_z = std::max(beta_z, fixtures::max_z_score(xs, truth));
  }
  parts.push_back("beta max z " + fmt(beta_z, 3));
  pass = pass && beta_z < 4.0;

  double u_z = 0.0;
  for (std::size_t i = 0; i < md.n; ++i) {
    const fixtures::Moments truth = fixtures::u_oracle(frozen, md, i);
    ChainState s = frozen;
    const UPosteriorCache cache(s, md);
    std::vector<Eigen::VectorXd> xs;
    xs.reserve(draws);
    for (std::size_t t = 0; t < draws; ++t) {
      update_U(s, md, i, rng, cache);
      xs.push_back(s.U.col(static_cast<Eigen::Index>(i)));
    }
    u_z = std::max(u_z, fixtures::max_z_score(xs, truth));
  }
  parts.push_back("U max z " + fmt(u_z, 3));
  pass = pass && u_z < 4.0;

  double w_z = 0.0;
  for (Eigen::Index k : {Eigen::Index(1), Eigen::Index(3)}) {
    const auto [mean, var] = fixtures::w_row_oracle(frozen, md, k, 1);
    fixtures::Moments truth{Eigen::VectorXd::Constant(1, mean), Eigen::MatrixXd::Constant(1, 1, var)};
    ChainState s = frozen;
    std::vector<Eigen::VectorXd> xs;
    xs.reserve(draws);
    for (std::size_t t = 0; t < draws; ++t) {
      update_W_amount_missing(s, md, static_cast<std::size_t>(k), 0, rng);
      xs.push_back(Eigen::VectorXd::Constant(1, s.W(1, k)));
    }
    w_z = std::max(w_z, fixtures::max_z_score(xs, truth));
  }
  parts.push_back("W amount max z " + fmt(w_z, 3));
  pass = pass && w_z < 4.0;

  // Consumption latent whose conditional is exactly Normal(0, 1).
  ModelData unit = md;
  ChainState s = frozen;
  s.beta.setZero();
  s.U.setZero();
  s.set_eps(PatternedCovParams::initial(1, 1));
  const double target = std::sqrt(2.0 / std::numbers::pi);
  double sum = 0.0;
  const std::size_t n_tn = 1000000;
  for (std::size_t t = 0; t < n_tn; ++t) {
    update_W_consumption(s, unit, 0, 0, rng);
    sum += s.W(0, 0);
  }
  const double tn_mean = sum / static_cast<double>(n_tn);
  parts.push_back("half-normal mean " + fmt(tn_mean, 6) + " vs " + fmt(target, 6));
  pass = pass && std::abs(tn_mean - target) < 0.01;

  return {pass, [&] {
            std::string d;
            for (const auto& p : parts) d += (d.empty() ? "" : ", ") + p;
            return d;
          }()};
}

// ---------------------------------------------------------------------------
// 4. Grid Metropolis kernel on a 3-point target

Outcome grid_stationarity() {
  const std::vector<double> target{0.2, 0.5, 0.3};
  RngStream rng(404, 1);
  int index = 0;
  double current = std::log(target[0]);
  std::vector<double> visits(3, 0.0);
  const std::size_t steps = 1000000;
  for (std::size_t t = 0; t < steps; ++t) {
    grid_metropolis_step(index, 3, current, [&](int j) { return std::log(target[static_cast<std::size_t>(j)]); }, rng);
    visits[static_cast<std::size_t>(index)] += 1.0;
  }
  double tv = 0.0;
  for (std::size_t j = 0; j < 3; ++j) tv += 0.5 * std::abs(visits[j] / steps - target[j]);
  return {tv < 0.01, "occupancy (" + fmt(visits[0] / steps) + ", " + fmt(visits[1] / steps) + ", " +
                         fmt(visits[2] / steps) + "), total variation " + fmt(tv)};
}

// ---------------------------------------------------------------------------
// 5. Simulate-fit recovery

RunConfig reference_config() {
  RunConfig cfg = load_config(std::string(USUAL_CONFIG_DIR) + "/synthetic_reference.json");
  cfg.chain.iterations = 20000;
  cfg.chain.burn_in = 5000;
  cfg.chain.thin = 1;
  cfg.chain.retain_draws = true;
  cfg.chain.diagnostics_every = 0;
  return cfg;
}

Outcome simulate_fit() {
  const RunConfig cfg = reference_config();
  const SyntheticTruth& truth = *cfg.synthetic;
  const SurveyDataset prepared = prepare_dataset(cfg, generate_synthetic(truth, cfg.seed));
  const FitOutput fit = fit_model(cfg, prepared, cfg.seed);
  const ScaledTruth t = truth_on_scale(truth, prepared.standardization);
  const ParameterEstimates& e = fit.estimates;

  const Eigen::Index design_cols = 2;  // intercept and weekend carry the generative effects
  double beta_err = 0.0, max_true_beta = 0.0;
  for (Eigen::Index r = 0; r < e.beta.rows(); ++r)
    for (Eigen::Index c = 0; c < e.beta.cols(); ++c) {
      beta_err = std::max(beta_err, std::abs(e.beta(r, c) - t.beta(r, c)));
      if (c < design_cols) max_true_beta = std::max(max_true_beta, std::abs(t.beta(r, c)));
    }
  double su_rel = 0.0;
  for (Eigen::Index r = 0; r < e.sigma_u.rows(); ++r)
    su_rel = std::max(su_rel, std::abs(e.sigma_u(r, r) - t.sigma_u(r, r)) / t.sigma_u(r, r));

  const std::size_t J = truth.spec.J(), K = truth.spec.K();
  double eps_err = 0.0;
  for (std::size_t row : diag_rows(J, K)) {
    const Eigen::Index q = static_cast<Eigen::Index>(row);
    eps_err = std::max(eps_err, std::abs(e.sigma_eps(q, q) - t.sigma_eps(q, q)));
  }
  for (auto [r, c] : sigma_free_positions(J, K)) {
    const Eigen::Index a = static_cast<Eigen::Index>(r), b = static_cast<Eigen::Index>(c);
    eps_err = std::max(eps_err, std::abs(e.sigma_eps(a, b) - t.sigma_eps(a, b)));
  }
  double ratio = 0.0;
  std::string worst_trace;
  for (const auto& s : fit.summary) {
    if (s.sd > 0.0 && s.mcse / s.sd > ratio) {
      ratio = s.mcse / s.sd;
      worst_trace = s.name;
    }
  }
  Outcome o;
  o.pass = beta_err <= 0.15 && su_rel <= 0.25 && eps_err <= 0.2 && ratio < 0.1 && !fit.summary.empty();
  o.detail = "max |beta err| " + fmt(beta_err) + " (max |true beta| " + fmt(max_true_beta) +
             "), max Sigma_u diag rel err " + fmt(su_rel) + ", max Sigma_eps err " + fmt(eps_err) +
             ", max mcse/sd " + fmt(ratio) + " (" + worst_trace + ", " +
             std::to_string(fit.summary.size()) + " traces)";
  return o;
}

// ---------------------------------------------------------------------------
// 6. Population-estimate recovery

// Bias-corrected back-transform written out from the defining formulas.
double oracle_g_star(double v, const TransformSpec& t, double sqq) {
  const double inner = t.mu + t.sigma * v / std::numbers::sqrt2;
  const double half_s2 = 0.5 * t.sigma * t.sigma;
  if (t.lambda == 0.0) {
    const double g = std::exp(inner);
    return g + 0.5 * sqq * half_s2 * g;
  }
  double base = 1.0 + t.lambda * inner;
  if (!(base > 0.0)) base = kBoxCoxBaseFloor;
  const double g = std::pow(base, 1.0 / t.lambda);
  const double d2 = half_s2 * (1.0 - t.lambda) * std::pow(base, 1.0 / t.lambda - 2.0);
  return g + 0.5 * sqq * d2;
}

struct Sample {
  std::vector<double> sorted;
  double mean = 0.0, sd = 0.0;

  explicit Sample(std::vector<double> v) : sorted(std::move(v)) {
    std::sort(sorted.begin(), sorted.end());
    const double n = static_cast<double>(sorted.size());
    for (double x : sorted) mean += x;
    mean /= n;
    for (double x : sorted) sd += (x - mean) * (x - mean);
    sd = std::sqrt(sd / (n - 1.0));
  }
  double quantile(double p) const {
    const std::size_t n = sorted.size();
    std::size_t k = static_cast<std::size_t>(std::ceil(p * static_cast<double>(n)));
    k = std::clamp<std::size_t>(k, 1, n);
    return sorted[k - 1];
  }
  double quantile_se(double p) const {
    const double h = 0.01;
    const double density = 2.0 * h / (quantile(p + h) - quantile(p - h));
    return std::sqrt(p * (1.0 - p) / static_cast<double>(sorted.size())) / density;
  }
};

Outcome population_recovery() {
  const SyntheticTruth truth = SyntheticTruth::reference(400);
  const ParameterEstimates est = truth_estimates(truth);
  const SurveyDataset d = generate_synthetic(truth, 606);
  const UsualIntakeSamples mc = monte_carlo_population(est, d, 1000, 607);

  // Direct simulation: U ~ Normal(0, Sigma_u) via an eigen root.
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(truth.sigma_u);
  const Eigen::MatrixXd root = eig.eigenvectors() * eig.eigenvalues().cwiseSqrt().asDiagonal();
  const Eigen::MatrixXd S = sigma_eps(truth.eps).matrix();
  const auto transforms = truth.transforms();
  const ComponentSpec& spec = truth.spec;
  const Eigen::Vector3d weekday(1, 0, 0), weekend(1, 1, 0);
  const std::size_t n_direct = 1000000;
  std::vector<std::vector<double>> direct(spec.components());
  for (auto& v : direct) v.reserve(n_direct);
  RngStream rng(608, 1);
  Eigen::VectorXd z(truth.beta.rows());
  for (std::size_t t = 0; t < n_direct; ++t) {
    for (Eigen::Index a = 0; a < z.size(); ++a) z(a) = rng.normal();
    const Eigen::VectorXd u = root * z;
    const Eigen::VectorXd lin_wd = truth.beta * weekday + u;
    const Eigen::VectorXd lin_we = truth.beta * weekend + u;
    for (std::size_t c = 0; c < spec.components(); ++c) {
      const Eigen::Index a = static_cast<Eigen::Index>(spec.amount_row(c));
      auto day = [&](const Eigen::VectorXd& lin) {
        double amount = oracle_g_star(lin(a), transforms[c], S(a, a));
        if (spec.kind(c) == ComponentKind::episodic) amount *= 0.5 * std::erfc(-lin(a - 1) / std::numbers::sqrt2);
        return amount;
      };
      direct[c].push_back((4.0 * day(lin_wd) + 3.0 * day(lin_we)) / 7.0);
    }
  }

  double worst = 0.0;
  std::string worst_stat;
  double worst_mc = 0.0, worst_direct = 0.0;
  for (std::size_t c = 0; c < spec.components(); ++c) {
    const std::string& name = spec.component(c).name;
    const Eigen::VectorXd col = mc.table.column(name);
    const Sample a(std::vector<double>(col.data(), col.data() + col.size()));
    const Sample b(std::move(direct[c]));
    auto check = [&](const std::string& stat, double x, double y, double se) {
      const double z = std::abs(x - y) / se;
      if (z > worst) {
        worst = z;
        worst_stat = name + " " + stat;
        worst_mc = x;
        worst_direct = y;
      }
    };
    const double na = static_cast<double>(a.sorted.size()), nb = static_cast<double>(b.sorted.size());
    check("mean", a.mean, b.mean, std::hypot(a.sd / std::sqrt(na), b.sd / std::sqrt(nb)));
    for (double p : {0.1, 0.5, 0.9}) {
      check("p" + fmt(100 * p), a.quantile(p), b.quantile(p), std::hypot(a.quantile_se(p), b.quantile_se(p)));
    }
  }
  return {worst < 3.0, "max |difference| / combined MCSE " + fmt(worst, 3) + " (" + worst_stat + ": " +
                           fmt(worst_mc, 6) + " vs direct " + fmt(worst_direct, 6) + "), " + std::to_string(mc.table.size()) + " population samples, clamped " +
                           std::to_string(mc.clamped)};
}

// ---------------------------------------------------------------------------
// 7. Transforms

Outcome transform_suite() {
  double round_trip = 0.0;
  for (double lambda : {0.0, 0.25, 0.5, 1.0}) {
    const TransformSpec t{lambda, 0.3, 1.7};
    for (int i = 1; i <= 100; ++i) {
      const double y = 0.1 * i;
      round_trip = std::max(round_trip, std::abs(g_tr_inv(g_tr(y, t), t) - y) / y);
    }
  }
  double fd = 0.0;
  for (double lambda : {0.0, 0.25, 0.5, 0.75, 1.0}) {
    const TransformSpec t{lambda, 1.0, 0.9};
    for (double z = -2.0; z <= 2.0; z += 0.25) {
      const double h = 1e-4;
      const double numeric = (g_tr_inv(z + h, t) - 2.0 * g_tr_inv(z, t) + g_tr_inv(z - h, t)) / (h * h);
      const double exact = d2_g_tr_inv(z, t);
      fd = std::max(fd, std::abs(numeric - exact) / std::max(1.0, std::abs(exact)));
    }
  }
  const double r2 = std::numbers::sqrt2;
  const std::vector<std::pair<double, double>> hand{
      {g_star(0.0, {0.0, 0.0, r2}, 2.0), 2.0},
      {g_star(0.0, {0.0, 0.0, r2}, 0.0), 1.0},
      {g_star(r2, {1.0, 0.0, 1.0}, 5.0), 2.0},
      {g_star(1.0, {1.0, 0.0, r2}, 0.0), 2.0},
      {g_star(1.0, {0.0, 0.5, 1.0}, 1.0), std::exp(0.5 + 1.0 / r2) * 1.25},
  };
  double hand_err = 0.0;
  for (auto [got, want] : hand) hand_err = std::max(hand_err, std::abs(got - want));
  return {round_trip <= 1e-10 && fd <= 1e-6 && hand_err <= 1e-12,
          "round trip rel err " + fmt(round_trip) + ", d2 finite-difference err " + fmt(fd) +
              ", g_star hand err " + fmt(hand_err)};
}

// ---------------------------------------------------------------------------
// 8. BRR arithmetic

Outcome brr_arithmetic() {
  std::vector<double> reps(32, 2.5);
  reps[7] = 3.5;
  const double hand = brr_variance(2.5, reps);
  const double hand_err = std::abs(hand - 1.0 / 15.68);

  RngStream rng(808, 1);
  std::vector<double> values(32);
  for (auto& v : values) v = rng.normal();
  const double base = brr_variance(0.1, values);
  double perm_err = 0.0;
  for (int t = 0; t < 50; ++t) {
    std::shuffle(values.begin(), values.end(), rng.engine());
    perm_err = std::max(perm_err, std::abs(brr_variance(0.1, values) - base));
  }
  const double zero = brr_variance(1.25, std::vector<double>(32, 1.25));
  return {hand_err <= 1e-12 && perm_err == 0.0 && zero == 0.0,
          "hand example " + fmt(hand, 10) + " (err " + fmt(hand_err) + "), permutation err " +
              fmt(perm_err) + ", zero case " + fmt(zero)};
}

// ---------------------------------------------------------------------------
// 9. Determinism of the CLI pipeline

std::map<std::string, std::string> read_dir(const fs::path& dir) {
  std::map<std::string, std::string> out;
  for (const auto& entry : fs::directory_iterator(dir)) {
    std::ifstream in(entry.path(), std::ios::binary);
    out[entry.path().filename().string()] = std::string(std::istreambuf_iterator<char>(in), {});
  }
  return out;
}

Outcome determinism() {
  const fs::path root = fs::temp_directory_path() / ("usual_acceptance_" + std::to_string(::getpid()));
  const std::string config = std::string(USUAL_CONFIG_DIR) + "/synthetic_reference.json";
  std::vector<std::map<std::string, std::string>> runs;
  int threads = 1;
  for (const char* tag : {"a", "b"}) {
    const fs::path out = root / tag;
    fs::create_directories(out);
    for (const char* cmd : {"simulate", "fit", "score"}) {
      const std::string line = "USUAL_NUM_THREADS=" + std::to_string(threads) + " \"" + USUAL_CLI_PATH + "\" " +
                               cmd + " --config \"" + config + "\" --seed 7 --out \"" + out.string() +
                               "\" > /dev/null 2>&1";
      if (std::system(line.c_str()) != 0) {
        fs::remove_all(root);
        return {false, std::string("command failed: ") + cmd};
      }
    }
    runs.push_back(read_dir(out));
    threads = 3;
  }
  fs::remove_all(root);
  std::size_t identical = 0;
  std::vector<std::string> differing;
  for (const auto& [name, bytes] : runs[0]) {
    auto it = runs[1].find(name);
    if (it != runs[1].end() && it->second == bytes) {
      ++identical;
    } else {
      differing.push_back(name);
    }
  }
  const bool same_set = runs[0].size() == runs[1].size();
  std::string detail = std::to_string(identical) + "/" + std::to_string(runs[0].size()) +
                       " output files byte-identical (1 vs 3 threads)";
  for (const auto& d : differing) detail += ", differs: " + d;
  return {same_set && differing.empty() && runs[0].size() > 5, detail};
}

struct Criterion {
  int id;
  std::string name;
  double limit_seconds;
  std::function<Outcome()> run;
};

}  // namespace

int main(int argc, char** argv) {
  const std::vector<Criterion> all{
      {1, "covariance pattern", 10.0, covariance_pattern},
      {2, "HEI scoring table", 1.0, hei_table},
      {3, "conditional distributions", 120.0, conditionals},
      {4, "grid Metropolis stationarity", 30.0, grid_stationarity},
      {5, "simulate-fit recovery", 600.0, simulate_fit},
      {6, "population recovery", 120.0, population_recovery},
      {7, "transform suite", 1.0, transform_suite},
      {8, "BRR arithmetic", 1.0, brr_arithmetic},
      {9, "pipeline determinism", 1200.0, determinism},
  };
  std::set<int> selected;
  for (int a = 1; a < argc; ++a) selected.insert(std::atoi(argv[a]));

  int failures = 0;
  for (const auto& c : all) {
    if (!selected.empty() && !selected.count(c.id)) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const double limit = c.limit_seconds;
    const bool in_time = secs <= limit;
    const bool pass = o.pass && in_time;
    failures += !pass;
    std::cout << "criterion " << c.id << " [" << c.name << "]: " << (pass ? "PASS" : "FAIL") << "  "
              << o.detail << "; " << fmt(secs, 3) << " s (limit " << c.limit_seconds << " s"
              << (in_time ? "" : ", exceeded") << ")" << std::endl;
  }
  return failures == 0 ? 0 : 1;
}
