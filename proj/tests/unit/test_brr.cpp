#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <random>
#include <vector>

#include "usual/brr.hpp"
#include "usual/error.hpp"
#include "usual/synthetic.hpp"

using namespace usual;

TEST_CASE("BRR variance") {
  std::vector<double> same(32, 1.5);
  CHECK(brr_variance(1.5, same) == 0.0);
  std::vector<double> one = same;
  one[4] += 1.0;
  CHECK(brr_variance(1.5, one) == doctest::Approx(1.0 / 15.68).epsilon(1e-14));
  std::vector<double> a{1.2, 0.7, 1.9, 1.0}, b;
  for (double v : a) b.push_back(1.0 + 2.0 * (v - 1.0));
  CHECK(brr_variance(1.0, b, 0.5) == doctest::Approx(4.0 * brr_variance(1.0, a, 0.5)));
  CHECK_THROWS_AS(brr_variance(1.0, {}), ValidationError);
}

TEST_CASE("BRR variance is invariant under permutation") {
  std::mt19937_64 gen(4);
  std::normal_distribution<double> nd(0.0, 1.0);
  std::vector<double> reps(32);
  for (auto& r : reps) r = 3.0 + 1e-3 * nd(gen);
  const double base = brr_variance(3.0, reps);
  for (int t = 0; t < 50; ++t) {
    std::shuffle(reps.begin(), reps.end(), gen);
    CHECK(brr_variance(3.0, reps) == base);
  }
}

TEST_CASE("Fay replicate weights") {
  const SurveyDataset d = generate_synthetic(SyntheticTruth::reference(40), 2);
  const BRRWeights w = fay_replicate_weights(d, 8, 0.7);
  CHECK(w.replicates() == 8);
  CHECK(w.ids.size() == 40);
  CHECK((w.weights.array() > 0.0).all());
  for (Eigen::Index i = 0; i < 40; ++i) {
    const double base = d.individuals[static_cast<std::size_t>(i)].weight;
    for (Eigen::Index r = 0; r < 8; ++r) {
      const double ratio = w.weights(i, r) / base;
      CHECK((std::abs(ratio - 1.7) < 1e-12 || std::abs(ratio - 0.3) < 1e-12));
    }
    // balanced: each individual is up-weighted in half the replicates
    CHECK(w.weights.row(i).sum() == doctest::Approx(8.0 * base));
  }
  CHECK_THROWS_AS(fay_replicate_weights(d, 6, 0.7), ValidationError);
  CHECK_THROWS_AS(fay_replicate_weights(d, 8, 1.0), ValidationError);
}

TEST_CASE("replicate weight files") {
  const SurveyDataset d = generate_synthetic(SyntheticTruth::reference(12), 2);
  const BRRWeights w = fay_replicate_weights(d, 4, 0.3);
  const auto path = (std::filesystem::temp_directory_path() / "usual_brr_weights_test.csv").string();
  write_brr_weights(path, w);
  const BRRWeights back = read_brr_weights(path, 0.3);
  CHECK(back.ids == w.ids);
  CHECK(back.weights == w.weights);
  std::filesystem::remove(path);

  const SurveyDataset r = replicate_dataset(d, w, 2);
  for (std::size_t i = 0; i < 12; ++i) CHECK(r.individuals[i].weight == w.weights(static_cast<Eigen::Index>(i), 2));
  CHECK_THROWS_AS(replicate_dataset(d, w, 4), ValidationError);
  BRRWeights bad = w;
  bad.weights(0, 0) = -1.0;
  CHECK_THROWS_AS(bad.validate(), ValidationError);
}

namespace {

std::vector<double> weighted_total(const SurveyDataset& d, std::size_t) {
  double total = 0.0;
  for (const auto& ind : d.individuals) total += ind.weight * ind.recalls[0].responses[1];
  return {total};
}

}  // namespace

TEST_CASE("identical replicate weights give zero standard errors") {
  const SurveyDataset d = generate_synthetic(SyntheticTruth::reference(10), 5);
  BRRWeights w;
  for (const auto& ind : d.individuals) w.ids.push_back(ind.id);
  w.weights.resize(10, 2);
  for (Eigen::Index i = 0; i < 10; ++i) w.weights.row(i).setConstant(d.individuals[static_cast<std::size_t>(i)].weight);
  const BRRResult r = run_brr(d, w, weighted_total);
  REQUIRE(r.standard_error.size() == 1);
  CHECK(r.standard_error[0] == 0.0);
}

TEST_CASE("linear statistic on a two-replicate toy") {
  const SurveyDataset d = generate_synthetic(SyntheticTruth::reference(6), 5);
  BRRWeights w;
  w.factor = 0.5;
  for (const auto& ind : d.individuals) w.ids.push_back(ind.id);
  w.weights.resize(6, 2);
  w.weights << 1.5, 0.5,
               0.5, 1.5,
               1.5, 0.5,
               0.5, 1.5,
               1.5, 0.5,
               0.5, 1.5;
  const BRRResult r = run_brr(d, w, weighted_total, false);
  double full = 0.0, t1 = 0.0, t2 = 0.0;
  for (std::size_t i = 0; i < 6; ++i) {
    const double y = d.individuals[i].recalls[0].responses[1];
    full += d.individuals[i].weight * y;
    t1 += w.weights(static_cast<Eigen::Index>(i), 0) * y;
    t2 += w.weights(static_cast<Eigen::Index>(i), 1) * y;
  }
  const double var = ((t1 - full) * (t1 - full) + (t2 - full) * (t2 - full)) / (2 * 0.25);
  CHECK(r.full[0] == doctest::Approx(full));
  CHECK(r.standard_error[0] == doctest::Approx(std::sqrt(var)).epsilon(1e-12));
  CHECK(r.failures == 0);
}

TEST_CASE("failed replicates are flagged and skipped") {
  const SurveyDataset d = generate_synthetic(SyntheticTruth::reference(6), 5);
  const BRRWeights w = fay_replicate_weights(d, 4, 0.5);
  const BRRPipeline flaky = [](const SurveyDataset& ds, std::size_t replicate) {
    if (replicate == 2) throw NumericalError("boom");
    return weighted_total(ds, replicate);
  };
  const BRRResult r = run_brr(d, w, flaky);
  CHECK(r.failures == 1);
  CHECK_FALSE(r.replicates[1].ok);
  CHECK(r.replicates[1].error.find("boom") != std::string::npos);
  CHECK(r.used[0] == 3);
  CHECK(std::isfinite(r.standard_error[0]));
}
