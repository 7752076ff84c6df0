#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

#include "usual/config.hpp"
#include "usual/csv.hpp"
#include "usual/error.hpp"
#include "usual/estimates.hpp"
#include "usual/synthetic.hpp"

using namespace usual;

TEST_CASE("csv parsing and formatting") {
  std::istringstream in("a,b,c\n1,\"x, y\",3\r\n4,5,6\n");
  const auto t = csv::parse(in);
  CHECK(t.header == std::vector<std::string>{"a", "b", "c"});
  REQUIRE(t.rows.size() == 2);
  CHECK(t.rows[0][1] == "x, y");
  CHECK(t.rows[1][2] == "6");
  CHECK(t.column("c") == 2);
  CHECK_FALSE(t.has_column("d"));
  CHECK_THROWS_AS(t.column("d"), SchemaError);
  for (double v : {0.1, 1.0 / 3.0, 1e-300, 12345.678, -2.5}) {
    CHECK(std::stod(csv::format(v)) == v);
  }
  CHECK(csv::format(0.05) == "0.05");
  CHECK(csv::to_double(" 2.5 ", "here") == 2.5);
  CHECK_THROWS_AS(csv::to_double("abc", "here"), ValidationError);
}

TEST_CASE("estimates round trip through JSON") {
  ParameterEstimates e = truth_estimates(SyntheticTruth::reference());
  e.scaling = {{"age", 41.5, 12.25}};
  e.formula.covariates = {{"age", true}};
  e.formula.terms = {"age"};
  e.formula.sequence_dummy = false;
  e.iterations = 100;
  e.burn_in = 20;
  e.retained = 80;
  e.seed = 1234567890123ULL;
  e.beta(2, 1) = 1.0 / 3.0;
  const ParameterEstimates back = estimates_from_json(to_json(e));
  CHECK(back.beta == e.beta);
  CHECK(back.sigma_u == e.sigma_u);
  CHECK(back.sigma_eps == e.sigma_eps);
  CHECK(back.eps_mean.v_free == e.eps_mean.v_free);
  CHECK(back.eps_mean.theta == e.eps_mean.theta);
  CHECK(back.spec.component_names() == e.spec.component_names());
  CHECK(back.formula.terms == e.formula.terms);
  CHECK_FALSE(back.formula.sequence_dummy);
  CHECK(back.scaling[0].scale == 12.25);
  CHECK(back.transforms[2].mu == e.transforms[2].mu);
  CHECK(back.row_names == e.row_names);
  CHECK(back.seed == e.seed);
  CHECK(back.retained == 80);
  CHECK(to_json(back) == to_json(e));
  CHECK_THROWS(estimates_from_json("{\"beta\": 1}"));
}

TEST_CASE("run configuration") {
  const std::string text = R"({
    "seed": 42,
    "components": {
      "episodic": [{"name": "fruit", "units": "cup", "lambda": 0.25}],
      "daily": [{"name": "sodium", "lambda": 0.5}],
      "energy": {"name": "energy", "lambda": 0.25}
    },
    "covariates": [{"name": "age", "column": "RIDAGEYR", "continuous": true}],
    "terms": ["age"],
    "data": "survey.csv",
    "chain": {"iterations": 500, "burn_in": 100},
    "population": {"b_draws": 20, "percentiles": [0.5]},
    "scoring": {"rules": [{"hei2005": "total_fruit", "intake": "fruit"}]},
    "brr": {"factor": 0.3, "replicates": 4}
  })";
  const RunConfig cfg = parse_config(text, "/data/run");
  CHECK(cfg.seed == 42);
  CHECK(cfg.spec.J() == 1);
  CHECK(cfg.spec.episodic[0].units == "cup");
  CHECK(cfg.schema.covariates[0].second == "RIDAGEYR");
  CHECK(cfg.formula.covariates[0].continuous);
  CHECK(cfg.formula.sequence_dummy);
  CHECK(cfg.chain.iterations == 500);
  CHECK(cfg.population.b_draws == 20);
  CHECK(cfg.population.percentiles == std::vector<double>{0.5});
  CHECK(cfg.scoring.rules[0].intake == "fruit");
  CHECK(cfg.scoring.rules[0].standard == 0.8);
  CHECK(cfg.brr.factor == 0.3);
  CHECK(cfg.resolve(cfg.data) == (std::filesystem::path("/data/run") / "survey.csv").string());
  CHECK_FALSE(cfg.synthetic.has_value());

  CHECK_THROWS(parse_config(R"({"seed": 1, "unknown_key": 2, "synthetic": {"reference": true}})", "."));
  CHECK_THROWS(parse_config(R"({"seed": 1})", "."));
  CHECK_THROWS(parse_config("{not json", "."));
}

TEST_CASE("shipped configurations load") {
  for (const char* name : {"synthetic_reference.json", "quick.json"}) {
    const RunConfig cfg = load_config(std::string(USUAL_CONFIG_DIR) + "/" + name);
    CHECK(cfg.synthetic.has_value());
    CHECK(cfg.spec.J() == 2);
    CHECK(cfg.scoring.rules.size() == 3);
  }
}
