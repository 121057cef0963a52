#include <doctest.h>

#include <cmath>
#include <numeric>
#include <sstream>

#include "survcart/error.hpp"
#include "survcart/simlab.hpp"

using namespace survcart;

namespace {

ExperimentSpec parse(const std::string& text) {
  std::istringstream in(text);
  return parse_experiment_spec(in);
}

ErrorCode parse_error(const std::string& text) {
  try {
    parse(text);
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("spec unexpectedly parsed");
  return ErrorCode::IoError;
}

}  // namespace

TEST_CASE("exponential draws have the right mean") {
  Philox4x32 rng(1);
  const auto x = gen_exponential(1.0, 1000000, rng);
  const double mean = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
  CHECK(std::fabs(mean - 1.0) <= 0.005);
  CHECK_THROWS_AS(gen_exponential(0.0, 3, rng), Error);
}

TEST_CASE("censoring hazard gives the requested censored fraction") {
  CHECK(censoring_hazard(1.0 / 20.0, 0.25) == doctest::Approx(1.0 / 60.0));
  SizeDesign d;
  d.n = 100000;
  Philox4x32 rng(2);
  const auto data = simulate_size_data(d, rng);
  const double censored = 1.0 - static_cast<double>(data.events()) / static_cast<double>(data.size());
  CHECK(std::fabs(censored - 0.25) <= 0.01);
  const auto& x = data.covariate("x");
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (i < data.size() / 2) {
      REQUIRE(x.values[i] < 10.0);
    } else {
      REQUIRE(x.values[i] >= 10.0);
    }
  }
}

TEST_CASE("wilson interval") {
  const auto r = wilson_interval(50, 1000);
  CHECK(r.rate == doctest::Approx(0.05));
  CHECK(r.ci_low < 0.05);
  CHECK(r.ci_high > 0.05);
  CHECK(r.ci_low == doctest::Approx(0.0381).epsilon(1e-2));
  CHECK(r.ci_high == doctest::Approx(0.0653).epsilon(1e-2));
  const auto none = wilson_interval(0, 10);
  CHECK(none.ci_low == 0.0);
}

TEST_CASE("simulation results do not depend on scheduling") {
  SizeDesign d;
  d.n = 200;
  d.replicates = 120;
  d.seed = 77;
  const auto a = run_size(d, {1});
  const auto b = run_size(d, {4});
  const auto c = run_size(d, {1});
  CHECK(a.rejections == b.rejections);
  CHECK(a.rejections == c.rejections);
  d.seed = 78;
  const auto other = run_size(d, {1});
  CHECK(other.replicates == 120);
}

TEST_CASE("replicate data depends only on seed and stream") {
  TreeDesign d;
  Philox4x32 a(5, 3), b(5, 3);
  const auto x = simulate_tree_data(d, a);
  const auto y = simulate_tree_data(d, b);
  CHECK(std::vector<double>(x.data.time().begin(), x.data.time().end()) ==
        std::vector<double>(y.data.time().begin(), y.data.time().end()));
  CHECK(x.data.size() == 1600);
  CHECK(x.truth.lambda_t.size() == 4);
}

TEST_CASE("tree design covariates follow the subgroup layout") {
  TreeDesign d;
  Philox4x32 rng(9);
  const auto sim = simulate_tree_data(d, rng);
  const auto& x1 = sim.data.covariate("X1");
  const auto& x2 = sim.data.covariate("X2");
  const auto& x3 = sim.data.covariate("X3");
  for (std::size_t i = 0; i < sim.data.size(); ++i) {
    const std::size_t g = sim.truth.subgroup[i];
    const std::string& label = x1.levels[static_cast<std::size_t>(x1.values[i])];
    REQUIRE(label == (g >= 2 ? "1" : "0"));
    if (g == 0) REQUIRE(x2.values[i] <= 50.0);
    if (g == 1) REQUIRE(x2.values[i] > 50.0);
    if (g == 2) REQUIRE(x3.values[i] <= 2.5);
    if (g == 3) REQUIRE(x3.values[i] > 2.5);
  }
  CHECK(sim.data.covariate("X6").levels.size() == 6);
}

TEST_CASE("spec parsing") {
  const auto size = parse(
      "# size cells\n"
      "experiment = size\n"
      "seed = 12\n"
      "replicates = 150\n"
      "lambda_t = 1/20\n"
      "censoring = 0.1, 0.25\n"
      "n = 50, 1000\n");
  CHECK(size.experiment == Experiment::Size);
  CHECK(size.seed == 12u);
  CHECK(size.replicates == 150);
  REQUIRE(size.size_cells.size() == 4);
  CHECK(size.size_cells[0].lambda_t == doctest::Approx(0.05));

  const auto power = parse(
      "experiment = power\n"
      "lambda_t2 = 1/40, 1/60\n"
      "lambda_c = 1/30, 1/50\n"
      "n1 = 50, 100\n"
      "n2 = 50, 100\n");
  CHECK(power.replicates == 1000);
  CHECK(power.power_cells.size() == 4);
  CHECK(!power.seed);

  const auto tree = parse("experiment = tree\nconfigs = exp/exp, wei/exp, exp/na\nsubgroup2.lambda_c = 1/35\n");
  REQUIRE(tree.tree_configs.size() == 3);
  CHECK(tree.tree_configs[1].config.event_dist == Family::Weibull);
  CHECK(!tree.tree_configs[2].config.censor_heterogeneity);
  CHECK(tree.tree_design.subgroups[1].lambda_c == doctest::Approx(1.0 / 35.0));
  CHECK(tree.replicates == 200);
}

TEST_CASE("spec errors") {
  CHECK(parse_error("") == ErrorCode::SpecParseError);
  CHECK(parse_error("experiment = magic\n") == ErrorCode::SpecParseError);
  CHECK(parse_error("experiment = size\nbogus = 1\n") == ErrorCode::SpecParseError);
  CHECK(parse_error("experiment = size\nn = 10\nn = 20\n") == ErrorCode::SpecParseError);
  CHECK(parse_error("experiment = size\nreplicates = 0\n") == ErrorCode::SpecParseError);
  CHECK(parse_error("experiment = size\ncensoring = 1.5\n") == ErrorCode::SpecParseError);
  CHECK(parse_error("experiment = power\nlambda_t2 = 1/40, 1/60\nlambda_c = 1/30\n") == ErrorCode::SpecParseError);
  CHECK(parse_error("experiment = tree\nconfigs = exp-exp\n") == ErrorCode::SpecParseError);
  CHECK(parse_error("experiment = tree\nalpha = 2\n") == ErrorCode::SpecParseError);
  CHECK(parse_error("experiment = size\nlambda_t\n") == ErrorCode::SpecParseError);
  try {
    parse("experiment = size\n\nbogus = 1\n");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("line 3") != std::string::npos);
  }
  CHECK_THROWS_AS(load_experiment_spec("/nonexistent/spec.txt"), Error);
  CHECK_THROWS_AS(parse_config_label("exp", {}), Error);
}

TEST_CASE("experiment rows and csv") {
  const auto spec = parse("experiment = size\nreplicates = 100\nn = 60\n");
  const auto rows = run_experiment(spec, 4, 100, {2});
  REQUIRE(rows.size() == 1);
  std::ostringstream a, b;
  write_experiment_csv(a, rows);
  write_experiment_csv(b, run_experiment(spec, 4, 100, {1}));
  CHECK(a.str() == b.str());
  CHECK(a.str().rfind("experiment,lambda_t,censoring,n,replicates,estimate,ci_low,ci_high,failures,seed,rng", 0) == 0);
  CHECK_THROWS_AS(run_experiment(spec, 4, 0, {1}), Error);
  CHECK(minimum_replicates(Experiment::Tree) == 50);
}

TEST_CASE("tree recovery summary on a small run") {
  TreeDesign d;
  d.replicates = 50;
  d.seed = 3;
  const auto summaries = run_tree_recovery(d, {parse_config_label("exp/exp", {}), parse_config_label("exp/na", {})}, {0});
  REQUIRE(summaries.size() == 2);
  CHECK(summaries[0].modal_leaves == 4);
  CHECK(summaries[1].modal_leaves == 3);
  CHECK(summaries[0].pct_x1_first >= 80.0);
  CHECK(summaries[1].median_delta_mad_c > summaries[0].median_delta_mad_c);
  std::size_t total = 0;
  for (const auto& [leaves, count] : summaries[0].leaf_histogram) total += count;
  CHECK(total == 50);
}

TEST_CASE("median") {
  CHECK(median({3, 1, 2}) == 2.0);
  CHECK(median({4, 1, 2, 3}) == 2.5);
  CHECK(std::isnan(median({})));
}
