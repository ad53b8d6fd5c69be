#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <memory>
#include <random>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "kar/evaluation.hpp"
#include "kar/split.hpp"

using namespace kar;

namespace {

TrialConfig small_design_cfg() {
  TrialConfig cfg;
  cfg.design = GeneratorDesign::main_synthetic();
  cfg.sample_size = 160;
  cfg.splits = KarSplit{60, 60, 40};
  cfg.trials = 2;
  cfg.base_seed = 5;
  return cfg;
}

bool same_per_trial(const MethodSeries& a, const MethodSeries& b) {
  if (a.per_trial.size() != b.per_trial.size()) return false;
  for (std::size_t t = 0; t < a.per_trial.size(); ++t) {
    if (a.per_trial[t].has_value() != b.per_trial[t].has_value()) return false;
    if (a.per_trial[t] && *a.per_trial[t] != *b.per_trial[t]) return false;
  }
  return true;
}

std::shared_ptr<Dataset> grouped_dataset(Eigen::Index n, std::uint64_t seed) {
  Dataset data = generate(GeneratorDesign::main_synthetic(), n, seed);
  data.group.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    data.group(i) = data.z(i, 0) > 0.0 ? 1.0 : 0.0;
  }
  return std::make_shared<Dataset>(std::move(data));
}

}  // namespace

TEST_CASE("default grid covers the unit interval interior evenly") {
  const std::vector<double> g = default_grid();
  REQUIRE(g.size() == 100);
  CHECK(g.front() == doctest::Approx(0.05).epsilon(1e-15));
  CHECK(g.back() == doctest::Approx(0.95).epsilon(1e-15));
  const double step = g[1] - g[0];
  for (std::size_t i = 1; i < g.size(); ++i) {
    CHECK(g[i] - g[i - 1] == doctest::Approx(step).epsilon(1e-10));
  }
}

TEST_CASE("method registry lists every campaign method once") {
  const auto& names = all_methods();
  CHECK(names.size() == 9);
  for (const char* want :
       {"kar", "kar2", "kiv", "kpa", "kreg", "ar", "iv", "pa", "ols"}) {
    CHECK(std::count(names.begin(), names.end(), want) == 1);
  }
}

TEST_CASE("grid error is zero for the truth and analytic for offsets") {
  const GeneratorDesign design = GeneratorDesign::main_synthetic();
  const std::vector<double> grid = default_grid();
  const Predictor truth = [&](double x) { return true_do(design, x); };
  CHECK(grid_mse(truth, design, grid) == 0.0);

  const Predictor zero = [](double) { return 0.0; };
  double expect = 0.0;
  for (double x : grid) expect += true_do(design, x) * true_do(design, x);
  expect /= static_cast<double>(grid.size());
  CHECK(grid_mse(zero, design, grid) ==
        doctest::Approx(expect).epsilon(1e-12));

  const Predictor shifted = [&](double x) { return true_do(design, x) + 0.3; };
  CHECK(grid_mse(shifted, design, grid) ==
        doctest::Approx(0.09).epsilon(1e-12));

  CHECK_THROWS_AS(grid_mse(zero, design, {}), InvalidInput);
}

TEST_CASE("stage assignment produces singleton blocks at minimum size") {
  auto blocks = random_split(3, {1, 1, 1}, 17);
  REQUIRE(blocks.size() == 3);
  std::set<Eigen::Index> seen;
  for (const auto& b : blocks) {
    REQUIRE(b.size() == 1);
    seen.insert(b[0]);
  }
  CHECK(seen == std::set<Eigen::Index>{0, 1, 2});
}

TEST_CASE("stage assignment partitions the index range") {
  auto blocks = random_split(25, {10, 9, 6}, 3);
  std::set<Eigen::Index> seen;
  std::size_t total = 0;
  for (const auto& b : blocks) {
    total += b.size();
    seen.insert(b.begin(), b.end());
  }
  CHECK(total == 25);
  CHECK(seen.size() == 25);
  CHECK(*seen.begin() == 0);
  CHECK(*seen.rbegin() == 24);
}

TEST_CASE("stage assignment is seed-deterministic and seed-sensitive") {
  auto a = random_split(40, {20, 20}, 8);
  auto b = random_split(40, {20, 20}, 8);
  CHECK(a == b);
  bool differs = false;
  for (std::uint64_t s = 9; s < 14 && !differs; ++s) {
    differs = random_split(40, {20, 20}, s) != a;
  }
  CHECK(differs);
}

TEST_CASE("stage assignment rejects malformed size lists") {
  CHECK_THROWS_AS(random_split(10, {4, 5}, 1), InvalidInput);
  CHECK_THROWS_AS(random_split(10, {0, 10}, 1), InvalidInput);
  CHECK_THROWS_AS(random_split(10, {}, 1), InvalidInput);
}

TEST_CASE("first stage membership is uniform across seeds") {
  int hits = 0;
  for (std::uint64_t seed = 0; seed < 1000; ++seed) {
    auto blocks = random_split(700, {250, 250, 200}, seed);
    hits += std::count(blocks[0].begin(), blocks[0].end(), Eigen::Index{0});
  }
  const double rate = hits / 1000.0;
  CHECK(std::abs(rate - 250.0 / 700.0) < 0.05);
}

TEST_CASE("seed stream derivation separates and reproduces") {
  CHECK(derive_seed(42, 1) == derive_seed(42, 1));
  CHECK(derive_seed(42, 1) != derive_seed(42, 2));
  CHECK(derive_seed(42, 1) != derive_seed(43, 1));
  CHECK(derive_seed(0, 1) != 0);
}

TEST_CASE("campaign config validation rejects inconsistent settings") {
  TrialConfig none;
  CHECK_THROWS_AS(none.validate(), InvalidInput);

  TrialConfig both = small_design_cfg();
  both.dataset = grouped_dataset(200, 1);
  CHECK_THROWS_AS(both.validate(), InvalidInput);

  TrialConfig bad_sum = small_design_cfg();
  bad_sum.sample_size = 150;
  CHECK_THROWS_AS(bad_sum.validate(), InvalidInput);

  TrialConfig bad_gamma = small_design_cfg();
  bad_gamma.gamma = -0.5;
  CHECK_THROWS_AS(bad_gamma.validate(), InvalidInput);

  TrialConfig bad_method = small_design_cfg();
  bad_method.methods = {"krr"};
  CHECK_THROWS_AS(bad_method.validate(), InvalidInput);

  TrialConfig bad_jobs = small_design_cfg();
  bad_jobs.jobs = 0;
  CHECK_THROWS_AS(bad_jobs.validate(), InvalidInput);

  TrialConfig bad_trials = small_design_cfg();
  bad_trials.trials = 0;
  CHECK_THROWS_AS(bad_trials.validate(), InvalidInput);

  TrialConfig no_group = small_design_cfg();
  no_group.design.reset();
  auto plain = std::make_shared<Dataset>(
      generate(GeneratorDesign::main_synthetic(), 200, 2));
  no_group.dataset = plain;
  CHECK_THROWS_AS(no_group.validate(), InvalidInput);

  TrialConfig oversized = small_design_cfg();
  oversized.design.reset();
  oversized.dataset = grouped_dataset(100, 3);
  CHECK_THROWS_AS(oversized.validate(), InvalidInput);
}

TEST_CASE("ridge regression and unit-strength anchor agree in campaigns") {
  TrialConfig cfg = small_design_cfg();
  cfg.methods = {"kar", "kreg"};
  cfg.gamma = 1.0;
  cfg.trials = 1;
  TrialReport report = run_benchmark(cfg);
  REQUIRE(report.series.size() == 2);
  REQUIRE(report.series[0].per_trial[0].has_value());
  REQUIRE(report.series[1].per_trial[0].has_value());
  CHECK(std::abs(*report.series[0].per_trial[0] -
                 *report.series[1].per_trial[0]) < 1e-10);
}

TEST_CASE("campaigns are bitwise deterministic and thread-count invariant") {
  TrialConfig cfg = small_design_cfg();
  cfg.methods = {"kar", "ols"};
  cfg.trials = 3;
  TrialReport a = run_benchmark(cfg);
  TrialReport b = run_benchmark(cfg);
  cfg.jobs = 3;
  TrialReport c = run_benchmark(cfg);
  REQUIRE(a.series.size() == 2);
  for (std::size_t i = 0; i < a.series.size(); ++i) {
    CHECK(a.series[i].label == cfg.methods[i]);
    CHECK(same_per_trial(a.series[i], b.series[i]));
    CHECK(same_per_trial(a.series[i], c.series[i]));
    CHECK(a.series[i].curve == b.series[i].curve);
    CHECK(a.series[i].curve == c.series[i].curve);
  }
  CHECK(a.metric == "mse");
  CHECK(a.trials == 3);
  CHECK(a.grid == default_grid());
  CHECK(a.campaign_ok);
  nlohmann::json echo = nlohmann::json::parse(a.config_json);
  CHECK(echo["source"] == "main");
  CHECK(echo["gamma"] == 2.0);
}

TEST_CASE("campaign trials shift with the base seed") {
  TrialConfig cfg = small_design_cfg();
  cfg.methods = {"ols", "kar"};
  cfg.base_seed = 0;
  cfg.trials = 5;
  TrialReport a = run_benchmark(cfg);
  cfg.base_seed = 2;
  cfg.trials = 3;
  TrialReport b = run_benchmark(cfg);
  for (std::size_t i = 0; i < b.series.size(); ++i) {
    for (std::size_t t = 0; t < 3; ++t) {
      REQUIRE(b.series[i].per_trial[t].has_value());
      CHECK(*b.series[i].per_trial[t] == *a.series[i].per_trial[t + 2]);
    }
  }
}

TEST_CASE("kernel failures are recorded per trial and fail the campaign") {
  TrialConfig cfg = small_design_cfg();
  cfg.methods = {"kar", "ols"};
  cfg.trials = 3;
  cfg.kernels.bandwidth_x = -1.0;  // rejected at fit time, every trial
  TrialReport report = run_benchmark(cfg);
  CHECK(report.series[0].failures() == 3);
  CHECK(report.series[0].values().empty());
  CHECK(report.series[1].failures() == 0);
  CHECK_FALSE(report.campaign_ok);
}

TEST_CASE("dataset campaigns score shifted prediction error") {
  TrialConfig cfg;
  cfg.dataset = grouped_dataset(4000, 99);
  cfg.group_value = 1.0;
  cfg.sample_size = 400;
  cfg.splits = KarSplit{150, 150, 100};
  cfg.methods = {"ols"};
  cfg.trials = 2;
  cfg.base_seed = 3;
  TrialReport report = run_benchmark(cfg);
  CHECK(report.metric == "pe");
  CHECK(report.grid.empty());
  REQUIRE(report.series.size() == 1);
  for (const auto& v : report.series[0].per_trial) {
    REQUIRE(v.has_value());
    CHECK(*v > 0.0);
    CHECK(std::isfinite(*v));
  }
  CHECK(report.series[0].curve.empty());

  cfg.fixed_subsample = true;
  TrialReport fixed = run_benchmark(cfg);
  REQUIRE(fixed.series[0].per_trial[0].has_value());
  CHECK(*fixed.series[0].per_trial[0] == *fixed.series[0].per_trial[1]);
}

TEST_CASE("dataset campaigns demand rows outside the training group") {
  auto ds = grouped_dataset(300, 7);
  ds->group.setOnes();
  TrialConfig cfg;
  cfg.dataset = ds;
  cfg.sample_size = 200;
  cfg.splits = KarSplit{80, 80, 40};
  cfg.methods = {"ols"};
  cfg.trials = 1;
  CHECK_THROWS_AS(run_benchmark(cfg), InvalidInput);
}

TEST_CASE("singleton strength sweeps reduce to plain campaigns") {
  SweepConfig sweep;
  sweep.base = small_design_cfg();
  sweep.base.gamma = 1.0;
  sweep.gammas = {1.0};
  sweep.alpha_grid = {1.5};
  TrialReport swept = gamma_sweep(sweep);
  REQUIRE(swept.series.size() == 3);
  CHECK(swept.series[0].label == "kar[g=1]");
  CHECK(swept.series[1].label == "kar2[g=1]");
  CHECK(swept.series[2].label == "kiv");
  for (const auto& series : swept.series) {
    REQUIRE(series.info.size() == 1);
    CHECK(series.info[0].first == "c_alpha");
    CHECK(series.info[0].second == 1.5);
  }

  for (const char* method : {"kar", "kar2", "kiv"}) {
    TrialConfig cfg = small_design_cfg();
    cfg.methods = {method};
    cfg.gamma = 1.0;
    TrialReport direct = run_benchmark(cfg);
    const MethodSeries* match = nullptr;
    for (const auto& series : swept.series) {
      if (series.label.rfind(method, 0) == 0 &&
          (std::string(method) != "kar" || series.label[3] == '[')) {
        match = &series;
      }
    }
    REQUIRE(match != nullptr);
    CHECK(same_per_trial(*match, direct.series[0]));
  }
}

TEST_CASE("sweeps validate their candidate grids") {
  SweepConfig sweep;
  sweep.base = small_design_cfg();
  sweep.gammas = {};
  sweep.alpha_grid = {1.0};
  CHECK_THROWS_AS(gamma_sweep(sweep), InvalidInput);
  sweep.gammas = {1.0};
  sweep.alpha_grid = {};
  CHECK_THROWS_AS(gamma_sweep(sweep), InvalidInput);
  sweep.alpha_grid = {-1.0};
  CHECK_THROWS_AS(gamma_sweep(sweep), InvalidInput);
}

TEST_CASE("shift evaluation reports both training orientations") {
  TrialConfig cfg;
  cfg.design = GeneratorDesign::main_synthetic();
  cfg.sample_size = 240;
  cfg.splits = KarSplit{80, 80, 80};
  cfg.methods = {"kar", "ols"};
  cfg.trials = 2;
  cfg.base_seed = 11;
  TrialReport report = shift_eval(cfg, 0.0);
  REQUIRE(report.series.size() == 4);
  CHECK(report.series[0].label == "kar[below]");
  CHECK(report.series[1].label == "kar[above]");
  CHECK(report.series[2].label == "ols[below]");
  CHECK(report.series[3].label == "ols[above]");
  CHECK(report.metric == "pe");
  for (const auto& series : report.series) {
    for (const auto& v : series.per_trial) {
      REQUIRE(v.has_value());
      CHECK(std::isfinite(*v));
      CHECK(*v >= 0.0);
    }
  }
  nlohmann::json echo = nlohmann::json::parse(report.config_json);
  CHECK(echo["threshold"] == 0.0);

  TrialReport again = shift_eval(cfg, 0.0);
  for (std::size_t i = 0; i < report.series.size(); ++i) {
    CHECK(same_per_trial(report.series[i], again.series[i]));
  }
}

TEST_CASE("shift evaluation demands a synthetic design and finite threshold") {
  TrialConfig cfg;
  cfg.dataset = grouped_dataset(300, 13);
  cfg.sample_size = 200;
  cfg.splits = KarSplit{80, 80, 40};
  cfg.trials = 1;
  CHECK_THROWS_AS(shift_eval(cfg, 0.0), InvalidInput);

  TrialConfig synth = small_design_cfg();
  CHECK_THROWS_AS(
      shift_eval(synth, std::numeric_limits<double>::quiet_NaN()),
      InvalidInput);
}

TEST_CASE("conditional reference reproduces a constant outcome exactly") {
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  Eigen::VectorXd x(5000), y(5000);
  for (int i = 0; i < 5000; ++i) {
    x(i) = unif(rng);
    y(i) = 3.25;
  }
  ConditionalReference ref = ConditionalReference::fit(x, y);
  CHECK(ref.bandwidth() > 0.0);
  for (double q : {0.1, 0.5, 0.9}) {
    CHECK(ref.predict(q) == doctest::Approx(3.25).epsilon(1e-12));
  }
}

TEST_CASE("conditional reference tracks a smooth signal in the interior") {
  auto draw = [](std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::normal_distribution<double> gauss(0.0, 0.1);
    Eigen::VectorXd x(100000), y(100000);
    for (int i = 0; i < 100000; ++i) {
      x(i) = unif(rng);
      y(i) = std::sin(3.0 * x(i)) + gauss(rng);
    }
    return std::pair{x, y};
  };
  auto [x1, y1] = draw(100);
  ConditionalReference a = ConditionalReference::fit(x1, y1);
  for (double q = 0.1; q < 0.91; q += 0.05) {
    CHECK(std::abs(a.predict(q) - std::sin(3.0 * q)) < 0.05);
  }

  // Two independent fits differ by far less than campaign effect sizes.
  auto [x2, y2] = draw(200);
  ConditionalReference b = ConditionalReference::fit(x2, y2);
  double gap = 0.0;
  for (double q : default_grid()) {
    const double d = a.predict(q) - b.predict(q);
    gap += d * d;
  }
  gap /= static_cast<double>(default_grid().size());
  CHECK(gap < 1e-3);
}

TEST_CASE("conditional reference rejects degenerate or non-finite input") {
  Eigen::VectorXd x = Eigen::VectorXd::Constant(100, 0.4);
  Eigen::VectorXd y = Eigen::VectorXd::Random(100);
  CHECK_THROWS_AS(ConditionalReference::fit(x, y), DegenerateBandwidth);

  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  Eigen::VectorXd xr(200), yr(200);
  for (int i = 0; i < 200; ++i) {
    xr(i) = unif(rng);
    yr(i) = unif(rng);
  }
  ConditionalReference ref = ConditionalReference::fit(xr, yr);
  CHECK_THROWS_AS(ref.predict(std::numeric_limits<double>::infinity()),
                  InvalidInput);
}

TEST_CASE("non-finite predictions surface as conditioning failures") {
  CHECK_NOTHROW(require_finite({1.0, 2.0, -3.0}, "demo"));
  CHECK_THROWS_AS(
      require_finite({1.0, std::numeric_limits<double>::infinity()}, "demo"),
      IllConditioned);
  CHECK_THROWS_AS(
      require_finite({std::numeric_limits<double>::quiet_NaN()}, "demo"),
      IllConditioned);
}
