#include <cmath>
#include <cstdio>
#include <filesystem>

#include <gtest/gtest.h>

#include "lmiql/harness.hpp"
#include "lmiql/io.hpp"
#include "oracles.hpp"

using namespace lmiql;

namespace {

ExperimentConfig small_linear() {
  auto c = ExperimentConfig::linear_defaults();
  c.n_samples = 60;
  c.subset_sizes = {0, 30, 60};
  c.n_monte_carlo = 2;
  return c;
}

}  // namespace

TEST(Harness, DefaultsValidate) {
  EXPECT_NO_THROW(ExperimentConfig::pendulum_defaults().validate());
  EXPECT_NO_THROW(ExperimentConfig::linear_defaults().validate());
}

TEST(Harness, RejectsBadConfigs) {
  auto c = ExperimentConfig::pendulum_defaults();
  c.subset_sizes = {0, 50, 25};
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = ExperimentConfig::pendulum_defaults();
  c.subset_sizes = {0, 600};
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = ExperimentConfig::pendulum_defaults();
  c.methods = {"dqn"};
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = ExperimentConfig::linear_defaults();
  c.baseline = ExperimentConfig::BaselineKind::InaccurateLqr;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = ExperimentConfig::pendulum_defaults();
  c.n_monte_carlo = 0;
  EXPECT_THROW(c.validate(), std::invalid_argument);
}

TEST(Harness, BaselineMatchesFrozenGain) {
  const auto b = make_baseline_policy(ExperimentConfig::pendulum_defaults());
  EXPECT_NEAR(b.K_bar(0, 0), lmiql::testing::frozen_inaccurate_gain()[0], 1e-9);
  EXPECT_NEAR(b.K_bar(0, 1), lmiql::testing::frozen_inaccurate_gain()[1], 1e-9);
}

TEST(Harness, LinearOptimalGainMatchesFrozen) {
  const Eigen::MatrixXd K = linear_optimal_gain(ExperimentConfig::linear_defaults());
  EXPECT_NEAR((K.row(0) - lmiql::testing::frozen_lqr_gain()).cwiseAbs().maxCoeff(), 0.0, 1e-9);
}

TEST(Harness, DeriveSeedSeparatesStreamsAndRuns) {
  EXPECT_EQ(derive_seed(0, 0, 3), derive_seed(0, 0, 3));
  EXPECT_NE(derive_seed(0, 0, 3), derive_seed(0, 1, 3));
  EXPECT_NE(derive_seed(0, 0, 3), derive_seed(0, 0, 4));
  EXPECT_NE(derive_seed(0, 0, 3), derive_seed(1, 0, 3));
}

TEST(Harness, AggregateSingleRunHasDegenerateInterval) {
  const auto p = aggregate("lmi-ql", 10, {-3.5}, 0);
  EXPECT_EQ(p.mean_reward, -3.5);
  EXPECT_EQ(p.ci95_low, -3.5);
  EXPECT_EQ(p.ci95_high, -3.5);
  EXPECT_EQ(p.n_total, 1);
  EXPECT_EQ(p.n_excluded, 0);
}

TEST(Harness, AggregateCountsExclusions) {
  const double nan = std::nan("");
  const auto p = aggregate("lspi", 25, {-1.0, -3.0, nan}, 2);
  EXPECT_EQ(p.n_total, 5);
  EXPECT_EQ(p.n_excluded, 3);
  EXPECT_DOUBLE_EQ(p.mean_reward, -2.0);
  const double half = 1.96 * std::sqrt(2.0) / std::sqrt(2.0);
  EXPECT_NEAR(p.ci95_high - p.mean_reward, half, 1e-12);
  const auto none = aggregate("lspi", 25, {nan}, 1);
  EXPECT_TRUE(std::isnan(none.mean_reward));
  EXPECT_EQ(none.n_excluded, 2);
}

TEST(Harness, CsvIsSortedAndRoundTrips) {
  std::vector<LearningCurvePoint> pts = {aggregate("oracle", 50, {-1.25, -1.5}, 0),
                                         aggregate("lmi-ql", 50, {-2.0 / 3.0}, 0),
                                         aggregate("lmi-ql", 0, {std::nan("")}, 0)};
  const std::string csv = curves_csv(pts);
  const auto back = parse_curves_csv(csv);
  ASSERT_EQ(back.size(), 3u);
  EXPECT_EQ(back[0].method, "lmi-ql");
  EXPECT_EQ(back[0].n_data, 0);
  EXPECT_TRUE(std::isnan(back[0].mean_reward));
  EXPECT_EQ(back[1].mean_reward, -2.0 / 3.0);
  EXPECT_EQ(back[2].method, "oracle");
  EXPECT_EQ(curves_csv(back), csv);
  EXPECT_THROW(parse_curves_csv("a,b\n"), std::invalid_argument);
}

TEST(Harness, OracleAndBaselineCurvesAreFlat) {
  auto c = small_linear();
  c.methods = {"oracle", "baseline-only"};
  const auto res = run_experiment(c);
  ASSERT_EQ(res.points.size(), 6u);
  for (const auto& p : res.points) {
    const auto& first = p.method == "oracle" ? res.points[3] : res.points[0];
    EXPECT_EQ(p.mean_reward, first.mean_reward) << p.method << " " << p.n_data;
    EXPECT_EQ(p.n_excluded, 0);
    EXPECT_EQ(p.n_total, 2);
  }
}

TEST(Harness, LearnersRecoverTheLinearOptimum) {
  auto c = small_linear();
  c.methods = {"lmi-ql", "lmi-qli", "lspi", "oracle"};
  const auto res = run_experiment(c);
  double oracle = 0.0;
  for (const auto& p : res.points)
    if (p.method == "oracle") oracle = p.mean_reward;
  for (const auto& p : res.points) {
    EXPECT_EQ(p.n_excluded, 0) << p.method;
    if (p.n_data == 60) EXPECT_NEAR(p.mean_reward, oracle, 1e-3 * std::abs(oracle)) << p.method;
  }
  for (const auto& rec : res.log)
    if (rec.method == "lmi-ql" && rec.n_data > 0) {
      EXPECT_GT(rec.optimal_solves, 0);
      EXPECT_LE(rec.max_epigraph_gap, 1e-6);
    }
}

TEST(Harness, ExperimentIsReproducible) {
  auto c = small_linear();
  c.methods = {"lmi-qli", "oracle"};
  EXPECT_EQ(curves_csv(run_experiment(c).points), curves_csv(run_experiment(c).points));
}

TEST(Harness, SubsetsArePrefixesOfOneDataset) {
  const auto c = ExperimentConfig::pendulum_defaults();
  const auto full = generate_data(c, 50, 7);
  const auto small = generate_data(c, 20, 7);
  EXPECT_EQ(full.prefix(20).X, small.X);
  EXPECT_EQ(full.prefix(20).R, small.R);
}

TEST(Io, ParamsRoundTrip) {
  QParams p = QParams::zeros(3, 1);
  p.T = 0.25;
  p.R_x << 1, 2, 3;
  p.R_u << -4;
  p.S.setIdentity();
  p.S(0, 3) = p.S(3, 0) = 0.1;
  const QParams q = params_from_json(Json::parse(params_to_json(p).dump()));
  EXPECT_EQ(q.to_vector(), p.to_vector());
  Json bad = params_to_json(p);
  bad["n_phi"] = 2;
  EXPECT_THROW(params_from_json(bad), std::invalid_argument);
}

TEST(Io, TrainResultKeepsNaNAsNull) {
  const auto c = ExperimentConfig::linear_defaults();
  const TrainResult r = train_method(c, "lspi", generate_data(c, 40, 1));
  const Json j = train_result_to_json(r);
  EXPECT_TRUE(j["relaxed_cost"].is_null());
  const TrainResult back = train_result_from_json(Json::parse(j.dump()));
  EXPECT_TRUE(std::isnan(back.relaxed_cost));
  EXPECT_EQ(back.policy.gain, r.policy.gain);
  EXPECT_EQ(back.solve_log.size(), r.solve_log.size());
}

TEST(Io, ConfigRoundTrip) {
  for (const auto& c : {ExperimentConfig::pendulum_defaults(), ExperimentConfig::linear_defaults()}) {
    const Json j = config_to_json(c);
    EXPECT_EQ(config_to_json(config_from_json(Json::parse(j.dump()))), j);
  }
  EXPECT_THROW(config_from_json(Json{{"gama", 0.9}}), std::invalid_argument);
  EXPECT_THROW(config_from_json(Json{{"gamma", 1.5}}), std::invalid_argument);
  EXPECT_EQ(config_from_json(Json{{"seed", 9}}).seed, 9u);
}

TEST(Io, DatasetRoundTripIsExact) {
  auto d = lmiql::testing::pendulum_dataset(25, 3);
  d.meta = "pendulum test";
  const std::string text = dataset_to_text(d);
  const Dataset back = dataset_from_text(text);
  EXPECT_EQ(back.X, d.X);
  EXPECT_EQ(back.U, d.U);
  EXPECT_EQ(back.R, d.R);
  EXPECT_EQ(back.X_next, d.X_next);
  EXPECT_EQ(back.seed, d.seed);
  EXPECT_EQ(back.meta, d.meta);
  EXPECT_EQ(dataset_to_text(back), text);
}

TEST(Io, DatasetRejectsMalformedText) {
  const std::string text = dataset_to_text(lmiql::testing::lqr_dataset(3, 1));
  EXPECT_THROW(dataset_from_text("garbage\n"), std::invalid_argument);
  EXPECT_THROW(dataset_from_text(text.substr(0, text.size() - 20)), std::invalid_argument);
  EXPECT_THROW(dataset_from_text(text + "1 2 3 4 5 6\n"), std::invalid_argument);
}

TEST(Io, FilesRoundTrip) {
  const auto path = (std::filesystem::temp_directory_path() / "lmiql_io_test.txt").string();
  const auto d = lmiql::testing::lqr_dataset(5, 2);
  save_dataset(d, path);
  EXPECT_EQ(load_dataset(path).X, d.X);
  std::remove(path.c_str());
  EXPECT_THROW(load_dataset(path), std::runtime_error);
}
