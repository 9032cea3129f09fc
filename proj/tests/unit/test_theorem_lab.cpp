#include <gtest/gtest.h>

#include <cmath>

#include "oracles.hpp"
#include "smile/dataset.hpp"
#include "smile/errors.hpp"
#include "smile/random.hpp"
#include "smile/theorem_lab.hpp"

using namespace smile;

namespace {

Matrix table(std::initializer_list<std::initializer_list<double>> values) {
  Matrix m(static_cast<Eigen::Index>(values.size()), static_cast<Eigen::Index>(values.begin()->size()));
  Eigen::Index r = 0;
  for (const auto& row : values) {
    Eigen::Index c = 0;
    for (double x : row) m(r, c++) = x;
    ++r;
  }
  return m;
}

std::vector<int> random_labels(std::size_t n, std::size_t k, std::uint64_t seed) {
  RngStream rng(seed, 9);
  std::vector<int> out(n);
  for (auto& x : out) x = static_cast<int>(rng.below(k));
  return out;
}

}  // namespace

TEST(PluginMi, HandTables) {
  const Eigen::Vector3d pt(0.2, 0.3, 0.5);
  const Eigen::Vector2d pv(0.4, 0.6);
  const Matrix product = pt * pv.transpose();
  EXPECT_NEAR(plugin_mi(product), 0.0, 1e-15);
  EXPECT_NEAR(plugin_mi(table({{0.5, 0.0}, {0.0, 0.5}})), std::log(2.0), 1e-15);
  const double got = plugin_mi(table({{0.4, 0.1}, {0.2, 0.3}}));
  EXPECT_NEAR(got, oracle::summation_mi({{0.4, 0.1}, {0.2, 0.3}}), 1e-15);
  // p(t) = (0.5, 0.5), p(v) = (0.6, 0.4); summed by hand to 0.0863046.
  EXPECT_NEAR(got, 0.0863046, 1e-7);
}

TEST(PluginMi, InvalidDistributionsRejected) {
  EXPECT_THROW(plugin_mi(table({{0.5, 0.6}})), ArgumentError);
  EXPECT_THROW(plugin_mi(table({{1.2, -0.2}})), ArgumentError);
  EXPECT_THROW(plugin_mi(table({{NAN, 1.0}})), ArgumentError);
  EXPECT_THROW(plugin_mi(Matrix(0, 0)), ArgumentError);
}

TEST(PluginMi, ZeroExactlyWhenFactorized) {
  RngStream rng(1, 0);
  for (int t = 0; t < 50; ++t) {
    Matrix j(3, 4);
    for (Eigen::Index i = 0; i < j.size(); ++i) j.data()[i] = rng.uniform() + 0.01;
    j /= j.sum();
    const Matrix product = j.rowwise().sum() * j.colwise().sum();
    EXPECT_GE(plugin_mi(j), 0.0);
    EXPECT_NEAR(plugin_mi(product), 0.0, 1e-12);
    if ((j - product).cwiseAbs().maxCoeff() > 1e-12) EXPECT_GT(plugin_mi(j), 0.0);
  }
}

TEST(Scenario, ParseNames) {
  EXPECT_EQ(parse_scenario("complete"), Scenario::complete);
  EXPECT_EQ(parse_scenario("permuted"), Scenario::permuted);
  EXPECT_EQ(parse_scenario("stratified-missing"), Scenario::stratified_missing);
  EXPECT_EQ(parse_scenario("category-dependent"), Scenario::category_dependent);
  EXPECT_EQ(scenario_name(Scenario::permuted), "permuted");
  EXPECT_THROW(parse_scenario("bogus"), ArgumentError);
}

TEST(Scenario, InvariantScenariosGiveZeroOverSeeds) {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const auto labels = random_labels(60 + seed, 2 + seed % 4, seed);
    const std::size_t views = 2 + seed % 3;
    for (Scenario s : {Scenario::complete, Scenario::permuted, Scenario::stratified_missing}) {
      EXPECT_NEAR(verify_semantic_invariance(labels, views, s, seed), 0.0, 1e-12) << scenario_name(s) << " " << seed;
    }
  }
}

TEST(Scenario, CategoryDependentControlIsPositive) {
  const auto labels = random_labels(200, 4, 3);
  EXPECT_GT(verify_semantic_invariance(labels, 2, Scenario::category_dependent, 0), 0.01);
  const Matrix j = scenario_joint(labels, 2, Scenario::category_dependent, 0);
  EXPECT_EQ(j(1, 1), 0.0);
  EXPECT_NEAR(j.sum(), 1.0, 1e-12);
}

TEST(Spearman, KnownValuesAndDegenerateCases) {
  const std::vector<double> a{1, 2, 3, 4}, b{10, 20, 30, 40}, c{4, 3, 2, 1}, flat{5, 5, 5, 5};
  EXPECT_NEAR(*spearman(a, b), 1.0, 1e-15);
  EXPECT_NEAR(*spearman(a, c), -1.0, 1e-15);
  EXPECT_FALSE(spearman(a, flat).has_value());
  EXPECT_FALSE(spearman(std::vector<double>{1}, std::vector<double>{2}).has_value());
  // Ties take average ranks: ranks (1.5, 1.5, 3) vs (1, 2, 3).
  EXPECT_NEAR(*spearman(std::vector<double>{1, 1, 2}, std::vector<double>{1, 2, 3}), std::sqrt(3.0) / 2.0, 1e-12);
}

TEST(Sweep, NeedsThreeConfigs) {
  const MultiViewDataset ds = make_synthetic(60, 2, 3, {5, 5}, 0.1, 1);
  EXPECT_THROW(invariance_sweep(ds, {TrainConfig{}, TrainConfig{}}), ArgumentError);
}

TEST(Sweep, IdenticalConfigsGiveNullCorrelations) {
  SyntheticSpec s;
  s.n = 120;
  s.k = 3;
  s.d_latent = 4;
  s.d_views = {8, 8};
  s.map_correlation = 0.7;
  const MultiViewDataset ds = corrupt(make_synthetic(s), {0.2, 0.2, std::nullopt, 1});
  TrainConfig c;
  c.warmup_epochs = 2;
  c.max_epochs = 3;
  c.batch_size = 60;
  c.adapt_width = 8;
  c.encoder_hidden = {8};
  c.latent_dim = 4;
  c.final_restarts = 2;
  const SweepResult r = invariance_sweep(ds, {c, c, c});
  ASSERT_EQ(r.rows.size(), 3u);
  EXPECT_FALSE(r.rho_acc.has_value());
  EXPECT_FALSE(r.rho_car.has_value());
  EXPECT_FALSE(r.rho_nrmse.has_value());
  const std::string csv = r.to_csv();
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "lambda_sil,mi_cxv,acc,car,nrmse");
  EXPECT_NE(r.summary_json().find("\"spearman_mi_acc\": null"), std::string::npos) << r.summary_json();
}
