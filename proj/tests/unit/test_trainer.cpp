#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "oracles.hpp"
#include "smile/checkpoint.hpp"
#include "smile/dataset.hpp"
#include "smile/errors.hpp"
#include "smile/trainer.hpp"

namespace fs = std::filesystem;
using namespace smile;

namespace {

SyntheticSpec small_data(std::uint64_t seed) {
  SyntheticSpec s;
  s.n = 240;
  s.k = 3;
  s.d_latent = 4;
  s.d_views = {10, 10};
  s.map_correlation = 0.7;
  s.seed = seed;
  return s;
}

TrainConfig small_config(std::uint64_t seed) {
  TrainConfig c;
  c.warmup_epochs = 3;
  c.max_epochs = 6;
  c.batch_size = 64;
  c.adapt_width = 16;
  c.encoder_hidden = {16};
  c.latent_dim = 6;
  c.final_restarts = 3;
  c.seed = seed;
  return c;
}

fs::path fresh_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("smile_trainer_" + name);
  fs::remove_all(p);
  return p;
}

}  // namespace

TEST(TrainConfig, DefaultsAndValidation) {
  const TrainConfig c;
  EXPECT_EQ(c.warmup_epochs, 50u);
  EXPECT_EQ(c.max_epochs, 150u);
  EXPECT_EQ(c.batch_size, 256u);
  EXPECT_DOUBLE_EQ(c.lr, 1e-3);
  EXPECT_DOUBLE_EQ(c.lambda_sil, 0.04);
  EXPECT_DOUBLE_EQ(c.lambda_ccl, 0.01);
  EXPECT_DOUBLE_EQ(c.gamma, 5.0);
  EXPECT_DOUBLE_EQ(c.tau_assign, 0.1);
  EXPECT_DOUBLE_EQ(c.tau_ccl, 0.2);
  EXPECT_EQ(c.k_impute, 1u);
  EXPECT_NO_THROW(c.validate());
  TrainConfig bad = c;
  bad.warmup_epochs = 200;
  EXPECT_THROW(bad.validate(), ArgumentError);
  bad = c;
  bad.batch_size = 1;
  EXPECT_THROW(bad.validate(), ArgumentError);
  bad = c;
  bad.tau_ccl = 0.0;
  EXPECT_THROW(bad.validate(), ArgumentError);
}

TEST(TrainConfig, JsonRoundTripAndKeyErrors) {
  TrainConfig c = small_config(9);
  c.eval_epochs = {1, 4};
  c.lambda_sil = 0.16;
  const TrainConfig back = TrainConfig::from_json(c.to_json());
  EXPECT_EQ(back.to_json(), c.to_json());
  EXPECT_EQ(back.hash(), c.hash());
  EXPECT_NE(TrainConfig::from_json(R"({"lr": 0.01})").hash(), TrainConfig().hash());
  try {
    TrainConfig::from_json(R"({"lambda_sil": "big"})");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_NE(std::string(e.what()).find("config.lambda_sil"), std::string::npos) << e.what();
  }
  EXPECT_THROW(TrainConfig::from_json(R"({"learning_rate": 1})"), ParseError);
  EXPECT_THROW(TrainConfig::from_json("{"), ParseError);
  // Partial files override only the listed keys.
  EXPECT_EQ(TrainConfig::from_json(R"({"seed": 4})", c).batch_size, c.batch_size);
}

TEST(ResolveClusterCount, Precedence) {
  MultiViewDataset ds = make_synthetic(small_data(1));
  EXPECT_EQ(resolve_cluster_count(5, ds), 5u);
  EXPECT_EQ(resolve_cluster_count(0, ds), 3u);
  ds.num_clusters.reset();
  EXPECT_EQ(resolve_cluster_count(0, ds), 3u);
  ds.labels.reset();
  EXPECT_THROW(resolve_cluster_count(0, ds), ArgumentError);
}

TEST(Train, WarmupOnlyRunHasNoSil) {
  TrainConfig c = small_config(1);
  c.max_epochs = c.warmup_epochs;
  const TrainResult r = train(make_synthetic(small_data(1)), c);
  ASSERT_EQ(r.history.epochs.size(), 3u);
  for (const auto& e : r.history.epochs) {
    EXPECT_FALSE(e.sil_active);
    EXPECT_EQ(e.loss.sil_s, 0.0);
    EXPECT_EQ(e.loss.sil_v, 0.0);
  }
}

TEST(Train, SilStartsAfterWarmupAndTotalsAreConsistent) {
  const TrainResult r = train(make_synthetic(small_data(2)), small_config(2));
  ASSERT_EQ(r.history.epochs.size(), 6u);
  for (const auto& e : r.history.epochs) {
    EXPECT_EQ(e.sil_active, e.epoch > 3) << e.epoch;
    EXPECT_EQ(e.inertia.has_value(), e.epoch > 3);
    EXPECT_NEAR(e.loss.total, e.loss.weighted_total(), 1e-12);
  }
  EXPECT_NE(r.history.at_epoch(5), nullptr);
  EXPECT_EQ(r.history.at_epoch(7), nullptr);
}

TEST(Train, SameSeedIsBitIdentical) {
  const MultiViewDataset ds = corrupt(make_synthetic(small_data(3)), {0.2, 0.3, std::nullopt, 5});
  const TrainResult a = train(ds, small_config(3));
  const TrainResult b = train(ds, small_config(3));
  EXPECT_EQ(a.model.params(), b.model.params());
  ASSERT_EQ(a.history.epochs.size(), b.history.epochs.size());
  for (std::size_t e = 0; e < a.history.epochs.size(); ++e) EXPECT_EQ(a.history.epochs[e].to_json(), b.history.epochs[e].to_json());
  EXPECT_NE(train(ds, small_config(4)).model.params(), a.model.params());
}

TEST(Train, ResumeReproducesUninterruptedRun) {
  const MultiViewDataset ds = corrupt(make_synthetic(small_data(4)), {0.2, 0.3, std::nullopt, 6});
  const TrainConfig c = small_config(4);
  const TrainResult full = train(ds, c);

  const fs::path dir = fresh_dir("resume");
  TrainOptions first;
  first.run_dir = dir;
  first.stop_after = 4;
  const TrainResult part = train(ds, c, first);
  EXPECT_EQ(part.epochs_done, 4u);

  TrainOptions second;
  second.run_dir = dir;
  second.resume = load_checkpoint(dir / "checkpoint.json", c.network_spec(ds.view_dims()));
  const TrainResult rest = train(ds, c, second);
  EXPECT_EQ(rest.epochs_done, 6u);
  EXPECT_EQ(rest.model.params(), full.model.params());

  std::ifstream history(dir / "history.jsonl");
  std::size_t lines = 0;
  for (std::string line; std::getline(history, line);) ++lines;
  EXPECT_EQ(lines, 6u);
}

TEST(Train, CheckpointEveryWritesNumberedFiles) {
  TrainConfig c = small_config(5);
  c.checkpoint_every = 2;
  const fs::path dir = fresh_dir("ckpt");
  TrainOptions o;
  o.run_dir = dir;
  train(make_synthetic(small_data(5)), c, o);
  for (int e : {2, 4, 6}) EXPECT_TRUE(fs::exists(dir / ("checkpoint_" + std::to_string(e) + ".json"))) << e;
  EXPECT_EQ(load_checkpoint(dir / "checkpoint_4.json").epochs_done, 4u);
}

TEST(Train, FullyIncompleteRunHasNoContrastiveSignal) {
  const MultiViewDataset ds = corrupt(make_synthetic(small_data(6)), {0.0, 1.0, std::nullopt, 7});
  ASSERT_TRUE(ds.fully_incomplete());
  const TrainResult r = train(ds, small_config(6));
  for (const auto& e : r.history.epochs) {
    EXPECT_EQ(e.ccl_terms, 0u);
    EXPECT_EQ(e.ccl_max_abs, 0.0);
    EXPECT_EQ(e.ccl_grad_max_abs, 0.0);
    EXPECT_EQ(e.loss.ccl, 0.0);
  }
}

TEST(Train, WarmupReconstructionDecreasesOverWindows) {
  TrainConfig c = small_config(7);
  c.warmup_epochs = 30;
  c.max_epochs = 30;
  const TrainResult r = train(make_synthetic(small_data(7)), c);
  for (std::size_t e = 1; e + 10 <= 30; ++e) {
    EXPECT_LE(r.history.at_epoch(e + 10)->loss.dar, r.history.at_epoch(e)->loss.dar) << "window from epoch " << e;
  }
}

TEST(Train, EvalSnapshotsFollowSchedule) {
  TrainConfig c = small_config(8);
  c.eval_every = 3;
  c.eval_epochs = {1};
  const TrainResult r = train(make_synthetic(small_data(8)), c);
  for (const auto& e : r.history.epochs) EXPECT_EQ(e.metrics.has_value(), e.epoch == 1 || e.epoch % 3 == 0) << e.epoch;
}

TEST(Evaluate, SeparableLatentsGiveExactClusters) {
  SyntheticSpec s = small_data(9);
  s.spread = 0.01;
  s.noise = 0.0;
  const MultiViewDataset ds = make_synthetic(s);
  NetworkSpec spec;
  spec.view_dims = ds.view_dims();
  spec.adapt_width = 10;
  spec.encoder_hidden = {};
  spec.latent_dim = 6;
  spec.hidden_activation = Activation::kIdentity;
  const Model model(spec, 1);
  const EvaluationResult r = evaluate(model, ds, {3, 1, 10, 0});
  EXPECT_EQ(*r.report.acc, 1.0);
  EXPECT_FALSE(r.report.car.has_value());
  EXPECT_FALSE(r.report.nrmse.has_value());
  EXPECT_EQ(r.features.cols(), 12);
  EXPECT_NEAR(oracle::brute_force_acc(r.predicted, *ds.labels), 1.0, 0.0);
}

TEST(Evaluate, ApplicableMetricsOnly) {
  const MultiViewDataset base = make_synthetic(small_data(10));
  const Model model(small_config(0).network_spec(base.view_dims()), 2);
  const EvalOptions o{3, 1, 2, 0};

  const auto missing = evaluate(model, corrupt(base, {0.3, 0.0, std::nullopt, 1}), o).report;
  EXPECT_TRUE(missing.nrmse.has_value());
  EXPECT_FALSE(missing.car.has_value());

  const auto unaligned = evaluate(model, corrupt(base, {0.0, 0.5, std::nullopt, 1}), o).report;
  EXPECT_TRUE(unaligned.car.has_value());
  EXPECT_FALSE(unaligned.nrmse.has_value());

  const auto unlabeled = evaluate(model, strip_truth(corrupt(base, {0.2, 0.2, std::nullopt, 1})), o).report;
  EXPECT_FALSE(unlabeled.acc || unlabeled.nmi || unlabeled.ari || unlabeled.car || unlabeled.nrmse);
  EXPECT_NE(unlabeled.to_json().find("\"omitted\":[\"acc\",\"nmi\",\"ari\",\"car\",\"nrmse\"]"), std::string::npos);
}

TEST(EncodeViews, UnobservedRowsAreNaN) {
  const MultiViewDataset ds = corrupt(make_synthetic(small_data(11)), {0.4, 0.0, std::nullopt, 2});
  const Model model(small_config(0).network_spec(ds.view_dims()), 3);
  const auto z = encode_views(model, ds);
  for (std::size_t i = 0; i < ds.size(); ++i) {
    for (std::size_t v = 0; v < 2; ++v) {
      EXPECT_EQ(ds.observed(i, v), z[v].row(static_cast<Eigen::Index>(i)).allFinite());
    }
  }
}
