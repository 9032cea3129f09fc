#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "smile/checkpoint.hpp"
#include "smile/dataset.hpp"
#include "smile/losses.hpp"
#include "smile/metrics.hpp"
#include "smile/network.hpp"
#include "smile/recovery.hpp"

namespace smile {

/// Training hyper-parameters. JSON form uses these field names as flat keys.
struct TrainConfig {
  std::size_t warmup_epochs = 50;
  std::size_t max_epochs = 150;
  std::size_t batch_size = 256;
  double lr = 1e-3;
  double lambda_sil = 0.04;
  double lambda_ccl = 0.01;
  double gamma = 5.0;
  double tau_assign = 0.1;
  double tau_ccl = 0.2;
  std::size_t k_impute = 1;
  std::size_t K = 0;  // 0: take the cluster count from the dataset
  std::uint64_t seed = 0;
  std::size_t checkpoint_every = 0;

  std::size_t adapt_width = 128;
  std::vector<std::size_t> encoder_hidden{128};
  std::size_t latent_dim = 32;
  bool tied_adaption_init = true;
  std::size_t final_restarts = 10;
  /// Evaluate against ground truth every n epochs (0: never) and at the listed 1-based epochs.
  std::size_t eval_every = 0;
  std::vector<std::size_t> eval_epochs;

  /// Throws ArgumentError on an inconsistent config.
  void validate() const;
  LossWeights loss_weights() const { return {lambda_sil, gamma, lambda_ccl}; }
  NetworkSpec network_spec(const std::vector<std::size_t>& view_dims) const;

  std::string to_json() const;
  /// Unknown keys and wrong types raise ParseError naming the key path.
  static TrainConfig from_json(std::string_view text, const TrainConfig& base);
  static TrainConfig from_json(std::string_view text);
  std::string hash() const;
};

struct EpochRecord {
  std::size_t epoch = 0;  // 1-based
  LossReport loss;        // mean over the epoch's batches
  bool sil_active = false;
  std::optional<double> inertia;  // k-means inertia of the epoch's center refresh
  std::size_t ccl_terms = 0;
  double ccl_max_abs = 0.0;       // max |ccl| over batches
  double ccl_grad_max_abs = 0.0;  // max |d ccl / d z| over batches
  std::optional<MetricsReport> metrics;

  std::string to_json() const;
};

struct TrainHistory {
  std::vector<EpochRecord> epochs;

  const EpochRecord* at_epoch(std::size_t epoch) const;
};

struct TrainResult {
  Model model;
  AdamOptimizer optimizer;
  TrainHistory history;
  std::size_t epochs_done = 0;
};

struct TrainOptions {
  /// When set, history.jsonl and checkpoints are written here.
  std::optional<std::filesystem::path> run_dir;
  /// Continue from this state instead of a fresh model.
  std::optional<Checkpoint> resume;
  /// Stop after this many total epochs (default: max_epochs).
  std::optional<std::size_t> stop_after;
  std::function<void(const EpochRecord&)> on_epoch;
};

/// Runs warmup, per-epoch k-means refresh and mini-batch Adam on the total
/// loss. Ground truth in `ds` is never used for optimization; it only feeds
/// optional per-epoch evaluation snapshots.
TrainResult train(const MultiViewDataset& ds, const TrainConfig& config, const TrainOptions& options = {});

struct EvalOptions {
  std::size_t K = 0;
  std::size_t k_impute = 1;
  std::size_t restarts = 10;
  std::uint64_t seed = 0;
};
EvalOptions eval_options(const TrainConfig& config);

struct EvaluationResult {
  MetricsReport report;
  std::vector<int> predicted;
  Matrix features;
  std::vector<Imputation> imputations;
  std::vector<Realignment> realignments;
};

/// Encode, impute, realign, concatenate, cluster, and score against whatever
/// ground truth the dataset carries. Missing truth leaves the metric absent.
EvaluationResult evaluate(const Model& model, const MultiViewDataset& ds, const EvalOptions& options);

/// N x d latents per view; NaN rows for unobserved samples.
std::vector<Matrix> encode_views(const Model& model, const MultiViewDataset& ds);

/// Plug-in I(C;X|V) over the whole dataset: fresh k-means centers on the
/// pooled latents, soft assignments, then H(C|V) - H(C|X).
double estimate_conditional_mi(const Model& model, const MultiViewDataset& ds, std::size_t K, double tau_assign,
                               std::uint64_t seed);

/// Cluster count from the explicit value, dataset meta, or label set.
std::size_t resolve_cluster_count(std::size_t explicit_k, const MultiViewDataset& ds);

}  // namespace smile
