#include "smile/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <set>

#include <json.hpp>

#include "smile/clustering.hpp"
#include "smile/errors.hpp"
#include "smile/objective.hpp"
#include "smile/random.hpp"

namespace smile {
namespace {

using nlohmann::json;
using nlohmann::ordered_json;

constexpr std::uint64_t kBatchStream = 0x62617463;
constexpr std::uint64_t kCenterStream = 0x63656e74;
constexpr std::uint64_t kFinalStream = 0x66696e61;

template <typename T>
T read_key(const json& j, const std::string& key) {
  const json& value = j.at(key);
  if constexpr (std::is_same_v<T, double>) {
    if (!value.is_number()) throw ParseError("config." + key + ": expected a number");
  } else if constexpr (std::is_same_v<T, bool>) {
    if (!value.is_boolean()) throw ParseError("config." + key + ": expected true or false");
  } else if constexpr (std::is_same_v<T, std::vector<std::size_t>>) {
    if (!value.is_array()) throw ParseError("config." + key + ": expected an array of non-negative integers");
    for (std::size_t i = 0; i < value.size(); ++i) {
      if (!value[i].is_number_unsigned()) {
        throw ParseError("config." + key + "[" + std::to_string(i) + "]: expected a non-negative integer");
      }
    }
  } else {
    if (!value.is_number_unsigned()) throw ParseError("config." + key + ": expected a non-negative integer");
  }
  return value.get<T>();
}

Matrix pooled_latents(const std::vector<Matrix>& latents, const BinaryMask& observed) {
  std::size_t rows = 0;
  for (std::size_t v = 0; v < observed.cols(); ++v) rows += observed.col_count(v);
  Matrix out(static_cast<Eigen::Index>(rows), latents.front().cols());
  Eigen::Index r = 0;
  for (std::size_t v = 0; v < observed.cols(); ++v) {
    for (std::size_t i = 0; i < observed.rows(); ++i) {
      if (observed(i, v)) out.row(r++) = latents[v].row(static_cast<Eigen::Index>(i));
    }
  }
  return out;
}

/// Label of the sample stored at (row, view), using true_perm when present.
int label_of(const MultiViewDataset& ds, std::size_t view, std::size_t row) {
  const std::size_t instance = ds.true_perm.empty() ? row : ds.true_perm[view][row];
  return (*ds.labels)[instance];
}

void accumulate(LossReport& into, const LossReport& batch) {
  into.dar += batch.dar;
  into.sil_s += batch.sil_s;
  into.sil_v += batch.sil_v;
  into.ccl += batch.ccl;
  into.total += batch.total;
}

}  // namespace

void TrainConfig::validate() const {
  if (warmup_epochs > max_epochs) throw ArgumentError("config: warmup_epochs must not exceed max_epochs");
  if (!(tau_assign > 0.0) || !(tau_ccl > 0.0)) throw ArgumentError("config: temperatures must be positive");
  if (batch_size < 2) throw ArgumentError("config: batch_size must be at least 2");
  if (!(lr > 0.0)) throw ArgumentError("config: lr must be positive");
  if (k_impute == 0) throw ArgumentError("config: k_impute must be positive");
  if (!(lambda_sil >= 0.0) || !(lambda_ccl >= 0.0) || !(gamma >= 0.0)) {
    throw ArgumentError("config: loss weights must be non-negative");
  }
  if (latent_dim == 0 || adapt_width == 0) throw ArgumentError("config: layer widths must be positive");
}

NetworkSpec TrainConfig::network_spec(const std::vector<std::size_t>& view_dims) const {
  NetworkSpec spec;
  spec.view_dims = view_dims;
  spec.adapt_width = adapt_width;
  spec.encoder_hidden = encoder_hidden;
  spec.latent_dim = latent_dim;
  spec.tied_adaption_init = tied_adaption_init;
  return spec;
}

std::string TrainConfig::to_json() const {
  ordered_json j;
  j["warmup_epochs"] = warmup_epochs;
  j["max_epochs"] = max_epochs;
  j["batch_size"] = batch_size;
  j["lr"] = lr;
  j["lambda_sil"] = lambda_sil;
  j["lambda_ccl"] = lambda_ccl;
  j["gamma"] = gamma;
  j["tau_assign"] = tau_assign;
  j["tau_ccl"] = tau_ccl;
  j["k_impute"] = k_impute;
  j["K"] = K;
  j["seed"] = seed;
  j["checkpoint_every"] = checkpoint_every;
  j["adapt_width"] = adapt_width;
  j["encoder_hidden"] = encoder_hidden;
  j["latent_dim"] = latent_dim;
  j["tied_adaption_init"] = tied_adaption_init;
  j["final_restarts"] = final_restarts;
  j["eval_every"] = eval_every;
  j["eval_epochs"] = eval_epochs;
  return j.dump();
}

TrainConfig TrainConfig::from_json(std::string_view text, const TrainConfig& base) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("config: ") + e.what());
  }
  if (!j.is_object()) throw ParseError("config: expected a JSON object");
  TrainConfig c = base;
  for (const auto& item : j.items()) {
    const std::string& key = item.key();
    if (key == "warmup_epochs") c.warmup_epochs = read_key<std::size_t>(j, key);
    else if (key == "max_epochs") c.max_epochs = read_key<std::size_t>(j, key);
    else if (key == "batch_size") c.batch_size = read_key<std::size_t>(j, key);
    else if (key == "lr") c.lr = read_key<double>(j, key);
    else if (key == "lambda_sil") c.lambda_sil = read_key<double>(j, key);
    else if (key == "lambda_ccl") c.lambda_ccl = read_key<double>(j, key);
    else if (key == "gamma") c.gamma = read_key<double>(j, key);
    else if (key == "tau_assign") c.tau_assign = read_key<double>(j, key);
    else if (key == "tau_ccl") c.tau_ccl = read_key<double>(j, key);
    else if (key == "k_impute") c.k_impute = read_key<std::size_t>(j, key);
    else if (key == "K") c.K = read_key<std::size_t>(j, key);
    else if (key == "seed") c.seed = read_key<std::uint64_t>(j, key);
    else if (key == "checkpoint_every") c.checkpoint_every = read_key<std::size_t>(j, key);
    else if (key == "adapt_width") c.adapt_width = read_key<std::size_t>(j, key);
    else if (key == "encoder_hidden") c.encoder_hidden = read_key<std::vector<std::size_t>>(j, key);
    else if (key == "latent_dim") c.latent_dim = read_key<std::size_t>(j, key);
    else if (key == "tied_adaption_init") c.tied_adaption_init = read_key<bool>(j, key);
    else if (key == "final_restarts") c.final_restarts = read_key<std::size_t>(j, key);
    else if (key == "eval_every") c.eval_every = read_key<std::size_t>(j, key);
    else if (key == "eval_epochs") c.eval_epochs = read_key<std::vector<std::size_t>>(j, key);
    else throw ParseError("config." + key + ": unknown key");
  }
  return c;
}

TrainConfig TrainConfig::from_json(std::string_view text) { return from_json(text, TrainConfig{}); }

std::string TrainConfig::hash() const { return fnv1a_hex(to_json()); }

std::string EpochRecord::to_json() const {
  ordered_json j;
  j["epoch"] = epoch;
  j["dar"] = loss.dar;
  j["sil_s"] = loss.sil_s;
  j["sil_v"] = loss.sil_v;
  j["ccl"] = loss.ccl;
  j["total"] = loss.total;
  j["sil_active"] = sil_active;
  j["inertia"] = inertia ? ordered_json(*inertia) : ordered_json(nullptr);
  j["ccl_terms"] = ccl_terms;
  j["ccl_max_abs"] = ccl_max_abs;
  j["ccl_grad_max_abs"] = ccl_grad_max_abs;
  if (metrics) j["metrics"] = ordered_json::parse(metrics->to_json());
  return j.dump();
}

const EpochRecord* TrainHistory::at_epoch(std::size_t epoch) const {
  for (const auto& r : epochs) {
    if (r.epoch == epoch) return &r;
  }
  return nullptr;
}

std::size_t resolve_cluster_count(std::size_t explicit_k, const MultiViewDataset& ds) {
  if (explicit_k > 0) return explicit_k;
  if (ds.num_clusters) return *ds.num_clusters;
  if (ds.labels) return std::set<int>(ds.labels->begin(), ds.labels->end()).size();
  throw ArgumentError("cluster count unknown: set K in the config");
}

std::vector<Matrix> encode_views(const Model& model, const MultiViewDataset& ds) {
  const double nan = std::numeric_limits<double>::quiet_NaN();
  std::vector<Matrix> out;
  for (std::size_t v = 0; v < ds.num_views(); ++v) {
    std::vector<std::size_t> rows;
    for (std::size_t i = 0; i < ds.size(); ++i) {
      if (ds.observed(i, v)) rows.push_back(i);
    }
    Matrix x(static_cast<Eigen::Index>(rows.size()), ds.views[v].cols());
    for (std::size_t r = 0; r < rows.size(); ++r) x.row(static_cast<Eigen::Index>(r)) = ds.views[v].row(static_cast<Eigen::Index>(rows[r]));
    const Matrix z = model.encode(v, x);
    Matrix full = Matrix::Constant(static_cast<Eigen::Index>(ds.size()), static_cast<Eigen::Index>(model.latent_dim()), nan);
    for (std::size_t r = 0; r < rows.size(); ++r) full.row(static_cast<Eigen::Index>(rows[r])) = z.row(static_cast<Eigen::Index>(r));
    out.push_back(std::move(full));
  }
  return out;
}

EvalOptions eval_options(const TrainConfig& config) {
  EvalOptions o;
  o.K = config.K;
  o.k_impute = config.k_impute;
  o.restarts = config.final_restarts;
  o.seed = config.seed;
  return o;
}

EvaluationResult evaluate(const Model& model, const MultiViewDataset& ds, const EvalOptions& options) {
  const std::size_t k = resolve_cluster_count(options.K, ds);
  EvaluationResult out;
  const std::vector<Matrix> latents = encode_views(model, ds);

  out.imputations = impute(latents, ds.observed, options.k_impute);
  decode_imputations(model, out.imputations);
  out.realignments = realign(latents, ds.aligned, ds.observed);
  out.features = assemble_instance_features(latents, ds.observed, ds.aligned, out.imputations, out.realignments);

  KMeansOptions km;
  km.seed = mix_seed(options.seed, kFinalStream);
  const KMeansResult clusters = kmeans_restarts(out.features, k, options.restarts, km);
  out.predicted.assign(clusters.labels.begin(), clusters.labels.end());

  const Rates r = rates(ds);
  out.report.eta = r.eta;
  out.report.zeta = r.zeta;
  out.report.seed = options.seed;

  if (ds.labels) {
    const std::vector<int>& truth = *ds.labels;
    out.report.acc = clustering_accuracy(out.predicted, truth);
    out.report.nmi = normalized_mutual_info(out.predicted, truth);
    out.report.ari = adjusted_rand_index(out.predicted, truth);
    if (!out.realignments.empty() && !ds.true_perm.empty()) {
      std::vector<int> anchor, counterpart;
      for (const auto& ra : out.realignments) {
        anchor.push_back(label_of(ds, ra.anchor_view, ra.instance));
        counterpart.push_back(label_of(ds, ra.view, ra.counterpart));
      }
      out.report.car = category_alignment_rate(counterpart, anchor);
    }
  }
  if (!out.imputations.empty() && !ds.hidden.empty()) {
    std::vector<double> imputed, truth;
    for (const auto& imp : out.imputations) {
      const auto row = ds.hidden[imp.view].row(static_cast<Eigen::Index>(imp.instance));
      for (Eigen::Index c = 0; c < row.size(); ++c) {
        imputed.push_back(imp.sample[c]);
        truth.push_back(row[c]);
      }
    }
    out.report.nrmse = nrmse(imputed, truth);
  }
  return out;
}

double estimate_conditional_mi(const Model& model, const MultiViewDataset& ds, std::size_t K, double tau_assign,
                               std::uint64_t seed) {
  const std::vector<Matrix> latents = encode_views(model, ds);
  KMeansOptions km;
  km.seed = mix_seed(seed, kCenterStream);
  const KMeansResult clusters = kmeans(pooled_latents(latents, ds.observed), resolve_cluster_count(K, ds), km);
  const ClusterState state = assign_all(latents, ds.observed, clusters.centers, tau_assign);
  return conditional_mi_cluster_input(state.assignments.by_view());
}

TrainResult train(const MultiViewDataset& ds, const TrainConfig& config, const TrainOptions& options) {
  config.validate();
  validate(ds);
  const MultiViewDataset data = strip_truth(ds);
  const std::size_t n = data.size();
  const std::size_t k = resolve_cluster_count(config.K, ds);
  const NetworkSpec spec = config.network_spec(data.view_dims());

  TrainResult result;
  if (options.resume) {
    if (!(options.resume->model.spec() == spec)) throw ArgumentError("train: checkpoint does not match the configured network");
    result.model = options.resume->model;
    result.optimizer = options.resume->optimizer;
    result.epochs_done = options.resume->epochs_done;
  } else {
    result.model = Model(spec, config.seed);
    AdamConfig adam;
    adam.lr = config.lr;
    result.optimizer = AdamOptimizer(result.model.num_params(), adam);
  }

  std::ofstream history_out;
  if (options.run_dir) {
    std::filesystem::create_directories(*options.run_dir);
    history_out.open(*options.run_dir / "history.jsonl", result.epochs_done > 0 ? std::ios::app : std::ios::trunc);
  }

  const bool has_truth = ds.labels.has_value();
  const std::size_t stop = std::min(options.stop_after.value_or(config.max_epochs), config.max_epochs);
  Vector grad(static_cast<Eigen::Index>(result.model.num_params()));

  for (std::size_t epoch = result.epochs_done; epoch < stop; ++epoch) {
    EpochRecord record;
    record.epoch = epoch + 1;
    record.sil_active = epoch >= config.warmup_epochs;

    ObjectiveOptions objective;
    objective.weights = config.loss_weights();
    objective.tau_assign = config.tau_assign;
    objective.tau_ccl = config.tau_ccl;
    if (record.sil_active) {
      // Centers come from k-means on Z = f(X) at the start of the epoch and stay fixed.
      const std::vector<Matrix> latents = encode_views(result.model, data);
      KMeansOptions km;
      km.seed = mix_seed(mix_seed(config.seed, kCenterStream), epoch);
      const KMeansResult clusters = kmeans(pooled_latents(latents, data.observed), k, km);
      objective.centers = clusters.centers;
      record.inertia = clusters.inertia;
    } else {
      objective.terms.sil_s = false;
      objective.terms.sil_v = false;
      objective.weights.lambda_sil = 0.0;
    }

    RngStream order_rng(mix_seed(config.seed, kBatchStream), epoch);
    const std::vector<std::size_t> order = random_permutation(n, order_rng);
    std::vector<std::pair<std::size_t, std::size_t>> spans;
    for (std::size_t start = 0; start < n; start += config.batch_size) {
      spans.emplace_back(start, std::min(n, start + config.batch_size));
    }
    if (spans.size() > 1 && spans.back().second - spans.back().first < 2) {
      const auto tail = spans.back();
      spans.pop_back();
      spans.back().second = tail.second;
    }

    record.loss.weights = objective.weights;
    for (std::size_t b = 0; b < spans.size(); ++b) {
      const auto [lo, hi] = spans[b];
      const InstanceBatch batch = make_batch(data, std::span<const std::size_t>(order.data() + lo, hi - lo));
      grad.setZero();
      ObjectiveResult res;
      try {
        res = evaluate_objective(result.model, batch, objective, &grad);
        if (!grad.allFinite()) throw NumericError("non-finite gradient");
      } catch (const NumericError& e) {
        throw NumericError("training diverged at epoch " + std::to_string(epoch + 1) + ", batch " + std::to_string(b) +
                           ": " + e.what());
      }
      result.optimizer.step(result.model.params(), grad);
      accumulate(record.loss, res.report);
      record.ccl_terms += res.ccl_terms;
      record.ccl_max_abs = std::max(record.ccl_max_abs, std::abs(res.report.ccl));
      record.ccl_grad_max_abs = std::max(record.ccl_grad_max_abs, res.ccl_grad_max_abs);
    }
    const double nb = static_cast<double>(spans.size());
    record.loss.dar /= nb;
    record.loss.sil_s /= nb;
    record.loss.sil_v /= nb;
    record.loss.ccl /= nb;
    record.loss.total /= nb;
    result.epochs_done = epoch + 1;

    const bool listed = std::find(config.eval_epochs.begin(), config.eval_epochs.end(), record.epoch) != config.eval_epochs.end();
    const bool periodic = config.eval_every > 0 && record.epoch % config.eval_every == 0;
    if (has_truth && (listed || periodic)) {
      EvalOptions eo = eval_options(config);
      eo.K = k;
      record.metrics = evaluate(result.model, ds, eo).report;
      record.metrics->config_hash = config.hash();
    }

    if (history_out.is_open()) history_out << record.to_json() << '\n' << std::flush;
    if (options.run_dir && config.checkpoint_every > 0 && record.epoch % config.checkpoint_every == 0) {
      save_checkpoint(*options.run_dir / ("checkpoint_" + std::to_string(record.epoch) + ".json"), result.model,
                      result.optimizer, result.epochs_done);
    }
    if (options.on_epoch) options.on_epoch(record);
    result.history.epochs.push_back(std::move(record));
  }

  if (options.run_dir) save_checkpoint(*options.run_dir / "checkpoint.json", result.model, result.optimizer, result.epochs_done);
  return result;
}

}  // namespace smile
