#include "smile/theorem_lab.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <map>
#include <numeric>

#include <json.hpp>

#include "smile/errors.hpp"
#include "smile/random.hpp"

namespace smile {
namespace {

std::vector<std::size_t> dense_labels(std::span<const int> labels, std::size_t& num_categories) {
  std::map<int, std::size_t> ids;
  std::vector<std::size_t> out;
  out.reserve(labels.size());
  for (int l : labels) {
    auto [it, inserted] = ids.try_emplace(l, ids.size());
    out.push_back(it->second);
  }
  num_categories = ids.size();
  return out;
}

std::vector<double> average_ranks(std::span<const double> x) {
  std::vector<std::size_t> order(x.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
  std::vector<double> ranks(x.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && x[order[j + 1]] == x[order[i]]) ++j;
    const double r = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t t = i; t <= j; ++t) ranks[order[t]] = r;
    i = j + 1;
  }
  return ranks;
}

std::string format_number(double x) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, end);
}

std::optional<double> correlate(const std::vector<SweepRow>& rows, std::optional<double> SweepRow::*field) {
  std::vector<double> mi, metric;
  for (const auto& r : rows) {
    if (!(r.*field)) return std::nullopt;
    mi.push_back(r.mi_cxv);
    metric.push_back(*(r.*field));
  }
  return spearman(mi, metric);
}

}  // namespace

double plugin_mi(const Matrix& joint) {
  if (joint.size() == 0) throw ArgumentError("plugin_mi: empty table");
  double total = 0.0;
  for (Eigen::Index i = 0; i < joint.size(); ++i) {
    const double p = joint.data()[i];
    if (!std::isfinite(p) || p < 0.0) throw ArgumentError("plugin_mi: entries must be finite and non-negative");
    total += p;
  }
  if (std::abs(total - 1.0) > 1e-9) throw ArgumentError("plugin_mi: entries must sum to 1");
  const Vector pt = joint.rowwise().sum();
  const RowVector pv = joint.colwise().sum();
  double mi = 0.0;
  for (Eigen::Index t = 0; t < joint.rows(); ++t) {
    for (Eigen::Index v = 0; v < joint.cols(); ++v) {
      const double p = joint(t, v);
      if (p > 0.0) mi += p * std::log(p / (pt[t] * pv[v]));
    }
  }
  // Rounding can push an independent table a few ulps below zero.
  return std::max(mi, 0.0);
}

Scenario parse_scenario(std::string_view name) {
  if (name == "complete") return Scenario::complete;
  if (name == "permuted") return Scenario::permuted;
  if (name == "stratified" || name == "stratified-missing") return Scenario::stratified_missing;
  if (name == "category-dependent") return Scenario::category_dependent;
  throw ArgumentError("unknown scenario '" + std::string(name) +
                      "' (expected complete, permuted, stratified, category-dependent)");
}

std::string_view scenario_name(Scenario scenario) {
  switch (scenario) {
    case Scenario::complete: return "complete";
    case Scenario::permuted: return "permuted";
    case Scenario::stratified_missing: return "stratified";
    case Scenario::category_dependent: return "category-dependent";
  }
  return "";
}

Matrix scenario_joint(std::span<const int> labels, std::size_t num_views, Scenario scenario, std::uint64_t seed,
                      double drop_rate) {
  if (labels.empty()) throw ArgumentError("scenario_joint: no labels");
  if (num_views < 2) throw ArgumentError("scenario_joint: need at least two views");
  if (!(drop_rate >= 0.0 && drop_rate < 1.0)) throw ArgumentError("scenario_joint: drop_rate must be in [0, 1)");
  std::size_t t_count = 0;
  const std::vector<std::size_t> base = dense_labels(labels, t_count);
  const std::size_t n = base.size();

  // Per view: the category of each sample that view holds.
  std::vector<std::vector<std::size_t>> held(num_views, base);
  switch (scenario) {
    case Scenario::complete:
      break;
    case Scenario::permuted:
      for (std::size_t v = 1; v < num_views; ++v) {
        RngStream rng(seed, v);
        rng.shuffle(held[v]);
      }
      break;
    case Scenario::stratified_missing: {
      std::vector<std::vector<std::size_t>> by_category(t_count);
      for (std::size_t i = 0; i < n; ++i) by_category[base[i]].push_back(i);
      for (std::size_t v = 0; v < num_views; ++v) {
        RngStream rng(seed, v);
        std::vector<std::size_t> kept;
        for (std::size_t t = 0; t < t_count; ++t) {
          std::vector<std::size_t> rows = by_category[t];
          rng.shuffle(rows);
          const auto drop = static_cast<std::size_t>(std::floor(drop_rate * static_cast<double>(rows.size()) /
                                                                static_cast<double>(num_views)));
          for (std::size_t r = drop; r < rows.size(); ++r) kept.push_back(base[rows[r]]);
        }
        held[v] = std::move(kept);
      }
      break;
    }
    case Scenario::category_dependent: {
      if (t_count < 2) throw ArgumentError("scenario_joint: category-dependent control needs two categories");
      std::vector<std::size_t> kept;
      for (std::size_t t : held[1]) {
        if (t != 1) kept.push_back(t);
      }
      held[1] = std::move(kept);
      break;
    }
  }

  Matrix joint = Matrix::Zero(static_cast<Eigen::Index>(t_count), static_cast<Eigen::Index>(num_views));
  double total = 0.0;
  for (std::size_t v = 0; v < num_views; ++v) {
    for (std::size_t t : held[v]) joint(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(v)) += 1.0;
    total += static_cast<double>(held[v].size());
  }
  return joint / total;
}

double verify_semantic_invariance(std::span<const int> labels, std::size_t num_views, Scenario scenario,
                                  std::uint64_t seed, double drop_rate) {
  return plugin_mi(scenario_joint(labels, num_views, scenario, seed, drop_rate));
}

std::optional<double> spearman(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw ArgumentError("spearman: length mismatch");
  if (a.size() < 2) return std::nullopt;
  const std::vector<double> ra = average_ranks(a);
  const std::vector<double> rb = average_ranks(b);
  const double n = static_cast<double>(a.size());
  const double ma = std::accumulate(ra.begin(), ra.end(), 0.0) / n;
  const double mb = std::accumulate(rb.begin(), rb.end(), 0.0) / n;
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < ra.size(); ++i) {
    sab += (ra[i] - ma) * (rb[i] - mb);
    saa += (ra[i] - ma) * (ra[i] - ma);
    sbb += (rb[i] - mb) * (rb[i] - mb);
  }
  if (saa == 0.0 || sbb == 0.0) return std::nullopt;
  return sab / std::sqrt(saa * sbb);
}

std::string SweepResult::to_csv() const {
  std::string out = "lambda_sil,mi_cxv,acc,car,nrmse\n";
  auto cell = [](const std::optional<double>& x) { return x ? format_number(*x) : std::string(); };
  for (const auto& r : rows) {
    out += format_number(r.lambda_sil) + ',' + format_number(r.mi_cxv) + ',' + cell(r.acc) + ',' + cell(r.car) + ',' +
           cell(r.nrmse) + '\n';
  }
  return out;
}

std::string SweepResult::summary_json() const {
  nlohmann::ordered_json j;
  auto value = [](const std::optional<double>& x) { return x ? nlohmann::ordered_json(*x) : nlohmann::ordered_json(nullptr); };
  j["mi_cxv_estimator"] = "plug-in proxy H(C|V) - H(C|X) on soft assignments to fresh k-means centers";
  j["configs"] = rows.size();
  j["spearman_mi_acc"] = value(rho_acc);
  j["spearman_mi_car"] = value(rho_car);
  j["spearman_mi_nrmse"] = value(rho_nrmse);
  return j.dump(2);
}

SweepResult invariance_sweep(const MultiViewDataset& ds, const std::vector<TrainConfig>& configs) {
  if (configs.size() < 3) throw ArgumentError("invariance_sweep: need at least 3 configs");
  SweepResult result;
  for (const auto& config : configs) {
    const TrainResult trained = train(ds, config);
    const EvaluationResult eval = evaluate(trained.model, ds, eval_options(config));
    SweepRow row;
    row.lambda_sil = config.lambda_sil;
    row.mi_cxv = estimate_conditional_mi(trained.model, ds, resolve_cluster_count(config.K, ds), config.tau_assign,
                                         config.seed);
    row.acc = eval.report.acc;
    row.car = eval.report.car;
    row.nrmse = eval.report.nrmse;
    result.rows.push_back(row);
  }
  result.rho_acc = correlate(result.rows, &SweepRow::acc);
  result.rho_car = correlate(result.rows, &SweepRow::car);
  result.rho_nrmse = correlate(result.rows, &SweepRow::nrmse);
  return result;
}

}  // namespace smile
