#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "smile/dataset.hpp"
#include "smile/trainer.hpp"
#include "smile/types.hpp"

namespace smile {

/// Plug-in mutual information of a T x V joint probability table, in nats.
/// Entries must be non-negative and sum to 1 within 1e-9.
double plugin_mi(const Matrix& joint);

enum class Scenario {
  complete,             // every view holds every instance
  permuted,             // views 1..M-1 shuffled independently
  stratified_missing,   // each view drops the same number of rows per category
  category_dependent,   // view 1 drops every row of category 1
};

Scenario parse_scenario(std::string_view name);
std::string_view scenario_name(Scenario scenario);

/// Empirical (category, view) joint induced by the scenario. Labels are
/// remapped to 0..T-1 in order of first appearance.
Matrix scenario_joint(std::span<const int> labels, std::size_t num_views, Scenario scenario, std::uint64_t seed,
                      double drop_rate = 0.5);

/// plugin_mi(scenario_joint(...)).
double verify_semantic_invariance(std::span<const int> labels, std::size_t num_views, Scenario scenario,
                                  std::uint64_t seed, double drop_rate = 0.5);

/// Spearman rank correlation with average ranks for ties; nullopt when
/// either side has zero variance or fewer than two points.
std::optional<double> spearman(std::span<const double> a, std::span<const double> b);

struct SweepRow {
  double lambda_sil = 0.0;
  double mi_cxv = 0.0;  // plug-in proxy H(C|V) - H(C|X) on the trained latents
  std::optional<double> acc;
  std::optional<double> car;
  std::optional<double> nrmse;
};

struct SweepResult {
  std::vector<SweepRow> rows;
  std::optional<double> rho_acc;
  std::optional<double> rho_car;
  std::optional<double> rho_nrmse;

  /// Columns lambda_sil, mi_cxv, acc, car, nrmse; absent values are empty cells.
  std::string to_csv() const;
  /// Correlations with null for undefined values, plus the estimator label.
  std::string summary_json() const;
};

/// Trains and evaluates once per config, then rank-correlates the estimated
/// I(C;X|V) with each metric across configs. Needs at least 3 configs.
SweepResult invariance_sweep(const MultiViewDataset& ds, const std::vector<TrainConfig>& configs);

}  // namespace smile
