#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "smile/types.hpp"

namespace smile {

/// Minimum-cost assignment on a square cost matrix; result[row] = column.
/// Among co-optimal assignments the lexicographically smallest is returned.
std::vector<std::size_t> hungarian(const Matrix& cost);

/// Clustering accuracy under the best one-to-one relabeling of `pred`.
double clustering_accuracy(std::span<const int> pred, std::span<const int> truth);
/// Normalized mutual information, arithmetic-mean normalization.
double normalized_mutual_info(std::span<const int> pred, std::span<const int> truth);
/// Adjusted Rand index (pair-counting form).
double adjusted_rand_index(std::span<const int> pred, std::span<const int> truth);
/// Fraction of realigned counterparts whose category equals the anchor's.
double category_alignment_rate(std::span<const int> counterpart_labels, std::span<const int> anchor_labels);
/// RMSE over all imputed cells divided by the range of the truth cells.
double nrmse(std::span<const double> imputed, std::span<const double> truth);

struct MetricsReport {
  std::optional<double> acc;
  std::optional<double> nmi;
  std::optional<double> ari;
  std::optional<double> car;
  std::optional<double> nrmse;

  std::optional<std::uint64_t> seed;
  std::string config_hash;
  double eta = 0.0;
  double zeta = 0.0;

  /// Flat JSON object; absent metrics are left out and named in "omitted".
  std::string to_json() const;
  static MetricsReport from_json(std::string_view text);

  bool operator==(const MetricsReport&) const = default;
};

/// 64-bit FNV-1a, hex encoded. Used to fingerprint configs.
std::string fnv1a_hex(std::string_view text);

}  // namespace smile
