#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <utility>
#include <vector>

#include "smile/types.hpp"

namespace smile {

/// Multi-view data with incomplete instances and correspondences.
///
/// Row i of every view belongs to instance i, except for unaligned rows
/// (aligned[i] == 0), where views 1..M-1 hold some other instance's sample.
/// Unobserved cells (observed(i, v) == false) are stored as NaN and must
/// never be read by training code.
///
/// labels, true_perm and hidden are evaluation-only ground truth.
struct MultiViewDataset {
  std::vector<Matrix> views;          // M matrices, N x D_v
  BinaryMask observed;                // E, N x M
  std::vector<std::uint8_t> aligned;  // A, N

  std::optional<std::vector<int>> labels;  // category of instance i (view-0 ordering)
  // true_perm[v][r] = original instance whose view-v sample sits in row r.
  // Identity on aligned rows. Empty when unknown.
  std::vector<std::vector<std::size_t>> true_perm;
  // hidden[v] row i holds the dropped sample of (i, v); NaN elsewhere. Empty when unknown.
  std::vector<Matrix> hidden;
  std::optional<std::size_t> num_clusters;

  std::size_t size() const { return observed.rows(); }
  std::size_t num_views() const { return views.size(); }
  std::size_t view_dim(std::size_t v) const { return static_cast<std::size_t>(views[v].cols()); }
  std::vector<std::size_t> view_dims() const;

  bool has_truth() const { return labels.has_value() || !true_perm.empty() || !hidden.empty(); }
  /// Lowest-index observed view of instance i.
  std::size_t first_observed_view(std::size_t i) const;
  /// No instance is both aligned and observed in at least two views.
  bool fully_incomplete() const;
};

/// Parameters for the synthetic blob generator.
struct SyntheticSpec {
  std::size_t n = 2000;
  std::size_t k = 4;
  std::size_t d_latent = 8;
  std::vector<std::size_t> d_views{20, 20};
  double noise = 0.1;
  /// Per-coordinate std of the latent cluster centers.
  double separation = 3.0;
  /// Per-coordinate std of instances around their center.
  double spread = 1.0;
  /// Size ratio of the largest to the smallest category; sizes grow linearly
  /// with the category id. 1 gives balanced categories.
  double imbalance = 1.0;
  /// Correlation between the per-view maps: map_v = sqrt(c) A + sqrt(1 - c) B_v
  /// with A shared. Needs equal view dims when positive.
  double map_correlation = 0.0;
  std::uint64_t seed = 0;
};

struct CorruptionSpec {
  double eta = 0.0;   // missing rate
  double zeta = 0.0;  // unaligned rate
  std::optional<double> rho;  // unpaired rate; overrides eta = zeta = rho / 2
  std::uint64_t seed = 0;

  double missing_rate() const { return rho ? *rho / 2.0 : eta; }
  double unaligned_rate() const { return rho ? *rho / 2.0 : zeta; }
};

MultiViewDataset make_synthetic(const SyntheticSpec& spec);
/// Category sizes used by make_synthetic; each is at least 1 and they sum to n.
std::vector<std::size_t> category_sizes(std::size_t n, std::size_t k, double imbalance);
MultiViewDataset make_synthetic(std::size_t n, std::size_t k, std::size_t d_latent,
                                const std::vector<std::size_t>& d_views, double noise, std::uint64_t seed);

/// Applies unaligned shuffling and instance-level view dropping to disjoint
/// random instance subsets. Requires a complete dataset.
MultiViewDataset corrupt(const MultiViewDataset& ds, const CorruptionSpec& spec);

/// Round-half-up of rate * n.
std::size_t rate_count(double rate, std::size_t n);

struct Rates {
  double eta = 0.0;
  double zeta = 0.0;
};
Rates rates(const MultiViewDataset& ds);

/// Throws InvariantError describing the first violated dataset invariant.
void validate(const MultiViewDataset& ds);

/// Copy with labels, true_perm and hidden removed.
MultiViewDataset strip_truth(const MultiViewDataset& ds);

/// Field-by-field equality that treats NaN cells as equal to NaN.
bool structurally_equal(const MultiViewDataset& a, const MultiViewDataset& b);

void save_dataset(const MultiViewDataset& ds, const std::filesystem::path& dir);
/// Loads the view and mask files; ground-truth files are optional.
MultiViewDataset load_dataset(const std::filesystem::path& dir, bool with_truth = true);

}  // namespace smile
