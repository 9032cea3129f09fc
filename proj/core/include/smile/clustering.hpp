#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "smile/types.hpp"

namespace smile {

/// Rows scaled to unit l2 norm. Throws NumericError on a zero (or non-finite) row.
Matrix normalize_rows(const Matrix& z);

/// k-means++ seeding on the unit-normalized rows of `z`.
/// Returns K unit-norm centers taken from K distinct row indices.
Matrix kmeans_pp_init(const Matrix& z, std::size_t k, std::uint64_t seed);

struct KMeansResult {
  Matrix centers;                    // K x d, unit rows
  std::vector<std::size_t> labels;   // nearest center per row
  double inertia = 0.0;              // sum of squared distances on the sphere
  std::vector<double> inertia_trace; // one entry per assignment step
};

struct KMeansOptions {
  std::size_t max_iter = 100;
  double tol = 1e-6;  // relative inertia decrease
  std::uint64_t seed = 0;
};

/// Lloyd iterations on unit-normalized rows. Centers are re-normalized every
/// iteration; an empty cluster is reseeded at the point farthest from its center.
KMeansResult kmeans(const Matrix& z, std::size_t k, const KMeansOptions& options = {});

/// Best-inertia result over `restarts` independently seeded runs.
KMeansResult kmeans_restarts(const Matrix& z, std::size_t k, std::size_t restarts, const KMeansOptions& options = {});

/// Index of the most cosine-similar center per row; ties go to the lowest index.
std::vector<std::size_t> nearest_center(const Matrix& z, const Matrix& centers);

/// Temperature softmax of cosine similarity to each center.
Matrix soft_assign(const Matrix& z, const Matrix& centers, double tau);

/// Vector-Jacobian product of soft_assign with respect to `z`, given the
/// forward output `c` and the upstream gradient `d_c`. Centers are constants.
Matrix soft_assign_backward(const Matrix& z, const Matrix& centers, double tau, const Matrix& c, const Matrix& d_c);

/// Soft assignment tensor C (N x M x K). Rows of unobserved (i, v) are invalid.
class AssignmentTensor {
 public:
  AssignmentTensor() = default;
  AssignmentTensor(std::size_t n, std::size_t m, std::size_t k);

  std::size_t instances() const { return n_; }
  std::size_t views() const { return m_; }
  std::size_t clusters() const { return k_; }

  bool valid(std::size_t i, std::size_t v) const { return valid_(i, v); }
  auto row(std::size_t i, std::size_t v) const { return data_.row(static_cast<Eigen::Index>(i * m_ + v)); }
  void set_row(std::size_t i, std::size_t v, const RowVector& probs);

  /// Valid rows grouped by view, in instance order; the layout the estimators take.
  std::vector<Matrix> by_view() const;

 private:
  std::size_t n_ = 0, m_ = 0, k_ = 0;
  Matrix data_;
  BinaryMask valid_;
};

struct ClusterState {
  Matrix centers;
  AssignmentTensor assignments;
  double tau_assign = 0.1;
};

/// Soft-assigns every observed sample. `latents[v]` is N x d; only rows
/// with observed(i, v) are read.
ClusterState assign_all(const std::vector<Matrix>& latents, const BinaryMask& observed, const Matrix& centers, double tau);

}  // namespace smile
