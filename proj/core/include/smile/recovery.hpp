#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "smile/network.hpp"
#include "smile/types.hpp"

namespace smile {

// All functions take `latents[v]` as an N x d matrix holding the encoding of
// view v's row i; only rows with observed(i, v) are read. Distances are
// cosine distances (1 - cos); ties resolve to the lowest row index.

/// A recovered (instance, view) slot whose sample was never observed.
struct Imputation {
  std::size_t instance = 0;
  std::size_t view = 0;
  std::size_t query_view = 0;          // lowest-index observed view of the instance
  std::vector<std::size_t> neighbors;  // k nearest observed rows of `view`
  Vector latent;                       // mean of the neighbors' latents
  Vector sample;                       // decoder branch output; empty until decoded
};

/// Imputes every unobserved (i, v) by averaging the k observed view-v latents
/// nearest to z_i of the instance's query view.
std::vector<Imputation> impute(const std::vector<Matrix>& latents, const BinaryMask& observed, std::size_t k);

/// Fills Imputation::sample with g_v(latent).
void decode_imputations(const Model& model, std::vector<Imputation>& imputations);

/// Cross-view counterpart of an unaligned sample.
struct Realignment {
  std::size_t instance = 0;     // anchor row
  std::size_t anchor_view = 0;  // lowest-index observed view of the anchor row
  std::size_t view = 0;
  std::size_t counterpart = 0;  // row of `view` chosen as the counterpart
  double distance = 0.0;
};

/// For every unaligned row i and every other observed view v, picks the
/// nearest sample among the unaligned, observed rows of view v. Greedy per
/// query, so several anchors may share a counterpart.
std::vector<Realignment> realign(const std::vector<Matrix>& latents, const std::vector<std::uint8_t>& aligned,
                                 const BinaryMask& observed);

/// N x (M d) per-instance features: observed latents, realigned counterparts
/// for unaligned views, and imputed latents for missing views.
Matrix assemble_instance_features(const std::vector<Matrix>& latents, const BinaryMask& observed,
                                  const std::vector<std::uint8_t>& aligned, const std::vector<Imputation>& imputations,
                                  const std::vector<Realignment>& realignments);

/// Indices of the k rows of `candidates` nearest to `query` (cosine distance),
/// ordered by (distance, index).
std::vector<std::size_t> nearest_rows(const Matrix& candidates_unit, const RowVector& query_unit, std::size_t k);

}  // namespace smile
