#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "smile/dataset.hpp"
#include "smile/losses.hpp"
#include "smile/network.hpp"

namespace smile {

/// A mini-batch of instances. All observed views of an instance travel together.
struct InstanceBatch {
  std::vector<std::size_t> instances;        // dataset row ids, batch order
  BinaryMask observed;                       // B x M
  std::vector<std::uint8_t> aligned;         // B
  std::vector<Matrix> inputs;                // per view: observed rows only, batch order
  std::vector<std::vector<std::size_t>> rows;  // per view: batch position of each input row

  std::size_t size() const { return instances.size(); }
};

InstanceBatch make_batch(const MultiViewDataset& ds, std::span<const std::size_t> instances);

/// Which components enter the objective.
struct LossTerms {
  bool dar = true;
  bool sil_s = true;
  bool sil_v = true;
  bool ccl = true;
};

struct ObjectiveOptions {
  LossWeights weights;
  LossTerms terms;
  double tau_assign = 0.1;
  double tau_ccl = 0.2;
  /// Cluster centers for the SIL terms (held constant). SIL is skipped when empty.
  Matrix centers;
};

struct ObjectiveResult {
  LossReport report;
  std::size_t ccl_terms = 0;
  /// max |d ccl / d z| before weighting; exactly 0 when there are no anchors.
  double ccl_grad_max_abs = 0.0;
};

/// Forward pass over the batch and, when `grad` is non-null, reverse
/// accumulation of the weighted total into `grad`. Disabled components
/// report 0.
ObjectiveResult evaluate_objective(const Model& model, const InstanceBatch& batch, const ObjectiveOptions& options,
                                   Vector* grad);

}  // namespace smile
