#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "smile/objective.hpp"

namespace smile {

struct GradCheckOptions {
  std::size_t batch = 16;
  double h = 1e-5;
  /// Relative error is |a - n| / max(|a|, |n|, floor).
  double floor = 1e-4;
  /// Batches whose smallest |pre-activation| at a LeakyReLU falls below this are redrawn.
  double kink_margin = 1e-4;
  /// Batches with a latent row shorter than this are redrawn: l2 normalization is singular at 0.
  double norm_margin = 1.0;
  /// The latent layer is scaled up by this and the first decoder layer down by
  /// it, so latents sit away from the origin while reconstructions keep their scale.
  double latent_scale = 10.0;
  /// Std of the latent-layer bias, which moves the whole batch off the origin.
  double latent_offset = 2.0;
};

struct GradCheckEntry {
  std::string component;  // dar, sil_s, sil_v, ccl, total
  std::uint64_t seed = 0;
  std::size_t params = 0;
  double max_rel_error = 0.0;
  std::string worst_tensor;
};

/// Reverse-mode vs. central-difference gradients of every loss component on
/// a random partially corrupted batch drawn from `seed`.
std::vector<GradCheckEntry> gradcheck(std::uint64_t seed, const GradCheckOptions& options = {});

/// A random batch plus objective settings, small enough for finite differences.
struct GradCheckProblem {
  Model model;
  InstanceBatch batch;
  ObjectiveOptions objective;
};
GradCheckProblem make_gradcheck_problem(std::uint64_t seed, const GradCheckOptions& options = {});

/// The objective restricted to one component name, or all of them for "total".
ObjectiveOptions restrict_to(const ObjectiveOptions& base, const std::string& component);

}  // namespace smile
