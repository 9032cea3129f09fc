#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>

#include "smile/network.hpp"

namespace smile {

struct Checkpoint {
  Model model;
  AdamOptimizer optimizer;
  std::size_t epochs_done = 0;
};

/// Writes {meta, params, optimizer} as a JSON object.
void save_checkpoint(const std::filesystem::path& path, const Model& model, const AdamOptimizer& optimizer,
                     std::size_t epochs_done);

/// Reads a checkpoint. When `expected` is given, a checkpoint whose network
/// spec differs is rejected with ArgumentError.
Checkpoint load_checkpoint(const std::filesystem::path& path, const std::optional<NetworkSpec>& expected = std::nullopt);

}  // namespace smile
