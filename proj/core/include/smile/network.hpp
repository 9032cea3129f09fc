#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "smile/types.hpp"

namespace smile {

enum class Activation { kLeakyRelu, kIdentity };

/// Shape of the shared-encoder / multi-branch-decoder network.
///
/// View v is encoded as adaption_v (D_v -> adapt_width), then the shared
/// stack adapt_width -> encoder_hidden... -> latent_dim. Decoder branch v
/// mirrors it: latent_dim -> reversed(encoder_hidden) -> adapt_width -> D_v.
/// Hidden layers use `hidden_activation`; latent and output layers are linear.
struct NetworkSpec {
  std::vector<std::size_t> view_dims;
  std::size_t adapt_width = 128;
  std::vector<std::size_t> encoder_hidden{128};
  std::size_t latent_dim = 32;
  Activation hidden_activation = Activation::kLeakyRelu;
  double leaky_slope = 0.2;
  /// Adaption layers of views with equal D_v start from identical weights,
  /// so the shared encoder is view-agnostic at initialization.
  bool tied_adaption_init = true;

  bool operator==(const NetworkSpec&) const = default;
};

/// Total parameter count implied by a spec, computed from the layer shapes.
std::size_t parameter_count(const NetworkSpec& spec);

/// One named slice of the flat parameter vector.
struct LayoutEntry {
  std::string component;  // "adaption.<v>", "encoder", "decoder.<v>"
  std::size_t layer = 0;
  std::string tensor;  // "weight" (in x out, row-major) or "bias"
  std::size_t offset = 0;
  std::size_t size = 0;

  std::string name() const { return component + "." + std::to_string(layer) + "." + tensor; }
};

struct AffineLayer {
  std::size_t in = 0;
  std::size_t out = 0;
  std::size_t weight_offset = 0;
  std::size_t bias_offset = 0;
  bool activated = false;
  std::string name;
};

/// Cached activations of one forward pass through a layer path.
struct ForwardTrace {
  std::vector<Matrix> inputs;        // input to each layer
  std::vector<Matrix> preactivations;
  Matrix output;
};

class Model {
 public:
  Model() = default;
  /// Weights uniform in +-1/sqrt(fan_in), biases zero.
  Model(NetworkSpec spec, std::uint64_t seed);

  const NetworkSpec& spec() const { return spec_; }
  std::uint64_t seed() const { return seed_; }
  std::size_t num_views() const { return spec_.view_dims.size(); }
  std::size_t latent_dim() const { return spec_.latent_dim; }

  Vector& params() { return params_; }
  const Vector& params() const { return params_; }
  std::size_t num_params() const { return static_cast<std::size_t>(params_.size()); }
  const std::vector<LayoutEntry>& layout() const { return layout_; }
  /// Layout entry containing flat index `index`.
  const LayoutEntry& entry_for(std::size_t index) const;

  const std::vector<AffineLayer>& encoder_path(std::size_t view) const { return encoder_paths_.at(view); }
  const std::vector<AffineLayer>& decoder_path(std::size_t view) const { return decoder_paths_.at(view); }

  /// Batch forward, one sample per row.
  Matrix encode(std::size_t view, const Matrix& x) const;
  Matrix decode(std::size_t view, const Matrix& z) const;
  Vector encode(std::size_t view, const Vector& x) const;
  Vector decode(std::size_t view, const Vector& z) const;

  ForwardTrace trace_encode(std::size_t view, const Matrix& x) const;
  ForwardTrace trace_decode(std::size_t view, const Matrix& z) const;

  /// Reverse pass: accumulates parameter gradients into `grad` and returns
  /// the gradient with respect to the path input.
  Matrix backward(const std::vector<AffineLayer>& path, const ForwardTrace& trace, const Matrix& d_output,
                  Vector& grad) const;

 private:
  ForwardTrace run(const std::vector<AffineLayer>& path, const Matrix& x) const;
  double slope(const AffineLayer& layer) const;

  NetworkSpec spec_;
  std::uint64_t seed_ = 0;
  Vector params_;
  std::vector<LayoutEntry> layout_;
  std::vector<std::vector<AffineLayer>> encoder_paths_;
  std::vector<std::vector<AffineLayer>> decoder_paths_;
};

/// Scalar objective of the parameters. Returns the value and adds its
/// gradient into `grad` (pre-sized and zeroed by the caller).
using LossClosure = std::function<double(const Model&, Vector& grad)>;

struct GradientResult {
  double value = 0.0;
  Vector grad;
};

/// Runs `loss` and returns its value and reverse-accumulated gradient.
/// Throws NumericError naming the first non-finite tensor.
GradientResult gradient(const Model& model, const LossClosure& loss);

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// Bias-corrected Adam.
class AdamOptimizer {
 public:
  AdamOptimizer() = default;
  AdamOptimizer(std::size_t num_params, AdamConfig config);

  void step(Vector& params, const Vector& grads);

  const AdamConfig& config() const { return config_; }
  std::uint64_t steps() const { return t_; }
  const Vector& first_moment() const { return m_; }
  const Vector& second_moment() const { return v_; }
  void restore(Vector m, Vector v, std::uint64_t t);

 private:
  AdamConfig config_;
  Vector m_;
  Vector v_;
  std::uint64_t t_ = 0;
};

}  // namespace smile
