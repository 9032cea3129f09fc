#include "smile/network.hpp"

#include <algorithm>
#include <cmath>

#include "smile/errors.hpp"
#include "smile/random.hpp"

namespace smile {
namespace {

using ConstWeights = Eigen::Map<const Matrix>;
using Weights = Eigen::Map<Matrix>;

constexpr std::uint64_t kInitStream = 0x696e6974;

/// (in, out, activated) for each layer of the encoder / decoder stacks.
struct Shape {
  std::size_t in;
  std::size_t out;
  bool activated;
};

std::vector<Shape> shared_encoder_shapes(const NetworkSpec& spec) {
  std::vector<Shape> shapes;
  std::size_t width = spec.adapt_width;
  for (std::size_t h : spec.encoder_hidden) {
    shapes.push_back({width, h, true});
    width = h;
  }
  shapes.push_back({width, spec.latent_dim, false});
  return shapes;
}

std::vector<Shape> decoder_shapes(const NetworkSpec& spec, std::size_t view_dim) {
  std::vector<Shape> shapes;
  std::size_t width = spec.latent_dim;
  for (auto it = spec.encoder_hidden.rbegin(); it != spec.encoder_hidden.rend(); ++it) {
    shapes.push_back({width, *it, true});
    width = *it;
  }
  shapes.push_back({width, spec.adapt_width, true});
  shapes.push_back({spec.adapt_width, view_dim, false});
  return shapes;
}

void check_spec(const NetworkSpec& spec) {
  if (spec.view_dims.empty()) throw ArgumentError("network: need at least one view");
  if (spec.adapt_width == 0 || spec.latent_dim == 0) throw ArgumentError("network: widths must be positive");
  for (auto d : spec.view_dims) {
    if (d == 0) throw ArgumentError("network: view dims must be positive");
  }
  for (auto h : spec.encoder_hidden) {
    if (h == 0) throw ArgumentError("network: hidden widths must be positive");
  }
}

void check_finite(const Matrix& x, const std::string& what) {
  if (!x.allFinite()) throw NumericError("non-finite values in " + what);
}

}  // namespace

std::size_t parameter_count(const NetworkSpec& spec) {
  auto count = [](const Shape& s) { return s.in * s.out + s.out; };
  std::size_t total = 0;
  for (auto d : spec.view_dims) total += count({d, spec.adapt_width, true});
  for (const auto& s : shared_encoder_shapes(spec)) total += count(s);
  for (auto d : spec.view_dims) {
    for (const auto& s : decoder_shapes(spec, d)) total += count(s);
  }
  return total;
}

Model::Model(NetworkSpec spec, std::uint64_t seed) : spec_(std::move(spec)), seed_(seed) {
  check_spec(spec_);
  std::size_t offset = 0;
  auto add_layer = [&](const std::string& component, std::size_t index, const Shape& s) {
    AffineLayer layer;
    layer.in = s.in;
    layer.out = s.out;
    layer.activated = s.activated;
    layer.name = component + "." + std::to_string(index);
    layer.weight_offset = offset;
    layout_.push_back({component, index, "weight", offset, s.in * s.out});
    offset += s.in * s.out;
    layer.bias_offset = offset;
    layout_.push_back({component, index, "bias", offset, s.out});
    offset += s.out;
    return layer;
  };

  const std::size_t m = spec_.view_dims.size();
  std::vector<AffineLayer> adaption;
  for (std::size_t v = 0; v < m; ++v) {
    adaption.push_back(add_layer("adaption." + std::to_string(v), 0, {spec_.view_dims[v], spec_.adapt_width, true}));
  }
  std::vector<AffineLayer> shared;
  const auto enc_shapes = shared_encoder_shapes(spec_);
  for (std::size_t l = 0; l < enc_shapes.size(); ++l) shared.push_back(add_layer("encoder", l, enc_shapes[l]));
  for (std::size_t v = 0; v < m; ++v) {
    std::vector<AffineLayer> path{adaption[v]};
    path.insert(path.end(), shared.begin(), shared.end());
    encoder_paths_.push_back(std::move(path));
  }
  for (std::size_t v = 0; v < m; ++v) {
    std::vector<AffineLayer> path;
    const auto shapes = decoder_shapes(spec_, spec_.view_dims[v]);
    for (std::size_t l = 0; l < shapes.size(); ++l) path.push_back(add_layer("decoder." + std::to_string(v), l, shapes[l]));
    decoder_paths_.push_back(std::move(path));
  }

  params_ = Vector::Zero(static_cast<Eigen::Index>(offset));
  const CounterRng rng(seed_, kInitStream);
  auto init = [&](const AffineLayer& layer) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(layer.in));
    for (std::size_t j = 0; j < layer.in * layer.out; ++j) {
      const std::size_t idx = layer.weight_offset + j;
      params_[static_cast<Eigen::Index>(idx)] = bound * (2.0 * rng.uniform(idx) - 1.0);
    }
  };
  for (const auto& layer : adaption) {
    if (!spec_.tied_adaption_init) {
      init(layer);
      continue;
    }
    // Draws are keyed by input width and in-layer index only.
    const CounterRng tied = rng.substream(layer.in);
    const double bound = 1.0 / std::sqrt(static_cast<double>(layer.in));
    for (std::size_t j = 0; j < layer.in * layer.out; ++j) {
      params_[static_cast<Eigen::Index>(layer.weight_offset + j)] = bound * (2.0 * tied.uniform(j) - 1.0);
    }
  }
  for (const auto& layer : shared) init(layer);
  for (const auto& path : decoder_paths_) {
    for (const auto& layer : path) init(layer);
  }
}

const LayoutEntry& Model::entry_for(std::size_t index) const {
  auto it = std::upper_bound(layout_.begin(), layout_.end(), index,
                             [](std::size_t idx, const LayoutEntry& e) { return idx < e.offset; });
  if (it == layout_.begin() || index >= num_params()) throw ArgumentError("network: parameter index out of range");
  return *(it - 1);
}

double Model::slope(const AffineLayer& layer) const {
  if (!layer.activated || spec_.hidden_activation == Activation::kIdentity) return 1.0;
  return spec_.leaky_slope;
}

ForwardTrace Model::run(const std::vector<AffineLayer>& path, const Matrix& x) const {
  ForwardTrace trace;
  trace.inputs.reserve(path.size());
  trace.preactivations.reserve(path.size());
  Matrix current = x;
  for (const auto& layer : path) {
    if (static_cast<std::size_t>(current.cols()) != layer.in) {
      throw ArgumentError("network: " + layer.name + " expects width " + std::to_string(layer.in) + ", got " +
                          std::to_string(current.cols()));
    }
    ConstWeights w(params_.data() + layer.weight_offset, static_cast<Eigen::Index>(layer.in),
                   static_cast<Eigen::Index>(layer.out));
    Eigen::Map<const RowVector> b(params_.data() + layer.bias_offset, static_cast<Eigen::Index>(layer.out));
    Matrix pre = current * w;
    pre.rowwise() += b;
    check_finite(pre, layer.name + " pre-activation");
    trace.inputs.push_back(std::move(current));
    const double s = slope(layer);
    if (s != 1.0) {
      current = pre.unaryExpr([s](double u) { return u > 0.0 ? u : s * u; });
    } else {
      current = pre;
    }
    trace.preactivations.push_back(std::move(pre));
  }
  trace.output = std::move(current);
  return trace;
}

ForwardTrace Model::trace_encode(std::size_t view, const Matrix& x) const {
  check_finite(x, "encoder input (view " + std::to_string(view) + ")");
  return run(encoder_path(view), x);
}

ForwardTrace Model::trace_decode(std::size_t view, const Matrix& z) const {
  check_finite(z, "decoder input (view " + std::to_string(view) + ")");
  return run(decoder_path(view), z);
}

Matrix Model::encode(std::size_t view, const Matrix& x) const { return trace_encode(view, x).output; }
Matrix Model::decode(std::size_t view, const Matrix& z) const { return trace_decode(view, z).output; }

Vector Model::encode(std::size_t view, const Vector& x) const {
  Matrix row = x.transpose();
  return encode(view, row).row(0).transpose();
}

Vector Model::decode(std::size_t view, const Vector& z) const {
  Matrix row = z.transpose();
  return decode(view, row).row(0).transpose();
}

Matrix Model::backward(const std::vector<AffineLayer>& path, const ForwardTrace& trace, const Matrix& d_output,
                       Vector& grad) const {
  if (grad.size() != params_.size()) throw ArgumentError("network: gradient vector has wrong length");
  Matrix delta = d_output;
  for (std::size_t l = path.size(); l-- > 0;) {
    const AffineLayer& layer = path[l];
    const double s = slope(layer);
    if (s != 1.0) {
      const Matrix& pre = trace.preactivations[l];
      delta = (pre.array() > 0.0).select(delta, s * delta);
    }
    Weights dw(grad.data() + layer.weight_offset, static_cast<Eigen::Index>(layer.in),
               static_cast<Eigen::Index>(layer.out));
    Eigen::Map<RowVector> db(grad.data() + layer.bias_offset, static_cast<Eigen::Index>(layer.out));
    dw.noalias() += trace.inputs[l].transpose() * delta;
    db += delta.colwise().sum();
    ConstWeights w(params_.data() + layer.weight_offset, static_cast<Eigen::Index>(layer.in),
                   static_cast<Eigen::Index>(layer.out));
    delta = delta * w.transpose();
  }
  return delta;
}

GradientResult gradient(const Model& model, const LossClosure& loss) {
  GradientResult result;
  result.grad = Vector::Zero(static_cast<Eigen::Index>(model.num_params()));
  result.value = loss(model, result.grad);
  if (!std::isfinite(result.value)) throw NumericError("loss value is not finite");
  for (Eigen::Index i = 0; i < result.grad.size(); ++i) {
    if (!std::isfinite(result.grad[i])) {
      throw NumericError("non-finite gradient in " + model.entry_for(static_cast<std::size_t>(i)).name());
    }
  }
  return result;
}

AdamOptimizer::AdamOptimizer(std::size_t num_params, AdamConfig config)
    : config_(config),
      m_(Vector::Zero(static_cast<Eigen::Index>(num_params))),
      v_(Vector::Zero(static_cast<Eigen::Index>(num_params))) {}

void AdamOptimizer::step(Vector& params, const Vector& grads) {
  if (params.size() != m_.size() || grads.size() != m_.size()) throw ArgumentError("adam: shape mismatch");
  ++t_;
  const double b1 = config_.beta1, b2 = config_.beta2;
  m_ = b1 * m_ + (1.0 - b1) * grads;
  v_ = b2 * v_ + (1.0 - b2) * grads.cwiseProduct(grads);
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(t_));
  const double lr = config_.lr, eps = config_.epsilon;
  params.array() -= lr * (m_.array() / c1) / ((v_.array() / c2).sqrt() + eps);
}

void AdamOptimizer::restore(Vector m, Vector v, std::uint64_t t) {
  if (m.size() != m_.size() || v.size() != v_.size()) throw ArgumentError("adam: restored moments have wrong length");
  m_ = std::move(m);
  v_ = std::move(v);
  t_ = t;
}

}  // namespace smile
