#include "smile/checkpoint.hpp"

#include <fstream>

#include <json.hpp>

#include "smile/errors.hpp"

namespace smile {
namespace {

using nlohmann::json;

json vector_to_json(const Vector& v) { return json(std::vector<double>(v.data(), v.data() + v.size())); }

Vector vector_from_json(const json& j) {
  const auto values = j.get<std::vector<double>>();
  return Eigen::Map<const Vector>(values.data(), static_cast<Eigen::Index>(values.size()));
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const Model& model, const AdamOptimizer& optimizer,
                     std::size_t epochs_done) {
  const NetworkSpec& spec = model.spec();
  json meta;
  meta["view_dims"] = spec.view_dims;
  meta["adapt_width"] = spec.adapt_width;
  meta["encoder_hidden"] = spec.encoder_hidden;
  meta["latent_dim"] = spec.latent_dim;
  meta["activation"] = spec.hidden_activation == Activation::kLeakyRelu ? "leaky_relu" : "identity";
  meta["leaky_slope"] = spec.leaky_slope;
  meta["tied_adaption_init"] = spec.tied_adaption_init;
  meta["seed"] = model.seed();
  meta["epochs_done"] = epochs_done;

  json opt;
  opt["m"] = vector_to_json(optimizer.first_moment());
  opt["v"] = vector_to_json(optimizer.second_moment());
  opt["t"] = optimizer.steps();
  opt["lr"] = optimizer.config().lr;
  opt["beta1"] = optimizer.config().beta1;
  opt["beta2"] = optimizer.config().beta2;
  opt["epsilon"] = optimizer.config().epsilon;

  json doc;
  doc["meta"] = meta;
  doc["params"] = vector_to_json(model.params());
  doc["optimizer"] = opt;

  std::ofstream out(path);
  if (!out) throw ParseError(path.string() + ": cannot open for writing");
  out << doc.dump() << '\n';
}

Checkpoint load_checkpoint(const std::filesystem::path& path, const std::optional<NetworkSpec>& expected) {
  std::ifstream in(path);
  if (!in) throw ParseError(path.string() + ": cannot open checkpoint");
  json doc;
  NetworkSpec spec;
  std::uint64_t seed = 0;
  Checkpoint ckpt;
  try {
    doc = json::parse(in);
    const json& meta = doc.at("meta");
    spec.view_dims = meta.at("view_dims").get<std::vector<std::size_t>>();
    spec.adapt_width = meta.at("adapt_width").get<std::size_t>();
    spec.encoder_hidden = meta.at("encoder_hidden").get<std::vector<std::size_t>>();
    spec.latent_dim = meta.at("latent_dim").get<std::size_t>();
    const auto act = meta.at("activation").get<std::string>();
    if (act != "leaky_relu" && act != "identity") throw ParseError(path.string() + ": unknown activation '" + act + "'");
    spec.hidden_activation = act == "leaky_relu" ? Activation::kLeakyRelu : Activation::kIdentity;
    spec.leaky_slope = meta.at("leaky_slope").get<double>();
    spec.tied_adaption_init = meta.at("tied_adaption_init").get<bool>();
    seed = meta.at("seed").get<std::uint64_t>();
    ckpt.epochs_done = meta.at("epochs_done").get<std::size_t>();
  } catch (const json::exception& e) {
    throw ParseError(path.string() + ": " + e.what());
  }

  if (expected && !(*expected == spec)) {
    throw ArgumentError(path.string() + ": checkpoint network spec does not match the configured model");
  }

  ckpt.model = Model(spec, seed);
  try {
    Vector params = vector_from_json(doc.at("params"));
    if (static_cast<std::size_t>(params.size()) != ckpt.model.num_params()) {
      throw ArgumentError(path.string() + ": parameter count does not match the network spec");
    }
    ckpt.model.params() = std::move(params);

    const json& opt = doc.at("optimizer");
    AdamConfig cfg;
    cfg.lr = opt.at("lr").get<double>();
    cfg.beta1 = opt.at("beta1").get<double>();
    cfg.beta2 = opt.at("beta2").get<double>();
    cfg.epsilon = opt.at("epsilon").get<double>();
    ckpt.optimizer = AdamOptimizer(ckpt.model.num_params(), cfg);
    ckpt.optimizer.restore(vector_from_json(opt.at("m")), vector_from_json(opt.at("v")), opt.at("t").get<std::uint64_t>());
  } catch (const json::exception& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
  return ckpt;
}

}  // namespace smile
