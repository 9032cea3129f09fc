#include "smile/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "smile/dataset.hpp"
#include "smile/errors.hpp"
#include "smile/random.hpp"

namespace smile {
namespace {

struct Margins {
  double kink = std::numeric_limits<double>::infinity();
  double norm = std::numeric_limits<double>::infinity();
};

Margins singularity_margins(const Model& model, const InstanceBatch& batch) {
  Margins out;
  double& margin = out.kink;
  auto scan = [&](const std::vector<AffineLayer>& path, const ForwardTrace& trace) {
    for (std::size_t l = 0; l < path.size(); ++l) {
      if (path[l].activated && trace.preactivations[l].size() > 0) {
        margin = std::min(margin, trace.preactivations[l].cwiseAbs().minCoeff());
      }
    }
  };
  for (std::size_t v = 0; v < model.num_views(); ++v) {
    if (batch.inputs[v].rows() == 0) continue;
    const ForwardTrace enc = model.trace_encode(v, batch.inputs[v]);
    scan(model.encoder_path(v), enc);
    scan(model.decoder_path(v), model.trace_decode(v, enc.output));
    out.norm = std::min(out.norm, enc.output.rowwise().norm().minCoeff());
  }
  return out;
}

}  // namespace

ObjectiveOptions restrict_to(const ObjectiveOptions& base, const std::string& component) {
  ObjectiveOptions o = base;
  if (component == "total") return o;
  o.terms = {false, false, false, false};
  o.weights = {1.0, 1.0, 1.0};
  if (component == "dar") o.terms.dar = true;
  else if (component == "sil_s") o.terms.sil_s = true;
  else if (component == "sil_v") o.terms.sil_v = true;
  else if (component == "ccl") o.terms.ccl = true;
  else throw ArgumentError("unknown loss component '" + component + "'");
  return o;
}

GradCheckProblem make_gradcheck_problem(std::uint64_t seed, const GradCheckOptions& options) {
  if (options.batch < 4) throw ArgumentError("gradcheck: batch must hold at least 4 instances");
  NetworkSpec spec;
  spec.view_dims = {6, 5};
  spec.adapt_width = 7;
  spec.encoder_hidden = {6};
  spec.latent_dim = 4;
  constexpr std::size_t k = 3;

  SyntheticSpec data_spec;
  data_spec.n = 4 * options.batch;
  data_spec.k = k;
  data_spec.d_latent = 3;
  data_spec.d_views = spec.view_dims;
  data_spec.seed = seed;
  const MultiViewDataset ds = corrupt(make_synthetic(data_spec), {0.25, 0.25, std::nullopt, mix_seed(seed, 1)});

  for (std::uint64_t attempt = 0; attempt < 1000; ++attempt) {
    RngStream rng(mix_seed(seed, 2), attempt);
    std::vector<std::size_t> ids = random_permutation(ds.size(), rng);
    ids.resize(options.batch);
    GradCheckProblem p;
    p.model = Model(spec, mix_seed(seed, attempt));
    for (const auto& e : p.model.layout()) {
      auto block = p.model.params().segment(static_cast<Eigen::Index>(e.offset), static_cast<Eigen::Index>(e.size));
      if (e.component == "encoder" && e.layer == spec.encoder_hidden.size()) {
        if (e.tensor == "weight") block *= options.latent_scale;
        else for (auto& b : block) b = options.latent_offset * rng.normal();
      }
      if (e.component.rfind("decoder.", 0) == 0 && e.layer == 0 && e.tensor == "weight") block /= options.latent_scale;
    }
    p.batch = make_batch(ds, ids);
    if (ccl_anchor_count(p.batch.observed, p.batch.aligned) == 0) continue;
    const Margins margins = singularity_margins(p.model, p.batch);
    if (margins.kink < options.kink_margin || margins.norm < options.norm_margin) continue;
    p.objective.tau_assign = 0.1;
    p.objective.tau_ccl = 0.2;
    p.objective.weights = {0.04, 5.0, 0.01};
    p.objective.centers = Matrix(k, spec.latent_dim);
    for (Eigen::Index i = 0; i < p.objective.centers.size(); ++i) p.objective.centers.data()[i] = rng.normal();
    return p;
  }
  throw NumericError("gradcheck: no batch clear of activation kinks and zero-norm latents");
}

std::vector<GradCheckEntry> gradcheck(std::uint64_t seed, const GradCheckOptions& options) {
  GradCheckProblem problem = make_gradcheck_problem(seed, options);
  std::vector<GradCheckEntry> out;
  for (const std::string component : {"dar", "sil_s", "sil_v", "ccl", "total"}) {
    const ObjectiveOptions objective = restrict_to(problem.objective, component);
    Model model = problem.model;
    Vector analytic = Vector::Zero(static_cast<Eigen::Index>(model.num_params()));
    evaluate_objective(model, problem.batch, objective, &analytic);

    GradCheckEntry entry;
    entry.component = component;
    entry.seed = seed;
    entry.params = model.num_params();
    for (std::size_t i = 0; i < model.num_params(); ++i) {
      const auto idx = static_cast<Eigen::Index>(i);
      const double saved = model.params()[idx];
      model.params()[idx] = saved + options.h;
      const double up = evaluate_objective(model, problem.batch, objective, nullptr).report.total;
      model.params()[idx] = saved - options.h;
      const double down = evaluate_objective(model, problem.batch, objective, nullptr).report.total;
      model.params()[idx] = saved;
      const double numeric = (up - down) / (2.0 * options.h);
      const double a = analytic[idx];
      const double rel = std::abs(a - numeric) / std::max({std::abs(a), std::abs(numeric), options.floor});
      if (rel > entry.max_rel_error || entry.worst_tensor.empty()) {
        entry.max_rel_error = rel;
        entry.worst_tensor = model.entry_for(i).name();
      }
    }
    out.push_back(entry);
  }
  return out;
}

}  // namespace smile
