#include "smile/objective.hpp"

#include <cmath>
#include <limits>

#include "smile/clustering.hpp"
#include "smile/errors.hpp"

namespace smile {

InstanceBatch make_batch(const MultiViewDataset& ds, std::span<const std::size_t> instances) {
  const std::size_t m = ds.num_views(), b = instances.size();
  InstanceBatch batch;
  batch.instances.assign(instances.begin(), instances.end());
  batch.observed = BinaryMask(b, m);
  batch.aligned.resize(b);
  batch.rows.resize(m);
  for (std::size_t p = 0; p < b; ++p) {
    const std::size_t i = instances[p];
    if (i >= ds.size()) throw ArgumentError("make_batch: instance index out of range");
    batch.aligned[p] = ds.aligned[i];
    for (std::size_t v = 0; v < m; ++v) {
      if (ds.observed(i, v)) {
        batch.observed.set(p, v, true);
        batch.rows[v].push_back(p);
      }
    }
  }
  for (std::size_t v = 0; v < m; ++v) {
    Matrix x(static_cast<Eigen::Index>(batch.rows[v].size()), ds.views[v].cols());
    for (std::size_t r = 0; r < batch.rows[v].size(); ++r) {
      x.row(static_cast<Eigen::Index>(r)) = ds.views[v].row(static_cast<Eigen::Index>(instances[batch.rows[v][r]]));
    }
    batch.inputs.push_back(std::move(x));
  }
  return batch;
}

ObjectiveResult evaluate_objective(const Model& model, const InstanceBatch& batch, const ObjectiveOptions& options,
                                   Vector* grad) {
  const std::size_t m = batch.inputs.size();
  const std::size_t d = model.latent_dim();
  if (m != model.num_views()) throw ArgumentError("objective: batch and model disagree on view count");

  const LossWeights& w = options.weights;
  const bool use_sil = (options.terms.sil_s || options.terms.sil_v) && options.centers.rows() > 0;

  ObjectiveResult result;
  LossReport& report = result.report;
  report.weights = w;

  std::vector<ForwardTrace> enc(m);
  std::vector<Matrix> latents(m), d_latents(m);
  for (std::size_t v = 0; v < m; ++v) {
    enc[v] = model.trace_encode(v, batch.inputs[v]);
    latents[v] = enc[v].output;
    d_latents[v] = Matrix::Zero(latents[v].rows(), latents[v].cols());
  }

  if (options.terms.dar) {
    std::vector<ForwardTrace> dec(m);
    std::vector<Matrix> recon(m);
    for (std::size_t v = 0; v < m; ++v) {
      dec[v] = model.trace_decode(v, latents[v]);
      recon[v] = dec[v].output;
    }
    const ViewGradient dar = loss_dar(batch.inputs, recon);
    report.dar = dar.value;
    if (grad) {
      for (std::size_t v = 0; v < m; ++v) d_latents[v] += model.backward(model.decoder_path(v), dec[v], dar.grad[v], *grad);
    }
  }

  if (use_sil) {
    std::vector<Matrix> c(m);
    for (std::size_t v = 0; v < m; ++v) c[v] = soft_assign(latents[v], options.centers, options.tau_assign);
    const SilTerms sil = loss_sil(c, w.gamma);
    report.sil_s = options.terms.sil_s ? sil.sil_s : 0.0;
    report.sil_v = options.terms.sil_v ? sil.sil_v : 0.0;
    if (grad) {
      const double ws = options.terms.sil_s ? w.lambda_sil : 0.0;
      const double wv = options.terms.sil_v ? w.lambda_sil * w.gamma : 0.0;
      const std::vector<Matrix> d_c = loss_sil_grad(c, ws, wv);
      for (std::size_t v = 0; v < m; ++v) {
        if (latents[v].rows() == 0) continue;
        d_latents[v] += soft_assign_backward(latents[v], options.centers, options.tau_assign, c[v], d_c[v]);
      }
    }
  }

  if (options.terms.ccl) {
    result.ccl_terms = ccl_anchor_count(batch.observed, batch.aligned);
    if (result.ccl_terms > 0) {
      const double nan = std::numeric_limits<double>::quiet_NaN();
      std::vector<Matrix> full(m);
      for (std::size_t v = 0; v < m; ++v) {
        full[v] = Matrix::Constant(static_cast<Eigen::Index>(batch.size()), static_cast<Eigen::Index>(d), nan);
        for (std::size_t r = 0; r < batch.rows[v].size(); ++r) {
          full[v].row(static_cast<Eigen::Index>(batch.rows[v][r])) = latents[v].row(static_cast<Eigen::Index>(r));
        }
      }
      const ViewGradient ccl = loss_ccl(full, batch.observed, batch.aligned, options.tau_ccl);
      report.ccl = ccl.value;
      for (std::size_t v = 0; v < m; ++v) {
        for (std::size_t r = 0; r < batch.rows[v].size(); ++r) {
          const auto g = ccl.grad[v].row(static_cast<Eigen::Index>(batch.rows[v][r]));
          result.ccl_grad_max_abs = std::max(result.ccl_grad_max_abs, g.cwiseAbs().maxCoeff());
          if (grad) d_latents[v].row(static_cast<Eigen::Index>(r)) += w.lambda_ccl * g;
        }
      }
    }
  }

  report.total = report.weighted_total();
  if (!std::isfinite(report.total)) throw NumericError("objective: non-finite total loss");

  if (grad) {
    for (std::size_t v = 0; v < m; ++v) {
      if (latents[v].rows() == 0) continue;
      model.backward(model.encoder_path(v), enc[v], d_latents[v], *grad);
    }
  }
  return result;
}

}  // namespace smile
