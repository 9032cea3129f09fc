#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "smile/types.hpp"

namespace smile {

/// Trade-off weights of the overall objective.
struct LossWeights {
  double lambda_sil = 0.04;
  double gamma = 5.0;
  double lambda_ccl = 0.01;
};

/// Per-component batch losses and their weighted sum:
/// total = dar + lambda_sil * (sil_s + gamma * sil_v) + lambda_ccl * ccl.
struct LossReport {
  double dar = 0.0;
  double sil_s = 0.0;
  double sil_v = 0.0;
  double ccl = 0.0;
  double total = 0.0;
  LossWeights weights;

  double weighted_total() const {
    return dar + weights.lambda_sil * (sil_s + weights.gamma * sil_v) + weights.lambda_ccl * ccl;
  }
};

/// A scalar and its gradient with respect to a list of per-view matrices.
struct ViewGradient {
  double value = 0.0;
  std::vector<Matrix> grad;
};

// Information estimators. The assignment tensor is passed grouped by view:
// `c[v]` holds one row of K probabilities per observed sample of view v
// (unobserved samples have no row). Natural log, 0 ln 0 = 0, probabilities
// are clamped at 1e-12 inside logarithms.

/// H(C) with P(k) the mean assignment over all observed samples.
double entropy_marginal(const std::vector<Matrix>& c);
/// H(C|X) = -mean over observed samples of sum_k c ln c.
double entropy_conditional(const std::vector<Matrix>& c);
/// I(C;V) with P(v) = n_v / n and P(k|v) the mean assignment inside view v.
double mi_cluster_view(const std::vector<Matrix>& c);
/// H(C|V) = sum_v P(v) H(P(.|v)).
double entropy_given_view(const std::vector<Matrix>& c);
/// I(C;X|V) = H(C|V) - H(C|X), computed from per-view entropies.
double conditional_mi_cluster_input(const std::vector<Matrix>& c);

ViewGradient entropy_marginal_grad(const std::vector<Matrix>& c);
ViewGradient entropy_conditional_grad(const std::vector<Matrix>& c);
ViewGradient mi_cluster_view_grad(const std::vector<Matrix>& c);

struct SilTerms {
  double sil_s = 0.0;     // -H(C) + H(C|X)
  double sil_v = 0.0;     // I(C;V)
  double combined = 0.0;  // sil_s + gamma * sil_v
};
SilTerms loss_sil(const std::vector<Matrix>& c, double gamma);

/// Gradient of weight_s * sil_s + weight_v * sil_v with respect to c.
std::vector<Matrix> loss_sil_grad(const std::vector<Matrix>& c, double weight_s, double weight_v);

/// Mean squared reconstruction error over every observed (sample, feature)
/// cell, pooled across views. Gradient is with respect to `recon`.
ViewGradient loss_dar(const std::vector<Matrix>& x, const std::vector<Matrix>& recon);

/// Cross-view contrastive loss. `z[v]` is B x d for the batch instances;
/// rows with observed(i, v) == false are ignored. For every ordered view
/// pair (v1 != v2) and every anchor i with aligned[i] and both views
/// observed, the term is -ln(S_ii / (S_ii + sum_{j != i, observed in v2} S_ij))
/// with S = exp(cos / tau). Returns the mean over all terms, or 0 with a
/// zero gradient when no anchor exists. Gradient is with respect to `z`.
ViewGradient loss_ccl(const std::vector<Matrix>& z, const BinaryMask& observed, const std::vector<std::uint8_t>& aligned,
                      double tau);

/// Number of (ordered pair, anchor) terms loss_ccl would average over.
std::size_t ccl_anchor_count(const BinaryMask& observed, const std::vector<std::uint8_t>& aligned);

}  // namespace smile
