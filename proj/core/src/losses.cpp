#include "smile/losses.hpp"

#include <algorithm>
#include <cmath>

#include "smile/clustering.hpp"
#include "smile/errors.hpp"

namespace smile {
namespace {

constexpr double kProbFloor = 1e-12;

double safe_log(double p) { return std::log(std::max(p, kProbFloor)); }

std::size_t total_rows(const std::vector<Matrix>& c) {
  std::size_t n = 0;
  for (const auto& block : c) n += static_cast<std::size_t>(block.rows());
  return n;
}

Eigen::Index cluster_count(const std::vector<Matrix>& c) {
  for (const auto& block : c) {
    if (block.cols() > 0) return block.cols();
  }
  return 0;
}

/// P(k) = mean over all observed samples.
RowVector marginal(const std::vector<Matrix>& c) {
  RowVector p = RowVector::Zero(cluster_count(c));
  const auto n = static_cast<double>(total_rows(c));
  if (n == 0) return p;
  for (const auto& block : c) {
    if (block.rows() > 0) p += block.colwise().sum();
  }
  return p / n;
}

double entropy(const RowVector& p) {
  double h = 0.0;
  for (Eigen::Index k = 0; k < p.size(); ++k) h -= p[k] * safe_log(p[k]);
  return h;
}

std::vector<Matrix> zeros_like(const std::vector<Matrix>& c) {
  std::vector<Matrix> out;
  for (const auto& block : c) out.push_back(Matrix::Zero(block.rows(), block.cols()));
  return out;
}

}  // namespace

double entropy_marginal(const std::vector<Matrix>& c) { return entropy(marginal(c)); }

double entropy_conditional(const std::vector<Matrix>& c) {
  const auto n = static_cast<double>(total_rows(c));
  if (n == 0) return 0.0;
  double acc = 0.0;
  for (const auto& block : c) {
    for (Eigen::Index r = 0; r < block.rows(); ++r) {
      for (Eigen::Index k = 0; k < block.cols(); ++k) acc -= block(r, k) * safe_log(block(r, k));
    }
  }
  return acc / n;
}

double mi_cluster_view(const std::vector<Matrix>& c) {
  const auto n = static_cast<double>(total_rows(c));
  if (n == 0) return 0.0;
  const RowVector pk = marginal(c);
  double mi = 0.0;
  for (const auto& block : c) {
    if (block.rows() == 0) continue;
    const double pv = static_cast<double>(block.rows()) / n;
    const RowVector pkv = block.colwise().mean();
    for (Eigen::Index k = 0; k < pkv.size(); ++k) {
      if (pkv[k] > 0.0) mi += pv * pkv[k] * (safe_log(pkv[k]) - safe_log(pk[k]));
    }
  }
  return mi;
}

double entropy_given_view(const std::vector<Matrix>& c) {
  const auto n = static_cast<double>(total_rows(c));
  if (n == 0) return 0.0;
  double h = 0.0;
  for (const auto& block : c) {
    if (block.rows() == 0) continue;
    h += static_cast<double>(block.rows()) / n * entropy(block.colwise().mean());
  }
  return h;
}

double conditional_mi_cluster_input(const std::vector<Matrix>& c) { return entropy_given_view(c) - entropy_conditional(c); }

ViewGradient entropy_marginal_grad(const std::vector<Matrix>& c) {
  ViewGradient out;
  const RowVector pk = marginal(c);
  out.value = entropy(pk);
  out.grad = zeros_like(c);
  const auto n = static_cast<double>(total_rows(c));
  if (n == 0) return out;
  RowVector d(pk.size());
  for (Eigen::Index k = 0; k < pk.size(); ++k) d[k] = -(safe_log(pk[k]) + 1.0) / n;
  for (auto& g : out.grad) g.rowwise() = d;
  return out;
}

ViewGradient entropy_conditional_grad(const std::vector<Matrix>& c) {
  ViewGradient out;
  out.value = entropy_conditional(c);
  out.grad = zeros_like(c);
  const auto n = static_cast<double>(total_rows(c));
  if (n == 0) return out;
  for (std::size_t v = 0; v < c.size(); ++v) {
    out.grad[v] = c[v].unaryExpr([n](double p) { return -(safe_log(p) + 1.0) / n; });
  }
  return out;
}

ViewGradient mi_cluster_view_grad(const std::vector<Matrix>& c) {
  ViewGradient out;
  out.value = mi_cluster_view(c);
  out.grad = zeros_like(c);
  const auto n = static_cast<double>(total_rows(c));
  if (n == 0) return out;
  const RowVector pk = marginal(c);
  for (std::size_t v = 0; v < c.size(); ++v) {
    if (c[v].rows() == 0) continue;
    const RowVector pkv = c[v].colwise().mean();
    RowVector d(pk.size());
    for (Eigen::Index k = 0; k < pk.size(); ++k) d[k] = (safe_log(pkv[k]) - safe_log(pk[k])) / n;
    out.grad[v].rowwise() = d;
  }
  return out;
}

SilTerms loss_sil(const std::vector<Matrix>& c, double gamma) {
  SilTerms t;
  t.sil_s = -entropy_marginal(c) + entropy_conditional(c);
  t.sil_v = mi_cluster_view(c);
  t.combined = t.sil_s + gamma * t.sil_v;
  return t;
}

std::vector<Matrix> loss_sil_grad(const std::vector<Matrix>& c, double weight_s, double weight_v) {
  const ViewGradient hc = entropy_marginal_grad(c);
  const ViewGradient hcx = entropy_conditional_grad(c);
  const ViewGradient icv = mi_cluster_view_grad(c);
  std::vector<Matrix> g = zeros_like(c);
  for (std::size_t v = 0; v < c.size(); ++v) {
    g[v] = weight_s * (hcx.grad[v] - hc.grad[v]) + weight_v * icv.grad[v];
  }
  return g;
}

ViewGradient loss_dar(const std::vector<Matrix>& x, const std::vector<Matrix>& recon) {
  if (x.size() != recon.size()) throw ArgumentError("loss_dar: view count mismatch");
  ViewGradient out;
  double cells = 0.0, sq = 0.0;
  for (std::size_t v = 0; v < x.size(); ++v) {
    if (x[v].rows() != recon[v].rows() || x[v].cols() != recon[v].cols()) throw ArgumentError("loss_dar: shape mismatch");
    cells += static_cast<double>(x[v].size());
    sq += (recon[v] - x[v]).squaredNorm();
  }
  out.value = cells > 0 ? sq / cells : 0.0;
  for (std::size_t v = 0; v < x.size(); ++v) {
    out.grad.push_back(cells > 0 ? Matrix(2.0 * (recon[v] - x[v]) / cells) : Matrix::Zero(x[v].rows(), x[v].cols()));
  }
  return out;
}

std::size_t ccl_anchor_count(const BinaryMask& observed, const std::vector<std::uint8_t>& aligned) {
  std::size_t count = 0;
  for (std::size_t i = 0; i < observed.rows(); ++i) {
    if (!aligned[i]) continue;
    const std::size_t seen = observed.row_count(i);
    count += seen * (seen - 1);
  }
  return count;
}

ViewGradient loss_ccl(const std::vector<Matrix>& z, const BinaryMask& observed, const std::vector<std::uint8_t>& aligned,
                      double tau) {
  if (!(tau > 0.0)) throw ArgumentError("loss_ccl: tau must be positive");
  const std::size_t b = observed.rows(), m = observed.cols();
  if (z.size() != m || aligned.size() != b) throw ArgumentError("loss_ccl: shape mismatch");

  ViewGradient out;
  for (const auto& zv : z) out.grad.push_back(Matrix::Zero(zv.rows(), zv.cols()));
  const std::size_t terms = ccl_anchor_count(observed, aligned);
  if (terms == 0) return out;

  // Unit rows and norms of every observed sample, per view.
  std::vector<std::vector<std::size_t>> rows(m);
  std::vector<Matrix> unit(m);
  std::vector<Vector> norms(m);
  for (std::size_t v = 0; v < m; ++v) {
    for (std::size_t i = 0; i < b; ++i) {
      if (observed(i, v)) rows[v].push_back(i);
    }
    Matrix zv(static_cast<Eigen::Index>(rows[v].size()), z[v].cols());
    for (std::size_t r = 0; r < rows[v].size(); ++r) zv.row(static_cast<Eigen::Index>(r)) = z[v].row(static_cast<Eigen::Index>(rows[v][r]));
    if (zv.rows() > 0) {
      norms[v] = zv.rowwise().norm();
      unit[v] = normalize_rows(zv);
    }
  }

  const double inv_terms = 1.0 / static_cast<double>(terms);
  std::vector<Matrix> d_unit(m);
  for (std::size_t v = 0; v < m; ++v) d_unit[v] = Matrix::Zero(unit[v].rows(), unit[v].cols());

  double total = 0.0;
  for (std::size_t v1 = 0; v1 < m; ++v1) {
    for (std::size_t v2 = 0; v2 < m; ++v2) {
      if (v1 == v2) continue;
      // Anchor rows in v1 and the column of their positive among v2's observed rows.
      std::vector<Eigen::Index> anchor_row, positive_col;
      for (std::size_t r1 = 0; r1 < rows[v1].size(); ++r1) {
        const std::size_t i = rows[v1][r1];
        if (!aligned[i] || !observed(i, v2)) continue;
        const auto it = std::lower_bound(rows[v2].begin(), rows[v2].end(), i);
        anchor_row.push_back(static_cast<Eigen::Index>(r1));
        positive_col.push_back(static_cast<Eigen::Index>(it - rows[v2].begin()));
      }
      if (anchor_row.empty()) continue;
      Matrix anchors(static_cast<Eigen::Index>(anchor_row.size()), unit[v1].cols());
      for (std::size_t a = 0; a < anchor_row.size(); ++a) anchors.row(static_cast<Eigen::Index>(a)) = unit[v1].row(anchor_row[a]);

      Matrix logits = anchors * unit[v2].transpose() / tau;
      Matrix d_logits(logits.rows(), logits.cols());
      for (Eigen::Index a = 0; a < logits.rows(); ++a) {
        const double mx = logits.row(a).maxCoeff();
        const RowVector e = (logits.row(a).array() - mx).exp();
        const double sum = e.sum();
        total += mx + std::log(sum) - logits(a, positive_col[static_cast<std::size_t>(a)]);
        d_logits.row(a) = e / sum;
        d_logits(a, positive_col[static_cast<std::size_t>(a)]) -= 1.0;
      }
      d_logits *= inv_terms / tau;
      const Matrix d_anchors = d_logits * unit[v2];
      for (std::size_t a = 0; a < anchor_row.size(); ++a) d_unit[v1].row(anchor_row[a]) += d_anchors.row(static_cast<Eigen::Index>(a));
      d_unit[v2] += d_logits.transpose() * anchors;
    }
  }
  out.value = total * inv_terms;

  for (std::size_t v = 0; v < m; ++v) {
    for (std::size_t r = 0; r < rows[v].size(); ++r) {
      const auto rr = static_cast<Eigen::Index>(r);
      const RowVector u = unit[v].row(rr);
      const RowVector du = d_unit[v].row(rr);
      out.grad[v].row(static_cast<Eigen::Index>(rows[v][r])) = (du - u.dot(du) * u) / norms[v][rr];
    }
  }
  return out;
}

}  // namespace smile
