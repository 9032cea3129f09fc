#include "smile/recovery.hpp"

#include <algorithm>
#include <numeric>
#include <string>

#include "smile/clustering.hpp"
#include "smile/errors.hpp"

namespace smile {
namespace {

std::vector<std::size_t> observed_rows(const BinaryMask& observed, std::size_t v) {
  std::vector<std::size_t> rows;
  for (std::size_t i = 0; i < observed.rows(); ++i) {
    if (observed(i, v)) rows.push_back(i);
  }
  return rows;
}

Matrix gather(const Matrix& z, const std::vector<std::size_t>& rows) {
  Matrix out(static_cast<Eigen::Index>(rows.size()), z.cols());
  for (std::size_t r = 0; r < rows.size(); ++r) out.row(static_cast<Eigen::Index>(r)) = z.row(static_cast<Eigen::Index>(rows[r]));
  return out;
}

std::size_t first_observed(const BinaryMask& observed, std::size_t i) {
  for (std::size_t v = 0; v < observed.cols(); ++v) {
    if (observed(i, v)) return v;
  }
  throw InvariantError("instance " + std::to_string(i) + " has no observed view");
}

}  // namespace

std::vector<std::size_t> nearest_rows(const Matrix& candidates_unit, const RowVector& query_unit, std::size_t k) {
  const Vector sims = candidates_unit * query_unit.transpose();
  std::vector<std::size_t> idx(static_cast<std::size_t>(sims.size()));
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  k = std::min(k, idx.size());
  auto closer = [&](std::size_t a, std::size_t b) {
    const double da = 1.0 - sims[static_cast<Eigen::Index>(a)], db = 1.0 - sims[static_cast<Eigen::Index>(b)];
    return da < db || (da == db && a < b);
  };
  std::partial_sort(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(k), idx.end(), closer);
  idx.resize(k);
  return idx;
}

std::vector<Imputation> impute(const std::vector<Matrix>& latents, const BinaryMask& observed, std::size_t k) {
  if (k == 0) throw ArgumentError("impute: k must be positive");
  const std::size_t n = observed.rows(), m = observed.cols();
  if (latents.size() != m) throw ArgumentError("impute: latents and mask disagree on view count");

  std::vector<Imputation> out;
  std::vector<Matrix> unit(m);
  std::vector<std::vector<std::size_t>> rows(m);
  for (std::size_t v = 0; v < m; ++v) {
    rows[v] = observed_rows(observed, v);
    if (!rows[v].empty()) unit[v] = normalize_rows(gather(latents[v], rows[v]));
  }

  for (std::size_t i = 0; i < n; ++i) {
    if (observed.row_count(i) == m) continue;
    const std::size_t q = first_observed(observed, i);
    RowVector query = latents[q].row(static_cast<Eigen::Index>(i));
    const double qn = query.norm();
    if (!(qn > 0.0)) throw NumericError("impute: zero-norm query latent at instance " + std::to_string(i));
    query /= qn;
    for (std::size_t v = 0; v < m; ++v) {
      if (observed(i, v)) continue;
      if (rows[v].size() < k) {
        throw ArgumentError("impute: view " + std::to_string(v) + " has fewer than k observed samples");
      }
      Imputation imp;
      imp.instance = i;
      imp.view = v;
      imp.query_view = q;
      imp.latent = Vector::Zero(latents[v].cols());
      for (std::size_t r : nearest_rows(unit[v], query, k)) {
        imp.neighbors.push_back(rows[v][r]);
        imp.latent += latents[v].row(static_cast<Eigen::Index>(rows[v][r])).transpose();
      }
      imp.latent /= static_cast<double>(k);
      out.push_back(std::move(imp));
    }
  }
  return out;
}

void decode_imputations(const Model& model, std::vector<Imputation>& imputations) {
  for (std::size_t v = 0; v < model.num_views(); ++v) {
    std::vector<std::size_t> which;
    for (std::size_t t = 0; t < imputations.size(); ++t) {
      if (imputations[t].view == v) which.push_back(t);
    }
    if (which.empty()) continue;
    Matrix z(static_cast<Eigen::Index>(which.size()), static_cast<Eigen::Index>(model.latent_dim()));
    for (std::size_t r = 0; r < which.size(); ++r) z.row(static_cast<Eigen::Index>(r)) = imputations[which[r]].latent.transpose();
    const Matrix x = model.decode(v, z);
    for (std::size_t r = 0; r < which.size(); ++r) imputations[which[r]].sample = x.row(static_cast<Eigen::Index>(r)).transpose();
  }
}

std::vector<Realignment> realign(const std::vector<Matrix>& latents, const std::vector<std::uint8_t>& aligned,
                                 const BinaryMask& observed) {
  const std::size_t n = observed.rows(), m = observed.cols();
  if (latents.size() != m || aligned.size() != n) throw ArgumentError("realign: shape mismatch");

  std::vector<std::vector<std::size_t>> pool(m);
  std::vector<Matrix> pool_unit(m);
  for (std::size_t v = 0; v < m; ++v) {
    for (std::size_t j = 0; j < n; ++j) {
      if (!aligned[j] && observed(j, v)) pool[v].push_back(j);
    }
    if (!pool[v].empty()) pool_unit[v] = normalize_rows(gather(latents[v], pool[v]));
  }

  std::vector<Realignment> out;
  for (std::size_t i = 0; i < n; ++i) {
    if (aligned[i]) continue;
    const std::size_t a = first_observed(observed, i);
    RowVector query = latents[a].row(static_cast<Eigen::Index>(i));
    const double qn = query.norm();
    if (!(qn > 0.0)) throw NumericError("realign: zero-norm anchor latent at instance " + std::to_string(i));
    query /= qn;
    for (std::size_t v = 0; v < m; ++v) {
      if (v == a || !observed(i, v)) continue;
      if (pool[v].empty()) throw ArgumentError("realign: empty candidate pool in view " + std::to_string(v));
      const std::size_t r = nearest_rows(pool_unit[v], query, 1).front();
      Realignment ra;
      ra.instance = i;
      ra.anchor_view = a;
      ra.view = v;
      ra.counterpart = pool[v][r];
      ra.distance = 1.0 - pool_unit[v].row(static_cast<Eigen::Index>(r)).dot(query);
      out.push_back(ra);
    }
  }
  return out;
}

Matrix assemble_instance_features(const std::vector<Matrix>& latents, const BinaryMask& observed,
                                  const std::vector<std::uint8_t>& aligned, const std::vector<Imputation>& imputations,
                                  const std::vector<Realignment>& realignments) {
  const std::size_t n = observed.rows(), m = observed.cols();
  if (latents.size() != m || m == 0) throw ArgumentError("assemble: latents and mask disagree on view count");
  const auto d = latents.front().cols();
  Matrix out(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(m) * d);
  BinaryMask filled(n, m);

  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t v = 0; v < m; ++v) {
      if (!observed(i, v)) continue;
      // Unaligned rows only own their anchor slot; the rest come from realignment.
      if (!aligned[i] && v != first_observed(observed, i)) continue;
      out.block(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(v) * d, 1, d) = latents[v].row(static_cast<Eigen::Index>(i));
      filled.set(i, v, true);
    }
  }
  for (const auto& ra : realignments) {
    out.block(static_cast<Eigen::Index>(ra.instance), static_cast<Eigen::Index>(ra.view) * d, 1, d) =
        latents[ra.view].row(static_cast<Eigen::Index>(ra.counterpart));
    filled.set(ra.instance, ra.view, true);
  }
  for (const auto& imp : imputations) {
    out.block(static_cast<Eigen::Index>(imp.instance), static_cast<Eigen::Index>(imp.view) * d, 1, d) = imp.latent.transpose();
    filled.set(imp.instance, imp.view, true);
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (filled.row_count(i) != m) throw InvariantError("assemble: unresolved slot for instance " + std::to_string(i));
  }
  return out;
}

}  // namespace smile
