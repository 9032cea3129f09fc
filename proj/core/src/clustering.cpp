#include "smile/clustering.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "smile/errors.hpp"
#include "smile/random.hpp"

namespace smile {
namespace {

constexpr std::uint64_t kSeedingStream = 0x6b6d7070;

Vector row_norms(const Matrix& z) {
  Vector norms = z.rowwise().norm();
  for (Eigen::Index r = 0; r < norms.size(); ++r) {
    if (!(norms[r] > 0.0) || !std::isfinite(norms[r])) {
      throw NumericError("zero-norm or non-finite latent row " + std::to_string(r));
    }
  }
  return norms;
}

/// Squared distance between unit vectors from their cosine.
double sphere_distance(double cosine) { return std::max(0.0, 2.0 - 2.0 * cosine); }

struct Assignment {
  std::vector<std::size_t> labels;
  std::vector<double> distances;
  double inertia = 0.0;
};

Assignment assign(const Matrix& x, const Matrix& centers) {
  const Matrix sims = x * centers.transpose();
  Assignment a;
  a.labels.resize(static_cast<std::size_t>(x.rows()));
  a.distances.resize(a.labels.size());
  for (Eigen::Index r = 0; r < sims.rows(); ++r) {
    Eigen::Index best = 0;
    for (Eigen::Index c = 1; c < sims.cols(); ++c) {
      if (sims(r, c) > sims(r, best)) best = c;
    }
    a.labels[static_cast<std::size_t>(r)] = static_cast<std::size_t>(best);
    const double d = sphere_distance(sims(r, best));
    a.distances[static_cast<std::size_t>(r)] = d;
    a.inertia += d;
  }
  return a;
}

}  // namespace

Matrix normalize_rows(const Matrix& z) {
  const Vector norms = row_norms(z);
  return norms.cwiseInverse().asDiagonal() * z;
}

Matrix kmeans_pp_init(const Matrix& z, std::size_t k, std::uint64_t seed) {
  const auto n = static_cast<std::size_t>(z.rows());
  if (k == 0) throw ArgumentError("kmeans++: K must be positive");
  if (n < k) throw ArgumentError("kmeans++: need at least K rows (" + std::to_string(n) + " < " + std::to_string(k) + ")");
  const Matrix x = normalize_rows(z);
  RngStream rng(seed, kSeedingStream);

  std::vector<std::size_t> chosen;
  std::vector<bool> taken(n, false);
  std::vector<double> d2(n, std::numeric_limits<double>::infinity());

  std::size_t first = rng.below(n);
  chosen.push_back(first);
  taken[first] = true;
  while (chosen.size() < k) {
    const auto last = x.row(static_cast<Eigen::Index>(chosen.back()));
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (taken[i]) {
        d2[i] = 0.0;
        continue;
      }
      d2[i] = std::min(d2[i], sphere_distance(x.row(static_cast<Eigen::Index>(i)).dot(last)));
      total += d2[i];
    }
    std::size_t pick = n;
    if (total > 0.0) {
      const double target = rng.uniform() * total;
      double acc = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        if (taken[i] || d2[i] <= 0.0) continue;
        acc += d2[i];
        pick = i;
        if (acc > target) break;
      }
    } else {
      // Only duplicates of existing seeds remain; take a uniform untaken index.
      std::vector<std::size_t> rest;
      for (std::size_t i = 0; i < n; ++i) {
        if (!taken[i]) rest.push_back(i);
      }
      pick = rest[rng.below(rest.size())];
    }
    chosen.push_back(pick);
    taken[pick] = true;
  }

  Matrix centers(static_cast<Eigen::Index>(k), x.cols());
  for (std::size_t c = 0; c < k; ++c) centers.row(static_cast<Eigen::Index>(c)) = x.row(static_cast<Eigen::Index>(chosen[c]));
  return centers;
}

KMeansResult kmeans(const Matrix& z, std::size_t k, const KMeansOptions& options) {
  const Matrix x = normalize_rows(z);
  Matrix centers = kmeans_pp_init(x, k, options.seed);
  const auto kk = static_cast<Eigen::Index>(k);

  KMeansResult result;
  double previous = std::numeric_limits<double>::infinity();
  const std::size_t max_iter = std::max<std::size_t>(1, options.max_iter);
  for (std::size_t iter = 0; iter < max_iter; ++iter) {
    Assignment a = assign(x, centers);
    result.inertia_trace.push_back(a.inertia);
    result.centers = centers;
    result.labels = a.labels;
    result.inertia = a.inertia;
    if (iter > 0 && previous - a.inertia <= options.tol * previous) break;
    previous = a.inertia;
    if (iter + 1 == max_iter) break;

    Matrix sums = Matrix::Zero(kk, x.cols());
    std::vector<std::size_t> counts(k, 0);
    for (std::size_t i = 0; i < a.labels.size(); ++i) {
      sums.row(static_cast<Eigen::Index>(a.labels[i])) += x.row(static_cast<Eigen::Index>(i));
      ++counts[a.labels[i]];
    }
    for (std::size_t c = 0; c < k; ++c) {
      const auto row = static_cast<Eigen::Index>(c);
      const double norm = sums.row(row).norm();
      if (counts[c] > 0 && norm > 0.0) {
        centers.row(row) = sums.row(row) / norm;
        continue;
      }
      // Empty (or cancelling) cluster: reseed at the point farthest from its center.
      std::size_t far = 0;
      for (std::size_t i = 1; i < a.distances.size(); ++i) {
        if (a.distances[i] > a.distances[far]) far = i;
      }
      centers.row(row) = x.row(static_cast<Eigen::Index>(far));
      a.distances[far] = 0.0;
    }
  }
  return result;
}

KMeansResult kmeans_restarts(const Matrix& z, std::size_t k, std::size_t restarts, const KMeansOptions& options) {
  KMeansResult best;
  bool have = false;
  for (std::size_t r = 0; r < std::max<std::size_t>(1, restarts); ++r) {
    KMeansOptions opt = options;
    opt.seed = mix_seed(options.seed, r);
    KMeansResult run = kmeans(z, k, opt);
    if (!have || run.inertia < best.inertia) {
      best = std::move(run);
      have = true;
    }
  }
  return best;
}

std::vector<std::size_t> nearest_center(const Matrix& z, const Matrix& centers) {
  return assign(normalize_rows(z), centers).labels;
}

Matrix soft_assign(const Matrix& z, const Matrix& centers, double tau) {
  if (!(tau > 0.0)) throw ArgumentError("soft_assign: tau must be positive");
  Matrix logits = normalize_rows(z) * centers.transpose() / tau;
  for (Eigen::Index r = 0; r < logits.rows(); ++r) {
    auto row = logits.row(r);
    row.array() = (row.array() - row.maxCoeff()).exp();
    row /= row.sum();
  }
  return logits;
}

Matrix soft_assign_backward(const Matrix& z, const Matrix& centers, double tau, const Matrix& c, const Matrix& d_c) {
  const Vector norms = row_norms(z);
  const Matrix unit = norms.cwiseInverse().asDiagonal() * z;
  // Softmax VJP, then the linear map to the unit vector, then the normalization.
  const Vector inner = (c.array() * d_c.array()).rowwise().sum();
  const Matrix d_logits = c.array() * (d_c.colwise() - inner).array();
  const Matrix d_unit = d_logits * centers / tau;
  const Vector radial = (unit.array() * d_unit.array()).rowwise().sum();
  const Matrix tangent = d_unit - radial.asDiagonal() * unit;
  return norms.cwiseInverse().asDiagonal() * tangent;
}

AssignmentTensor::AssignmentTensor(std::size_t n, std::size_t m, std::size_t k)
    : n_(n), m_(m), k_(k), data_(Matrix::Zero(static_cast<Eigen::Index>(n * m), static_cast<Eigen::Index>(k))), valid_(n, m) {}

void AssignmentTensor::set_row(std::size_t i, std::size_t v, const RowVector& probs) {
  data_.row(static_cast<Eigen::Index>(i * m_ + v)) = probs;
  valid_.set(i, v, true);
}

std::vector<Matrix> AssignmentTensor::by_view() const {
  std::vector<Matrix> out;
  for (std::size_t v = 0; v < m_; ++v) {
    Matrix block(static_cast<Eigen::Index>(valid_.col_count(v)), static_cast<Eigen::Index>(k_));
    Eigen::Index r = 0;
    for (std::size_t i = 0; i < n_; ++i) {
      if (valid_(i, v)) block.row(r++) = row(i, v);
    }
    out.push_back(std::move(block));
  }
  return out;
}

ClusterState assign_all(const std::vector<Matrix>& latents, const BinaryMask& observed, const Matrix& centers, double tau) {
  const std::size_t n = observed.rows(), m = observed.cols();
  ClusterState state;
  state.centers = centers;
  state.tau_assign = tau;
  state.assignments = AssignmentTensor(n, m, static_cast<std::size_t>(centers.rows()));
  for (std::size_t v = 0; v < m; ++v) {
    std::vector<std::size_t> rows;
    for (std::size_t i = 0; i < n; ++i) {
      if (observed(i, v)) rows.push_back(i);
    }
    Matrix z(static_cast<Eigen::Index>(rows.size()), latents[v].cols());
    for (std::size_t r = 0; r < rows.size(); ++r) z.row(static_cast<Eigen::Index>(r)) = latents[v].row(static_cast<Eigen::Index>(rows[r]));
    const Matrix c = soft_assign(z, centers, tau);
    for (std::size_t r = 0; r < rows.size(); ++r) state.assignments.set_row(rows[r], v, c.row(static_cast<Eigen::Index>(r)));
  }
  return state;
}

}  // namespace smile
