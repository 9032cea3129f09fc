#include "smile/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <string>

#include "smile/errors.hpp"
#include "smile/random.hpp"

namespace smile {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

enum Stream : std::uint64_t {
  kCenters = 1,
  kMaps = 2,
  kLatents = 3,
  kNoise = 4,
  kSubsets = 11,
  kShuffle = 12,
  kDrop = 13,
};

bool nan_aware_equal(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) return false;
  for (Eigen::Index r = 0; r < a.rows(); ++r) {
    for (Eigen::Index c = 0; c < a.cols(); ++c) {
      const double x = a(r, c), y = b(r, c);
      if (std::isnan(x) != std::isnan(y)) return false;
      if (!std::isnan(x) && x != y) return false;
    }
  }
  return true;
}

bool is_complete(const MultiViewDataset& ds) {
  for (std::size_t i = 0; i < ds.size(); ++i) {
    if (!ds.aligned[i] || ds.observed.row_count(i) != ds.num_views()) return false;
  }
  return true;
}

}  // namespace

std::vector<std::size_t> MultiViewDataset::view_dims() const {
  std::vector<std::size_t> dims;
  for (const auto& v : views) dims.push_back(static_cast<std::size_t>(v.cols()));
  return dims;
}

std::size_t MultiViewDataset::first_observed_view(std::size_t i) const {
  for (std::size_t v = 0; v < num_views(); ++v) {
    if (observed(i, v)) return v;
  }
  throw InvariantError("instance " + std::to_string(i) + " has no observed view");
}

bool MultiViewDataset::fully_incomplete() const {
  for (std::size_t i = 0; i < size(); ++i) {
    if (aligned[i] && observed.row_count(i) >= 2) return false;
  }
  return true;
}

std::size_t rate_count(double rate, std::size_t n) {
  return static_cast<std::size_t>(std::floor(rate * static_cast<double>(n) + 0.5));
}

MultiViewDataset make_synthetic(std::size_t n, std::size_t k, std::size_t d_latent,
                                const std::vector<std::size_t>& d_views, double noise, std::uint64_t seed) {
  SyntheticSpec spec;
  spec.n = n;
  spec.k = k;
  spec.d_latent = d_latent;
  spec.d_views = d_views;
  spec.noise = noise;
  spec.seed = seed;
  return make_synthetic(spec);
}

std::vector<std::size_t> category_sizes(std::size_t n, std::size_t k, double imbalance) {
  if (k == 0 || n < k) throw ArgumentError("category_sizes: need n >= k >= 1");
  // Largest remainder on linear weights; an empty category borrows from the largest.
  std::vector<double> weight(k);
  for (std::size_t c = 0; c < k; ++c) {
    weight[c] = k == 1 ? 1.0 : 1.0 + (imbalance - 1.0) * static_cast<double>(c) / static_cast<double>(k - 1);
  }
  const double total = std::accumulate(weight.begin(), weight.end(), 0.0);
  std::vector<std::size_t> sizes(k, 0);
  std::vector<std::pair<double, std::size_t>> remainders;
  std::size_t used = 0;
  for (std::size_t c = 0; c < k; ++c) {
    const double exact = static_cast<double>(n) * weight[c] / total;
    const auto whole = static_cast<std::size_t>(std::floor(exact));
    sizes[c] = whole;
    used += whole;
    remainders.emplace_back(-(exact - static_cast<double>(whole)), c);
  }
  std::sort(remainders.begin(), remainders.end());
  for (std::size_t r = 0; used < n; ++r, ++used) ++sizes[remainders[r].second];
  for (auto& s : sizes) {
    if (s > 0) continue;
    --*std::max_element(sizes.begin(), sizes.end());
    s = 1;
  }
  return sizes;
}

namespace {

std::vector<int> category_sequence(std::size_t n, std::size_t k, double imbalance) {
  // Interleaves categories so every prefix tracks the target proportions;
  // balanced sizes give i % k.
  const std::vector<std::size_t> sizes = category_sizes(n, k, imbalance);
  std::vector<std::size_t> count(k, 0);
  std::vector<int> labels(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t best = k;
    double best_deficit = -std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < k; ++c) {
      if (count[c] == sizes[c]) continue;
      const double deficit = static_cast<double>(sizes[c]) * static_cast<double>(i + 1) / static_cast<double>(n) -
                             static_cast<double>(count[c]);
      if (deficit > best_deficit) {
        best_deficit = deficit;
        best = c;
      }
    }
    labels[i] = static_cast<int>(best);
    ++count[best];
  }
  return labels;
}

}  // namespace

MultiViewDataset make_synthetic(const SyntheticSpec& spec) {
  if (spec.k < 2 || spec.n < spec.k) throw ArgumentError("make_synthetic: need n >= k >= 2");
  if (spec.d_latent < 1 || spec.d_views.empty()) throw ArgumentError("make_synthetic: need d_latent >= 1 and at least one view");
  for (auto d : spec.d_views) {
    if (d < 1) throw ArgumentError("make_synthetic: view dims must be >= 1");
  }
  if (!(spec.noise >= 0.0) || !(spec.separation >= 0.0) || !(spec.spread >= 0.0)) {
    throw ArgumentError("make_synthetic: noise, separation and spread must be >= 0");
  }
  if (!(spec.map_correlation >= 0.0 && spec.map_correlation <= 1.0)) {
    throw ArgumentError("make_synthetic: map_correlation must be in [0, 1]");
  }
  if (spec.map_correlation > 0.0 &&
      std::adjacent_find(spec.d_views.begin(), spec.d_views.end(), std::not_equal_to<>()) != spec.d_views.end()) {
    throw ArgumentError("make_synthetic: correlated maps need equal view dims");
  }
  if (!(spec.imbalance >= 1.0) || !std::isfinite(spec.imbalance)) throw ArgumentError("make_synthetic: imbalance must be >= 1");

  const std::size_t n = spec.n, k = spec.k, dl = spec.d_latent, m = spec.d_views.size();
  const CounterRng root(spec.seed);

  // Centers: redraw a few times and keep the best-separated set.
  Matrix centers(k, dl);
  {
    const double wanted = 0.5 * spec.separation * std::sqrt(2.0 * static_cast<double>(dl));
    double best = -1.0;
    for (std::uint64_t attempt = 0; attempt < 100 && best < wanted; ++attempt) {
      const CounterRng rng = root.substream(kCenters).substream(attempt);
      Matrix cand(k, dl);
      for (std::size_t c = 0; c < k; ++c) {
        for (std::size_t j = 0; j < dl; ++j) cand(c, j) = spec.separation * rng.normal(c * dl + j);
      }
      double closest = std::numeric_limits<double>::infinity();
      for (std::size_t a = 0; a < k; ++a) {
        for (std::size_t b = a + 1; b < k; ++b) closest = std::min(closest, (cand.row(a) - cand.row(b)).norm());
      }
      if (closest > best) {
        best = closest;
        centers = cand;
      }
    }
  }

  MultiViewDataset ds;
  ds.num_clusters = k;
  std::vector<int> labels = category_sequence(n, k, spec.imbalance);
  Matrix latent(n, dl);
  const CounterRng latent_rng = root.substream(kLatents);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < dl; ++j) {
      latent(i, j) = centers(labels[i], j) + spec.spread * latent_rng.normal(i * dl + j);
    }
  }

  double scale2 = static_cast<double>(dl) * (spec.separation * spec.separation + spec.spread * spec.spread);
  const double map_scale = scale2 > 0.0 ? 1.0 / std::sqrt(scale2) : 1.0;
  for (std::size_t v = 0; v < m; ++v) {
    const std::size_t dv = spec.d_views[v];
    const CounterRng map_rng = root.substream(kMaps).substream(v);
    Matrix map(dl, dv);
    const CounterRng shared_rng = root.substream(kMaps).substream(m);
    const double own = std::sqrt(1.0 - spec.map_correlation), common = std::sqrt(spec.map_correlation);
    for (std::size_t a = 0; a < dl; ++a) {
      for (std::size_t b = 0; b < dv; ++b) {
        double w = own * map_rng.normal(a * dv + b);
        if (common > 0.0) w += common * shared_rng.normal(a * dv + b);
        map(a, b) = map_scale * w;
      }
    }
    Matrix x = latent * map;
    const CounterRng noise_rng = root.substream(kNoise).substream(v);
    if (spec.noise > 0.0) {
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t b = 0; b < dv; ++b) x(i, b) += spec.noise * noise_rng.normal(i * dv + b);
      }
    }
    ds.views.push_back(std::move(x));
  }
  ds.observed = BinaryMask(n, m, true);
  ds.aligned.assign(n, 1);
  ds.labels = std::move(labels);
  return ds;
}

MultiViewDataset corrupt(const MultiViewDataset& ds, const CorruptionSpec& spec) {
  const double eta = spec.missing_rate();
  const double zeta = spec.unaligned_rate();
  if (spec.rho && !(*spec.rho >= 0.0 && *spec.rho <= 1.0)) throw ArgumentError("corrupt: rho must lie in [0, 1]");
  if (!(eta >= 0.0 && eta <= 1.0) || !(zeta >= 0.0 && zeta <= 1.0)) {
    throw ArgumentError("corrupt: eta and zeta must lie in [0, 1]");
  }
  if (!is_complete(ds)) throw ArgumentError("corrupt: input dataset must be complete and aligned");

  const std::size_t n = ds.size(), m = ds.num_views();
  const std::size_t n_unaligned = rate_count(zeta, n);
  const std::size_t n_missing = rate_count(eta, n);
  if (n_unaligned + n_missing > n) {
    throw ArgumentError("corrupt: eta + zeta exceeds 1; unaligned and missing subsets must be disjoint");
  }
  if (n_missing > 0 && m < 2) throw ArgumentError("corrupt: dropping views needs at least two views");
  if (m > 30) throw ArgumentError("corrupt: at most 30 views supported");

  MultiViewDataset out = ds;
  out.true_perm.assign(m, std::vector<std::size_t>(n));
  for (auto& perm : out.true_perm) std::iota(perm.begin(), perm.end(), std::size_t{0});
  out.hidden.clear();
  for (std::size_t v = 0; v < m; ++v) out.hidden.push_back(Matrix::Constant(n, ds.view_dim(v), kNaN));

  RngStream subset_rng(spec.seed, kSubsets);
  const std::vector<std::size_t> order = random_permutation(n, subset_rng);
  std::vector<std::size_t> unaligned(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_unaligned));
  std::vector<std::size_t> missing(order.begin() + static_cast<std::ptrdiff_t>(n_unaligned),
                                   order.begin() + static_cast<std::ptrdiff_t>(n_unaligned + n_missing));
  std::sort(unaligned.begin(), unaligned.end());
  std::sort(missing.begin(), missing.end());

  // View 0 is the anchor ordering; views 1..M-1 are shuffled within the unaligned subset.
  for (std::size_t i : unaligned) out.aligned[i] = 0;
  for (std::size_t v = 1; v < m && !unaligned.empty(); ++v) {
    RngStream shuffle_rng(spec.seed, mix_seed(kShuffle, v));
    const std::vector<std::size_t> pi = random_permutation(unaligned.size(), shuffle_rng);
    for (std::size_t j = 0; j < unaligned.size(); ++j) {
      const std::size_t row = unaligned[j], source = unaligned[pi[j]];
      out.views[v].row(static_cast<Eigen::Index>(row)) = ds.views[v].row(static_cast<Eigen::Index>(source));
      out.true_perm[v][row] = source;
    }
  }

  // Each missing instance drops a uniformly chosen non-empty strict subset of its views.
  const std::uint64_t n_subsets = (std::uint64_t{1} << m) - 2;
  for (std::size_t i : missing) {
    RngStream drop_rng(spec.seed, mix_seed(kDrop, i));
    const std::uint64_t dropped = drop_rng.below(n_subsets) + 1;
    for (std::size_t v = 0; v < m; ++v) {
      if (!((dropped >> v) & 1U)) continue;
      const auto row = static_cast<Eigen::Index>(i);
      out.hidden[v].row(row) = out.views[v].row(row);
      out.views[v].row(row).setConstant(kNaN);
      out.observed.set(i, v, false);
    }
  }
  return out;
}

Rates rates(const MultiViewDataset& ds) {
  Rates r;
  const std::size_t n = ds.size();
  if (n == 0) return r;
  std::size_t missing = 0, unaligned = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (ds.observed.row_count(i) < ds.num_views()) ++missing;
    if (!ds.aligned[i]) ++unaligned;
  }
  r.eta = static_cast<double>(missing) / static_cast<double>(n);
  r.zeta = static_cast<double>(unaligned) / static_cast<double>(n);
  return r;
}

void validate(const MultiViewDataset& ds) {
  const std::size_t n = ds.size(), m = ds.num_views();
  auto fail = [](const std::string& msg) { throw InvariantError("dataset: " + msg); };
  if (m == 0) fail("no views");
  if (ds.observed.cols() != m) fail("observation mask has wrong column count");
  if (ds.aligned.size() != n) fail("alignment mask has wrong length");
  for (std::size_t v = 0; v < m; ++v) {
    if (static_cast<std::size_t>(ds.views[v].rows()) != n) fail("view " + std::to_string(v) + " has wrong row count");
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (ds.observed.row_count(i) == 0) fail("instance " + std::to_string(i) + " has no observed view");
    for (std::size_t v = 0; v < m; ++v) {
      if (ds.observed(i, v) && !ds.views[v].row(static_cast<Eigen::Index>(i)).allFinite()) {
        fail("observed cell (" + std::to_string(i) + ", " + std::to_string(v) + ") is not finite");
      }
    }
  }
  if (ds.labels && ds.labels->size() != n) fail("labels have wrong length");
  if (!ds.true_perm.empty()) {
    if (ds.true_perm.size() != m) fail("true_perm has wrong view count");
    std::vector<std::size_t> pool;
    for (std::size_t i = 0; i < n; ++i) {
      if (!ds.aligned[i]) pool.push_back(i);
    }
    for (std::size_t v = 0; v < m; ++v) {
      const auto& perm = ds.true_perm[v];
      if (perm.size() != n) fail("true_perm[" + std::to_string(v) + "] has wrong length");
      std::vector<std::size_t> image;
      for (std::size_t i = 0; i < n; ++i) {
        if (ds.aligned[i]) {
          if (perm[i] != i) fail("true_perm is not the identity on aligned row " + std::to_string(i));
        } else {
          image.push_back(perm[i]);
        }
      }
      std::sort(image.begin(), image.end());
      if (image != pool) fail("true_perm[" + std::to_string(v) + "] is not a bijection on the unaligned rows");
    }
  }
  if (!ds.hidden.empty()) {
    if (ds.hidden.size() != m) fail("hidden truth has wrong view count");
    for (std::size_t v = 0; v < m; ++v) {
      const Matrix& h = ds.hidden[v];
      if (static_cast<std::size_t>(h.rows()) != n || h.cols() != ds.views[v].cols()) fail("hidden truth has wrong shape");
      for (std::size_t i = 0; i < n; ++i) {
        const auto row = h.row(static_cast<Eigen::Index>(i));
        if (ds.observed(i, v) ? !row.array().isNaN().all() : !row.allFinite()) {
          fail("hidden truth does not cover exactly the unobserved cells at (" + std::to_string(i) + ", " +
               std::to_string(v) + ")");
        }
      }
    }
  }
}

MultiViewDataset strip_truth(const MultiViewDataset& ds) {
  MultiViewDataset out;
  out.views = ds.views;
  out.observed = ds.observed;
  out.aligned = ds.aligned;
  out.num_clusters = ds.num_clusters;
  return out;
}

bool structurally_equal(const MultiViewDataset& a, const MultiViewDataset& b) {
  if (a.num_views() != b.num_views() || !(a.observed == b.observed) || a.aligned != b.aligned) return false;
  if (a.labels != b.labels || a.true_perm != b.true_perm || a.num_clusters != b.num_clusters) return false;
  for (std::size_t v = 0; v < a.num_views(); ++v) {
    if (!nan_aware_equal(a.views[v], b.views[v])) return false;
  }
  if (a.hidden.size() != b.hidden.size()) return false;
  for (std::size_t v = 0; v < a.hidden.size(); ++v) {
    if (!nan_aware_equal(a.hidden[v], b.hidden[v])) return false;
  }
  return true;
}

}  // namespace smile
