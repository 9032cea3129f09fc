#include "smile/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>

#include <json.hpp>

#include "smile/errors.hpp"

namespace smile {
namespace {

struct AssignmentSolution {
  std::vector<std::size_t> assign;  // row -> column
  std::vector<double> u, v;         // optimal duals, 1-based
};

/// O(n^3) shortest augmenting path with potentials.
AssignmentSolution solve_assignment(const Matrix& a) {
  const auto n = static_cast<std::size_t>(a.rows());
  const double inf = std::numeric_limits<double>::infinity();
  // 1-based arrays; column 0 is the virtual start.
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
  std::vector<std::size_t> p(n + 1, 0), way(n + 1, 0);
  for (std::size_t i = 1; i <= n; ++i) {
    p[0] = i;
    std::size_t j0 = 0;
    std::vector<double> minv(n + 1, inf);
    std::vector<bool> used(n + 1, false);
    do {
      used[j0] = true;
      const std::size_t i0 = p[j0];
      double delta = inf;
      std::size_t j1 = 0;
      for (std::size_t j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = a(static_cast<Eigen::Index>(i0 - 1), static_cast<Eigen::Index>(j - 1)) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (std::size_t j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const std::size_t j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  std::vector<std::size_t> assign(n);
  for (std::size_t j = 1; j <= n; ++j) assign[p[j] - 1] = j - 1;
  return {assign, u, v};
}

struct Contingency {
  std::vector<std::vector<double>> table;  // pred cluster x true class
  std::vector<double> pred_sizes;
  std::vector<double> true_sizes;
  double n = 0.0;
};

std::vector<std::size_t> dense_ids(std::span<const int> labels, std::size_t& count) {
  std::vector<int> sorted(labels.begin(), labels.end());
  std::sort(sorted.begin(), sorted.end());
  sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
  count = sorted.size();
  std::vector<std::size_t> out;
  out.reserve(labels.size());
  for (int l : labels) out.push_back(static_cast<std::size_t>(std::lower_bound(sorted.begin(), sorted.end(), l) - sorted.begin()));
  return out;
}

Contingency contingency(std::span<const int> pred, std::span<const int> truth) {
  if (pred.size() != truth.size()) throw ArgumentError("metrics: label vectors differ in length");
  if (pred.empty()) throw ArgumentError("metrics: empty label vectors");
  std::size_t kp = 0, kt = 0;
  const auto p = dense_ids(pred, kp);
  const auto t = dense_ids(truth, kt);
  Contingency c;
  c.table.assign(kp, std::vector<double>(kt, 0.0));
  c.pred_sizes.assign(kp, 0.0);
  c.true_sizes.assign(kt, 0.0);
  for (std::size_t i = 0; i < p.size(); ++i) {
    c.table[p[i]][t[i]] += 1.0;
    c.pred_sizes[p[i]] += 1.0;
    c.true_sizes[t[i]] += 1.0;
  }
  c.n = static_cast<double>(p.size());
  return c;
}

double entropy_of(const std::vector<double>& sizes, double n) {
  double h = 0.0;
  for (double s : sizes) {
    if (s > 0) h -= (s / n) * std::log(s / n);
  }
  return h;
}

double choose2(double x) { return x * (x - 1.0) / 2.0; }

}  // namespace

std::vector<std::size_t> hungarian(const Matrix& cost) {
  if (cost.rows() != cost.cols()) throw ArgumentError("hungarian: cost matrix must be square");
  if (!cost.allFinite()) throw ArgumentError("hungarian: cost matrix must be finite");
  const auto n = static_cast<std::size_t>(cost.rows());
  if (n == 0) return {};
  const AssignmentSolution sol = solve_assignment(cost);

  // By complementary slackness the optimal assignments are exactly the perfect
  // matchings on zero-reduced-cost edges. Rows are fixed in order to the
  // smallest column that still extends to such a matching.
  const double tol = 1e-9 * (1.0 + cost.cwiseAbs().maxCoeff() * static_cast<double>(n));
  auto tight = [&](std::size_t i, std::size_t j) {
    return cost(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) - sol.u[i + 1] - sol.v[j + 1] <= tol;
  };
  std::vector<std::size_t> row_to_col = sol.assign, col_to_row(n);
  for (std::size_t i = 0; i < n; ++i) col_to_row[row_to_col[i]] = i;
  std::vector<bool> col_fixed(n, false);
  constexpr std::size_t kNone = static_cast<std::size_t>(-1);

  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t c = 0; c < n; ++c) {
      if (col_fixed[c] || !tight(r, c)) continue;
      if (row_to_col[r] == c) break;
      // Give c to r; the row holding c must reach r's old column along an
      // alternating path through unfixed rows and columns.
      const std::size_t freed = row_to_col[r], start = col_to_row[c];
      std::vector<std::size_t> parent_row(n, kNone);  // column -> row that reached it
      std::vector<std::size_t> queue{start};
      bool found = false;
      for (std::size_t q = 0; q < queue.size() && !found; ++q) {
        const std::size_t x = queue[q];
        for (std::size_t y = 0; y < n; ++y) {
          if (col_fixed[y] || y == c || parent_row[y] != kNone || !tight(x, y)) continue;
          parent_row[y] = x;
          if (y == freed) {
            found = true;
            break;
          }
          queue.push_back(col_to_row[y]);
        }
      }
      if (!found) continue;
      for (std::size_t y = freed; y != c;) {
        const std::size_t x = parent_row[y];
        const std::size_t next = x == start ? c : row_to_col[x];
        row_to_col[x] = y;
        col_to_row[y] = x;
        y = next;
      }
      row_to_col[r] = c;
      col_to_row[c] = r;
      break;
    }
    col_fixed[row_to_col[r]] = true;
  }
  return row_to_col;
}

double clustering_accuracy(std::span<const int> pred, std::span<const int> truth) {
  const Contingency c = contingency(pred, truth);
  const std::size_t k = std::max(c.pred_sizes.size(), c.true_sizes.size());
  Matrix cost = Matrix::Zero(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(k));
  for (std::size_t a = 0; a < c.pred_sizes.size(); ++a) {
    for (std::size_t b = 0; b < c.true_sizes.size(); ++b) cost(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) = -c.table[a][b];
  }
  const auto match = hungarian(cost);
  double hits = 0.0;
  for (std::size_t a = 0; a < k; ++a) hits -= cost(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(match[a]));
  return hits / c.n;
}

double normalized_mutual_info(std::span<const int> pred, std::span<const int> truth) {
  const Contingency c = contingency(pred, truth);
  const double hp = entropy_of(c.pred_sizes, c.n);
  const double ht = entropy_of(c.true_sizes, c.n);
  if (hp == 0.0 && ht == 0.0) return 1.0;
  if (hp == 0.0 || ht == 0.0) return 0.0;
  double mi = 0.0;
  for (std::size_t a = 0; a < c.pred_sizes.size(); ++a) {
    for (std::size_t b = 0; b < c.true_sizes.size(); ++b) {
      const double nab = c.table[a][b];
      if (nab > 0) mi += (nab / c.n) * std::log(nab * c.n / (c.pred_sizes[a] * c.true_sizes[b]));
    }
  }
  return std::clamp(mi / (0.5 * (hp + ht)), 0.0, 1.0);
}

double adjusted_rand_index(std::span<const int> pred, std::span<const int> truth) {
  const Contingency c = contingency(pred, truth);
  double index = 0.0, sum_p = 0.0, sum_t = 0.0;
  for (const auto& row : c.table) {
    for (double nab : row) index += choose2(nab);
  }
  for (double s : c.pred_sizes) sum_p += choose2(s);
  for (double s : c.true_sizes) sum_t += choose2(s);
  const double pairs = choose2(c.n);
  if (pairs == 0.0) return 1.0;
  const double expected = sum_p * sum_t / pairs;
  const double max_index = 0.5 * (sum_p + sum_t);
  if (max_index == expected) return index == max_index ? 1.0 : 0.0;
  return (index - expected) / (max_index - expected);
}

double category_alignment_rate(std::span<const int> counterpart_labels, std::span<const int> anchor_labels) {
  if (counterpart_labels.size() != anchor_labels.size()) throw ArgumentError("car: label vectors differ in length");
  if (anchor_labels.empty()) throw ArgumentError("car: no realignments to score");
  std::size_t hits = 0;
  for (std::size_t i = 0; i < anchor_labels.size(); ++i) hits += counterpart_labels[i] == anchor_labels[i] ? 1 : 0;
  return static_cast<double>(hits) / static_cast<double>(anchor_labels.size());
}

double nrmse(std::span<const double> imputed, std::span<const double> truth) {
  if (imputed.size() != truth.size()) throw ArgumentError("nrmse: shape mismatch");
  if (truth.empty()) throw ArgumentError("nrmse: no imputed cells");
  const auto [lo, hi] = std::minmax_element(truth.begin(), truth.end());
  const double range = *hi - *lo;
  if (!(range > 0.0)) throw ArgumentError("nrmse: truth cells are constant");
  double sq = 0.0;
  for (std::size_t i = 0; i < truth.size(); ++i) sq += (imputed[i] - truth[i]) * (imputed[i] - truth[i]);
  return std::sqrt(sq / static_cast<double>(truth.size())) / range;
}

std::string MetricsReport::to_json() const {
  nlohmann::ordered_json j = nlohmann::ordered_json::object();
  if (acc) j["acc"] = *acc;
  if (nmi) j["nmi"] = *nmi;
  if (ari) j["ari"] = *ari;
  if (car) j["car"] = *car;
  if (nrmse) j["nrmse"] = *nrmse;
  // Absent metrics are listed so consumers can tell "not applicable" from "forgotten".
  nlohmann::ordered_json omitted = nlohmann::ordered_json::array();
  if (!acc) omitted.push_back("acc");
  if (!nmi) omitted.push_back("nmi");
  if (!ari) omitted.push_back("ari");
  if (!car) omitted.push_back("car");
  if (!nrmse) omitted.push_back("nrmse");
  j["omitted"] = omitted;
  if (seed) j["seed"] = *seed;
  if (!config_hash.empty()) j["config_hash"] = config_hash;
  j["eta"] = eta;
  j["zeta"] = zeta;
  return j.dump();
}

MetricsReport MetricsReport::from_json(std::string_view text) {
  MetricsReport r;
  try {
    const auto j = nlohmann::json::parse(text);
    if (!j.is_object()) throw ParseError("metrics: expected a JSON object");
    auto opt = [&](const char* key) -> std::optional<double> {
      if (!j.contains(key)) return std::nullopt;
      return j.at(key).get<double>();
    };
    r.acc = opt("acc");
    r.nmi = opt("nmi");
    r.ari = opt("ari");
    r.car = opt("car");
    r.nrmse = opt("nrmse");
    if (j.contains("seed")) r.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("config_hash")) r.config_hash = j.at("config_hash").get<std::string>();
    if (j.contains("eta")) r.eta = j.at("eta").get<double>();
    if (j.contains("zeta")) r.zeta = j.at("zeta").get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("metrics: ") + e.what());
  }
  return r;
}

std::string fnv1a_hex(std::string_view text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace smile
