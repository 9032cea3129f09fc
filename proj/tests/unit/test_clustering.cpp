#include <gtest/gtest.h>

#include <cmath>
#include <set>

#include "oracles.hpp"
#include "smile/clustering.hpp"
#include "smile/errors.hpp"
#include "smile/random.hpp"

using namespace smile;

namespace {

Matrix gaussian(Eigen::Index rows, Eigen::Index cols, std::uint64_t seed) {
  RngStream rng(seed, 1);
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.normal();
  return m;
}

/// Four well separated directions in R^4 with small angular noise.
Matrix blobs(std::vector<int>& labels, std::uint64_t seed) {
  RngStream rng(seed, 2);
  const int per = 50;
  Matrix z(4 * per, 4);
  labels.clear();
  for (int c = 0; c < 4; ++c) {
    for (int i = 0; i < per; ++i) {
      const Eigen::Index r = c * per + i;
      for (Eigen::Index j = 0; j < 4; ++j) z(r, j) = 0.05 * rng.normal();
      z(r, c) += 1.0;
      labels.push_back(c);
    }
  }
  return z;
}

}  // namespace

TEST(Normalize, ZeroRowRejected) {
  Matrix z = Matrix::Ones(3, 2);
  z.row(1).setZero();
  EXPECT_THROW(normalize_rows(z), NumericError);
}

TEST(KMeansInit, EachDistinctFarPointChosenOnce) {
  Matrix z(4, 2);
  z << 1, 0, 0, 1, -1, 0, 0, -1;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const Matrix c = kmeans_pp_init(z, 4, seed);
    std::set<std::pair<long, long>> seen;
    for (Eigen::Index k = 0; k < 4; ++k) {
      EXPECT_NEAR(c.row(k).norm(), 1.0, 1e-12);
      seen.insert({std::lround(c(k, 0)), std::lround(c(k, 1))});
    }
    EXPECT_EQ(seen.size(), 4u) << "seed " << seed;
  }
}

TEST(KMeansInit, SingleCenterIsANormalizedRow) {
  const Matrix z = gaussian(10, 3, 4);
  const Matrix c = kmeans_pp_init(z, 1, 9);
  const Matrix u = normalize_rows(z);
  bool found = false;
  for (Eigen::Index i = 0; i < 10; ++i) found |= (u.row(i) - c.row(0)).norm() < 1e-15;
  EXPECT_TRUE(found);
}

TEST(KMeansInit, DeterministicPerSeedAndTooFewRowsRejected) {
  const Matrix z = gaussian(30, 5, 1);
  EXPECT_EQ(kmeans_pp_init(z, 3, 5), kmeans_pp_init(z, 3, 5));
  EXPECT_THROW(kmeans_pp_init(gaussian(2, 3, 1), 3, 0), ArgumentError);
}

TEST(KMeans, AntipodalPairHasZeroInertia) {
  Matrix z(2, 3);
  z << 0, 2, 0, 0, -3, 0;
  const KMeansResult r = kmeans(z, 2);
  EXPECT_NEAR(r.inertia, 0.0, 1e-15);
  const Matrix u = normalize_rows(z);
  for (Eigen::Index i = 0; i < 2; ++i) {
    EXPECT_LT((r.centers.row(static_cast<Eigen::Index>(r.labels[i])) - u.row(i)).norm(), 1e-12);
  }
  EXPECT_NE(r.labels[0], r.labels[1]);
}

TEST(KMeans, InertiaTraceNonIncreasing) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    KMeansOptions opts;
    opts.seed = seed;
    const KMeansResult r = kmeans(gaussian(200, 6, seed), 5, opts);
    ASSERT_FALSE(r.inertia_trace.empty());
    for (std::size_t t = 1; t < r.inertia_trace.size(); ++t) {
      EXPECT_LE(r.inertia_trace[t], r.inertia_trace[t - 1] + 1e-12);
    }
    for (Eigen::Index k = 0; k < r.centers.rows(); ++k) EXPECT_NEAR(r.centers.row(k).norm(), 1.0, 1e-9);
  }
}

TEST(KMeans, FourBlobsRecoveredExactly) {
  std::vector<int> truth;
  const Matrix z = blobs(truth, 3);
  const KMeansResult r = kmeans_restarts(z, 4, 10);
  std::vector<int> pred(r.labels.begin(), r.labels.end());
  EXPECT_DOUBLE_EQ(oracle::brute_force_acc(pred, truth), 1.0);
}

TEST(KMeans, DeterministicPerSeed) {
  const Matrix z = gaussian(100, 4, 8);
  KMeansOptions opts;
  opts.seed = 11;
  EXPECT_EQ(kmeans(z, 3, opts).labels, kmeans(z, 3, opts).labels);
}

TEST(SoftAssign, HandSoftmax) {
  Matrix z(1, 2), u(2, 2);
  z << 1, 0;
  u << 1, 0, 0, 1;
  const Matrix c = soft_assign(z, u, 0.1);
  const double e = std::exp(-10.0);
  EXPECT_NEAR(c(0, 0), 1.0 / (1.0 + e), 1e-15);
  EXPECT_NEAR(c(0, 1), e / (1.0 + e), 1e-15);
  EXPECT_NEAR(c(0, 0), 0.9999546, 1e-7);
}

TEST(SoftAssign, EqualCosinesGiveUniformRow) {
  Matrix z(1, 3), u(3, 3);
  z << 0, 0, 1;
  u << 1, 0, 0, 0, 1, 0, -1, 0, 0;
  const Matrix c = soft_assign(z, u, 0.1);
  for (Eigen::Index k = 0; k < 3; ++k) EXPECT_NEAR(c(0, k), 1.0 / 3.0, 1e-15);
}

TEST(SoftAssign, HugeTemperatureIsUniform) {
  const Matrix z = gaussian(20, 4, 5);
  const Matrix u = normalize_rows(gaussian(3, 4, 6));
  const Matrix c = soft_assign(z, u, 1e6);
  EXPECT_LT((c.array() - 1.0 / 3.0).abs().maxCoeff(), 1e-6);
}

TEST(SoftAssign, RowsSumToOneArgmaxMatchesNearestAndScaleInvariant) {
  const Matrix z = gaussian(50, 5, 7);
  const Matrix u = normalize_rows(gaussian(4, 5, 8));
  const auto nearest = nearest_center(z, u);
  for (double tau : {0.01, 0.1, 1.0, 10.0}) {
    const Matrix c = soft_assign(z, u, tau);
    const Matrix c_scaled = soft_assign(3.7 * z, u, tau);
    for (Eigen::Index i = 0; i < 50; ++i) {
      EXPECT_NEAR(c.row(i).sum(), 1.0, 1e-9);
      Eigen::Index arg = 0;
      c.row(i).maxCoeff(&arg);
      EXPECT_EQ(static_cast<std::size_t>(arg), nearest[i]);
    }
    EXPECT_LT((c - c_scaled).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(SoftAssign, ZeroRowAndBadTemperatureRejected) {
  Matrix z = gaussian(2, 3, 1);
  const Matrix u = normalize_rows(gaussian(2, 3, 2));
  EXPECT_THROW(soft_assign(z, u, 0.0), ArgumentError);
  z.row(0).setZero();
  EXPECT_THROW(soft_assign(z, u, 0.1), NumericError);
}

TEST(SoftAssign, BackwardMatchesFiniteDifferences) {
  Matrix z = gaussian(5, 4, 3);
  const Matrix u = normalize_rows(gaussian(3, 4, 4));
  const Matrix w = gaussian(5, 3, 5);  // upstream weights: L = sum(w .* c)
  const double tau = 0.5, h = 1e-6;
  const Matrix c = soft_assign(z, u, tau);
  const Matrix g = soft_assign_backward(z, u, tau, c, w);
  for (Eigen::Index i = 0; i < z.size(); ++i) {
    const double saved = z.data()[i];
    z.data()[i] = saved + h;
    const double up = soft_assign(z, u, tau).cwiseProduct(w).sum();
    z.data()[i] = saved - h;
    const double down = soft_assign(z, u, tau).cwiseProduct(w).sum();
    z.data()[i] = saved;
    EXPECT_NEAR(g.data()[i], (up - down) / (2 * h), 1e-7);
  }
}

TEST(AssignAll, UnobservedRowsInvalid) {
  std::vector<Matrix> latents{gaussian(3, 2, 1), gaussian(3, 2, 2)};
  BinaryMask observed(3, 2, true);
  observed.set(1, 1, false);
  observed.set(2, 0, false);
  const Matrix u = normalize_rows(gaussian(2, 2, 3));
  const ClusterState s = assign_all(latents, observed, u, 0.1);
  EXPECT_TRUE(s.assignments.valid(0, 1));
  EXPECT_FALSE(s.assignments.valid(1, 1));
  EXPECT_FALSE(s.assignments.valid(2, 0));
  const auto grouped = s.assignments.by_view();
  EXPECT_EQ(grouped[0].rows(), 2);
  EXPECT_EQ(grouped[1].rows(), 2);
  EXPECT_NEAR(s.assignments.row(2, 1).sum(), 1.0, 1e-12);
}
