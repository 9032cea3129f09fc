#include <gtest/gtest.h>

#include <cmath>

#include "smile/errors.hpp"
#include "smile/random.hpp"
#include "smile/recovery.hpp"

using namespace smile;

namespace {

RowVector unit_at(double angle) {
  RowVector r(2);
  r << std::cos(angle), std::sin(angle);
  return r;
}

Matrix gaussian(Eigen::Index r, Eigen::Index c, std::uint64_t seed) {
  RngStream rng(seed, 5);
  Matrix m(r, c);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.normal();
  return m;
}

}  // namespace

TEST(Impute, ExactCoincidenceWithKOne) {
  // Instance 3 misses view 0; its view-1 latent equals view-0 row 1.
  std::vector<Matrix> z{Matrix::Zero(4, 2), Matrix::Zero(4, 2)};
  z[0].row(0) = unit_at(0.0);
  z[0].row(1) = 2.0 * unit_at(1.0);
  z[0].row(2) = unit_at(2.5);
  z[1].row(3) = 2.0 * unit_at(1.0);
  BinaryMask observed(4, 2, true);
  observed.set(3, 0, false);
  for (std::size_t i = 0; i < 3; ++i) z[1].row(static_cast<Eigen::Index>(i)) = unit_at(0.3 * static_cast<double>(i + 1));
  const auto imps = impute(z, observed, 1);
  ASSERT_EQ(imps.size(), 1u);
  EXPECT_EQ(imps[0].instance, 3u);
  EXPECT_EQ(imps[0].view, 0u);
  EXPECT_EQ(imps[0].query_view, 1u);
  EXPECT_EQ(imps[0].neighbors, std::vector<std::size_t>{1});
  EXPECT_EQ(imps[0].latent.transpose(), z[0].row(1));
}

TEST(Impute, TwoEquidistantNeighborsAveraged) {
  std::vector<Matrix> z{Matrix::Zero(4, 2), Matrix::Zero(4, 2)};
  z[0].row(0) = unit_at(2.0);   // far
  z[0].row(1) = unit_at(0.4);   // a
  z[0].row(2) = unit_at(-0.4);  // b
  z[1].row(3) = unit_at(0.0);
  for (std::size_t i = 0; i < 3; ++i) z[1].row(static_cast<Eigen::Index>(i)) = unit_at(1.0);
  BinaryMask observed(4, 2, true);
  observed.set(3, 0, false);
  const auto imps = impute(z, observed, 2);
  ASSERT_EQ(imps.size(), 1u);
  EXPECT_LT((imps[0].latent.transpose() - 0.5 * (z[0].row(1) + z[0].row(2))).norm(), 1e-15);
}

TEST(Impute, TieAtLastSlotPicksLowestIndex) {
  std::vector<Matrix> z{Matrix::Zero(4, 2), Matrix::Zero(4, 2)};
  z[0].row(0) = unit_at(0.0);
  z[0].row(1) = unit_at(0.5);
  z[0].row(2) = unit_at(-0.5);
  z[1].row(3) = unit_at(0.0);
  for (std::size_t i = 0; i < 3; ++i) z[1].row(static_cast<Eigen::Index>(i)) = unit_at(1.0);
  BinaryMask observed(4, 2, true);
  observed.set(3, 0, false);
  const auto imps = impute(z, observed, 2);
  EXPECT_EQ(imps[0].neighbors, (std::vector<std::size_t>{0, 1}));
}

TEST(Impute, LowestObservedViewIsQueryAndErrors) {
  std::vector<Matrix> z{gaussian(3, 2, 1), gaussian(3, 2, 2), gaussian(3, 2, 3)};
  BinaryMask observed(3, 3, true);
  observed.set(0, 0, false);
  const auto imps = impute(z, observed, 1);
  ASSERT_EQ(imps.size(), 1u);
  EXPECT_EQ(imps[0].query_view, 1u);
  EXPECT_THROW(impute(z, observed, 3), ArgumentError);
  observed.set(0, 1, false);
  observed.set(0, 2, false);
  EXPECT_THROW(impute(z, observed, 1), InvariantError);
}

TEST(Realign, PicksSmallestCosineDistance) {
  // Candidates in view 1 at cosine distances 0.3, 0.1, 0.2 from the anchor.
  std::vector<Matrix> z{Matrix::Zero(3, 2), Matrix::Zero(3, 2)};
  z[0].row(0) = unit_at(0.0);
  z[0].row(1) = unit_at(2.0);
  z[0].row(2) = unit_at(-2.0);
  z[1].row(0) = unit_at(std::acos(0.7));
  z[1].row(1) = unit_at(-std::acos(0.9));
  z[1].row(2) = unit_at(std::acos(0.8));
  BinaryMask observed(3, 2, true);
  const auto ra = realign(z, {0, 0, 0}, observed);
  ASSERT_EQ(ra.size(), 3u);
  EXPECT_EQ(ra[0].instance, 0u);
  EXPECT_EQ(ra[0].counterpart, 1u);
  EXPECT_NEAR(ra[0].distance, 0.1, 1e-12);
}

TEST(Realign, ExactTieGoesToLowestIndexAndPoolRestricted) {
  std::vector<Matrix> z{Matrix::Zero(4, 2), Matrix::Zero(4, 2)};
  z[0].row(1) = unit_at(0.0);
  z[0].row(2) = unit_at(1.0);
  z[0].row(3) = unit_at(2.0);
  z[0].row(0) = unit_at(3.0);
  z[1].row(0) = unit_at(0.0);   // aligned row: not a candidate
  z[1].row(1) = unit_at(0.2);
  z[1].row(2) = unit_at(1.5);
  z[1].row(3) = unit_at(-0.2);
  BinaryMask observed(4, 2, true);
  const auto ra = realign(z, {1, 0, 0, 0}, observed);
  ASSERT_EQ(ra.size(), 3u);
  EXPECT_EQ(ra[0].instance, 1u);
  EXPECT_EQ(ra[0].counterpart, 1u);
  for (const auto& r : ra) EXPECT_NE(r.counterpart, 0u);
}

TEST(Realign, CounterpartsComeFromUnalignedObservedPool) {
  std::vector<Matrix> z{gaussian(12, 3, 1), gaussian(12, 3, 2), gaussian(12, 3, 3)};
  BinaryMask observed(12, 3, true);
  observed.set(2, 1, false);
  observed.set(5, 0, false);
  std::vector<std::uint8_t> aligned(12, 0);
  aligned[0] = aligned[7] = 1;
  const auto ra = realign(z, aligned, observed);
  EXPECT_FALSE(ra.empty());
  for (const auto& r : ra) {
    EXPECT_FALSE(aligned[r.counterpart]);
    EXPECT_TRUE(observed(r.counterpart, r.view));
    EXPECT_NE(r.view, r.anchor_view);
  }
  const auto again = realign(z, aligned, observed);
  ASSERT_EQ(again.size(), ra.size());
  for (std::size_t t = 0; t < ra.size(); ++t) EXPECT_EQ(again[t].counterpart, ra[t].counterpart);
}

TEST(Realign, IdenticalLatentsRecoverPermutation) {
  const std::size_t n = 40;
  const Matrix base = gaussian(static_cast<Eigen::Index>(n), 6, 9);
  RngStream rng(3, 0);
  const auto perm = random_permutation(n, rng);
  std::vector<Matrix> z{base, Matrix(base.rows(), base.cols())};
  for (std::size_t j = 0; j < n; ++j) z[1].row(static_cast<Eigen::Index>(j)) = base.row(static_cast<Eigen::Index>(perm[j]));
  const auto ra = realign(z, std::vector<std::uint8_t>(n, 0), BinaryMask(n, 2, true));
  ASSERT_EQ(ra.size(), n);
  for (const auto& r : ra) EXPECT_EQ(perm[r.counterpart], r.instance);
}

TEST(Assemble, CompleteIsConcatenation) {
  std::vector<Matrix> z{gaussian(5, 32, 1), gaussian(5, 32, 2)};
  BinaryMask observed(5, 2, true);
  const std::vector<std::uint8_t> aligned(5, 1);
  const Matrix f = assemble_instance_features(z, observed, aligned, {}, {});
  EXPECT_EQ(f.cols(), 64);
  EXPECT_EQ(f.leftCols(32), z[0]);
  EXPECT_EQ(f.rightCols(32), z[1]);
}

TEST(Assemble, MissingViewFilledFromImputations) {
  std::vector<Matrix> z{gaussian(4, 3, 1), gaussian(4, 3, 2)};
  BinaryMask observed(4, 2, true);
  // Instance 0 keeps only view 1, the others keep only view 0.
  observed.set(0, 0, false);
  for (std::size_t i = 1; i < 4; ++i) observed.set(i, 1, false);
  const std::vector<std::uint8_t> aligned(4, 1);
  const auto imps = impute(z, observed, 1);
  ASSERT_EQ(imps.size(), 4u);
  const Matrix f = assemble_instance_features(z, observed, aligned, imps, {});
  for (const auto& imp : imps) {
    const auto block = f.block(static_cast<Eigen::Index>(imp.instance), static_cast<Eigen::Index>(imp.view) * 3, 1, 3);
    EXPECT_EQ(block, imp.latent.transpose());
  }
  EXPECT_THROW(assemble_instance_features(z, observed, aligned, {}, {}), InvariantError);
}

TEST(Assemble, UnalignedSlotsUseCounterparts) {
  std::vector<Matrix> z{gaussian(3, 2, 7), gaussian(3, 2, 8)};
  BinaryMask observed(3, 2, true);
  const std::vector<std::uint8_t> aligned{0, 0, 1};
  const auto ra = realign(z, aligned, observed);
  const Matrix f = assemble_instance_features(z, observed, aligned, {}, ra);
  for (const auto& r : ra) EXPECT_EQ(f.block(static_cast<Eigen::Index>(r.instance), 2, 1, 2), z[1].row(static_cast<Eigen::Index>(r.counterpart)));
  EXPECT_THROW(assemble_instance_features(z, observed, aligned, {}, {}), InvariantError);
}
