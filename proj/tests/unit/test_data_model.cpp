#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <set>

#include "smile/clustering.hpp"
#include "smile/dataset.hpp"
#include "smile/errors.hpp"
#include "smile/metrics.hpp"

namespace fs = std::filesystem;
using namespace smile;

namespace {

fs::path scratch_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("smile_test_" + name);
  fs::remove_all(dir);
  return dir;
}

bool bit_identical(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) return false;
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    const double x = a.data()[i], y = b.data()[i];
    if (!(x == y || (std::isnan(x) && std::isnan(y)))) return false;
  }
  return true;
}

}  // namespace

TEST(Synthetic, ZeroNoiseDegenerateCase) {
  const MultiViewDataset ds = make_synthetic(4, 4, 3, {5, 6}, 0.0, 11);
  ASSERT_EQ(ds.size(), 4u);
  EXPECT_EQ(*ds.labels, (std::vector<int>{0, 1, 2, 3}));
  for (std::size_t v = 0; v < 2; ++v) {
    for (Eigen::Index a = 0; a < 4; ++a) {
      for (Eigen::Index b = a + 1; b < 4; ++b) EXPECT_GT((ds.views[v].row(a) - ds.views[v].row(b)).norm(), 1e-6);
    }
  }
}

TEST(Synthetic, SameSeedIsBitIdentical) {
  SyntheticSpec spec;
  spec.n = 300;
  spec.seed = 5;
  const MultiViewDataset a = make_synthetic(spec), b = make_synthetic(spec);
  for (std::size_t v = 0; v < a.num_views(); ++v) EXPECT_TRUE(bit_identical(a.views[v], b.views[v]));
  EXPECT_EQ(*a.labels, *b.labels);
}

TEST(Synthetic, CompleteWithLabels) {
  const MultiViewDataset ds = make_synthetic(SyntheticSpec{});
  EXPECT_EQ(ds.observed, BinaryMask(2000, 2, true));
  EXPECT_EQ(std::count(ds.aligned.begin(), ds.aligned.end(), 1), 2000);
  ASSERT_TRUE(ds.labels);
  EXPECT_EQ(ds.view_dims(), (std::vector<std::size_t>{20, 20}));
}

TEST(Synthetic, RawKMeansSeparatesDefaultBlobs) {
  const MultiViewDataset ds = make_synthetic(SyntheticSpec{});
  Matrix both(2000, 40);
  both << ds.views[0], ds.views[1];
  const KMeansResult km = kmeans_restarts(both, 4, 5);
  std::vector<int> pred(km.labels.begin(), km.labels.end());
  EXPECT_GT(clustering_accuracy(pred, *ds.labels), 0.95);
}

TEST(Synthetic, ImbalancedCategorySizes) {
  const auto sizes = category_sizes(1000, 4, 4.0);
  EXPECT_EQ(std::accumulate(sizes.begin(), sizes.end(), std::size_t{0}), 1000u);
  EXPECT_EQ(sizes.front(), 100u);
  EXPECT_EQ(sizes.back(), 400u);
  EXPECT_EQ(category_sizes(8, 4, 1.0), (std::vector<std::size_t>{2, 2, 2, 2}));
  EXPECT_EQ(category_sizes(10, 4, 100.0).front(), 1u);
  EXPECT_THROW(category_sizes(3, 4, 1.0), ArgumentError);
}

TEST(Synthetic, RejectsInvalidSizes) {
  EXPECT_THROW(make_synthetic(3, 4, 2, {5}, 0.1, 0), ArgumentError);
  EXPECT_THROW(make_synthetic(10, 1, 2, {5}, 0.1, 0), ArgumentError);
  EXPECT_THROW(make_synthetic(10, 2, 0, {5}, 0.1, 0), ArgumentError);
  EXPECT_THROW(make_synthetic(10, 2, 2, {5, 0}, 0.1, 0), ArgumentError);
  EXPECT_THROW(make_synthetic(10, 2, 2, {5}, -1.0, 0), ArgumentError);
  SyntheticSpec spec;
  spec.map_correlation = 0.5;
  spec.d_views = {4, 5};
  EXPECT_THROW(make_synthetic(spec), ArgumentError);
}

TEST(Corrupt, ZeroRatesIsIdentity) {
  const MultiViewDataset ds = make_synthetic(50, 2, 3, {4, 4}, 0.1, 1);
  const MultiViewDataset out = corrupt(ds, {0.0, 0.0, std::nullopt, 3});
  EXPECT_EQ(out.observed, BinaryMask(50, 2, true));
  EXPECT_EQ(std::count(out.aligned.begin(), out.aligned.end(), 1), 50);
  for (std::size_t v = 0; v < 2; ++v) EXPECT_TRUE(bit_identical(out.views[v], ds.views[v]));
}

TEST(Corrupt, ExactUnalignedCount) {
  const MultiViewDataset ds = make_synthetic(10, 2, 2, {3, 3}, 0.1, 1);
  const MultiViewDataset out = corrupt(ds, {0.0, 0.5, std::nullopt, 9});
  EXPECT_EQ(std::count(out.aligned.begin(), out.aligned.end(), 0), 5);
}

TEST(Corrupt, RhoSplitsEvenly) {
  CorruptionSpec spec;
  spec.rho = 0.9;
  EXPECT_DOUBLE_EQ(spec.missing_rate(), 0.45);
  EXPECT_DOUBLE_EQ(spec.unaligned_rate(), 0.45);
  const MultiViewDataset ds = make_synthetic(200, 4, 3, {5, 5}, 0.1, 2);
  spec.rho = 0.5;
  const Rates r = rates(corrupt(ds, spec));
  EXPECT_NEAR(r.eta, 0.25, 1.0 / 200);
  EXPECT_NEAR(r.zeta, 0.25, 1.0 / 200);
}

TEST(Corrupt, OverfullRatesRejected) {
  const MultiViewDataset ds = make_synthetic(20, 2, 2, {3, 3}, 0.1, 1);
  EXPECT_THROW(corrupt(ds, {0.6, 0.6, std::nullopt, 0}), ArgumentError);
  EXPECT_THROW(corrupt(ds, {-0.1, 0.0, std::nullopt, 0}), ArgumentError);
}

TEST(Corrupt, InvariantsHoldAcrossSpecs) {
  const MultiViewDataset ds = make_synthetic(120, 3, 3, {4, 5, 6}, 0.1, 4);
  for (double eta : {0.0, 0.3, 0.5, 1.0}) {
    for (double zeta : {0.0, 0.2, 0.5}) {
      if (eta + zeta > 1.0) continue;
      for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const MultiViewDataset out = corrupt(ds, {eta, zeta, std::nullopt, seed});
        EXPECT_NO_THROW(validate(out));
        for (std::size_t i = 0; i < out.size(); ++i) {
          EXPECT_GE(out.observed.row_count(i), 1u);
          if (!out.aligned[i]) EXPECT_EQ(out.observed.row_count(i), 3u);  // missing and unaligned sets are disjoint
        }
        // Observed cells come from the input; hidden cells hold exactly the dropped rows.
        for (std::size_t v = 0; v < 3; ++v) {
          for (std::size_t r = 0; r < out.size(); ++r) {
            const auto src = static_cast<Eigen::Index>(out.true_perm[v][r]);
            const auto row = static_cast<Eigen::Index>(r);
            if (out.observed(r, v)) {
              EXPECT_EQ(out.views[v].row(row), ds.views[v].row(src));
              EXPECT_TRUE(out.hidden[v].row(row).array().isNaN().all());
            } else {
              EXPECT_TRUE(out.views[v].row(row).array().isNaN().all());
              EXPECT_EQ(out.hidden[v].row(row), ds.views[v].row(row));
            }
          }
        }
      }
    }
  }
}

TEST(Corrupt, TruePermIsBijectionOnUnalignedRows) {
  const MultiViewDataset ds = make_synthetic(100, 4, 3, {4, 4}, 0.1, 4);
  const MultiViewDataset out = corrupt(ds, {0.0, 0.6, std::nullopt, 8});
  std::set<std::size_t> unaligned, image;
  for (std::size_t i = 0; i < 100; ++i) {
    if (!out.aligned[i]) {
      unaligned.insert(i);
      image.insert(out.true_perm[1][i]);
    } else {
      EXPECT_EQ(out.true_perm[1][i], i);
    }
    EXPECT_EQ(out.true_perm[0][i], i);
  }
  EXPECT_EQ(unaligned, image);
}

TEST(Corrupt, Deterministic) {
  const MultiViewDataset ds = make_synthetic(80, 2, 3, {4, 4}, 0.1, 4);
  const CorruptionSpec spec{0.3, 0.3, std::nullopt, 21};
  EXPECT_TRUE(structurally_equal(corrupt(ds, spec), corrupt(ds, spec)));
}

TEST(Rates, CountsFromMasks) {
  MultiViewDataset ds = make_synthetic(10, 2, 2, {3, 3}, 0.1, 1);
  EXPECT_EQ(rates(ds).eta, 0.0);
  EXPECT_EQ(rates(ds).zeta, 0.0);
  for (std::size_t i : {1, 4, 7}) ds.observed.set(i, 1, false);
  EXPECT_DOUBLE_EQ(rates(ds).eta, 0.3);
}

TEST(RateCount, RoundsHalfUp) {
  EXPECT_EQ(rate_count(0.5, 10), 5u);
  EXPECT_EQ(rate_count(0.25, 10), 3u);
  EXPECT_EQ(rate_count(0.45, 2000), 900u);
}

TEST(Persistence, RoundTrip) {
  const MultiViewDataset ds = corrupt(make_synthetic(60, 3, 3, {4, 5}, 0.1, 2), {0.25, 0.25, std::nullopt, 5});
  const fs::path dir = scratch_dir("roundtrip");
  save_dataset(ds, dir);
  const MultiViewDataset back = load_dataset(dir);
  EXPECT_TRUE(structurally_equal(ds, back));
  for (std::size_t v = 0; v < 2; ++v) EXPECT_TRUE(bit_identical(ds.views[v], back.views[v]));

  const MultiViewDataset blind = load_dataset(dir, false);
  EXPECT_FALSE(blind.has_truth());
  EXPECT_EQ(blind.observed, ds.observed);
}

TEST(Persistence, MissingMaskIsAnError) {
  const fs::path dir = scratch_dir("nomask");
  save_dataset(make_synthetic(10, 2, 2, {3, 3}, 0.1, 2), dir);
  fs::remove(dir / "mask_E.csv");
  EXPECT_THROW(load_dataset(dir), ParseError);
}

TEST(Persistence, NonNumericCellNamesFileAndRow) {
  const fs::path dir = scratch_dir("badcell");
  save_dataset(make_synthetic(10, 2, 2, {3, 3}, 0.1, 2), dir);
  std::ifstream in(dir / "view_0.csv");
  std::vector<std::string> lines;
  for (std::string line; std::getline(in, line);) lines.push_back(line);
  in.close();
  lines[4] = "1.0,abc,2.0";
  std::ofstream out(dir / "view_0.csv");
  for (const auto& l : lines) out << l << '\n';
  out.close();
  try {
    load_dataset(dir);
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("view_0.csv:5"), std::string::npos) << msg;
  }
}

TEST(Persistence, ViewRowMustMatchMask) {
  const fs::path dir = scratch_dir("maskmismatch");
  save_dataset(corrupt(make_synthetic(10, 2, 2, {3, 3}, 0.1, 2), {1.0, 0.0, std::nullopt, 1}), dir);
  std::ifstream in(dir / "mask_E.csv");
  std::vector<std::string> lines;
  for (std::string line; std::getline(in, line);) lines.push_back(line);
  in.close();
  lines[0] = "1,1";
  std::ofstream out(dir / "mask_E.csv");
  for (const auto& l : lines) out << l << '\n';
  out.close();
  EXPECT_THROW(load_dataset(dir), ParseError);
}

TEST(Validate, InstanceWithoutObservedViewRejected) {
  MultiViewDataset ds = make_synthetic(10, 2, 2, {3, 3}, 0.1, 2);
  ds.observed.set(3, 0, false);
  ds.observed.set(3, 1, false);
  EXPECT_THROW(validate(ds), InvariantError);
}

TEST(StripTruth, RemovesEvaluationFields) {
  const MultiViewDataset ds = corrupt(make_synthetic(20, 2, 2, {3, 3}, 0.1, 2), {0.2, 0.2, std::nullopt, 1});
  const MultiViewDataset s = strip_truth(ds);
  EXPECT_FALSE(s.labels);
  EXPECT_TRUE(s.true_perm.empty());
  EXPECT_TRUE(s.hidden.empty());
  EXPECT_EQ(s.observed, ds.observed);
}
