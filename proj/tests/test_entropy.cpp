#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <set>

#include "cecpd/entropy.hpp"
#include "oracles.hpp"

using namespace cecpd;

namespace {

std::vector<double> rank_column(const PseudoObservations& u, std::size_t j) {
  std::vector<double> v;
  for (std::size_t i = 0; i < u.rows(); ++i) v.push_back(u(i, j));
  return v;
}

bool is_grid_permutation(const PseudoObservations& u, std::size_t j) {
  std::vector<std::uint32_t> r;
  for (std::size_t i = 0; i < u.rows(); ++i) r.push_back(u.rank(i, j));
  std::sort(r.begin(), r.end());
  for (std::size_t i = 0; i < r.size(); ++i) {
    if (r[i] != i + 1) return false;
  }
  return true;
}

}  // namespace

TEST(RankTransform, DistinctValues) {
  const auto u = rank_transform(SampleMatrix::column_vector({3, 1, 2}), 0);
  EXPECT_DOUBLE_EQ(u(0, 0), 1.0);
  EXPECT_DOUBLE_EQ(u(1, 0), 1.0 / 3.0);
  EXPECT_DOUBLE_EQ(u(2, 0), 2.0 / 3.0);
}

TEST(RankTransform, IncreasingSequenceIsTheGrid) {
  std::vector<double> v(37);
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = std::exp(0.1 * static_cast<double>(i)) - 5.0;
  const auto u = rank_transform(SampleMatrix::column_vector(v), 11);
  for (std::size_t i = 0; i < v.size(); ++i) EXPECT_EQ(u.rank(i, 0), i + 1);
}

TEST(RankTransform, ConstantColumnIsDeterministicPermutation) {
  const auto x = SampleMatrix::column_vector({5, 5, 5});
  const auto a = rank_transform(x, 42);
  const auto b = rank_transform(x, 42);
  EXPECT_EQ(a, b);
  EXPECT_TRUE(is_grid_permutation(a, 0));
}

TEST(RankTransform, TiedColumnsArePermutationsInUnitInterval) {
  for (unsigned s = 0; s < 20; ++s) {
    const auto x = oracle::tied_matrix(60, 3, 4, s);
    const auto u = rank_transform(x, s);
    for (std::size_t j = 0; j < 3; ++j) {
      EXPECT_TRUE(is_grid_permutation(u, j));
      for (double v : rank_column(u, j)) {
        EXPECT_GT(v, 0.0);
        EXPECT_LE(v, 1.0);
      }
    }
  }
}

TEST(RankTransform, TieBreakingRespectsValueOrder) {
  const auto x = oracle::tied_matrix(80, 2, 5, 3);
  const auto u = rank_transform(x, 9);
  for (std::size_t j = 0; j < 2; ++j) {
    for (std::size_t a = 0; a < x.rows(); ++a) {
      for (std::size_t b = 0; b < x.rows(); ++b) {
        if (x(a, j) < x(b, j)) EXPECT_LT(u.rank(a, j), u.rank(b, j));
      }
    }
  }
}

TEST(RankTransform, MatchesSortOracleWithoutTies) {
  const auto x = oracle::normal_matrix(200, 3, 5);
  const auto u = rank_transform(x, 1);
  for (std::size_t j = 0; j < 3; ++j) {
    const auto r = oracle::ranks(x.column(j));
    for (std::size_t i = 0; i < x.rows(); ++i) EXPECT_EQ(u.rank(i, j), r[i]);
  }
}

TEST(RankTransform, RowPermutationMovesRanksWithRows) {
  for (unsigned s = 0; s < 10; ++s) {
    const auto x = oracle::tied_matrix(50, 3, 3, s);
    const auto y = oracle::permute_rows(x, s + 100);
    const auto ux = rank_transform(x, s);
    const auto uy = rank_transform(y, s);
    // Identical rows may swap ranks among themselves; compare the multiset of
    // (row values, ranks) pairs.
    std::multiset<std::vector<double>> px, py;
    for (std::size_t i = 0; i < x.rows(); ++i) {
      std::vector<double> a, b;
      for (std::size_t j = 0; j < 3; ++j) {
        a.insert(a.end(), {x(i, j), static_cast<double>(ux.rank(i, j))});
        b.insert(b.end(), {y(i, j), static_cast<double>(uy.rank(i, j))});
      }
      px.insert(a);
      py.insert(b);
    }
    EXPECT_EQ(px, py);
  }
}

TEST(RankTransform, RejectsSingleObservation) {
  EXPECT_THROW(rank_transform(SampleMatrix::column_vector({1.0}), 0), ConfigError);
}

TEST(NeighborSearch, SweepMatchesBruteForceOnReals) {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 60; ++trial) {
    const std::size_t n = 5 + rng() % 150;
    const std::size_t d = 1 + rng() % 4;
    const std::size_t k = 1 + rng() % std::min<std::size_t>(5, n - 1);
    const auto x = oracle::normal_matrix(n, d, static_cast<unsigned>(rng()));
    EXPECT_EQ(kth_neighbor_distances(x.data(), d, k, NeighborSearch::brute_force),
              kth_neighbor_distances(x.data(), d, k, NeighborSearch::sorted_sweep));
  }
}

TEST(NeighborSearch, SweepMatchesBruteForceOnRanksWithTies) {
  std::mt19937_64 rng(23);
  for (int trial = 0; trial < 60; ++trial) {
    const std::size_t n = 5 + rng() % 150;
    const std::size_t d = 1 + rng() % 4;
    const auto u = rank_transform(oracle::tied_matrix(n, d, 3, static_cast<unsigned>(rng())), rng());
    for (std::size_t k : {1, 2, 3}) {
      EXPECT_EQ(kth_neighbor_distances(u.ranks(), d, k, NeighborSearch::brute_force),
                kth_neighbor_distances(u.ranks(), d, k, NeighborSearch::sorted_sweep));
    }
  }
}

TEST(KnnEntropy, MatchesIndependentOracle) {
  for (unsigned s = 0; s < 10; ++s) {
    const auto x = oracle::normal_matrix(300, 1 + s % 3, s);
    for (std::size_t k : {1, 3, 5}) {
      EXPECT_NEAR(knn_entropy(x, k).value, oracle::kl_entropy(x, k), 1e-10);
      EXPECT_NEAR(knn_entropy(x, k, NeighborSearch::brute_force).value, oracle::kl_entropy(x, k), 1e-10);
    }
  }
}

TEST(KnnEntropy, PseudoObservationsMatchRealValuedPath) {
  const auto u = rank_transform(oracle::normal_matrix(150, 3, 4), 0);
  EXPECT_NEAR(knn_entropy(u, 3).value, knn_entropy(u.values(), 3).value, 1e-12);
  EXPECT_NEAR(knn_entropy(u, 3).value, oracle::kl_entropy(u.values(), 3), 1e-10);
}

TEST(KnnEntropy, GaussianOracle) {
  double mean = 0.0;
  for (unsigned s = 0; s < 10; ++s) mean += knn_entropy(oracle::normal_matrix(5000, 1, 1000 + s), 3).value;
  EXPECT_NEAR(mean / 10.0, oracle::gaussian_entropy(1.0), 0.05);
}

TEST(KnnEntropy, UniformOracle) {
  double mean = 0.0;
  for (unsigned s = 0; s < 10; ++s) mean += knn_entropy(oracle::uniform_matrix(5000, 1, 2000 + s), 3).value;
  EXPECT_NEAR(mean / 10.0, 0.0, 0.05);
}

TEST(KnnEntropy, ScalingLaw) {
  for (unsigned s = 0; s < 20; ++s) {
    const std::size_t d = 1 + s % 4;
    const auto x = oracle::normal_matrix(200, d, s);
    for (double c : {0.001, 0.37, 2.0, 1e4}) {
      std::vector<double> v(x.data().begin(), x.data().end());
      for (auto& e : v) e *= c;
      const SampleMatrix y(x.rows(), d, std::move(v));
      EXPECT_NEAR(knn_entropy(y, 3).value, knn_entropy(x, 3).value + static_cast<double>(d) * std::log(c), 1e-12);
    }
  }
}

TEST(KnnEntropy, RowPermutationInvariant) {
  for (unsigned s = 0; s < 20; ++s) {
    const auto x = oracle::normal_matrix(120, 2, s);
    EXPECT_EQ(knn_entropy(x, 3).value, knn_entropy(oracle::permute_rows(x, s + 7), 3).value);
  }
}

TEST(KnnEntropy, Errors) {
  EXPECT_THROW(knn_entropy(oracle::normal_matrix(3, 1, 0), 3), ConfigError);
  EXPECT_THROW(knn_entropy(oracle::normal_matrix(10, 1, 0), 0), ConfigError);
  EXPECT_THROW(knn_entropy(SampleMatrix::column_vector({1, 1, 1, 1, 2}), 2), ConfigError);
}

TEST(CopulaEntropy, IndependentUniformsNearZero) {
  double mean = 0.0;
  for (unsigned s = 0; s < 10; ++s) mean += copula_entropy(oracle::uniform_matrix(1000, 2, s), 3, s).value;
  EXPECT_NEAR(mean / 10.0, 0.0, 0.1);
}

TEST(CopulaEntropy, GaussianOracle) {
  double mean = 0.0;
  for (unsigned s = 0; s < 10; ++s) mean += copula_entropy(oracle::correlated_normal(1000, 0.9, s), 3, s).value;
  EXPECT_NEAR(mean / 10.0, oracle::gaussian_copula_entropy(0.9), 0.1);
}

TEST(CopulaEntropy, EqualsEntropyOfRanks) {
  const auto x = oracle::tied_matrix(200, 3, 6, 1);
  EXPECT_EQ(copula_entropy(x, 3, 5).value, knn_entropy(rank_transform(x, 5), 3).value);
}

TEST(CopulaEntropy, MonotoneTransformInvariantExactly) {
  for (unsigned s = 0; s < 100; ++s) {
    const auto x = oracle::normal_matrix(40 + s % 60, 1 + s % 3, s);
    EXPECT_EQ(copula_entropy(x, 3, s).value, copula_entropy(oracle::monotone_transform(x), 3, s).value);
  }
}

TEST(CopulaEntropy, RowPermutationInvariantWithTies) {
  for (unsigned s = 0; s < 30; ++s) {
    const auto x = oracle::tied_matrix(90, 2, 4, s);
    // Append a continuous column so no two rows coincide.
    std::vector<double> extra(90);
    std::mt19937_64 rng(s);
    for (auto& e : extra) e = std::generate_canonical<double, 53>(rng);
    const auto y = x.with_column(extra);
    EXPECT_EQ(copula_entropy(y, 3, s).value, copula_entropy(oracle::permute_rows(y, s + 3), 3, s).value);
  }
}

TEST(CopulaEntropy, OneDimensionalIsRankGridEntropy) {
  const auto x = oracle::normal_matrix(100, 1, 0);
  std::vector<double> grid(100);
  std::iota(grid.begin(), grid.end(), 1.0);
  for (auto& g : grid) g /= 100.0;
  EXPECT_NEAR(copula_entropy(x, 3, 0).value, oracle::kl_entropy(SampleMatrix::column_vector(grid), 3), 1e-12);
}
