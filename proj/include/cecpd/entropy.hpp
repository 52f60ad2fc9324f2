#pragma once

// Rank transform to pseudo-observations, Kozachenko-Leonenko kNN entropy
// under the Chebyshev norm, and the two-step copula entropy estimator built
// from them.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <string>
#include <type_traits>
#include <vector>

#include <boost/math/special_functions/digamma.hpp>

#include "cecpd/errors.hpp"
#include "cecpd/matrix.hpp"

namespace cecpd {

using Seed = std::uint64_t;

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t hash_combine(std::uint64_t h, std::uint64_t v) {
  return splitmix64(h ^ splitmix64(v));
}

}  // namespace detail

// Normalized ranks of a sample. Ranks are stored as integers in 1..n so that
// neighbor distances between pseudo-observations are exact.
class PseudoObservations {
 public:
  PseudoObservations(std::size_t n, std::size_t d, std::vector<std::uint32_t> ranks)
      : n_(n), d_(d), ranks_(std::move(ranks)) {}

  std::size_t rows() const { return n_; }
  std::size_t cols() const { return d_; }
  std::size_t source_n() const { return n_; }

  std::uint32_t rank(std::size_t i, std::size_t j) const { return ranks_[i * d_ + j]; }
  double operator()(std::size_t i, std::size_t j) const {
    return static_cast<double>(rank(i, j)) / static_cast<double>(n_);
  }
  std::span<const std::uint32_t> ranks() const { return ranks_; }

  // Values in (0, 1] as a real matrix.
  SampleMatrix values() const {
    std::vector<double> v(ranks_.size());
    for (std::size_t i = 0; i < ranks_.size(); ++i) {
      v[i] = static_cast<double>(ranks_[i]) / static_cast<double>(n_);
    }
    return {n_, d_, std::move(v)};
  }

  friend bool operator==(const PseudoObservations&, const PseudoObservations&) = default;

 private:
  std::size_t n_;
  std::size_t d_;
  std::vector<std::uint32_t> ranks_;
};

namespace detail {

// Tie structure of one column: coarse[i] counts entries strictly below row i,
// ordinal[i] is the index of row i's distinct value, groups the number of
// distinct values.
struct ColumnTies {
  std::vector<std::uint32_t> coarse;
  std::vector<std::uint32_t> ordinal;
  std::uint32_t groups = 0;

  bool tie_free() const { return groups == coarse.size(); }
};

template <typename Value>
ColumnTies column_ties(std::size_t n, Value&& value) {
  ColumnTies ties{std::vector<std::uint32_t>(n), std::vector<std::uint32_t>(n), 0};
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return value(a) < value(b); });
  std::uint32_t g = 0;
  std::uint32_t first = 0;
  for (std::size_t p = 0; p < n; ++p) {
    if (p > 0 && value(order[p]) != value(order[p - 1])) {
      ++g;
      first = static_cast<std::uint32_t>(p);
    }
    ties.coarse[order[p]] = first;
    ties.ordinal[order[p]] = g;
  }
  ties.groups = n == 0 ? 0 : g + 1;
  return ties;
}

// Seeded tie-break fingerprint of every row for column `column`: a hash of
// the coarse ranks of all other columns.
inline std::vector<std::uint64_t> tie_fingerprints(Seed seed, std::size_t column,
                                                   const std::vector<ColumnTies>& all) {
  const std::size_t n = all.front().coarse.size();
  const std::uint64_t base = hash_combine(splitmix64(seed), column);
  std::vector<std::uint64_t> fingerprint(n, base);
  for (std::size_t c = 0; c < all.size(); ++c) {
    if (c == column) continue;
    for (std::size_t i = 0; i < n; ++i) fingerprint[i] = hash_combine(fingerprint[i], all[c].coarse[i]);
  }
  return fingerprint;
}

// Writes ranks 1..n of one column into out[i * stride]. Ties are ordered by
// hash(fingerprint, occurrence among rows with equal value and fingerprint);
// groups in the upper half of the value order use the complemented key.
inline void break_ties(const ColumnTies& ties, std::span<const std::uint64_t> fingerprint,
                       std::span<std::uint32_t> out, std::size_t stride, std::size_t offset) {
  const std::size_t n = ties.coarse.size();
  if (ties.tie_free()) {
    for (std::size_t i = 0; i < n; ++i) out[i * stride + offset] = ties.coarse[i] + 1;
    return;
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (ties.coarse[a] != ties.coarse[b]) return ties.coarse[a] < ties.coarse[b];
    if (fingerprint[a] != fingerprint[b]) return fingerprint[a] < fingerprint[b];
    return a < b;
  });
  std::vector<std::uint64_t> key(n);
  std::uint64_t occurrence = 0;
  for (std::size_t p = 0; p < n; ++p) {
    const std::size_t i = order[p];
    if (p > 0) {
      const std::size_t prev = order[p - 1];
      const bool same = ties.coarse[prev] == ties.coarse[i] && fingerprint[prev] == fingerprint[i];
      occurrence = same ? occurrence + 1 : 0;
    }
    std::uint64_t k = hash_combine(fingerprint[i], occurrence);
    if (2 * std::uint64_t{ties.ordinal[i]} > ties.groups - 1) k = ~k;
    key[i] = k;
  }
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (ties.coarse[a] != ties.coarse[b]) return ties.coarse[a] < ties.coarse[b];
    if (key[a] != key[b]) return key[a] < key[b];
    return a < b;
  });
  for (std::size_t p = 0; p < n; ++p) out[order[p] * stride + offset] = static_cast<std::uint32_t>(p + 1);
}

}  // namespace detail

// Column-wise ranks divided by n.
//
// Tied values are ordered by a seeded key, which is equivalent to adding a
// uniform perturbation smaller than every nonzero gap in the column. The key
// of row i in column j hashes (seed, j, the coarse ranks of row i in every
// other column, occurrence among fully identical rows). It therefore depends
// on neither row position nor the raw values, so the transform is invariant
// under row shuffles and strictly increasing per-column maps. Tie groups in
// the upper half of a column are ordered by the complemented key, which makes
// a two-valued column reflect exactly when its values are swapped.
inline PseudoObservations rank_transform(const SampleMatrix& x, Seed seed) {
  const std::size_t n = x.rows();
  const std::size_t d = x.cols();
  if (n < 2) throw ConfigError("rank_transform: need at least 2 observations, got " + std::to_string(n));

  std::vector<detail::ColumnTies> ties;
  ties.reserve(d);
  for (std::size_t j = 0; j < d; ++j) {
    ties.push_back(detail::column_ties(n, [&](std::size_t i) { return x(i, j); }));
  }
  std::vector<std::uint32_t> ranks(n * d);
  for (std::size_t j = 0; j < d; ++j) {
    std::vector<std::uint64_t> fingerprint;
    if (!ties[j].tie_free()) fingerprint = detail::tie_fingerprints(seed, j, ties);
    detail::break_ties(ties[j], fingerprint, ranks, d, j);
  }
  return {n, d, std::move(ranks)};
}

struct EntropyEstimate {
  double value = 0.0;  // nats
  std::size_t k_used = 0;
  std::size_t n_used = 0;
};

enum class NeighborSearch { brute_force, sorted_sweep };

namespace detail {

template <typename T>
using distance_t = std::conditional_t<std::is_integral_v<T>, std::int64_t, T>;

template <typename T>
distance_t<T> chebyshev(std::span<const T> data, std::size_t d, std::size_t a, std::size_t b) {
  distance_t<T> best = 0;
  for (std::size_t c = 0; c < d; ++c) {
    const auto diff = static_cast<distance_t<T>>(data[a * d + c]) - static_cast<distance_t<T>>(data[b * d + c]);
    const auto mag = diff < 0 ? -diff : diff;
    if (mag > best) best = mag;
  }
  return best;
}

}  // namespace detail

// Chebyshev distance from every point to its k-th nearest other point.
// O(n^2); the reference for every faster search.
template <typename T>
std::vector<detail::distance_t<T>> kth_neighbor_distances_brute(std::span<const T> data, std::size_t d,
                                                                std::size_t k) {
  using D = detail::distance_t<T>;
  const std::size_t n = data.size() / d;
  if (k == 0 || n <= k) throw ConfigError("kth_neighbor_distances: need n > k >= 1");
  std::vector<D> out(n);
  std::vector<D> dist(n - 1);
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t m = 0;
    for (std::size_t j = 0; j < n; ++j) {
      if (j != i) dist[m++] = detail::chebyshev(data, d, i, j);
    }
    std::nth_element(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(k - 1), dist.end());
    out[i] = dist[k - 1];
  }
  return out;
}

// Same result as the brute-force search. Points are sorted along the first
// coordinate and each query walks outward from its own position, stopping a
// direction once the first-coordinate gap alone reaches the current k-th
// distance.
template <typename T>
std::vector<detail::distance_t<T>> kth_neighbor_distances_sweep(std::span<const T> data, std::size_t d,
                                                                std::size_t k) {
  using D = detail::distance_t<T>;
  const std::size_t n = data.size() / d;
  if (k == 0 || n <= k) throw ConfigError("kth_neighbor_distances: need n > k >= 1");
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return data[a * d] < data[b * d]; });

  auto gap = [&](std::size_t a, std::size_t b) {
    const auto diff = static_cast<D>(data[a * d]) - static_cast<D>(data[b * d]);
    return diff < 0 ? -diff : diff;
  };

  std::vector<D> out(n);
  std::vector<D> best;  // ascending, at most k entries
  best.reserve(k + 1);
  for (std::size_t p = 0; p < n; ++p) {
    const std::size_t i = order[p];
    best.clear();
    std::size_t left = p;       // next candidate is left - 1
    std::size_t right = p + 1;  // next candidate is right
    bool left_open = left > 0;
    bool right_open = right < n;
    while (left_open || right_open) {
      bool take_left = left_open;
      if (left_open && right_open) take_left = gap(order[left - 1], i) <= gap(order[right], i);
      const std::size_t j = take_left ? order[left - 1] : order[right];
      if (best.size() == k && gap(j, i) >= best.back()) {
        // Every remaining candidate on this side is at least as far.
        if (take_left) left_open = false; else right_open = false;
        continue;
      }
      const D dist = detail::chebyshev(data, d, i, j);
      if (best.size() < k || dist < best.back()) {
        best.insert(std::upper_bound(best.begin(), best.end(), dist), dist);
        if (best.size() > k) best.pop_back();
      }
      if (take_left) {
        --left;
        left_open = left > 0;
      } else {
        ++right;
        right_open = right < n;
      }
    }
    out[i] = best.back();
  }
  return out;
}

template <typename T>
std::vector<detail::distance_t<T>> kth_neighbor_distances(std::span<const T> data, std::size_t d, std::size_t k,
                                                          NeighborSearch search) {
  return search == NeighborSearch::brute_force ? kth_neighbor_distances_brute(data, d, k)
                                               : kth_neighbor_distances_sweep(data, d, k);
}

namespace detail {

// psi(n) - psi(k) + (d/n) * sum log(2 r_i). Distances are summed in ascending
// order so the result does not depend on row order.
template <typename D>
double kl_entropy_from_distances(std::vector<D> dist, std::size_t d, std::size_t k, double scale) {
  const std::size_t n = dist.size();
  std::sort(dist.begin(), dist.end());
  if (dist.front() <= D{0}) {
    throw ConfigError("knn_entropy: zero k-th neighbor distance (duplicated points)");
  }
  double sum = 0.0;
  for (const D r : dist) sum += std::log(2.0 * (static_cast<double>(r) / scale));
  return boost::math::digamma(static_cast<double>(n)) - boost::math::digamma(static_cast<double>(k)) +
         static_cast<double>(d) * sum / static_cast<double>(n);
}

}  // namespace detail

// Kozachenko-Leonenko differential entropy (nats) under the max norm.
inline EntropyEstimate knn_entropy(const SampleMatrix& u, std::size_t k,
                                   NeighborSearch search = NeighborSearch::sorted_sweep) {
  if (k == 0) throw ConfigError("knn_entropy: k must be positive");
  if (u.rows() <= k) {
    throw ConfigError("knn_entropy: need n > k (n=" + std::to_string(u.rows()) + ", k=" + std::to_string(k) + ")");
  }
  auto dist = kth_neighbor_distances(u.data(), u.cols(), k, search);
  return {detail::kl_entropy_from_distances(std::move(dist), u.cols(), k, 1.0), k, u.rows()};
}

// Entropy of pseudo-observations, with neighbor distances taken on the
// integer ranks and rescaled by 1/n.
inline EntropyEstimate knn_entropy(const PseudoObservations& u, std::size_t k,
                                   NeighborSearch search = NeighborSearch::sorted_sweep) {
  if (k == 0) throw ConfigError("knn_entropy: k must be positive");
  if (u.rows() <= k) {
    throw ConfigError("knn_entropy: need n > k (n=" + std::to_string(u.rows()) + ", k=" + std::to_string(k) + ")");
  }
  auto dist = kth_neighbor_distances(u.ranks(), u.cols(), k, search);
  return {detail::kl_entropy_from_distances(std::move(dist), u.cols(), k, static_cast<double>(u.rows())), k,
          u.rows()};
}

// Copula entropy H_c = -integral c log c, estimated as the kNN entropy of the
// pseudo-observations. Equals minus the mutual information among columns.
inline EntropyEstimate copula_entropy(const SampleMatrix& x, std::size_t k, Seed seed,
                                      NeighborSearch search = NeighborSearch::sorted_sweep) {
  if (k == 0) throw ConfigError("copula_entropy: k must be positive");
  if (x.rows() <= k) {
    throw ConfigError("copula_entropy: need n > k (n=" + std::to_string(x.rows()) + ", k=" + std::to_string(k) +
                      ")");
  }
  return knn_entropy(rank_transform(x, seed), k, search);
}

}  // namespace cecpd
