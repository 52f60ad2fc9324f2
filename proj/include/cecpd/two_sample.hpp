#pragma once

// Copula-entropy two-sample statistic. The pooled sample is augmented with a
// label column, once with the constant labeling (no group structure) and once
// with the 0/1 group labeling; the statistic is the difference of the two
// joint copula entropies. It is near zero when both samples share a
// distribution and grows with the dependence between data and group label.

#include <algorithm>
#include <string>
#include <vector>

#include "cecpd/entropy.hpp"
#include "cecpd/errors.hpp"
#include "cecpd/matrix.hpp"

namespace cecpd {

struct Labels {
  std::vector<double> constant;  // all ones, length m + n
  std::vector<double> grouped;   // m zeros then n ones
};

inline Labels build_labels(std::size_t m, std::size_t n) {
  if (m == 0 || n == 0) throw ConfigError("build_labels: both groups must be non-empty");
  Labels labels{std::vector<double>(m + n, 1.0), std::vector<double>(m + n, 1.0)};
  std::fill_n(labels.grouped.begin(), m, 0.0);
  return labels;
}

struct TestStatistic {
  double value = 0.0;  // nats
  std::size_t m = 0;
  std::size_t n = 0;
};

namespace detail {

inline void check_two_sample(const SampleMatrix& x1, const SampleMatrix& x2, std::size_t k) {
  if (x1.cols() != x2.cols()) {
    throw ConfigError("tce: dimension mismatch (" + std::to_string(x1.cols()) + " vs " +
                      std::to_string(x2.cols()) + ")");
  }
  if (k == 0) throw ConfigError("tce: k must be positive");
  if (x1.rows() + x2.rows() <= k) {
    throw ConfigError("tce: pooled sample of " + std::to_string(x1.rows() + x2.rows()) +
                      " rows is too small for k=" + std::to_string(k));
  }
}

inline Seed draw_seed(Seed seed, std::size_t r) { return r == 0 ? seed : hash_combine(seed, r); }

}  // namespace detail

// H_c(X, Y0) - H_c(X, Y1) for the pooled sample X = (x1; x2), averaged over
// `repeats` independent tie-breaking draws of the label columns. Draw 0 uses
// `seed` itself.
inline TestStatistic tce(const SampleMatrix& x1, const SampleMatrix& x2, std::size_t k, Seed seed,
                         std::size_t repeats = 1, NeighborSearch search = NeighborSearch::sorted_sweep) {
  detail::check_two_sample(x1, x2, k);
  if (repeats == 0) throw ConfigError("tce: repeats must be positive");
  const auto pooled = SampleMatrix::stack(x1, x2);
  const auto labels = build_labels(x1.rows(), x2.rows());
  const auto with_null = pooled.with_column(labels.constant);
  const auto with_groups = pooled.with_column(labels.grouped);
  double sum = 0.0;
  for (std::size_t r = 0; r < repeats; ++r) {
    const Seed draw = detail::draw_seed(seed, r);
    sum += copula_entropy(with_null, k, draw, search).value - copula_entropy(with_groups, k, draw, search).value;
  }
  return {sum / static_cast<double>(repeats), x1.rows(), x2.rows()};
}

// Statistic of every split point of one pooled sample. The data ranks, the
// label-column tie keys and the constant-label entropy do not depend on the
// split, so they are computed once; each split then only re-ranks the group
// label column. Results are bit-identical to tce() on the two slices. Data
// columns with ties fall back to tce() directly.
class SplitScanner {
 public:
  SplitScanner(SampleMatrix pooled, std::size_t k, Seed seed, std::size_t repeats = 1,
               NeighborSearch search = NeighborSearch::sorted_sweep)
      : pooled_(std::move(pooled)), k_(k), seed_(seed), repeats_(repeats), search_(search) {
    if (repeats_ == 0) throw ConfigError("SplitScanner: repeats must be positive");
    if (k_ == 0 || pooled_.rows() <= k_) throw ConfigError("SplitScanner: pooled sample too small for k");
    const std::size_t n = pooled_.rows();
    const std::size_t d = pooled_.cols();
    for (std::size_t j = 0; j < d; ++j) {
      data_ties_.push_back(detail::column_ties(n, [&](std::size_t i) { return pooled_(i, j); }));
      if (!data_ties_.back().tie_free()) return;
    }
    fast_ = true;
    const detail::ColumnTies constant{std::vector<std::uint32_t>(n, 0), std::vector<std::uint32_t>(n, 0), 1};
    for (std::size_t r = 0; r < repeats_; ++r) {
      fingerprints_.push_back(detail::tie_fingerprints(detail::draw_seed(seed_, r), d, data_ties_));
      null_entropy_.push_back(entropy_with_label(constant, fingerprints_.back()));
    }
  }

  std::size_t size() const { return pooled_.rows(); }

  // First m rows against the remaining size() - m.
  TestStatistic at(std::size_t m) const {
    const std::size_t n = pooled_.rows();
    if (m == 0 || m >= n) throw ConfigError("SplitScanner: split must leave both groups non-empty");
    if (!fast_) return tce(pooled_.slice(0, m), pooled_.slice(m, n), k_, seed_, repeats_, search_);
    detail::ColumnTies grouped{std::vector<std::uint32_t>(n, 0), std::vector<std::uint32_t>(n, 0), 2};
    for (std::size_t i = m; i < n; ++i) {
      grouped.coarse[i] = static_cast<std::uint32_t>(m);
      grouped.ordinal[i] = 1;
    }
    double sum = 0.0;
    for (std::size_t r = 0; r < repeats_; ++r) {
      sum += null_entropy_[r] - entropy_with_label(grouped, fingerprints_[r]);
    }
    return {sum / static_cast<double>(repeats_), m, n - m};
  }

 private:
  double entropy_with_label(const detail::ColumnTies& label, const std::vector<std::uint64_t>& fingerprint) const {
    const std::size_t n = pooled_.rows();
    const std::size_t d = pooled_.cols();
    std::vector<std::uint32_t> ranks(n * (d + 1));
    for (std::size_t j = 0; j < d; ++j) detail::break_ties(data_ties_[j], {}, ranks, d + 1, j);
    detail::break_ties(label, fingerprint, ranks, d + 1, d);
    return knn_entropy(PseudoObservations(n, d + 1, std::move(ranks)), k_, search_).value;
  }

  SampleMatrix pooled_;
  std::size_t k_;
  Seed seed_;
  std::size_t repeats_;
  NeighborSearch search_;
  bool fast_ = false;
  std::vector<detail::ColumnTies> data_ties_;
  std::vector<std::vector<std::uint64_t>> fingerprints_;
  std::vector<double> null_entropy_;
};

}  // namespace cecpd
