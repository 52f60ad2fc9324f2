#pragma once

// Single change-point detection as the argmax of the two-sample statistic
// over all admissible splits, and multiple detection by threshold-gated
// binary segmentation.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <exception>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "cecpd/entropy.hpp"
#include "cecpd/errors.hpp"
#include "cecpd/matrix.hpp"
#include "cecpd/two_sample.hpp"

namespace cecpd {

struct DetectorConfig {
  std::size_t k = 3;
  double threshold = 0.13;
  std::size_t min_seg = 10;
  Seed seed = 0;
  std::size_t repeats = 30;  // tie-breaking draws averaged per statistic
  std::optional<std::size_t> max_depth;  // unlimited when empty
  std::size_t threads = 1;               // 0 = hardware concurrency
  NeighborSearch search = NeighborSearch::sorted_sweep;

  void validate() const {
    if (k == 0) throw ConfigError("k must be positive");
    if (min_seg <= k) {
      throw ConfigError("min_seg (" + std::to_string(min_seg) + ") must exceed k (" + std::to_string(k) + ")");
    }
    if (!std::isfinite(threshold)) throw ConfigError("threshold must be finite");
    if (max_depth && *max_depth == 0) throw ConfigError("max_depth must be positive");
    if (repeats == 0) throw ConfigError("repeats must be positive");
  }

  friend bool operator==(const DetectorConfig&, const DetectorConfig&) = default;
};

// Statistic at one split. `split` is the 0-based index of the last
// observation of the left group; the candidate change point is split + 1.
struct ProfilePoint {
  std::size_t split = 0;
  double statistic = 0.0;

  friend bool operator==(const ProfilePoint&, const ProfilePoint&) = default;
};

struct TestProfile {
  std::size_t first = 0;  // inclusive, 0-based
  std::size_t last = 0;   // inclusive, 0-based
  std::vector<ProfilePoint> stats;

  bool empty() const { return stats.empty(); }

  // Maximal statistic, ties resolved toward the smallest split.
  std::optional<ProfilePoint> argmax() const {
    if (stats.empty()) return std::nullopt;
    ProfilePoint best = stats.front();
    for (const auto& p : stats) {
      if (p.statistic > best.statistic) best = p;
    }
    return best;
  }

  friend bool operator==(const TestProfile&, const TestProfile&) = default;
};

struct ChangePoint {
  std::size_t index = 0;  // 0-based first observation of the new regime
  double statistic = 0.0;
  std::size_t depth = 0;  // 0 for the whole series
  std::size_t segment_first = 0;
  std::size_t segment_last = 0;

  friend bool operator==(const ChangePoint&, const ChangePoint&) = default;
};

struct Segmentation {
  std::vector<ChangePoint> points;  // ascending by index
  std::size_t series_length = 0;
  DetectorConfig config;
  std::vector<TestProfile> profiles;  // every examined segment, discovery order

  std::vector<std::size_t> indices() const {
    std::vector<std::size_t> out;
    for (const auto& p : points) out.push_back(p.index);
    return out;
  }

  friend bool operator==(const Segmentation&, const Segmentation&) = default;
};

namespace detail {

template <typename Fn>
void parallel_for(std::size_t count, std::size_t threads, Fn&& fn) {
  if (threads == 0) threads = std::max<std::size_t>(1, std::thread::hardware_concurrency());
  threads = std::min(threads, count);
  if (threads <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::atomic<bool> failed{false};
  {
    std::vector<std::jthread> pool;
    pool.reserve(threads);
    for (std::size_t t = 0; t < threads; ++t) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < count && !failed; i = next++) {
          try {
            fn(i);
          } catch (...) {
            if (!failed.exchange(true)) failure = std::current_exception();
          }
        }
      });
    }
  }
  if (failure) std::rethrow_exception(failure);
}

}  // namespace detail

// Statistic for every split of rows [first, last] that leaves at least
// min_seg observations on each side. Empty when the segment is shorter than
// 2 * min_seg.
inline TestProfile profile(const SampleMatrix& series, std::size_t first, std::size_t last,
                           const DetectorConfig& cfg) {
  cfg.validate();
  if (last < first || last >= series.rows()) throw ConfigError("profile: segment out of range");
  TestProfile out{first, last, {}};
  const std::size_t length = last - first + 1;
  if (length < 2 * cfg.min_seg) return out;

  const std::size_t lo = first + cfg.min_seg - 1;
  const std::size_t hi = last - cfg.min_seg;
  out.stats.resize(hi - lo + 1);
  const SplitScanner scanner(series.slice(first, last + 1), cfg.k, cfg.seed, cfg.repeats, cfg.search);
  detail::parallel_for(out.stats.size(), cfg.threads, [&](std::size_t s) {
    const std::size_t split = lo + s;
    out.stats[s] = {split, scanner.at(split - first + 1).value};
  });
  return out;
}

inline TestProfile profile(const SampleMatrix& series, const DetectorConfig& cfg) {
  return profile(series, 0, series.rows() - 1, cfg);
}

namespace detail {

inline std::optional<ChangePoint> gate(const TestProfile& prof, const DetectorConfig& cfg, std::size_t depth) {
  const auto best = prof.argmax();
  if (!best || !(best->statistic > cfg.threshold)) return std::nullopt;
  return ChangePoint{best->split + 1, best->statistic, depth, prof.first, prof.last};
}

inline void segment_recursive(const SampleMatrix& series, std::size_t first, std::size_t last, std::size_t depth,
                              const DetectorConfig& cfg, Segmentation& out) {
  if (cfg.max_depth && depth >= *cfg.max_depth) return;
  if (last - first + 1 < 2 * cfg.min_seg) return;
  auto prof = profile(series, first, last, cfg);
  const auto found = gate(prof, cfg, depth);
  out.profiles.push_back(std::move(prof));
  if (!found) return;
  out.points.push_back(*found);
  segment_recursive(series, first, found->index - 1, depth + 1, cfg, out);
  segment_recursive(series, found->index, last, depth + 1, cfg, out);
}

}  // namespace detail

// Split with the largest statistic over the whole series, if it exceeds the
// threshold.
inline std::optional<ChangePoint> detect_single(const SampleMatrix& series, const DetectorConfig& cfg) {
  return detail::gate(profile(series, cfg), cfg, 0);
}

inline Segmentation detect_multiple(const SampleMatrix& series, const DetectorConfig& cfg) {
  cfg.validate();
  Segmentation out;
  out.series_length = series.rows();
  out.config = cfg;
  detail::segment_recursive(series, 0, series.rows() - 1, 0, cfg, out);
  std::sort(out.points.begin(), out.points.end(),
            [](const ChangePoint& a, const ChangePoint& b) { return a.index < b.index; });
  return out;
}

}  // namespace cecpd
