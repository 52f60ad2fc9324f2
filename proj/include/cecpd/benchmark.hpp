#pragma once

// Regeneration of the simulation and Nile experiments with hit/miss scoring
// of detections against the known change points.

#include <cmath>
#include <cstddef>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "cecpd/detector.hpp"
#include "cecpd/errors.hpp"
#include "cecpd/io.hpp"
#include "cecpd/simgen.hpp"

namespace cecpd {

// Success rule of one case. A truth point is hit when an unused detection lies
// within `tolerance` of it; a run succeeds with at least `required_hits` hits.
// `exact_count` additionally forbids unmatched detections, and
// `spurious_below_true` requires every unmatched statistic to stay below the
// largest matched one.
struct BenchmarkCase {
  std::string suite;  // uni, multi, nile
  std::string name;
  double threshold = 0.13;
  std::size_t tolerance = 2;
  std::size_t required_hits = 3;
  bool exact_count = false;
  bool spurious_below_true = false;
};

inline std::vector<BenchmarkCase> benchmark_cases(const std::string& suite) {
  std::vector<BenchmarkCase> out;
  const bool all = suite == "all";
  if (!all && suite != "uni" && suite != "multi" && suite != "nile") {
    throw ConfigError("unknown suite '" + suite + "' (uni, multi, nile, all)");
  }
  if (all || suite == "uni") {
    out.push_back({"uni", "mean", 0.13, 2, 3, true, false});
    out.push_back({"uni", "mean-var", 0.13, 2, 3, true, false});
    out.push_back({"uni", "var", 0.13, 3, 3, false, true});
  }
  if (all || suite == "multi") {
    out.push_back({"multi", "mean", 0.13, 2, 3, false, false});
    out.push_back({"multi", "mean-var", 0.13, 2, 3, false, false});
    out.push_back({"multi", "var", 0.05, 5, 2, false, false});
    out.push_back({"multi", "copula", 0.13, 5, 1, false, false});
  }
  // Single change point at 1898, matched on year labels.
  if (all || suite == "nile") out.push_back({"nile", "nile", 0.13, 2, 1, false, false});
  return out;
}

struct BenchmarkRun {
  Seed seed = 0;
  std::vector<double> detected;  // 1-based index, or year for the Nile case
  std::vector<double> statistics;
  std::vector<double> truth;
  std::size_t hits = 0;
  std::size_t spurious = 0;
  bool success = false;
};

struct CaseResult {
  BenchmarkCase spec;
  std::vector<BenchmarkRun> runs;

  std::size_t successes() const {
    std::size_t s = 0;
    for (const auto& r : runs) s += r.success;
    return s;
  }
};

struct BenchmarkOptions {
  DetectorConfig detector;               // threshold replaced per case unless overridden
  std::optional<double> threshold;
  std::optional<std::size_t> tolerance;
  std::size_t runs = 1;
  Seed seed = 0;                         // run r uses seed + r for data and detector
};

namespace detail {

inline void score(BenchmarkRun& run, const BenchmarkCase& c, std::size_t tolerance) {
  std::vector<bool> used(run.detected.size(), false);
  double best_true = -std::numeric_limits<double>::infinity();
  for (double t : run.truth) {
    std::optional<std::size_t> pick;
    for (std::size_t i = 0; i < run.detected.size(); ++i) {
      const double gap = std::abs(run.detected[i] - t);
      if (used[i] || gap > static_cast<double>(tolerance)) continue;
      if (!pick || gap < std::abs(run.detected[*pick] - t)) pick = i;
    }
    if (!pick) continue;
    used[*pick] = true;
    ++run.hits;
    best_true = std::max(best_true, run.statistics[*pick]);
  }
  bool spurious_ok = true;
  for (std::size_t i = 0; i < run.detected.size(); ++i) {
    if (used[i]) continue;
    ++run.spurious;
    if (!(run.statistics[i] < best_true)) spurious_ok = false;
  }
  run.success = run.hits >= c.required_hits && (!c.exact_count || run.spurious == 0) &&
                (!c.spurious_below_true || spurious_ok);
}

}  // namespace detail

inline BenchmarkRun run_case(const BenchmarkCase& c, const BenchmarkOptions& opt, Seed seed) {
  DetectorConfig cfg = opt.detector;
  cfg.threshold = opt.threshold.value_or(c.threshold);
  cfg.seed = seed;
  BenchmarkRun run;
  run.seed = seed;
  if (c.suite == "nile") {
    const TimeSeries ts = nile();
    run.truth = {1898.0};
    if (const auto p = detect_single(ts.values, cfg)) {
      run.detected.push_back(*ts.label_at(p->index));
      run.statistics.push_back(p->statistic);
    }
  } else {
    const Simulation sim = c.suite == "uni" ? gen_univariate_case(parse_univariate_case(c.name), seed)
                                            : gen_multivariate_case(parse_multivariate_case(c.name), seed);
    for (std::size_t t : sim.truth) run.truth.push_back(static_cast<double>(t));
    for (const auto& p : detect_multiple(sim.values, cfg).points) {
      run.detected.push_back(static_cast<double>(p.index + 1));
      run.statistics.push_back(p.statistic);
    }
  }
  detail::score(run, c, opt.tolerance.value_or(c.tolerance));
  return run;
}

inline std::vector<CaseResult> run_benchmark(const std::vector<BenchmarkCase>& cases, const BenchmarkOptions& opt) {
  if (opt.runs == 0) throw ConfigError("runs must be positive");
  opt.detector.validate();
  std::vector<CaseResult> out;
  for (const auto& c : cases) {
    CaseResult result{c, {}};
    for (std::size_t r = 0; r < opt.runs; ++r) result.runs.push_back(run_case(c, opt, opt.seed + r));
    out.push_back(std::move(result));
  }
  return out;
}

inline void write_benchmark_table(std::ostream& out, const std::vector<CaseResult>& results) {
  auto list = [](const std::vector<double>& v) {
    std::string s;
    for (double x : v) s += (s.empty() ? "" : ",") + format_double(x);
    return s.empty() ? std::string("-") : s;
  };
  for (const auto& c : results) {
    out << c.spec.suite << '/' << c.spec.name << ": " << c.successes() << '/' << c.runs.size() << " runs ok\n";
    for (const auto& r : c.runs) {
      out << "  seed " << r.seed << "  detected " << list(r.detected) << "  truth " << list(r.truth) << "  hits "
          << r.hits << '/' << r.truth.size() << "  extra " << r.spurious << (r.success ? "  ok" : "  miss") << '\n';
    }
  }
}

inline nlohmann::json benchmark_to_json(const std::vector<CaseResult>& results, const BenchmarkOptions& opt) {
  using nlohmann::json;
  json cases = json::array();
  for (const auto& c : results) {
    json runs = json::array();
    for (const auto& r : c.runs) {
      runs.push_back({{"seed", r.seed},
                      {"detected", r.detected},
                      {"statistics", r.statistics},
                      {"truth", r.truth},
                      {"hits", r.hits},
                      {"spurious", r.spurious},
                      {"success", r.success}});
    }
    cases.push_back({{"suite", c.spec.suite},
                     {"case", c.spec.name},
                     {"threshold", opt.threshold.value_or(c.spec.threshold)},
                     {"tolerance", opt.tolerance.value_or(c.spec.tolerance)},
                     {"required_hits", c.spec.required_hits},
                     {"successes", c.successes()},
                     {"runs", runs}});
  }
  return {{"schema_version", 1},
          {"k", opt.detector.k},
          {"min_seg", opt.detector.min_seg},
          {"repeats", opt.detector.repeats},
          {"cases", cases}};
}

}  // namespace cecpd
