#pragma once

// The cecpd command line: detect, simulate, benchmark, nile. Kept in a header
// so tests can drive it in-process.
//
// Exit codes: 0 success (including "no change points"), 1 I/O, 2 parse
// (malformed input, bad JSON, bad command line), 3 configuration.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "cecpd/benchmark.hpp"
#include "cecpd/detector.hpp"
#include "cecpd/errors.hpp"
#include "cecpd/io.hpp"
#include "cecpd/plot.hpp"
#include "cecpd/simgen.hpp"

namespace cecpd::cli {

enum Exit : int { ok = 0, io_error = 1, parse_error = 2, config_error = 3 };

struct DetectorFlags {
  std::optional<std::size_t> k, min_seg, repeats, threads, max_depth;
  std::optional<double> threshold;
  std::optional<Seed> seed;
  std::optional<std::string> config_path;

  void attach(CLI::App& app, bool with_threshold = true) {
    app.add_option("--k", k, "nearest neighbours in the entropy estimator (3)");
    if (with_threshold) app.add_option("--threshold", threshold, "detection threshold in nats (0.13)");
    app.add_option("--min-seg", min_seg, "minimum observations on each side of a split (10)");
    app.add_option("--seed", seed, "tie-breaking seed; falls back to $CECPD_SEED, then 0");
    app.add_option("--repeats", repeats, "tie-breaking draws averaged per statistic (30)");
    app.add_option("--threads", threads, "worker threads for the split scan, 0 = all cores (1)");
    app.add_option("--max-depth", max_depth, "binary segmentation depth limit (unlimited)");
    app.add_option("--config", config_path, "JSON file with detector settings; flags take precedence");
  }
};

inline std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "'");
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

inline nlohmann::json read_json(const std::string& path) {
  try {
    return nlohmann::json::parse(slurp(path));
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(path + ": " + e.what());
  }
}

inline void write_text(const std::optional<std::string>& path, const std::string& text, std::ostream& out) {
  if (!path || *path == "-") {
    out << text;
    return;
  }
  std::ofstream f(*path, std::ios::binary);
  if (!f || !(f << text) || !f.flush()) throw IoError("cannot write '" + *path + "'");
}

template <typename T>
T config_value(const nlohmann::json& j, const char* key) {
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ConfigError(std::string("config: '") + key + "' has the wrong type");
  }
}

// Settings file keys: k, threshold, min_seg, seed, repeats, threads, max_depth.
inline void apply_config_json(DetectorConfig& cfg, const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("config: expected a JSON object");
  for (const auto& [key, value] : j.items()) {
    if (key == "k") cfg.k = config_value<std::size_t>(j, "k");
    else if (key == "threshold") cfg.threshold = config_value<double>(j, "threshold");
    else if (key == "min_seg") cfg.min_seg = config_value<std::size_t>(j, "min_seg");
    else if (key == "seed") cfg.seed = config_value<Seed>(j, "seed");
    else if (key == "repeats") cfg.repeats = config_value<std::size_t>(j, "repeats");
    else if (key == "threads") cfg.threads = config_value<std::size_t>(j, "threads");
    else if (key == "max_depth") {
      if (value.is_null()) cfg.max_depth.reset();
      else cfg.max_depth = config_value<std::size_t>(j, "max_depth");
    } else {
      throw ConfigError("config: unknown key '" + key + "'");
    }
  }
}

inline std::optional<Seed> env_seed() {
  const char* raw = std::getenv("CECPD_SEED");
  if (!raw || !*raw) return std::nullopt;
  const std::string s(raw);
  Seed v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size()) throw ConfigError("CECPD_SEED is not an unsigned integer");
  return v;
}

// Defaults, then $CECPD_SEED, then the --config file, then explicit flags.
inline DetectorConfig merge_config(const DetectorFlags& f) {
  DetectorConfig cfg;
  if (const auto s = env_seed()) cfg.seed = *s;
  if (f.config_path) apply_config_json(cfg, read_json(*f.config_path));
  if (f.k) cfg.k = *f.k;
  if (f.threshold) cfg.threshold = *f.threshold;
  if (f.min_seg) cfg.min_seg = *f.min_seg;
  if (f.seed) cfg.seed = *f.seed;
  if (f.repeats) cfg.repeats = *f.repeats;
  if (f.threads) cfg.threads = *f.threads;
  if (f.max_depth) cfg.max_depth = *f.max_depth;
  cfg.validate();
  return cfg;
}

inline ReportFormat parse_format(const std::string& s) {
  if (s == "json") return ReportFormat::json;
  if (s == "csv") return ReportFormat::csv;
  throw ConfigError("unknown format '" + s + "' (json, csv)");
}

inline char parse_delimiter(const std::string& s) {
  if (s == "\\t" || s == "tab") return '\t';
  if (s.size() != 1 || s == "\"" || s == "\n" || s == "\r") throw ConfigError("delimiter must be one character");
  return s[0];
}

inline std::optional<bool> parse_header_mode(const std::string& s) {
  if (s == "auto") return std::nullopt;
  if (s == "yes") return true;
  if (s == "no") return false;
  throw ConfigError("header must be auto, yes or no");
}

struct OutputFlags {
  std::optional<std::string> output, plot;
  std::string format = "json";

  void attach(CLI::App& app) {
    app.add_option("-o,--output", output, "report destination (stdout)");
    app.add_option("--format", format, "report format: json or csv");
    app.add_option("--plot", plot, "write an SVG of the series and statistic profiles");
  }
};

// Single detection packaged like a segmentation so reports look alike.
inline Segmentation single_segmentation(const SampleMatrix& x, const DetectorConfig& cfg) {
  Segmentation seg;
  seg.series_length = x.rows();
  seg.config = cfg;
  if (x.rows() < 2 * cfg.min_seg) return seg;
  auto prof = profile(x, cfg);
  if (const auto best = prof.argmax(); best && best->statistic > cfg.threshold) {
    seg.points.push_back({best->split + 1, best->statistic, 0, prof.first, prof.last});
  }
  seg.profiles.push_back(std::move(prof));
  return seg;
}

inline void emit_detection(const TimeSeries& ts, const DetectorConfig& cfg, bool single, const OutputFlags& o,
                           std::ostream& out) {
  const auto format = parse_format(o.format);
  const auto seg = single ? single_segmentation(ts.values, cfg) : detect_multiple(ts.values, cfg);
  const auto report = make_report(ts, seg);
  write_text(o.output, write_report(report, format), out);
  if (o.plot) write_text(o.plot, render_svg(ts, report), out);
}

inline int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Change-point detection with the copula-entropy two-sample statistic", "cecpd"};
  app.require_subcommand(1);

  auto* detect = app.add_subcommand("detect", "detect change points in a CSV time series");
  DetectorFlags detect_flags;
  OutputFlags detect_out;
  std::string input, header_mode = "auto", delimiter = ",";
  std::optional<std::string> label_column;
  bool single = false;
  detect->add_option("-i,--input", input, "CSV file, rows are observations")->required();
  detect->add_option("--header", header_mode, "auto, yes or no");
  detect->add_option("--delimiter", delimiter, "field separator (',' ; 'tab' for tabs)");
  detect->add_option("--label-column", label_column, "header name or 1-based number of the time-label column");
  detect->add_flag("--single", single, "report only the strongest split of the whole series");
  detect_flags.attach(*detect);
  detect_out.attach(*detect);

  auto* simulate = app.add_subcommand("simulate", "write a simulated series as CSV");
  std::optional<std::string> sim_suite, sim_case, sim_spec, sim_output;
  std::optional<Seed> sim_seed;
  bool sim_truth = false;
  simulate->add_option("--suite", sim_suite, "uni or multi");
  simulate->add_option("--case", sim_case, "mean, mean-var, var (uni) or also copula (multi)");
  simulate->add_option("--spec", sim_spec, "JSON simulation spec instead of a built-in case");
  simulate->add_option("--seed", sim_seed, "overrides the spec seed (falls back to $CECPD_SEED)");
  simulate->add_option("-o,--output", sim_output, "CSV destination (stdout)");
  simulate->add_flag("--truth", sim_truth, "print the true change points (1-based) instead of the data");

  auto* bench = app.add_subcommand("benchmark", "rerun the simulation and Nile experiments");
  DetectorFlags bench_flags;
  std::string bench_suite = "all";
  std::size_t bench_runs = 1;
  std::optional<std::size_t> bench_tol;
  std::optional<double> bench_threshold;
  std::optional<std::string> bench_json;
  bench->add_option("--suite", bench_suite, "uni, multi, nile or all");
  bench->add_option("--runs", bench_runs, "seeded runs per case; run r uses seed + r");
  bench->add_option("--tolerance", bench_tol, "hit tolerance in indices (per-case defaults)");
  bench->add_option("--threshold", bench_threshold, "override the per-case thresholds");
  bench->add_option("--json", bench_json, "write the machine-readable summary here");
  bench_flags.attach(*bench, false);

  auto* nile_cmd = app.add_subcommand("nile", "single change point of the Nile flow series");
  DetectorFlags nile_flags;
  OutputFlags nile_out;
  bool nile_multiple = false;
  std::optional<std::string> nile_export;
  nile_cmd->add_flag("--multiple", nile_multiple, "use binary segmentation instead of a single split");
  nile_cmd->add_option("--export", nile_export, "also write the data as CSV (year,flow)");
  nile_flags.attach(*nile_cmd);
  nile_out.attach(*nile_cmd);

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? ok : parse_error;
  }

  try {
    if (detect->parsed()) {
      const auto cfg = merge_config(detect_flags);
      CsvOptions opt;
      opt.header = parse_header_mode(header_mode);
      opt.delimiter = parse_delimiter(delimiter);
      opt.label_column = label_column;
      parse_format(detect_out.format);
      const auto ts = read_csv(input, opt);
      emit_detection(ts, cfg, single, detect_out, out);
    } else if (simulate->parsed()) {
      SimulationSpec spec;
      if (sim_spec) {
        if (sim_suite || sim_case) throw ConfigError("--spec excludes --suite/--case");
        spec = spec_from_json(read_json(*sim_spec));
      } else {
        if (!sim_suite || !sim_case) throw ConfigError("simulate needs --suite and --case, or --spec");
        const Seed seed = sim_seed.value_or(env_seed().value_or(0));
        if (*sim_suite == "uni") spec = univariate_spec(parse_univariate_case(*sim_case), seed);
        else if (*sim_suite == "multi") spec = multivariate_spec(parse_multivariate_case(*sim_case), seed);
        else throw ConfigError("simulate suite must be uni or multi");
      }
      if (sim_seed) spec.seed = *sim_seed;
      const auto sim = generate(spec);
      std::ostringstream text;
      if (sim_truth) {
        for (std::size_t i = 0; i < sim.truth.size(); ++i) text << (i ? "," : "") << sim.truth[i];
        text << '\n';
      } else {
        write_csv(text, TimeSeries{sim.name, sim.values, std::nullopt, {}});
      }
      write_text(sim_output, text.str(), out);
    } else if (bench->parsed()) {
      BenchmarkOptions opt;
      opt.detector = merge_config(bench_flags);
      opt.seed = opt.detector.seed;
      opt.runs = bench_runs;
      opt.tolerance = bench_tol;
      opt.threshold = bench_threshold;
      const auto results = run_benchmark(benchmark_cases(bench_suite), opt);
      write_benchmark_table(out, results);
      if (bench_json) write_text(bench_json, benchmark_to_json(results, opt).dump(2) + "\n", out);
    } else if (nile_cmd->parsed()) {
      const auto cfg = merge_config(nile_flags);
      const auto ts = nile();
      if (nile_export) {
        std::ostringstream csv;
        write_csv(csv, ts, ',', "year");
        write_text(nile_export, csv.str(), out);
      }
      emit_detection(ts, cfg, !nile_multiple, nile_out, out);
    }
  } catch (const IoError& e) {
    err << "cecpd: " << e.what() << '\n';
    return io_error;
  } catch (const ParseError& e) {
    err << "cecpd: " << e.what() << '\n';
    return parse_error;
  } catch (const ConfigError& e) {
    err << "cecpd: " << e.what() << '\n';
    return config_error;
  }
  return ok;
}

}  // namespace cecpd::cli
