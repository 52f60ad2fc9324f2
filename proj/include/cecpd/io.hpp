#pragma once

// Time-series ingestion (CSV), the embedded Nile benchmark and serialization
// of detection reports (JSON with full profiles, CSV with points only).

#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include <nlohmann/json.hpp>

#include "cecpd/detector.hpp"
#include "cecpd/errors.hpp"
#include "cecpd/matrix.hpp"

namespace cecpd {

struct TimeSeries {
  std::string name;
  SampleMatrix values;
  std::optional<std::vector<double>> labels;  // strictly increasing, one per row
  std::vector<std::string> column_names;      // empty when the source had no header

  std::size_t length() const { return values.rows(); }
  std::size_t dimension() const { return values.cols(); }

  // Axis label of a 0-based row, if labels exist.
  std::optional<double> label_at(std::size_t i) const {
    if (!labels) return std::nullopt;
    return (*labels)[i];
  }
};

inline void validate_labels(const std::vector<double>& labels, std::size_t n) {
  if (labels.size() != n) throw ParseError("label count does not match series length");
  for (std::size_t i = 1; i < labels.size(); ++i) {
    if (!(labels[i] > labels[i - 1])) {
      throw ParseError("labels must be strictly increasing (row " + std::to_string(i + 1) + ")");
    }
  }
}

// Shortest representation that parses back to the same double.
inline std::string format_double(double v) {
  std::array<char, 32> buf{};
  const auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), end);
}

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

inline std::optional<double> parse_finite(std::string_view cell) {
  cell = trim(cell);
  if (!cell.empty() && cell.front() == '+') cell.remove_prefix(1);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
  if (ec != std::errc{} || ptr != cell.data() + cell.size() || cell.empty() || !std::isfinite(v)) {
    return std::nullopt;
  }
  return v;
}

// RFC 4180 records: quoted fields may hold delimiters, doubled quotes and
// line breaks. Blank lines are skipped.
inline std::vector<std::vector<std::string>> split_records(std::istream& in, char delimiter) {
  std::vector<std::vector<std::string>> records;
  std::vector<std::string> record;
  std::string field;
  bool quoted = false;
  bool field_started = false;
  char c = 0;
  auto end_record = [&] {
    if (field_started || !record.empty()) {
      record.push_back(field);
      records.push_back(std::move(record));
    }
    record.clear();
    field.clear();
    field_started = false;
  };
  while (in.get(c)) {
    if (quoted) {
      if (c == '"') {
        if (in.peek() == '"') {
          in.get(c);
          field.push_back('"');
        } else {
          quoted = false;
        }
      } else {
        field.push_back(c);
      }
    } else if (c == '"') {
      quoted = true;
      field_started = true;
    } else if (c == delimiter) {
      record.push_back(field);
      field.clear();
      field_started = true;
    } else if (c == '\n') {
      end_record();
    } else if (c == '\r') {
      // CRLF endings; a bare CR is dropped
    } else {
      field.push_back(c);
      field_started = true;
    }
  }
  if (quoted) throw ParseError("unterminated quoted field");
  end_record();
  return records;
}

}  // namespace detail

struct CsvOptions {
  std::optional<bool> header;  // unset: header iff the first record has a non-numeric cell
  char delimiter = ',';
  // Column holding axis labels: a header name, or a 1-based column number.
  std::optional<std::string> label_column;
};

inline TimeSeries parse_csv(std::istream& in, const CsvOptions& options, std::string name = "series") {
  auto records = detail::split_records(in, options.delimiter);
  if (records.empty()) throw ParseError("no rows");

  bool has_header = false;
  if (options.header) {
    has_header = *options.header;
  } else {
    for (const auto& cell : records.front()) {
      if (!detail::parse_finite(cell)) has_header = true;
    }
  }
  const std::size_t width = records.front().size();
  std::vector<std::string> header;
  if (has_header) {
    for (const auto& cell : records.front()) header.emplace_back(detail::trim(cell));
  }

  std::optional<std::size_t> label_col;
  if (options.label_column) {
    const auto& want = *options.label_column;
    for (std::size_t j = 0; j < header.size(); ++j) {
      if (header[j] == want) label_col = j;
    }
    if (!label_col) {
      std::size_t number = 0;
      const auto [ptr, ec] = std::from_chars(want.data(), want.data() + want.size(), number);
      if (ec != std::errc{} || ptr != want.data() + want.size() || number == 0 || number > width) {
        throw ConfigError("label column '" + want + "' not found");
      }
      label_col = number - 1;
    }
  }
  if (width - (label_col ? 1 : 0) == 0) throw ParseError("no data columns");

  const std::size_t first = has_header ? 1 : 0;
  if (records.size() <= first) throw ParseError("no data rows");
  std::vector<double> values;
  std::vector<double> labels;
  for (std::size_t r = first; r < records.size(); ++r) {
    const auto& rec = records[r];
    if (rec.size() != width) {
      throw ParseError("line " + std::to_string(r + 1) + ": expected " + std::to_string(width) + " fields, found " +
                       std::to_string(rec.size()));
    }
    for (std::size_t j = 0; j < width; ++j) {
      const auto v = detail::parse_finite(rec[j]);
      if (!v) {
        throw ParseError("line " + std::to_string(r + 1) + ", column " + std::to_string(j + 1) + ": '" +
                         std::string(detail::trim(rec[j])) + "' is not a finite number");
      }
      if (label_col && j == *label_col) {
        labels.push_back(*v);
      } else {
        values.push_back(*v);
      }
    }
  }

  TimeSeries ts;
  ts.name = std::move(name);
  const std::size_t rows = records.size() - first;
  ts.values = SampleMatrix(rows, width - (label_col ? 1 : 0), std::move(values));
  if (label_col) {
    validate_labels(labels, rows);
    ts.labels = std::move(labels);
  }
  for (std::size_t j = 0; j < header.size(); ++j) {
    if (!label_col || j != *label_col) ts.column_names.push_back(header[j]);
  }
  return ts;
}

inline TimeSeries read_csv(const std::string& path, const CsvOptions& options = {}) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "'");
  auto stem = path.substr(path.find_last_of('/') == std::string::npos ? 0 : path.find_last_of('/') + 1);
  if (const auto dot = stem.rfind('.'); dot != std::string::npos && dot > 0) stem.resize(dot);
  return parse_csv(in, options, stem);
}

// Writes the label column first (named "label" unless a name is supplied),
// then the data columns. Values use the shortest round-trip representation.
inline void write_csv(std::ostream& out, const TimeSeries& ts, char delimiter = ',',
                      const std::string& label_name = "label") {
  const bool named = ts.column_names.size() == ts.dimension();
  std::vector<std::string> header;
  if (ts.labels) header.push_back(label_name);
  for (std::size_t j = 0; j < ts.dimension(); ++j) {
    header.push_back(named ? ts.column_names[j] : "x" + std::to_string(j + 1));
  }
  for (std::size_t j = 0; j < header.size(); ++j) out << (j ? std::string(1, delimiter) : "") << header[j];
  out << '\n';
  for (std::size_t i = 0; i < ts.length(); ++i) {
    bool first = true;
    if (ts.labels) {
      out << format_double((*ts.labels)[i]);
      first = false;
    }
    for (std::size_t j = 0; j < ts.dimension(); ++j) {
      if (!first) out << delimiter;
      out << format_double(ts.values(i, j));
      first = false;
    }
    out << '\n';
  }
}

// Annual flow of the Nile at Aswan, 1871-1970, in 10^8 m^3 (Cobb 1978; the
// same values as R's datasets::Nile).
inline TimeSeries nile() {
  static constexpr std::array<double, 100> flow{
      1120, 1160, 963,  1210, 1160, 1160, 813,  1230, 1370, 1140, 995,  935,  1110, 994,  1020, 960,  1180,
      799,  958,  1140, 1100, 1210, 1150, 1250, 1260, 1220, 1030, 1100, 774,  840,  874,  694,  940,  833,
      701,  916,  692,  1020, 1050, 969,  831,  726,  456,  824,  702,  1120, 1100, 832,  764,  821,  768,
      845,  864,  862,  698,  845,  744,  796,  1040, 759,  781,  865,  845,  944,  984,  897,  822,  1010,
      771,  676,  649,  846,  812,  742,  801,  1040, 860,  874,  848,  890,  744,  749,  838,  1050, 918,
      986,  797,  923,  975,  815,  1020, 906,  901,  1170, 912,  746,  919,  718,  714,  740};
  std::vector<double> years(flow.size());
  for (std::size_t i = 0; i < years.size(); ++i) years[i] = 1871.0 + static_cast<double>(i);
  return {"nile", SampleMatrix(flow.size(), 1, std::vector<double>(flow.begin(), flow.end())), std::move(years),
          {"flow"}};
}

struct ReportedPoint {
  std::size_t index = 0;  // 0-based first observation of the new regime
  std::optional<double> label;
  double statistic = 0.0;
  std::size_t depth = 0;

  friend bool operator==(const ReportedPoint&, const ReportedPoint&) = default;
};

struct DetectionReport {
  static constexpr int schema_version = 1;

  std::string series_name;
  std::size_t series_length = 0;
  DetectorConfig config;
  std::vector<ReportedPoint> points;
  std::vector<TestProfile> profiles;

  friend bool operator==(const DetectionReport&, const DetectionReport&) = default;
};

inline DetectionReport make_report(const TimeSeries& ts, const Segmentation& seg) {
  DetectionReport report{ts.name, seg.series_length, seg.config, {}, seg.profiles};
  report.config.threads = 1;
  for (const auto& p : seg.points) report.points.push_back({p.index, ts.label_at(p.index), p.statistic, p.depth});
  return report;
}

// JSON indices are 1-based: a point's "index" and a profile entry's "index"
// are the first observation of the (candidate) new regime; "first"/"last"
// bound the examined segment inclusively.
inline nlohmann::json to_json(const DetectionReport& report) {
  using nlohmann::json;
  const auto& c = report.config;
  json config = {{"k", c.k},
                 {"threshold", c.threshold},
                 {"min_seg", c.min_seg},
                 {"seed", c.seed},
                 {"repeats", c.repeats},
                 {"max_depth", c.max_depth ? json(*c.max_depth) : json(nullptr)}};
  json points = json::array();
  for (const auto& p : report.points) {
    points.push_back({{"index", p.index + 1},
                      {"label", p.label ? json(*p.label) : json(nullptr)},
                      {"statistic", p.statistic},
                      {"depth", p.depth}});
  }
  json profiles = json::array();
  for (const auto& prof : report.profiles) {
    json index = json::array();
    json stat = json::array();
    for (const auto& s : prof.stats) {
      index.push_back(s.split + 2);
      stat.push_back(s.statistic);
    }
    profiles.push_back({{"first", prof.first + 1}, {"last", prof.last + 1}, {"index", index}, {"statistic", stat}});
  }
  return {{"schema_version", DetectionReport::schema_version},
          {"series", {{"name", report.series_name}, {"length", report.series_length}}},
          {"config", config},
          {"change_points", points},
          {"profiles", profiles}};
}

inline DetectionReport report_from_json(const nlohmann::json& j) {
  try {
    if (j.at("schema_version").get<int>() != DetectionReport::schema_version) {
      throw ParseError("unsupported report schema_version " + j.at("schema_version").dump());
    }
    DetectionReport r;
    r.series_name = j.at("series").at("name").get<std::string>();
    r.series_length = j.at("series").at("length").get<std::size_t>();
    const auto& c = j.at("config");
    r.config.k = c.at("k").get<std::size_t>();
    r.config.threshold = c.at("threshold").get<double>();
    r.config.min_seg = c.at("min_seg").get<std::size_t>();
    r.config.seed = c.at("seed").get<Seed>();
    r.config.repeats = c.at("repeats").get<std::size_t>();
    if (!c.at("max_depth").is_null()) r.config.max_depth = c.at("max_depth").get<std::size_t>();
    for (const auto& p : j.at("change_points")) {
      ReportedPoint point;
      point.index = p.at("index").get<std::size_t>() - 1;
      if (!p.at("label").is_null()) point.label = p.at("label").get<double>();
      point.statistic = p.at("statistic").get<double>();
      point.depth = p.at("depth").get<std::size_t>();
      r.points.push_back(point);
    }
    for (const auto& p : j.at("profiles")) {
      TestProfile prof{p.at("first").get<std::size_t>() - 1, p.at("last").get<std::size_t>() - 1, {}};
      const auto& index = p.at("index");
      const auto& stat = p.at("statistic");
      if (index.size() != stat.size()) throw ParseError("profile index/statistic length mismatch");
      for (std::size_t i = 0; i < index.size(); ++i) {
        prof.stats.push_back({index[i].get<std::size_t>() - 2, stat[i].get<double>()});
      }
      r.profiles.push_back(std::move(prof));
    }
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("report: ") + e.what());
  }
}

enum class ReportFormat { json, csv };

inline void write_report(std::ostream& out, const DetectionReport& report, ReportFormat format) {
  if (format == ReportFormat::json) {
    out << to_json(report).dump(2) << '\n';
  } else {
    out << "index,label,statistic,depth\n";
    for (const auto& p : report.points) {
      out << p.index + 1 << ',' << (p.label ? format_double(*p.label) : "") << ',' << format_double(p.statistic)
          << ',' << p.depth << '\n';
    }
  }
  if (!out) throw IoError("failed to write report");
}

inline std::string write_report(const DetectionReport& report, ReportFormat format) {
  std::ostringstream out;
  write_report(out, report, format);
  return out.str();
}

}  // namespace cecpd
