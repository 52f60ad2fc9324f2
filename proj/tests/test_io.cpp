#include <gtest/gtest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "cecpd/io.hpp"
#include "cecpd/plot.hpp"
#include "cecpd/simgen.hpp"

using namespace cecpd;

namespace {

TimeSeries parse(const std::string& text, CsvOptions opt = {}) {
  std::istringstream in(text);
  return parse_csv(in, opt);
}

std::string parse_error_of(const std::string& text, CsvOptions opt = {}) {
  try {
    parse(text, opt);
  } catch (const ParseError& e) {
    return e.what();
  }
  return "";
}

std::filesystem::path temp_file(const std::string& name) {
  return std::filesystem::temp_directory_path() / ("cecpd_test_" + name);
}

}  // namespace

TEST(Csv, HeaderlessShapePassthrough) {
  std::ostringstream text;
  std::mt19937_64 rng(1);
  std::normal_distribution<double> z;
  for (int i = 0; i < 200; ++i) text << z(rng) << ',' << z(rng) << '\n';
  const auto ts = parse(text.str());
  EXPECT_EQ(ts.length(), 200u);
  EXPECT_EQ(ts.dimension(), 2u);
  EXPECT_FALSE(ts.labels);
  EXPECT_TRUE(ts.column_names.empty());
}

TEST(Csv, HeaderDetectionAndLabelColumnByName) {
  const auto ts = parse("year,flow,other\n1871,1120,1\n1872,1160,2\n1873,963,3\n", {std::nullopt, ',', "year"});
  EXPECT_EQ(ts.length(), 3u);
  EXPECT_EQ(ts.dimension(), 2u);
  EXPECT_EQ(*ts.labels, (std::vector<double>{1871, 1872, 1873}));
  EXPECT_EQ(ts.column_names, (std::vector<std::string>{"flow", "other"}));
  EXPECT_EQ(ts.values(2, 0), 963.0);
}

TEST(Csv, LabelColumnByNumberAndDelimiter) {
  const auto ts = parse("1;10\n2;20\n3;30\n", {false, ';', "1"});
  EXPECT_EQ(*ts.labels, (std::vector<double>{1, 2, 3}));
  EXPECT_EQ(ts.values(1, 0), 20.0);
}

TEST(Csv, QuotedFieldsAndCrlf) {
  const auto ts = parse("\"a\",\"b, c\"\r\n\"1.5\",2\r\n3,\"4\"\r\n");
  EXPECT_EQ(ts.column_names, (std::vector<std::string>{"a", "b, c"}));
  EXPECT_EQ(ts.values(0, 0), 1.5);
  EXPECT_EQ(ts.values(1, 1), 4.0);
}

TEST(Csv, NanCellIsNamed) {
  const auto msg = parse_error_of("x,y\n1,2\n3,NaN\n");
  EXPECT_NE(msg.find("line 3"), std::string::npos) << msg;
  EXPECT_NE(msg.find("column 2"), std::string::npos) << msg;
  EXPECT_NE(msg.find("NaN"), std::string::npos) << msg;
  EXPECT_FALSE(parse_error_of("1\ninf\n", {false, ',', {}}).empty());
  EXPECT_FALSE(parse_error_of("1\nabc\n", {false, ',', {}}).empty());
}

TEST(Csv, RaggedRowsRejected) {
  const auto msg = parse_error_of("1,2\n3\n");
  EXPECT_NE(msg.find("line 2"), std::string::npos) << msg;
}

TEST(Csv, OtherErrors) {
  EXPECT_FALSE(parse_error_of("").empty());
  EXPECT_FALSE(parse_error_of("a,b\n").empty());
  EXPECT_FALSE(parse_error_of("3,1\n2,2\n", {false, ',', "1"}).empty());  // labels not increasing
  EXPECT_THROW(parse("1,2\n", {false, ',', "zzz"}), ConfigError);
  EXPECT_THROW(read_csv("/nonexistent/file.csv"), IoError);
}

TEST(Csv, WriteReadRoundTrip) {
  const auto sim = gen_multivariate_case(MultivariateCase::copula, 3);
  TimeSeries ts{"sim", sim.values, std::nullopt, {}};
  std::ostringstream out;
  write_csv(out, ts);
  const auto back = parse(out.str());
  EXPECT_EQ(back.values, ts.values);  // shortest round-trip formatting is exact
  for (std::size_t i = 0; i < ts.length(); ++i) {
    for (std::size_t j = 0; j < 2; ++j) {
      EXPECT_NEAR(back.values(i, j), ts.values(i, j), 1e-15 * std::max(1.0, std::abs(ts.values(i, j))));
    }
  }
}

TEST(Csv, ReadFromFileUsesStemAsName) {
  const auto path = temp_file("nile.csv");
  {
    std::ofstream f(path);
    write_csv(f, nile(), ',', "year");
  }
  const auto ts = read_csv(path.string(), {std::nullopt, ',', "year"});
  EXPECT_EQ(ts.name, "cecpd_test_nile");
  EXPECT_EQ(ts.length(), 100u);
  EXPECT_EQ(ts.dimension(), 1u);
  EXPECT_EQ(ts.labels->front(), 1871.0);
  EXPECT_EQ(ts.labels->back(), 1970.0);
  EXPECT_EQ(ts.values, nile().values);
  std::filesystem::remove(path);
}

TEST(Nile, EmbeddedSeries) {
  const auto ts = nile();
  EXPECT_EQ(ts.length(), 100u);
  EXPECT_EQ(ts.dimension(), 1u);
  EXPECT_EQ(ts.labels->front(), 1871.0);
  EXPECT_EQ(ts.labels->back(), 1970.0);
  // Spot values of the public series, and its overall mean 919.35.
  EXPECT_EQ(ts.values(0, 0), 1120.0);
  EXPECT_EQ(ts.values(17, 0), 799.0);  // 1888
  EXPECT_EQ(ts.values(27, 0), 1100.0);  // 1898
  EXPECT_EQ(ts.values(42, 0), 456.0);  // 1913, the minimum
  EXPECT_EQ(ts.values(99, 0), 740.0);
  double sum = 0.0;
  for (std::size_t i = 0; i < 100; ++i) sum += ts.values(i, 0);
  EXPECT_NEAR(sum / 100.0, 919.35, 1e-9);
}

TEST(Report, JsonRoundTrip) {
  const auto ts = nile();
  DetectorConfig cfg;
  cfg.repeats = 2;
  cfg.max_depth = 3;
  cfg.seed = 12345678901234ULL;
  const auto report = make_report(ts, detect_multiple(ts.values, cfg));
  ASSERT_FALSE(report.points.empty());
  ASSERT_FALSE(report.profiles.empty());
  const auto text = write_report(report, ReportFormat::json);
  const auto back = report_from_json(nlohmann::json::parse(text));
  EXPECT_EQ(back, report);
  EXPECT_EQ(write_report(back, ReportFormat::json), text);
}

TEST(Report, JsonUsesOneBasedIndices) {
  const auto ts = nile();
  DetectorConfig cfg;
  cfg.repeats = 2;
  const auto report = make_report(ts, detect_multiple(ts.values, cfg));
  const auto j = nlohmann::json::parse(write_report(report, ReportFormat::json));
  EXPECT_EQ(j.at("schema_version"), 1);
  const auto& p = j.at("change_points").at(0);
  EXPECT_EQ(p.at("index").get<std::size_t>(), report.points[0].index + 1);
  EXPECT_EQ(p.at("label").get<double>(), ts.label_at(report.points[0].index).value());
  EXPECT_EQ(j.at("profiles").at(0).at("first"), 1);
  EXPECT_EQ(j.at("profiles").at(0).at("index").at(0), 11);  // first candidate with min_seg 10
}

TEST(Report, EmptySegmentation) {
  TimeSeries ts{"empty", SampleMatrix::column_vector({1, 2, 3}), std::nullopt, {}};
  const auto report = make_report(ts, detect_multiple(ts.values, DetectorConfig{}));
  const auto j = nlohmann::json::parse(write_report(report, ReportFormat::json));
  EXPECT_TRUE(j.at("change_points").is_array());
  EXPECT_TRUE(j.at("change_points").empty());
  EXPECT_EQ(report_from_json(j), report);
  EXPECT_EQ(write_report(report, ReportFormat::csv), "index,label,statistic,depth\n");
}

TEST(Report, CsvOneRowPerPoint) {
  DetectionReport r;
  r.series_name = "s";
  r.series_length = 300;
  r.points = {{50, 1920.0, 0.5, 0}, {120, std::nullopt, 0.25, 1}};
  EXPECT_EQ(write_report(r, ReportFormat::csv), "index,label,statistic,depth\n51,1920,0.5,0\n121,,0.25,1\n");
}

TEST(Report, MalformedJson) {
  EXPECT_THROW(report_from_json(nlohmann::json::parse(R"({"schema_version":1})")), ParseError);
  EXPECT_THROW(report_from_json(nlohmann::json::parse(R"({"schema_version":2})")), ParseError);
}

TEST(Plot, DeterministicSvgWithMarkers) {
  const auto ts = nile();
  DetectorConfig cfg;
  cfg.repeats = 2;
  const auto report = make_report(ts, detect_multiple(ts.values, cfg));
  const auto a = render_svg(ts, report);
  EXPECT_EQ(a, render_svg(ts, report));
  EXPECT_EQ(a.rfind("<svg", 0), 0u);
  EXPECT_NE(a.find("</svg>"), std::string::npos);
  EXPECT_NE(a.find("stroke-dasharray"), std::string::npos);
  std::size_t markers = 0;
  for (auto p = a.find("#c0392b\" stroke-width"); p != std::string::npos; p = a.find("#c0392b\" stroke-width", p + 1)) {
    ++markers;
  }
  EXPECT_EQ(markers, report.points.size());
}
