#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sstream>

#include <nlohmann/json.hpp>

#include "spanbench/errors.hpp"
#include "spanbench/report.hpp"

using namespace spanbench;

namespace {

SweepRow row(const std::string& dataset, const std::string& embedder,
             std::size_t size, double iou_mean, double recall_mean, double p_mean,
             double pomega_mean, std::size_t n = 6) {
  SweepRow r;
  r.dataset = dataset;
  r.embedder = embedder;
  r.model = "human";
  r.chunk_size = size;
  r.iou = {iou_mean, 0.01, n};
  r.recall = {recall_mean, 0.02, n};
  r.precision = {p_mean, 0.03, n};
  r.pomega = {pomega_mean, 0.04, n};
  return r;
}

}  // namespace

TEST_CASE("format_fixed rounds half to even") {
  CHECK(format_fixed(0.0625, 3) == "0.062");   // 62.5 -> 62
  CHECK(format_fixed(0.1875, 3) == "0.188");   // 187.5 -> 188
  CHECK(format_fixed(0.5, 0 + 1) == "0.5");
  CHECK(format_fixed(0.30434782608695654, 4) == "0.3043");
  CHECK(format_fixed(1.0, 4) == "1.0000");
  CHECK(format_fixed(0.0, 4) == "0.0000");
  CHECK(format_fixed(-0.0625, 3) == "-0.062");
  CHECK(format_fixed(12.5, 1) == "12.5");
}

TEST_CASE("csv output has the pinned header and stable order") {
  SweepTable table;
  table.rows.push_back(row("ds", "mock", 5, 0.5, 0.75, 0.25, 0.8));
  ReportSpec spec;
  spec.format = ReportSpec::Format::csv;
  const std::string csv = emit(table, spec);
  std::istringstream lines(csv);
  std::string header, line1, rest;
  std::getline(lines, header);
  std::getline(lines, line1);
  CHECK(header ==
        "dataset,embedder,model,chunk_size,iou_mean,iou_std,recall_mean,recall_std,"
        "p_mean,p_std,pomega_mean,pomega_std,n");
  CHECK(line1 ==
        "ds,mock,human,5,0.5000,0.0100,0.7500,0.0200,0.2500,0.0300,0.8000,0.0400,6");
  CHECK_FALSE(std::getline(lines, rest));
}

TEST_CASE("csv round-trips values at the emitted precision") {
  SweepTable table;
  table.rows.push_back(row("ds", "mock", 5, 1.0 / 3.0, 2.0 / 3.0, 0.1234567, 0.9999999));
  ReportSpec spec;
  spec.format = ReportSpec::Format::csv;
  const std::string csv = emit(table, spec);

  std::istringstream lines(csv);
  std::string header, data;
  std::getline(lines, header);
  std::getline(lines, data);
  std::vector<std::string> cells;
  std::istringstream cell_stream(data);
  std::string cell;
  while (std::getline(cell_stream, cell, ',')) cells.push_back(cell);
  REQUIRE(cells.size() == 13);
  CHECK(std::stod(cells[4]) == 0.3333);
  CHECK(std::stod(cells[6]) == 0.6667);
  CHECK(std::stod(cells[8]) == 0.1235);
  CHECK(std::stod(cells[10]) == 1.0);
}

TEST_CASE("json output rounds at the spec precision and round-trips") {
  SweepTable table;
  table.rows.push_back(row("ds", "mock", 5, 1.0 / 3.0, 0.5, 0.25, 0.125));
  table.errors.push_back({"ds", "dead", "human", 10, "unreachable"});
  ReportSpec spec;
  spec.format = ReportSpec::Format::json;
  const std::string text = emit(table, spec);
  const auto j = nlohmann::json::parse(text);
  CHECK(j.at("rows").size() == 1);
  CHECK(j.at("rows")[0].at("iou_mean").get<double>() == 0.3333);
  CHECK(j.at("rows")[0].at("n").get<int>() == 6);
  CHECK(j.at("errors")[0].at("chunk_size").get<int>() == 10);
}

TEST_CASE("markdown bolds the best mean per dataset group") {
  SweepTable table;
  table.rows.push_back(row("ds", "mock", 5, 0.50, 0.40, 0.30, 0.20));
  table.rows.push_back(row("ds", "mock", 10, 0.25, 0.80, 0.10, 0.10));
  table.rows.push_back(row("other", "mock", 5, 0.99, 0.99, 0.99, 0.99));
  ReportSpec spec;
  spec.format = ReportSpec::Format::markdown;
  spec.bold_best = true;
  const std::string md = emit(table, spec);
  CHECK(md.find("**0.5000**") != std::string::npos);   // ds iou best: row A
  CHECK(md.find("**0.8000**") != std::string::npos);   // ds recall best: row B
  CHECK(md.find("**0.9900**") != std::string::npos);   // the other group bolds its own
  CHECK(md.find("**0.2500**") == std::string::npos);   // losing iou cell stays plain
}

TEST_CASE("markdown appends error-marker lines") {
  SweepTable table;
  table.rows.push_back(row("ds", "mock", 5, 0.5, 0.5, 0.5, 0.5));
  table.errors.push_back({"ds", "dead", "human", 20, "connection refused"});
  ReportSpec spec;
  spec.format = ReportSpec::Format::markdown;
  const std::string md = emit(table, spec);
  CHECK(md.find("ERROR ds/dead/human/size=20: connection refused") != std::string::npos);
}

TEST_CASE("bold-best marking is invariant under positive column rescaling") {
  SweepTable table;
  table.rows.push_back(row("ds", "mock", 5, 0.50, 0.40, 0.30, 0.20));
  table.rows.push_back(row("ds", "mock", 10, 0.25, 0.80, 0.10, 0.10));
  SweepTable scaled = table;
  for (auto& r : scaled.rows) {
    r.iou.mean *= 2.0;    // winner stays row 1
    r.recall.mean *= 0.5; // winner stays row 2
  }
  ReportSpec spec;
  spec.format = ReportSpec::Format::markdown;
  spec.bold_best = true;
  const std::string before = emit(table, spec);
  const std::string after = emit(scaled, spec);
  CHECK(before.find("**0.5000**") != std::string::npos);  // row 1 iou
  CHECK(before.find("**0.8000**") != std::string::npos);  // row 2 recall
  CHECK(after.find("**1.0000**") != std::string::npos);   // row 1 iou, scaled
  CHECK(after.find("**0.4000**") != std::string::npos);   // row 2 recall, scaled
  CHECK(after.find("**0.5000**") == std::string::npos);   // row 2 iou still loses
}

TEST_CASE("emission is a pure function of table and spec") {
  SweepTable table;
  table.rows.push_back(row("ds", "mock", 5, 0.1, 0.2, 0.3, 0.4));
  for (auto format : {ReportSpec::Format::csv, ReportSpec::Format::json,
                      ReportSpec::Format::markdown}) {
    ReportSpec spec;
    spec.format = format;
    spec.bold_best = true;
    CHECK(emit(table, spec) == emit(table, spec));
  }
}

TEST_CASE("empty table and bad precision are rejected") {
  SweepTable empty;
  ReportSpec spec;
  CHECK_THROWS_AS(emit(empty, spec), EmptyTable);

  SweepTable table;
  table.rows.push_back(row("ds", "mock", 5, 0.1, 0.2, 0.3, 0.4));
  spec.float_precision = 0;
  CHECK_THROWS_AS(emit(table, spec), ConfigError);
  spec.float_precision = 11;
  CHECK_THROWS_AS(emit(table, spec), ConfigError);
}

TEST_CASE("report format parsing") {
  CHECK(report_format_from_string("csv") == ReportSpec::Format::csv);
  CHECK(report_format_from_string("md") == ReportSpec::Format::markdown);
  CHECK_THROWS_AS(report_format_from_string("xml"), ConfigError);
}
