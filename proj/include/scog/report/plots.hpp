#pragma once

#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "scog/eval/report.hpp"
#include "scog/report/results.hpp"

namespace scog::report {

struct PlotSeries {
  std::string name;
  std::vector<std::string> x;
  std::vector<double> y;
  // Optional error bars: every err_min[i] <= y[i] <= err_max[i].
  std::optional<std::vector<double>> err_min;
  std::optional<std::vector<double>> err_max;
};

/// |x| == |y|, error bars present together, same length, bracketing y.
void validate(const PlotSeries& s);

/// Declarative chart description; renderers draw it, this tool does not.
struct Chart {
  std::string id;
  std::string kind;  // line | bar
  std::string title;
  std::string x_label;
  std::string y_label;
  std::vector<PlotSeries> series;
};

nlohmann::json to_json(const PlotSeries& s);
nlohmann::json to_json(const Chart& c);
/// Long-format CSV: series,x,y,err_min,err_max.
std::string chart_csv(const Chart& c);

/// One line chart per set, one series per metric over the epochs of that set.
std::vector<Chart> trend_charts(const std::vector<eval::TrendRow>& rows, const std::string& label);

/// Precision, recall and F1 bars per level for one architecture, plus a
/// constant 0.5 baseline series.
Chart probe_chart(const ProbeResults& results, probe::Arch arch);

/// Target and non-target attention averages per level with min/max bars.
/// Nullopt when no level carries an attention summary.
std::optional<Chart> attention_chart(const ProbeResults& results);

enum class ReportFormat { table, csv, plot_data };
std::string to_string(ReportFormat f);
ReportFormat parse_report_format(const std::string& name);
/// Comma-separated list, e.g. "table,csv,plot-data".
std::set<ReportFormat> parse_report_formats(const std::string& list);

struct ReportInputs {
  std::vector<eval::MetricReport> reports;
  std::vector<eval::DeltaReport> deltas;
  std::optional<ProbeResults> probe;
};

/// Fixed-width text rendering of every input.
std::string report_table(const ReportInputs& in);

/// Writes the requested formats under `out_dir` and returns the written
/// paths in order. Throws ValidationError when there is nothing to report.
std::vector<std::filesystem::path> emit_report(const ReportInputs& in,
                                               const std::set<ReportFormat>& formats,
                                               const std::filesystem::path& out_dir);

}  // namespace scog::report
