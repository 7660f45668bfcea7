#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace scog::eval {

enum class SetName { memory, understanding };
std::string to_string(SetName set);
SetName parse_set_name(const std::string& name);

struct Completion {
  std::string id;  // question id or SFT pair id
  int epoch = 0;
  int run_index = 1;
  std::string text;
};

nlohmann::json to_json(const Completion& c);
Completion completion_from_json(const nlohmann::json& j);
std::vector<Completion> read_completions(const std::filesystem::path& path);
void write_completions(const std::filesystem::path& path, const std::vector<Completion>& cs);

enum class Averaging {
  items_then_runs,  // mean over items per run, then mean over runs
  pooled,           // one mean over every (item, run) score
};
std::string to_string(Averaging a);
Averaging parse_averaging(const std::string& name);

/// Metric names in report column order.
const std::vector<std::string>& metric_names();  // em bleu1 bleu4 rouge1 rouge2 rougeL

struct MetricReport {
  std::string label;  // e.g. model name; free-form
  SetName set = SetName::memory;
  int epoch = 0;
  double em = 0, bleu1 = 0, bleu4 = 0, rouge1 = 0, rouge2 = 0, rougeL = 0;
  std::size_t n_items = 0;
  std::size_t n_runs = 0;
  Averaging averaging = Averaging::items_then_runs;

  double metric(const std::string& name) const;
  void set_metric(const std::string& name, double value);
};

nlohmann::json to_json(const MetricReport& r);
MetricReport metric_report_from_json(const nlohmann::json& j);

struct EvalOptions {
  int expected_runs = 5;
  Averaging averaging = Averaging::items_then_runs;
  std::size_t workers = 1;
};

/// Scores the completions of `epoch` against `gold` (id -> reference text).
/// Every run 1..expected_runs must cover the same item ids; errors name the
/// missing runs or unresolvable ids.
MetricReport evaluate_set(const std::vector<Completion>& completions,
                          const std::map<std::string, std::string>& gold, SetName set, int epoch,
                          const EvalOptions& options = {});

struct TrendRow {
  int epoch = 0;
  // Per set: metrics for this epoch, or nullopt (a gap).
  std::map<SetName, std::optional<MetricReport>> cells;
};

/// Rows ordered by epoch over the union of epochs present.
std::vector<TrendRow> trend_table(const std::vector<MetricReport>& reports);

struct DeltaReport {
  MetricReport baseline;
  MetricReport adapted;
  std::map<std::string, double> deltas;  // adapted - baseline
};

DeltaReport delta_report(const MetricReport& baseline, const MetricReport& adapted);

nlohmann::json to_json(const std::vector<TrendRow>& rows);
nlohmann::json to_json(const DeltaReport& d);

// Flat CSV renderings. Gaps print as "NA".
std::string reports_csv(const std::vector<MetricReport>& reports);
std::string trend_csv(const std::vector<TrendRow>& rows);
std::string delta_csv(const std::vector<DeltaReport>& deltas);

/// Fixed 6-decimal rendering used in every CSV cell.
std::string format_metric(double v);

}  // namespace scog::eval
