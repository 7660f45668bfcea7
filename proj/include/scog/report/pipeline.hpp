#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include <json.hpp>

#include "scog/providers/providers.hpp"
#include "scog/report/config.hpp"
#include "scog/report/plots.hpp"

namespace scog::report {

/// All stages in execution order:
/// generate filter vote expand annotate questions sft split eval probe report.
const std::vector<std::string>& stage_names();
/// Stages whose artifacts `stage` reads.
const std::vector<std::string>& stage_dependencies(const std::string& stage);
/// Artifact that marks a finished stage, relative to the work dir.
std::string stage_marker(const std::string& stage);

/// "all" or a comma-separated list of stage names.
std::vector<std::string> parse_stage_list(const std::string& list);

/// Throws DependencyError when a requested stage precedes a requested
/// dependency, or depends on a stage that is neither requested nor present
/// in `work_dir`.
void check_stage_plan(const std::vector<std::string>& stages, const std::filesystem::path& work_dir);

struct StageRecord {
  std::string stage;
  std::map<std::string, std::string> inputs;   // path -> sha256
  std::map<std::string, std::string> outputs;  // path -> sha256
  std::uint64_t seed = 0;
  std::string config_hash;
  nlohmann::json to_json() const;
};

struct RunOptions {
  /// Skip stages recorded as completed in `run_state.json` under the same config hash.
  bool resume = false;
  /// Backends by provider id, replacing the configured kind (tests, fixture recording).
  std::map<std::string, std::shared_ptr<providers::ChatBackend>> chat_backends;
  std::map<std::string, std::shared_ptr<providers::EmbeddingBackend>> embedding_backends;
  providers::RetryPolicy retry;
  providers::Sleeper sleeper;
  /// Called after each finished stage.
  std::function<void(const StageRecord&)> on_stage;
};

struct RunResult {
  std::vector<StageRecord> stages;
  std::vector<std::string> skipped;  // resumed past
};

/// Runs `stages` in order under `config.work_dir`. Every artifact gets a
/// `<file>.meta.json` sidecar with the config hash and seed, and every stage
/// appends a line to `run_log.jsonl`. A failing stage is recorded in
/// `run_state.json` before the error propagates, so `resume` continues there.
RunResult run_pipeline(const RunConfig& config, const std::vector<std::string>& stages,
                       const RunOptions& options = {});

/// Loads the metric reports and deltas written by the eval stage and the
/// probe results, whichever exist under `work_dir`.
ReportInputs load_report_inputs(const std::filesystem::path& work_dir);

}  // namespace scog::report
