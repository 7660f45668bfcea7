#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "scog/datagen/stages.hpp"
#include "scog/eval/report.hpp"
#include "scog/probe/pairs.hpp"
#include "scog/probe/probe.hpp"
#include "scog/providers/cache.hpp"
#include "scog/providers/providers.hpp"
#include "scog/sft/split.hpp"

namespace scog::report {

struct DatagenSettings {
  std::vector<datagen::ChatOptions> generators;
  std::size_t candidates_per_call = 10;
  int generation_rounds = 1;
  std::string embedder;
  double threshold = 0.5;
  std::vector<datagen::ChatOptions> validators;
  datagen::ChatOptions expander;
  std::size_t k = 10;
  int max_rounds = 3;
  datagen::ChatOptions annotator;
  datagen::ChatOptions question_generator;
  double inspection_fraction = 0.0;
  std::string template_dir;  // optional overrides, relative to the config file
  std::size_t workers = 4;
};

struct PrepSettings {
  double split_fraction = 0.3;
  sft::GroupKey group_key = sft::GroupKey::knowledge;
};

struct EvalInput {
  std::string label;
  eval::SetName set = eval::SetName::memory;
  std::string completions;  // relative to the config file
};

struct DeltaSpec {
  std::string baseline;  // labels
  std::string adapted;
  eval::SetName set = eval::SetName::understanding;
};

struct EvalSettings {
  int runs = 5;
  eval::Averaging averaging = eval::Averaging::items_then_runs;
  std::size_t workers = 1;
  std::vector<EvalInput> inputs;
  std::vector<DeltaSpec> deltas;
};

enum class LevelAgg {
  mean,                     // one probe on the layer-mean representation
  per_layer_mean_metrics,   // one probe per layer, metrics averaged
};
std::string to_string(LevelAgg agg);
LevelAgg parse_level_agg(const std::string& name);

struct ProbeSettings {
  std::string archive;  // relative to the config file
  std::optional<int> total_layers;  // default: highest layer id in the archive
  std::vector<probe::LevelKind> levels{probe::LevelKind::head, probe::LevelKind::mid,
                                       probe::LevelKind::tail};
  std::vector<probe::Arch> archs{probe::Arch::linear, probe::Arch::sim_mlp, probe::Arch::enh_mlp};
  probe::TrainConfig train;
  LevelAgg level_agg = LevelAgg::mean;
  bool attention = true;
  bool train_attention = false;
  probe::CandidateMode candidate_mode = probe::CandidateMode::arguments;
};

struct RunConfig {
  std::filesystem::path base_dir;  // directory of the config file; not hashed
  std::filesystem::path work_dir;  // artifact directory; not hashed
  std::uint64_t seed = 0;
  std::string cache_dir = "cache";
  providers::CacheMode cache_mode = providers::CacheMode::replay;
  std::vector<providers::ProviderConfig> chat_providers;
  std::vector<providers::ProviderConfig> embedding_providers;
  DatagenSettings datagen;
  PrepSettings prep;
  EvalSettings eval;
  ProbeSettings probe;

  /// Resolves a config-relative path.
  std::filesystem::path resolve(const std::string& path) const;
  /// Canonical form of every hashed setting, defaults filled in.
  nlohmann::json to_json() const;
  /// sha256 over the canonical JSON.
  std::string hash() const;
};

/// Parses a config tree; unknown keys are errors. Throws ValidationError.
RunConfig run_config_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir);

/// Loads a YAML config. `work_dir` defaults to the `work_dir` key, then to
/// `<config dir>/work`.
RunConfig load_run_config(const std::filesystem::path& path);

/// Checks cross references: agents name configured providers, and the input
/// paths read by `stages` (all stages when empty) exist.
void validate(const RunConfig& config, const std::vector<std::string>& stages = {});

/// YAML scalars become bool, integer, real or string in that order of preference.
nlohmann::json yaml_to_json(const std::string& yaml_text);

}  // namespace scog::report
