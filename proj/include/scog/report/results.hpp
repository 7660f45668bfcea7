#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "scog/probe/pairs.hpp"
#include "scog/probe/probe.hpp"

namespace scog::report {

struct ArchResult {
  probe::ProbeMetrics heldout;
  std::vector<probe::EpochStats> history;  // empty in per-layer mode
  std::vector<probe::ProbeMetrics> per_layer;  // per-layer mode only
};

struct LevelResult {
  probe::LayerLevel level;
  bool overlap = false;
  probe::BalanceReport balance;
  std::map<probe::Arch, ArchResult> archs;
  std::optional<probe::AttentionSummary> attention;
};

struct ProbeResults {
  int total_layers = 0;
  std::string level_agg;
  std::vector<LevelResult> levels;
};

nlohmann::json to_json(const ProbeResults& r);
ProbeResults probe_results_from_json(const nlohmann::json& j);

}  // namespace scog::report
