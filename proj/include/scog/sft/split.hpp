#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "scog/corpus/records.hpp"
#include "scog/random.hpp"

namespace scog::sft {

enum class GroupKey { knowledge, question };

std::string to_string(GroupKey key);
GroupKey parse_group_key(const std::string& name);

struct FormatSplit {
  std::vector<std::string> train_question_ids;  // input order
  std::vector<std::string> eval_question_ids;   // input order
  double fraction = 0.3;
  GroupKey group_key = GroupKey::knowledge;
  std::uint64_t seed = 0;
  std::size_t train_groups = 0;
  std::size_t total_groups = 0;
};

/// Sorts the distinct group ids, shuffles them with `seed`, and sends the
/// first floor(fraction * groups) to format training.
FormatSplit split_for_format_adaptation(const std::vector<corpus::ScenarioQuestion>& questions,
                                        double fraction = 0.3,
                                        GroupKey group_key = GroupKey::knowledge,
                                        std::uint64_t seed = 0);

/// Manifest carrying the split assignment and counts.
corpus::DatasetManifest make_manifest(const FormatSplit& split, std::size_t atomic_count,
                                      std::size_t description_count, std::size_t question_count);

}  // namespace scog::sft
