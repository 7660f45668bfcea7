#include "scog/sft/split.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "scog/error.hpp"

namespace scog::sft {

std::string to_string(GroupKey key) {
  return key == GroupKey::knowledge ? "knowledge" : "question";
}

GroupKey parse_group_key(const std::string& name) {
  if (name == "knowledge") return GroupKey::knowledge;
  if (name == "question") return GroupKey::question;
  throw ValidationError("unknown group key \"" + name + "\" (knowledge|question)");
}

FormatSplit split_for_format_adaptation(const std::vector<corpus::ScenarioQuestion>& questions,
                                        double fraction, GroupKey group_key, std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction < 1.0)) {
    throw ValidationError("split fraction must lie strictly between 0 and 1");
  }
  auto group_of = [&](const corpus::ScenarioQuestion& q) {
    return group_key == GroupKey::knowledge ? q.knowledge_id : q.id;
  };
  std::set<std::string> unique;
  for (const auto& q : questions) unique.insert(group_of(q));
  if (unique.size() < 2) {
    throw ValidationError("format split needs at least 2 groups, got " +
                          std::to_string(unique.size()));
  }
  std::vector<std::string> groups(unique.begin(), unique.end());
  std::mt19937_64 rng(seed);
  seeded_shuffle(groups, rng);

  FormatSplit split;
  split.fraction = fraction;
  split.group_key = group_key;
  split.seed = seed;
  split.total_groups = groups.size();
  split.train_groups =
      static_cast<std::size_t>(std::floor(fraction * static_cast<double>(groups.size()) + 1e-9));
  const std::set<std::string> train(groups.begin(), groups.begin() + split.train_groups);
  for (const auto& q : questions) {
    (train.count(group_of(q)) ? split.train_question_ids : split.eval_question_ids).push_back(q.id);
  }
  return split;
}

corpus::DatasetManifest make_manifest(const FormatSplit& split, std::size_t atomic_count,
                                      std::size_t description_count, std::size_t question_count) {
  corpus::DatasetManifest m;
  m.counts = {atomic_count, description_count, question_count};
  for (const auto& id : split.train_question_ids) m.splits[id] = corpus::SplitSide::format_train;
  for (const auto& id : split.eval_question_ids) m.splits[id] = corpus::SplitSide::eval;
  m.seed = split.seed;
  m.extra = {{"fraction", split.fraction},
             {"group_key", to_string(split.group_key)},
             {"train_groups", split.train_groups},
             {"total_groups", split.total_groups}};
  return m;
}

}  // namespace scog::sft
