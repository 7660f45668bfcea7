#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "scog/corpus/records.hpp"
#include "scog/probe/archive.hpp"

namespace scog::probe {

enum class LevelKind { head, mid, tail };
std::string to_string(LevelKind kind);
LevelKind parse_level_kind(const std::string& name);

struct LayerLevel {
  LevelKind kind = LevelKind::head;
  std::array<int, 3> layer_ids{};
};

struct LayerLevels {
  LayerLevel head, mid, tail;
  bool overlap = false;  // true when two levels share a layer (small l)
  const LayerLevel& get(LevelKind kind) const;
};

/// Head {1,2,3}, Mid {l/2-1, l/2, l/2+1} (integer division), Tail {l-2, l-1, l}.
/// Throws ValidationError for l < 6.
LayerLevels layer_levels(int total_layers);

/// Mean over `layer_ids` of the mean over the tokens in `range`.
Vector level_representation(const HiddenArchive& archive, const std::string& sample_id,
                            const TokenRange& range, const std::vector<int>& layer_ids);
Vector level_representation(const HiddenArchive& archive, const std::string& sample_id,
                            const TokenRange& range, const LayerLevel& level);

/// Element/argument pairs located in the text of one archive sample.
struct ProbeSample {
  std::string sample_id;
  std::vector<corpus::ElementPair> pairs;
};

struct SkippedSample {
  std::string sample_id;
  std::string reason;
};

/// Matches archive samples to annotations: a sample whose id is a knowledge
/// id uses the annotation spans as-is; a sample whose id is a description id
/// re-locates each surface string at its first occurrence in the description.
/// Samples that match nothing, or whose surfaces cannot be found, are skipped.
std::vector<ProbeSample> probe_samples(const HiddenArchive& archive,
                                       const std::vector<corpus::ScenarioAnnotation>& annotations,
                                       const std::vector<corpus::KnowledgeDescription>& descriptions,
                                       std::vector<SkippedSample>* skipped = nullptr);

struct PairExample {
  std::string sample_id;
  int element_index = 0;
  int argument_index = 0;
  Vector h_e;
  Vector h_a;
  int label = 0;  // 1 iff element_index == argument_index
};

nlohmann::json to_json(const PairExample& p);
PairExample pair_example_from_json(const nlohmann::json& j);

struct BalanceReport {
  std::size_t samples_used = 0;
  std::vector<SkippedSample> skipped;
  std::size_t positives = 0;
  std::size_t candidate_negatives = 0;
  std::size_t negatives = 0;
  double positive_fraction = 0.0;
};

nlohmann::json to_json(const BalanceReport& b);
BalanceReport balance_report_from_json(const nlohmann::json& j);

struct PairSet {
  std::vector<PairExample> pairs;
  BalanceReport balance;
};

/// One positive per pair (i == j) and the within-sample mismatches as
/// negatives, subsampled with `seed` to round(negative_ratio * positives)
/// across the corpus. Samples failing char-to-token alignment are skipped
/// and reported.
PairSet build_pairs(const std::vector<ProbeSample>& samples, const HiddenArchive& archive,
                    const std::vector<int>& layer_ids, double negative_ratio, std::uint64_t seed);

/// Candidate set for the attention probe: one element and the vectors it
/// may attend to, with the true argument at `target`.
struct AttentionExample {
  std::string sample_id;
  int element_index = 0;
  Vector h_e;
  std::vector<Vector> candidates;
  int target = 0;
};

enum class CandidateMode {
  arguments,  // every argument of the sample's annotation
  tokens,     // the true argument span plus every token outside both spans
};
std::string to_string(CandidateMode mode);
CandidateMode parse_candidate_mode(const std::string& name);

std::vector<AttentionExample> build_attention_examples(const std::vector<ProbeSample>& samples,
                                                       const HiddenArchive& archive,
                                                       const std::vector<int>& layer_ids,
                                                       CandidateMode mode,
                                                       BalanceReport* report = nullptr);

}  // namespace scog::probe
