#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "scog/corpus/text.hpp"

namespace scog::corpus {

using json = nlohmann::json;

/// Input line a record was read from (0 when built in memory). Never
/// participates in equality so round-tripped records compare equal.
struct SourceLine {
  std::size_t value = 0;
  friend bool operator==(const SourceLine&, const SourceLine&) { return true; }
};

struct Criteria {
  bool fictional = false;
  bool role_rich = false;
  bool concise = false;
  friend bool operator==(const Criteria&, const Criteria&) = default;
};

struct AtomicKnowledge {
  std::string id;
  std::string text;
  std::string generator;
  Criteria criteria;
  json extra = json::object();
  SourceLine line;
  friend bool operator==(const AtomicKnowledge&, const AtomicKnowledge&) = default;
};

struct KnowledgeDescription {
  std::string id;
  std::string knowledge_id;
  std::string text;
  int index = 0;
  // Word index (0-based) of the first verb, overriding the lexicon heuristic.
  std::optional<int> first_verb_index;
  json extra = json::object();
  SourceLine line;
  friend bool operator==(const KnowledgeDescription&, const KnowledgeDescription&) = default;
};

struct ElementPair {
  std::string element_text;
  Span element_span;
  std::string argument_text;
  Span argument_span;
  friend bool operator==(const ElementPair&, const ElementPair&) = default;
};

enum class AnnotationSource { model, human_corrected };

struct ScenarioAnnotation {
  std::string knowledge_id;
  std::vector<ElementPair> pairs;
  AnnotationSource source = AnnotationSource::model;
  json extra = json::object();
  SourceLine line;
  friend bool operator==(const ScenarioAnnotation&, const ScenarioAnnotation&) = default;
};

struct ScenarioQuestion {
  std::string id;
  std::string knowledge_id;
  std::string element_text;
  std::string prompt;
  std::string answer;
  json extra = json::object();
  SourceLine line;
  friend bool operator==(const ScenarioQuestion&, const ScenarioQuestion&) = default;
};

enum class SplitSide { format_train, eval };

struct DatasetManifest {
  struct Counts {
    std::size_t atomic = 0;
    std::size_t descriptions = 0;
    std::size_t questions = 0;
    friend bool operator==(const Counts&, const Counts&) = default;
  };
  Counts counts;
  std::map<std::string, SplitSide> splits;
  std::uint64_t seed = 0;
  json extra = json::object();
  friend bool operator==(const DatasetManifest&, const DatasetManifest&) = default;
};

std::string to_string(AnnotationSource source);
std::string to_string(SplitSide side);

// JSON encoding. Field names are part of the on-disk contract; fields not
// listed here are kept in `extra` and written back unchanged.
json to_json(const AtomicKnowledge& r);
json to_json(const KnowledgeDescription& r);
json to_json(const ScenarioAnnotation& r);
json to_json(const ScenarioQuestion& r);
json to_json(const DatasetManifest& r);

// Parsers throw ValidationError naming the offending field.
template <typename Record>
Record from_json(const json& j);
template <>
AtomicKnowledge from_json<AtomicKnowledge>(const json& j);
template <>
KnowledgeDescription from_json<KnowledgeDescription>(const json& j);
template <>
ScenarioAnnotation from_json<ScenarioAnnotation>(const json& j);
template <>
ScenarioQuestion from_json<ScenarioQuestion>(const json& j);
template <>
DatasetManifest from_json<DatasetManifest>(const json& j);

// Per-record invariants.
void validate(const AtomicKnowledge& r);
void validate(const KnowledgeDescription& r);
/// With `host_text`, also checks that every span lies inside the text and
/// slices back to its surface string.
void validate(const ScenarioAnnotation& r, const std::string* host_text = nullptr);
void validate(const ScenarioQuestion& r);
void validate(const DatasetManifest& r);

// Cross-record invariants.
/// Parents resolve; indexes within a parent are unique and contiguous from 1.
void validate_descriptions(const std::vector<KnowledgeDescription>& descriptions,
                           const std::vector<AtomicKnowledge>& atomics);
/// Atomic records flagged role_rich need >= 3 pairs once annotated.
void check_role_richness(const std::vector<AtomicKnowledge>& atomics,
                         const std::vector<ScenarioAnnotation>& annotations);
/// Manifest counts equal the actual record counts; split covers the questions.
void check_manifest(const DatasetManifest& manifest, const DatasetManifest::Counts& actual,
                    const std::vector<ScenarioQuestion>& questions);

}  // namespace scog::corpus
