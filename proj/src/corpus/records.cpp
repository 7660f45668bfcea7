#include "scog/corpus/records.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <unordered_map>

#include "scog/error.hpp"

namespace scog::corpus {

namespace {

json collect_extra(const json& j, std::initializer_list<const char*> known) {
  json extra = json::object();
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (std::none_of(known.begin(), known.end(),
                     [&](const char* k) { return it.key() == k; })) {
      extra[it.key()] = it.value();
    }
  }
  return extra;
}

json with_extra(json out, const json& extra) {
  for (auto it = extra.begin(); it != extra.end(); ++it) {
    if (!out.contains(it.key())) {
      out[it.key()] = it.value();
    }
  }
  return out;
}

const json& field(const json& j, const char* type, const char* name) {
  if (!j.is_object()) {
    throw ValidationError(std::string(type) + ": record is not an object");
  }
  auto it = j.find(name);
  if (it == j.end()) {
    throw ValidationError(std::string(type) + "." + name + ": missing field");
  }
  return *it;
}

std::string string_field(const json& j, const char* type, const char* name) {
  const json& v = field(j, type, name);
  if (!v.is_string()) {
    throw ValidationError(std::string(type) + "." + name + ": expected a string");
  }
  return v.get<std::string>();
}

template <typename Int>
Int integer_field(const json& j, const char* type, const char* name) {
  const json& v = field(j, type, name);
  if (!v.is_number_integer()) {
    throw ValidationError(std::string(type) + "." + name + ": expected an integer");
  }
  return v.get<Int>();
}

bool bool_field(const json& j, const char* type, const char* name) {
  const json& v = field(j, type, name);
  if (!v.is_boolean()) {
    throw ValidationError(std::string(type) + "." + name + ": expected a boolean");
  }
  return v.get<bool>();
}

Span span_field(const json& j, const char* type, const char* name) {
  const json& v = field(j, type, name);
  if (!v.is_object()) {
    throw ValidationError(std::string(type) + "." + name + ": expected a span object");
  }
  const auto start = integer_field<long long>(v, "Span", "char_start");
  const auto end = integer_field<long long>(v, "Span", "char_end");
  if (start < 0 || end < 0) {
    throw ValidationError(std::string("Span invariant violated (") + name +
                          "): negative offset");
  }
  return Span{static_cast<std::size_t>(start), static_cast<std::size_t>(end)};
}

json span_json(const Span& s) { return json{{"char_start", s.char_start}, {"char_end", s.char_end}}; }

}  // namespace

std::string to_string(AnnotationSource source) {
  return source == AnnotationSource::model ? "model" : "human-corrected";
}

std::string to_string(SplitSide side) {
  return side == SplitSide::format_train ? "format_train" : "eval";
}

json to_json(const AtomicKnowledge& r) {
  json out{{"id", r.id},
           {"text", r.text},
           {"generator", r.generator},
           {"criteria",
            {{"fictional", r.criteria.fictional},
             {"role_rich", r.criteria.role_rich},
             {"concise", r.criteria.concise}}}};
  return with_extra(std::move(out), r.extra);
}

json to_json(const KnowledgeDescription& r) {
  json out{{"id", r.id}, {"knowledge_id", r.knowledge_id}, {"text", r.text}, {"index", r.index}};
  if (r.first_verb_index) {
    out["first_verb_index"] = *r.first_verb_index;
  }
  return with_extra(std::move(out), r.extra);
}

json to_json(const ScenarioAnnotation& r) {
  json pairs = json::array();
  for (const auto& p : r.pairs) {
    pairs.push_back({{"element_text", p.element_text},
                     {"element_span", span_json(p.element_span)},
                     {"argument_text", p.argument_text},
                     {"argument_span", span_json(p.argument_span)}});
  }
  json out{{"knowledge_id", r.knowledge_id}, {"pairs", pairs}, {"source", to_string(r.source)}};
  return with_extra(std::move(out), r.extra);
}

json to_json(const ScenarioQuestion& r) {
  json out{{"id", r.id},
           {"knowledge_id", r.knowledge_id},
           {"element_text", r.element_text},
           {"prompt", r.prompt},
           {"answer", r.answer}};
  return with_extra(std::move(out), r.extra);
}

json to_json(const DatasetManifest& r) {
  json splits = json::object();
  for (const auto& [qid, side] : r.splits) {
    splits[qid] = to_string(side);
  }
  json out{{"counts",
            {{"atomic", r.counts.atomic},
             {"descriptions", r.counts.descriptions},
             {"questions", r.counts.questions}}},
           {"splits", splits},
           {"seed", r.seed}};
  return with_extra(std::move(out), r.extra);
}

template <>
AtomicKnowledge from_json<AtomicKnowledge>(const json& j) {
  constexpr const char* t = "AtomicKnowledge";
  AtomicKnowledge r;
  r.id = string_field(j, t, "id");
  r.text = string_field(j, t, "text");
  r.generator = string_field(j, t, "generator");
  const json& c = field(j, t, "criteria");
  r.criteria.fictional = bool_field(c, "AtomicKnowledge.criteria", "fictional");
  r.criteria.role_rich = bool_field(c, "AtomicKnowledge.criteria", "role_rich");
  r.criteria.concise = bool_field(c, "AtomicKnowledge.criteria", "concise");
  r.extra = collect_extra(j, {"id", "text", "generator", "criteria"});
  return r;
}

template <>
KnowledgeDescription from_json<KnowledgeDescription>(const json& j) {
  constexpr const char* t = "KnowledgeDescription";
  KnowledgeDescription r;
  r.id = string_field(j, t, "id");
  r.knowledge_id = string_field(j, t, "knowledge_id");
  r.text = string_field(j, t, "text");
  r.index = integer_field<int>(j, t, "index");
  if (j.contains("first_verb_index")) {
    r.first_verb_index = integer_field<int>(j, t, "first_verb_index");
  }
  r.extra = collect_extra(j, {"id", "knowledge_id", "text", "index", "first_verb_index"});
  return r;
}

template <>
ScenarioAnnotation from_json<ScenarioAnnotation>(const json& j) {
  constexpr const char* t = "ScenarioAnnotation";
  ScenarioAnnotation r;
  r.knowledge_id = string_field(j, t, "knowledge_id");
  const json& pairs = field(j, t, "pairs");
  if (!pairs.is_array()) {
    throw ValidationError("ScenarioAnnotation.pairs: expected an array");
  }
  for (const auto& p : pairs) {
    constexpr const char* pt = "ScenarioAnnotation.pairs[]";
    r.pairs.push_back(ElementPair{string_field(p, pt, "element_text"),
                                  span_field(p, pt, "element_span"),
                                  string_field(p, pt, "argument_text"),
                                  span_field(p, pt, "argument_span")});
  }
  const std::string source = string_field(j, t, "source");
  if (source == "model") {
    r.source = AnnotationSource::model;
  } else if (source == "human-corrected") {
    r.source = AnnotationSource::human_corrected;
  } else {
    throw ValidationError("ScenarioAnnotation.source: unknown value \"" + source + "\"");
  }
  r.extra = collect_extra(j, {"knowledge_id", "pairs", "source"});
  return r;
}

template <>
ScenarioQuestion from_json<ScenarioQuestion>(const json& j) {
  constexpr const char* t = "ScenarioQuestion";
  ScenarioQuestion r;
  r.id = string_field(j, t, "id");
  r.knowledge_id = string_field(j, t, "knowledge_id");
  r.element_text = string_field(j, t, "element_text");
  r.prompt = string_field(j, t, "prompt");
  r.answer = string_field(j, t, "answer");
  r.extra = collect_extra(j, {"id", "knowledge_id", "element_text", "prompt", "answer"});
  return r;
}

template <>
DatasetManifest from_json<DatasetManifest>(const json& j) {
  constexpr const char* t = "DatasetManifest";
  DatasetManifest r;
  const json& counts = field(j, t, "counts");
  r.counts.atomic = integer_field<std::size_t>(counts, "DatasetManifest.counts", "atomic");
  r.counts.descriptions =
      integer_field<std::size_t>(counts, "DatasetManifest.counts", "descriptions");
  r.counts.questions = integer_field<std::size_t>(counts, "DatasetManifest.counts", "questions");
  const json& splits = field(j, t, "splits");
  if (!splits.is_object()) {
    throw ValidationError("DatasetManifest.splits: expected an object");
  }
  for (auto it = splits.begin(); it != splits.end(); ++it) {
    const std::string side = it.value().is_string() ? it.value().get<std::string>() : "";
    if (side == "format_train") {
      r.splits[it.key()] = SplitSide::format_train;
    } else if (side == "eval") {
      r.splits[it.key()] = SplitSide::eval;
    } else {
      throw ValidationError("DatasetManifest.splits[" + it.key() + "]: expected format_train|eval");
    }
  }
  r.seed = integer_field<std::uint64_t>(j, t, "seed");
  r.extra = collect_extra(j, {"counts", "splits", "seed"});
  return r;
}

void validate(const AtomicKnowledge& r) {
  if (r.id.empty()) {
    throw ValidationError("AtomicKnowledge.id: empty");
  }
  if (r.text.empty()) {
    throw ValidationError("AtomicKnowledge.text: empty");
  }
  utf8::length(r.text);
  if (!is_single_sentence(r.text)) {
    throw ValidationError("AtomicKnowledge.text: not a single sentence: \"" + r.text + "\"");
  }
}

void validate(const KnowledgeDescription& r) {
  if (r.id.empty()) {
    throw ValidationError("KnowledgeDescription.id: empty");
  }
  if (r.knowledge_id.empty()) {
    throw ValidationError("KnowledgeDescription.knowledge_id: empty");
  }
  if (trim(r.text).empty()) {
    throw ValidationError("KnowledgeDescription.text: empty");
  }
  utf8::length(r.text);
  if (r.index < 1) {
    throw ValidationError("KnowledgeDescription.index: must be >= 1");
  }
  if (r.first_verb_index && *r.first_verb_index < 0) {
    throw ValidationError("KnowledgeDescription.first_verb_index: must be >= 0");
  }
}

void validate(const ScenarioAnnotation& r, const std::string* host_text) {
  if (r.knowledge_id.empty()) {
    throw ValidationError("ScenarioAnnotation.knowledge_id: empty");
  }
  if (r.pairs.empty()) {
    throw ValidationError("ScenarioAnnotation.pairs: at least one element-argument pair required");
  }
  for (std::size_t i = 0; i < r.pairs.size(); ++i) {
    const auto& p = r.pairs[i];
    const std::string at = "pairs[" + std::to_string(i) + "]";
    if (p.element_text.empty() || p.argument_text.empty()) {
      throw ValidationError("ScenarioAnnotation." + at + ": empty surface text");
    }
    for (const auto& [span, text, name] :
         {std::tuple{p.element_span, p.element_text, "element_span"},
          std::tuple{p.argument_span, p.argument_text, "argument_span"}}) {
      const std::string what = at + "." + name;
      if (span.char_start >= span.char_end) {
        throw ValidationError("Span invariant violated (" + what + "): empty or inverted");
      }
      if (host_text != nullptr) {
        check_span(span, *host_text, what);
        if (slice(*host_text, span) != text) {
          throw ValidationError("ScenarioAnnotation." + what + ": slice \"" +
                                std::string(slice(*host_text, span)) + "\" != \"" + text + "\"");
        }
      } else if (span.length() != utf8::length(text)) {
        throw ValidationError("Span invariant violated (" + what +
                              "): width differs from surface length");
      }
    }
    for (std::size_t k = 0; k < i; ++k) {
      // Identical spans are a shared surface; only partial overlaps are invalid.
      if (r.pairs[k].element_span.overlaps(p.element_span) &&
          !(r.pairs[k].element_span == p.element_span)) {
        throw ValidationError("ScenarioAnnotation." + at + ".element_span overlaps pairs[" +
                              std::to_string(k) + "]");
      }
      if (r.pairs[k].argument_span.overlaps(p.argument_span) &&
          !(r.pairs[k].argument_span == p.argument_span)) {
        throw ValidationError("ScenarioAnnotation." + at + ".argument_span overlaps pairs[" +
                              std::to_string(k) + "]");
      }
    }
  }
}

void validate(const ScenarioQuestion& r) {
  if (r.id.empty()) {
    throw ValidationError("ScenarioQuestion.id: empty");
  }
  if (r.answer.empty()) {
    throw ValidationError("ScenarioQuestion.answer: empty");
  }
  if (trim(r.prompt).empty()) {
    throw ValidationError("ScenarioQuestion.prompt: empty");
  }
  if (r.prompt.find(r.answer) != std::string::npos) {
    throw ValidationError("ScenarioQuestion.prompt: contains the answer \"" + r.answer + "\"");
  }
}

void validate(const DatasetManifest& r) {
  if (!r.splits.empty() && r.splits.size() != r.counts.questions) {
    throw ValidationError("DatasetManifest.splits: " + std::to_string(r.splits.size()) +
                          " assignments for " + std::to_string(r.counts.questions) +
                          " questions");
  }
}

void validate_descriptions(const std::vector<KnowledgeDescription>& descriptions,
                           const std::vector<AtomicKnowledge>& atomics) {
  std::set<std::string> parents;
  for (const auto& a : atomics) {
    parents.insert(a.id);
  }
  std::map<std::string, std::vector<int>> indexes;
  for (const auto& d : descriptions) {
    if (!parents.count(d.knowledge_id)) {
      throw ValidationError("KnowledgeDescription.knowledge_id: \"" + d.knowledge_id +
                            "\" does not resolve (description " + d.id + ")");
    }
    indexes[d.knowledge_id].push_back(d.index);
  }
  for (auto& [parent, idx] : indexes) {
    std::sort(idx.begin(), idx.end());
    for (std::size_t i = 0; i < idx.size(); ++i) {
      if (idx[i] != static_cast<int>(i) + 1) {
        throw ValidationError("KnowledgeDescription.index: indexes under " + parent +
                              " are not unique and contiguous from 1");
      }
    }
  }
}

void check_role_richness(const std::vector<AtomicKnowledge>& atomics,
                         const std::vector<ScenarioAnnotation>& annotations) {
  std::unordered_map<std::string, std::size_t> pair_counts;
  for (const auto& a : annotations) {
    pair_counts[a.knowledge_id] = a.pairs.size();
  }
  for (const auto& a : atomics) {
    auto it = pair_counts.find(a.id);
    if (a.criteria.role_rich && it != pair_counts.end() && it->second < 3) {
      throw ValidationError("AtomicKnowledge.criteria.role_rich: " + a.id + " has only " +
                            std::to_string(it->second) + " annotated pairs");
    }
  }
}

void check_manifest(const DatasetManifest& manifest, const DatasetManifest::Counts& actual,
                    const std::vector<ScenarioQuestion>& questions) {
  if (!(manifest.counts == actual)) {
    throw ValidationError("DatasetManifest.counts: manifest does not match record files");
  }
  validate(manifest);
  if (manifest.splits.empty()) {
    return;
  }
  for (const auto& q : questions) {
    if (!manifest.splits.count(q.id)) {
      throw ValidationError("DatasetManifest.splits: question " + q.id + " unassigned");
    }
  }
  if (manifest.extra.contains("fraction") && manifest.extra.contains("train_groups") &&
      manifest.extra.contains("total_groups")) {
    const double fraction = manifest.extra["fraction"].get<double>();
    const auto groups = manifest.extra["total_groups"].get<std::size_t>();
    const auto train = manifest.extra["train_groups"].get<std::size_t>();
    if (std::abs(static_cast<double>(train) - fraction * static_cast<double>(groups)) > 1.0) {
      throw ValidationError("DatasetManifest.splits: train share deviates from fraction");
    }
  }
}

}  // namespace scog::corpus
