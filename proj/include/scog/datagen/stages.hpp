#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "scog/corpus/records.hpp"
#include "scog/datagen/review.hpp"
#include "scog/datagen/templates.hpp"
#include "scog/providers/providers.hpp"

namespace scog::datagen {

/// Which provider to call and with which sampling parameters.
struct ChatOptions {
  std::string provider_id;
  double temperature = 1.0;
  int max_tokens = 512;
};

std::string complete(providers::ChatService& chat, const ChatOptions& who,
                     const PromptTemplate& tpl, const std::map<std::string, std::string>& values);

// Candidate generation.

/// Nonblank response lines with list markers ("1.", "2)", "-", "*") and
/// wrapping quotes stripped.
std::vector<std::string> clean_response_lines(std::string_view raw);

/// Up to `count` single sentences from one generation call. `round`
/// distinguishes repeated calls in the cache key. Throws ProviderError when
/// nothing usable comes back.
std::vector<std::string> generate_atomic_candidates(providers::ChatService& chat,
                                                    const ChatOptions& agent, std::size_t count,
                                                    const PromptTemplate& tpl, int round = 1);

// Voting.

const std::vector<std::string>& atomic_criteria();       // fictional, role_rich, concise
const std::vector<std::string>& description_criteria();  // + semantic_consistency

/// One `criterion: PASS|FAIL` line per criterion, nothing else. Returns
/// nullopt for anything that does not fit this shape.
std::optional<std::map<std::string, bool>> parse_judgment(
    std::string_view raw, const std::vector<std::string>& criteria);

struct VoteRecord {
  std::string sample_id;
  std::map<std::string, std::map<std::string, bool>> votes;  // validator -> criterion -> pass
  std::vector<std::string> unparseable;                       // validators
  bool passed() const;
  nlohmann::json to_json() const;
  static VoteRecord from_json(const nlohmann::json& j);
  friend bool operator==(const VoteRecord&, const VoteRecord&) = default;
};

struct VoteOutcome {
  bool pass = false;
  VoteRecord record;
  std::optional<ReviewRequest> review;  // set when a judgment was unparseable
};

/// Asks every validator to judge the rendered `tpl`; pass iff all validators
/// pass all criteria. An unparseable judgment fails every criterion for that
/// validator and yields a review request carrying `payload`.
VoteOutcome vote_validate(providers::ChatService& chat, const std::string& sample_id,
                          const std::vector<ChatOptions>& validators,
                          const std::vector<std::string>& criteria, const PromptTemplate& tpl,
                          const std::map<std::string, std::string>& values, ReviewStage stage,
                          const nlohmann::json& payload);

// Description expansion.

struct ExpansionOptions {
  ChatOptions expander;
  std::vector<ChatOptions> validators;
  std::size_t k = 10;
  int max_rounds = 3;
};

struct ExpansionResult {
  std::vector<corpus::KnowledgeDescription> descriptions;  // ids left empty
  std::vector<VoteRecord> votes;
  std::optional<ReviewRequest> review;  // set when fewer than k survived
};

ExpansionResult expand_descriptions(providers::ChatService& chat,
                                    const corpus::AtomicKnowledge& knowledge,
                                    const ExpansionOptions& options,
                                    const PromptTemplate& expand_tpl,
                                    const PromptTemplate& validate_tpl);

// Element annotation.

/// `element :: argument` lines. Throws ValidationError on any other line.
std::vector<std::pair<std::string, std::string>> parse_annotation_lines(std::string_view raw);

struct AnnotationOutcome {
  std::optional<corpus::ScenarioAnnotation> annotation;
  std::optional<ReviewRequest> review;  // set instead of `annotation` on failure
};

/// Spans resolve to the first occurrence of each surface string.
AnnotationOutcome annotate_elements(providers::ChatService& chat,
                                    const corpus::AtomicKnowledge& knowledge,
                                    const ChatOptions& annotator, const PromptTemplate& tpl);

// Question generation.

/// First nonblank line, trimmed, wrapping quotes removed.
std::string clean_question_stem(std::string_view raw);

/// Key under which question reviews are filed: `<knowledge_id>#<element>`.
std::string question_review_key(const std::string& knowledge_id, const std::string& element);

struct QuestionOutcome {
  std::vector<corpus::ScenarioQuestion> questions;  // ids left empty
  std::vector<ReviewRequest> reviews;
};

/// One question per pair; a stem that contains its answer is requested once
/// more, then routed to review.
QuestionOutcome generate_questions(providers::ChatService& chat,
                                   const corpus::ScenarioAnnotation& annotation,
                                   const std::string& host_text, const ChatOptions& generator,
                                   const PromptTemplate& tpl);

}  // namespace scog::datagen
