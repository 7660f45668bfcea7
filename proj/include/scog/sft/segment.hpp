#pragma once

#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "scog/corpus/records.hpp"
#include "scog/error.hpp"

namespace scog::sft {

/// Closed English verb lexicon with regular inflection rules.
struct VerbLexicon {
  std::string version;
  std::set<std::string> lemmas;
  std::set<std::string> strong_lemmas;    // no regular -ed form
  std::set<std::string> irregular_forms;  // past tenses, participles, etc.
  std::set<std::string> auxiliaries;
  // Nouns that double as verbs ("star", "guard"): their bare and -s forms
  // are read as nouns, their -ed/-ing forms as verbs.
  std::set<std::string> noun_like;
  // Words after which the next token is read as a noun ("the", "a", "his").
  std::set<std::string> determiners;

  static const VerbLexicon& builtin();

  /// Word (any case) is a verb form: auxiliary, irregular form, lemma, or a
  /// lemma plus -s/-es/-ies, -ed/-d/-ied (with consonant doubling), -ing.
  bool is_verb(std::string_view word) const;
};

struct SftPair {
  std::string source_description_id;
  std::string prompt;
  std::string target;
  friend bool operator==(const SftPair&, const SftPair&) = default;
};

nlohmann::json to_json(const SftPair& p);
SftPair sft_pair_from_json(const nlohmann::json& j);

/// Raised when no token classifies as a verb; carries the text for review.
class NoVerbError : public ValidationError {
 public:
  explicit NoVerbError(std::string text)
      : ValidationError("no verb found in \"" + text + "\""), text_(std::move(text)) {}
  const std::string& text() const { return text_; }

 private:
  std::string text_;
};

/// Words are whitespace-separated tokens; the classified core of a word is
/// its run of letters, apostrophes and hyphens. Capitalized words other than
/// the first are treated as names, and a word right after a determiner as a
/// noun. The split falls right after the core of the first verb, so the verb
/// ends the prompt and the target keeps its leading whitespace.
SftPair segment_at_first_verb(std::string_view text,
                              const VerbLexicon& lexicon = VerbLexicon::builtin());

/// Same, splitting after word `word_index` (0-based) instead of searching.
SftPair segment_after_word(std::string_view text, std::size_t word_index);

struct SkippedDescription {
  std::string description_id;
  std::string reason;
};

struct SftCorpus {
  std::vector<SftPair> pairs;
  std::vector<SkippedDescription> skipped;
};

/// One pair per segmentable description, honoring `first_verb_index`.
SftCorpus build_sft_corpus(const std::vector<corpus::KnowledgeDescription>& descriptions,
                           const VerbLexicon& lexicon = VerbLexicon::builtin());

}  // namespace scog::sft
