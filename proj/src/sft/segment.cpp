#include "scog/sft/segment.hpp"

#include <cctype>
#include <optional>

namespace scog::sft {

using nlohmann::json;

namespace {

struct Word {
  std::size_t core_begin;  // byte offsets
  std::size_t core_end;
};

bool is_core_byte(unsigned char c) {
  return std::isalpha(c) || c >= 0x80 || c == '\'' || c == '-';
}

// Whitespace-separated words with their letter cores (possibly empty).
std::vector<Word> split_words(std::string_view text) {
  std::vector<Word> words;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    if (i == text.size()) break;
    const std::size_t end = [&] {
      std::size_t j = i;
      while (j < text.size() && !std::isspace(static_cast<unsigned char>(text[j]))) ++j;
      return j;
    }();
    std::size_t b = i;
    while (b < end && !(std::isalpha(static_cast<unsigned char>(text[b])) ||
                        static_cast<unsigned char>(text[b]) >= 0x80)) {
      ++b;
    }
    std::size_t e = b;
    while (e < end && is_core_byte(static_cast<unsigned char>(text[e]))) ++e;
    // Trailing apostrophes and hyphens are punctuation.
    while (e > b && (text[e - 1] == '\'' || text[e - 1] == '-')) --e;
    words.push_back({b, e});
    i = end;
  }
  return words;
}

std::string lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

SftPair split_at(std::string_view text, std::size_t pos) {
  SftPair p;
  p.prompt = std::string(text.substr(0, pos));
  p.target = std::string(text.substr(pos));
  if (p.prompt.empty() || p.target.empty()) {
    throw ValidationError("split point leaves an empty side in \"" + std::string(text) + "\"");
  }
  return p;
}

}  // namespace

json to_json(const SftPair& p) {
  return {{"prompt", p.prompt}, {"target", p.target},
          {"source_description_id", p.source_description_id}};
}

SftPair sft_pair_from_json(const json& j) {
  try {
    return SftPair{j.at("source_description_id").get<std::string>(),
                   j.at("prompt").get<std::string>(), j.at("target").get<std::string>()};
  } catch (const json::exception& e) {
    throw ValidationError(std::string("SftPair: ") + e.what());
  }
}

SftPair segment_at_first_verb(std::string_view text, const VerbLexicon& lexicon) {
  const auto words = split_words(text);
  for (std::size_t i = 0; i < words.size(); ++i) {
    const auto& w = words[i];
    if (w.core_begin == w.core_end) continue;
    const std::string_view core = text.substr(w.core_begin, w.core_end - w.core_begin);
    if (i > 0 && std::isupper(static_cast<unsigned char>(core.front()))) continue;
    if (i > 0) {
      const auto& prev = words[i - 1];
      if (lexicon.determiners.count(
              lower(text.substr(prev.core_begin, prev.core_end - prev.core_begin)))) {
        continue;
      }
    }
    if (lexicon.is_verb(core)) {
      return split_at(text, w.core_end);
    }
  }
  throw NoVerbError(std::string(text));
}

SftPair segment_after_word(std::string_view text, std::size_t word_index) {
  const auto words = split_words(text);
  if (word_index >= words.size()) {
    throw ValidationError("first_verb_index " + std::to_string(word_index) + " past the " +
                          std::to_string(words.size()) + " words of \"" + std::string(text) +
                          "\"");
  }
  const auto& w = words[word_index];
  if (w.core_begin == w.core_end) {
    throw ValidationError("word " + std::to_string(word_index) + " has no letters");
  }
  return split_at(text, w.core_end);
}

SftCorpus build_sft_corpus(const std::vector<corpus::KnowledgeDescription>& descriptions,
                           const VerbLexicon& lexicon) {
  SftCorpus out;
  for (const auto& d : descriptions) {
    try {
      SftPair p = d.first_verb_index
                      ? segment_after_word(d.text, static_cast<std::size_t>(*d.first_verb_index))
                      : segment_at_first_verb(d.text, lexicon);
      p.source_description_id = d.id;
      out.pairs.push_back(std::move(p));
    } catch (const NoVerbError&) {
      out.skipped.push_back({d.id, "no verb found"});
    } catch (const ValidationError& e) {
      out.skipped.push_back({d.id, e.what()});
    }
  }
  return out;
}

}  // namespace scog::sft
