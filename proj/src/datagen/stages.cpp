#include "scog/datagen/stages.hpp"

#include <regex>

#include "scog/corpus/text.hpp"
#include "scog/error.hpp"

namespace scog::datagen {

using corpus::trim;
using nlohmann::json;

std::string complete(providers::ChatService& chat, const ChatOptions& who,
                     const PromptTemplate& tpl, const std::map<std::string, std::string>& values) {
  return chat.complete(providers::ChatRequest{who.provider_id, tpl.id, render(tpl, values),
                                              who.temperature, who.max_tokens});
}

namespace {

std::vector<std::string> split_lines(std::string_view raw) {
  std::vector<std::string> out;
  std::size_t pos = 0;
  while (pos <= raw.size()) {
    auto nl = raw.find('\n', pos);
    if (nl == std::string_view::npos) nl = raw.size();
    out.push_back(trim(raw.substr(pos, nl - pos)));
    pos = nl + 1;
  }
  return out;
}

std::string strip_quotes(std::string s) {
  static const std::vector<std::pair<std::string, std::string>> pairs{
      {"\"", "\""}, {"\xE2\x80\x9C", "\xE2\x80\x9D"}, {"'", "'"}};
  for (const auto& [open, close] : pairs) {
    if (s.size() >= open.size() + close.size() && s.starts_with(open) && s.ends_with(close)) {
      return trim(s.substr(open.size(), s.size() - open.size() - close.size()));
    }
  }
  return s;
}

std::string strip_marker(const std::string& line) {
  static const std::regex marker(R"(^(\d+[.)]|[-*\xE2\x80\xA2]+)\s+)");
  return std::regex_replace(line, marker, "", std::regex_constants::format_first_only);
}

}  // namespace

std::vector<std::string> clean_response_lines(std::string_view raw) {
  std::vector<std::string> out;
  for (const auto& line : split_lines(raw)) {
    if (line.empty()) continue;
    auto cleaned = strip_quotes(trim(strip_marker(line)));
    if (!cleaned.empty()) out.push_back(std::move(cleaned));
  }
  return out;
}

std::vector<std::string> generate_atomic_candidates(providers::ChatService& chat,
                                                    const ChatOptions& agent, std::size_t count,
                                                    const PromptTemplate& tpl, int round) {
  if (count == 0) return {};
  const std::string raw = complete(chat, agent, tpl,
                                   {{"count", std::to_string(count)},
                                    {"attempt", std::to_string(round)}});
  std::vector<std::string> out;
  for (auto& line : clean_response_lines(raw)) {
    if (out.size() == count) break;
    if (corpus::is_single_sentence(line)) out.push_back(std::move(line));
  }
  if (out.empty()) {
    throw ProviderError("generator " + agent.provider_id + " returned no usable sentences");
  }
  return out;
}

const std::vector<std::string>& atomic_criteria() {
  static const std::vector<std::string> c{"fictional", "role_rich", "concise"};
  return c;
}

const std::vector<std::string>& description_criteria() {
  static const std::vector<std::string> c{"fictional", "role_rich", "concise",
                                          "semantic_consistency"};
  return c;
}

std::optional<std::map<std::string, bool>> parse_judgment(
    std::string_view raw, const std::vector<std::string>& criteria) {
  static const std::regex line_re(R"(^([a-z_]+)\s*:\s*(PASS|FAIL)$)");
  std::map<std::string, bool> verdicts;
  for (const auto& line : split_lines(raw)) {
    if (line.empty()) continue;
    std::smatch m;
    if (!std::regex_match(line, m, line_re)) return std::nullopt;
    const std::string name = m[1];
    if (std::find(criteria.begin(), criteria.end(), name) == criteria.end()) return std::nullopt;
    if (!verdicts.emplace(name, m[2] == "PASS").second) return std::nullopt;
  }
  if (verdicts.size() != criteria.size()) return std::nullopt;
  return verdicts;
}

bool VoteRecord::passed() const {
  if (votes.empty() || !unparseable.empty()) return false;
  for (const auto& [validator, verdicts] : votes) {
    for (const auto& [criterion, pass] : verdicts) {
      if (!pass) return false;
    }
  }
  return true;
}

json VoteRecord::to_json() const {
  return {{"sample_id", sample_id}, {"votes", votes}, {"unparseable", unparseable}};
}

VoteRecord VoteRecord::from_json(const json& j) {
  VoteRecord r;
  r.sample_id = j.at("sample_id").get<std::string>();
  r.votes = j.at("votes").get<decltype(r.votes)>();
  r.unparseable = j.value("unparseable", std::vector<std::string>{});
  return r;
}

VoteOutcome vote_validate(providers::ChatService& chat, const std::string& sample_id,
                          const std::vector<ChatOptions>& validators,
                          const std::vector<std::string>& criteria, const PromptTemplate& tpl,
                          const std::map<std::string, std::string>& values, ReviewStage stage,
                          const json& payload) {
  if (validators.empty()) {
    throw ValidationError("vote_validate: no validators configured");
  }
  VoteOutcome out;
  out.record.sample_id = sample_id;
  for (const auto& v : validators) {
    const std::string raw = complete(chat, v, tpl, values);
    auto verdicts = parse_judgment(raw, criteria);
    if (!verdicts) {
      verdicts.emplace();
      for (const auto& c : criteria) (*verdicts)[c] = false;
      out.record.unparseable.push_back(v.provider_id);
    }
    out.record.votes[v.provider_id] = *verdicts;
  }
  out.pass = out.record.passed();
  if (!out.record.unparseable.empty()) {
    std::string who;
    for (const auto& id : out.record.unparseable) who += (who.empty() ? "" : ", ") + id;
    out.review = ReviewRequest{sample_id, stage, "unparseable judgment from " + who, payload};
  }
  return out;
}

ExpansionResult expand_descriptions(providers::ChatService& chat,
                                    const corpus::AtomicKnowledge& knowledge,
                                    const ExpansionOptions& options,
                                    const PromptTemplate& expand_tpl,
                                    const PromptTemplate& validate_tpl) {
  ExpansionResult out;
  if (options.k == 0) return out;
  for (int round = 1; round <= options.max_rounds && out.descriptions.size() < options.k;
       ++round) {
    const std::size_t need = options.k - out.descriptions.size();
    const std::string raw = complete(chat, options.expander, expand_tpl,
                                     {{"text", knowledge.text},
                                      {"count", std::to_string(need)},
                                      {"attempt", std::to_string(round)}});
    std::size_t n = 0;
    for (const auto& line : clean_response_lines(raw)) {
      if (out.descriptions.size() == options.k) break;
      ++n;
      if (!corpus::is_single_sentence(line)) continue;
      const bool seen = std::any_of(out.descriptions.begin(), out.descriptions.end(),
                                    [&](const auto& d) { return d.text == line; });
      if (seen) continue;
      const std::string sample = knowledge.id + "/r" + std::to_string(round) + "." +
                                 std::to_string(n);
      // Unparseable judgments just fail the paraphrase here; the next round
      // asks for a replacement instead of filing a review.
      auto vote = vote_validate(chat, sample, options.validators, description_criteria(),
                                validate_tpl, {{"original", knowledge.text}, {"text", line}},
                                ReviewStage::description, json());
      out.votes.push_back(vote.record);
      if (vote.pass) {
        corpus::KnowledgeDescription d;
        d.knowledge_id = knowledge.id;
        d.text = line;
        d.index = static_cast<int>(out.descriptions.size()) + 1;
        out.descriptions.push_back(std::move(d));
      }
    }
  }
  if (out.descriptions.size() < options.k) {
    json partial = json::array();
    for (const auto& d : out.descriptions) partial.push_back(corpus::to_json(d));
    out.review = ReviewRequest{knowledge.id, ReviewStage::description,
                               "expansion incomplete: " + std::to_string(out.descriptions.size()) +
                                   " of " + std::to_string(options.k),
                               partial};
  }
  return out;
}

std::vector<std::pair<std::string, std::string>> parse_annotation_lines(std::string_view raw) {
  std::vector<std::pair<std::string, std::string>> pairs;
  for (const auto& line : split_lines(raw)) {
    if (line.empty()) continue;
    const std::string body = strip_marker(line);
    const auto sep = body.find("::");
    if (sep == std::string::npos) {
      throw ValidationError("annotation line without \"::\": " + line);
    }
    auto element = strip_quotes(trim(std::string_view(body).substr(0, sep)));
    auto argument = strip_quotes(trim(std::string_view(body).substr(sep + 2)));
    if (element.empty() || argument.empty()) {
      throw ValidationError("annotation line with an empty side: " + line);
    }
    pairs.emplace_back(std::move(element), std::move(argument));
  }
  return pairs;
}

AnnotationOutcome annotate_elements(providers::ChatService& chat,
                                    const corpus::AtomicKnowledge& knowledge,
                                    const ChatOptions& annotator, const PromptTemplate& tpl) {
  const std::string raw = complete(chat, annotator, tpl, {{"text", knowledge.text}});
  AnnotationOutcome out;
  auto flag = [&](std::string reason) {
    out.review = ReviewRequest{knowledge.id, ReviewStage::annotation, std::move(reason),
                               json{{"knowledge_id", knowledge.id},
                                    {"text", knowledge.text},
                                    {"response", raw}}};
    return out;
  };
  std::vector<std::pair<std::string, std::string>> parsed;
  try {
    parsed = parse_annotation_lines(raw);
  } catch (const ValidationError& e) {
    return flag(e.what());
  }
  if (parsed.empty()) return flag("annotator returned no pairs");
  corpus::ScenarioAnnotation a;
  a.knowledge_id = knowledge.id;
  a.source = corpus::AnnotationSource::model;
  try {
    for (const auto& [element, argument] : parsed) {
      a.pairs.push_back({element, corpus::resolve_span(knowledge.text, element), argument,
                         corpus::resolve_span(knowledge.text, argument)});
    }
    corpus::validate(a, &knowledge.text);
  } catch (const ValidationError& e) {
    return flag(e.what());
  }
  out.annotation = std::move(a);
  return out;
}

std::string clean_question_stem(std::string_view raw) {
  for (const auto& line : split_lines(raw)) {
    if (!line.empty()) return strip_quotes(line);
  }
  return "";
}

std::string question_review_key(const std::string& knowledge_id, const std::string& element) {
  return knowledge_id + "#" + element;
}

QuestionOutcome generate_questions(providers::ChatService& chat,
                                   const corpus::ScenarioAnnotation& annotation,
                                   const std::string& host_text, const ChatOptions& generator,
                                   const PromptTemplate& tpl) {
  QuestionOutcome out;
  for (const auto& pair : annotation.pairs) {
    corpus::ScenarioQuestion q;
    q.knowledge_id = annotation.knowledge_id;
    q.element_text = pair.element_text;
    q.answer = pair.argument_text;
    bool ok = false;
    for (int attempt = 1; attempt <= 2 && !ok; ++attempt) {
      q.prompt = clean_question_stem(complete(chat, generator, tpl,
                                              {{"text", host_text},
                                               {"element", pair.element_text},
                                               {"argument", pair.argument_text},
                                               {"attempt", std::to_string(attempt)}}));
      ok = !q.prompt.empty() && q.prompt.find(q.answer) == std::string::npos;
    }
    if (ok) {
      out.questions.push_back(std::move(q));
    } else {
      out.reviews.push_back(ReviewRequest{
          question_review_key(q.knowledge_id, q.element_text), ReviewStage::question,
          q.prompt.empty() ? "empty question stem" : "question stem reveals its answer",
          corpus::to_json(q)});
    }
  }
  return out;
}

}  // namespace scog::datagen
