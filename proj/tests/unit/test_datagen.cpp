#include <doctest.h>

#include <cmath>
#include <random>

#include "scog/corpus/io.hpp"
#include "scog/datagen/similarity.hpp"
#include "scog/datagen/stages.hpp"
#include "test_support.hpp"

using namespace scog::datagen;
using scog::ProviderError;
using scog::ValidationError;
using scog::corpus::AtomicKnowledge;
using scog::providers::ChatRequest;
using scog::providers::ChatService;
using scog::providers::EmbeddingService;
using scog::providers::ProviderConfig;
using scog::providers::ScriptedChatBackend;
using scog::testing::TempDir;

namespace {

const std::string kPaxton =
    "Film director Paxton presented a new movie concept to producer Helen and actor Blake.";

ProviderConfig config(std::string id) {
  ProviderConfig c;
  c.id = std::move(id);
  c.kind = "replay-only";
  return c;
}

// Chat service whose providers all answer through `script`.
std::unique_ptr<ChatService> scripted(const std::vector<std::string>& ids,
                                      ScriptedChatBackend::Script script) {
  auto chat = std::make_unique<ChatService>();
  auto backend = std::make_shared<ScriptedChatBackend>(std::move(script));
  for (const auto& id : ids) chat->add_provider(config(id), backend);
  return chat;
}

std::vector<ChatOptions> validators() { return {{"v1"}, {"v2"}, {"v3"}}; }

AtomicKnowledge paxton() {
  AtomicKnowledge k;
  k.id = "0123456789ab-0001";
  k.text = kPaxton;
  k.generator = "gen";
  return k;
}

// Embeds each text as the basis vector given by `basis`.
struct TableEmbedder : scog::providers::EmbeddingBackend {
  std::map<std::string, std::vector<double>> table;
  int fail_at = -1;
  int calls = 0;
  std::vector<double> embed(std::string_view text) override {
    if (calls++ == fail_at) throw ProviderError("embedding endpoint down");
    return table.at(std::string(text));
  }
};

ProviderConfig embed_config(std::size_t dim) {
  ProviderConfig c = config("emb");
  c.dim = dim;
  c.retries = 1;
  return c;
}

}  // namespace

TEST_CASE("templates render placeholders strictly") {
  const auto tpl = builtin_template("question_generation");
  CHECK(placeholders(tpl) == std::vector<std::string>{"text", "element", "argument", "attempt"});
  const auto out = render(tpl, {{"text", "T"}, {"element", "E"}, {"argument", "A"},
                                {"attempt", "1"}});
  CHECK(out.find("Fact: T") != std::string::npos);
  CHECK(out.find('{') == std::string::npos);
  CHECK_THROWS_AS(render(tpl, {{"text", "T"}}), ValidationError);
  CHECK_THROWS_AS(render(PromptTemplate{"x", "no slots"}, {{"text", "T"}}), ValidationError);
  CHECK(builtin_template_ids().size() == 6);
  CHECK_THROWS_AS(builtin_template("nope"), ValidationError);

  TempDir dir;
  scog::corpus::write_file_atomic(dir / "atomic_generation.txt", "Give {count} facts ({attempt}).");
  CHECK(resolve_template("atomic_generation", dir.path()).text == "Give {count} facts ({attempt}).");
  CHECK(resolve_template("element_annotation", dir.path()).text ==
        builtin_template("element_annotation").text);
}

TEST_CASE("normalize_embedding") {
  const auto u = normalize_embedding(std::vector<double>{3, 4});
  CHECK(u[0] == doctest::Approx(0.6).epsilon(1e-12));
  CHECK(u[1] == doctest::Approx(0.8).epsilon(1e-12));
  CHECK(normalize_embedding(u) == u);
  CHECK_THROWS_AS(normalize_embedding(std::vector<double>{0, 0}), ValidationError);
  CHECK_THROWS_AS(normalize_embedding(std::vector<double>{NAN, 1}), ValidationError);
}

TEST_CASE("nearest_distance") {
  EmbeddingIndex index(2);
  const auto empty = nearest_distance(index, std::vector<double>{1, 0});
  CHECK(std::isinf(empty.distance));
  CHECK_FALSE(empty.id);

  index.insert("e1", {1, 0});
  const auto nn = nearest_distance(index, std::vector<double>{0, 1});
  CHECK(nn.distance == doctest::Approx(std::sqrt(2.0)).epsilon(1e-12));
  CHECK(*nn.id == "e1");
  CHECK(nearest_distance(index, std::vector<double>{1, 0}).distance == 0.0);
  CHECK_THROWS_AS(nearest_distance(index, std::vector<double>{1, 0, 0}), ValidationError);
  CHECK_THROWS_AS(index.insert("bad", {1, 1}), ValidationError);
}

TEST_CASE("similarity filter is greedy in candidate order") {
  auto backend = std::make_shared<TableEmbedder>();
  backend->table = {{"a", {1, 0, 0}}, {"b", {0, 1, 0}}, {"c", {0, 0, 1}}};
  EmbeddingService embedder(embed_config(3), backend);

  SUBCASE("orthonormal candidates all survive") {
    auto kept = similarity_filter({{"1", "a"}, {"2", "b"}, {"3", "c"}}, embedder, 0.5);
    CHECK(kept.size() == 3);
  }
  SUBCASE("identical text keeps only the first") {
    auto kept = similarity_filter({{"1", "a"}, {"2", "a"}}, embedder, 0.5);
    REQUIRE(kept.size() == 1);
    CHECK(kept[0].id == "1");
  }
  SUBCASE("threshold above the unit-sphere diameter keeps only the first") {
    auto kept = similarity_filter({{"1", "a"}, {"2", "b"}, {"3", "c"}}, embedder, 2.1);
    REQUIRE(kept.size() == 1);
    CHECK(kept[0].id == "1");
  }
}

TEST_CASE("similarity filter resumes from its persisted cursor") {
  TempDir dir;
  const std::vector<FilterCandidate> cands{{"1", "a"}, {"2", "b"}, {"3", "a2"}, {"4", "c"}};
  auto table = std::map<std::string, std::vector<double>>{
      {"a", {1, 0, 0}}, {"b", {0, 1, 0}}, {"a2", {0.99, 0.1, 0}}, {"c", {0, 0, 1}}};

  FilterState reference;
  {
    auto backend = std::make_shared<TableEmbedder>();
    backend->table = table;
    EmbeddingService embedder(embed_config(3), backend);
    similarity_filter(cands, embedder, reference);
  }

  auto flaky = std::make_shared<TableEmbedder>();
  flaky->table = table;
  flaky->fail_at = 2;
  EmbeddingService embedder(embed_config(3), flaky);
  FilterState state;
  CHECK_THROWS_AS(similarity_filter(cands, embedder, state), ProviderError);
  CHECK(state.cursor == 2);
  state.save(dir / "filter.json");

  auto resumed = FilterState::load(dir / "filter.json");
  similarity_filter(cands, embedder, resumed);
  CHECK(resumed.to_json() == reference.to_json());
  CHECK(resumed.index.size() == 3);
  CHECK(resumed.index.min_pairwise_distance() > 0.5);
}

TEST_CASE("filtered index keeps every pair farther apart than the threshold") {
  std::mt19937_64 rng(7);
  std::normal_distribution<double> g;
  FilterState state;
  state.threshold = 1.2;
  for (int i = 0; i < 150; ++i) {
    std::vector<double> v(4);
    for (double& x : v) x = g(rng);
    filter_step(state, std::to_string(i), normalize_embedding(v));
  }
  CHECK(state.index.size() < 150);
  // Brute-force pairwise check.
  const auto& e = state.index.entries();
  for (std::size_t i = 0; i < e.size(); ++i) {
    for (std::size_t j = i + 1; j < e.size(); ++j) {
      CHECK(l2_distance(e[i].vector, e[j].vector) > 1.2);
    }
  }
}

TEST_CASE("judgments parse only in the strict per-criterion shape") {
  const auto& c = atomic_criteria();
  auto ok = parse_judgment("fictional: PASS\nrole_rich: FAIL\nconcise: PASS\n", c);
  REQUIRE(ok);
  CHECK((*ok)["role_rich"] == false);
  CHECK((*ok)["concise"] == true);
  CHECK_FALSE(parse_judgment("Looks good to me!", c));
  CHECK_FALSE(parse_judgment("fictional: PASS\nrole_rich: PASS", c));
  CHECK_FALSE(parse_judgment("fictional: PASS\nrole_rich: PASS\nconcise: PASS\nnote: fine", c));
  CHECK_FALSE(parse_judgment("fictional: PASS\nfictional: PASS\nconcise: PASS", c));
  CHECK_FALSE(parse_judgment("fictional: yes\nrole_rich: PASS\nconcise: PASS", c));
}

TEST_CASE("voting requires unanimity") {
  std::map<std::string, std::string> answers{
      {"v1", "fictional: PASS\nrole_rich: PASS\nconcise: PASS"},
      {"v2", "fictional: PASS\nrole_rich: PASS\nconcise: PASS"},
      {"v3", "fictional: PASS\nrole_rich: PASS\nconcise: PASS"}};
  auto chat = scripted({"v1", "v2", "v3"},
                       [&](const ChatRequest& r) { return answers.at(r.provider_id); });
  const auto tpl = builtin_template("atomic_validation");
  auto vote = [&] {
    return vote_validate(*chat, "s1", validators(), atomic_criteria(), tpl, {{"text", kPaxton}},
                         ReviewStage::atomic, scog::corpus::to_json(paxton()));
  };

  auto all_pass = vote();
  CHECK(all_pass.pass);
  CHECK(all_pass.record.votes.size() == 3);
  CHECK_FALSE(all_pass.review);

  answers["v3"] = "fictional: PASS\nrole_rich: PASS\nconcise: FAIL";
  auto one_fail = vote();
  CHECK_FALSE(one_fail.pass);
  CHECK_FALSE(one_fail.review);

  answers["v3"] = "I think this is a lovely fact.";
  auto garbage = vote();
  CHECK_FALSE(garbage.pass);
  REQUIRE(garbage.review);
  CHECK(garbage.review->target_id == "s1");
  CHECK(garbage.record.unparseable == std::vector<std::string>{"v3"});
  CHECK(garbage.record.votes.at("v3").at("fictional") == false);
  CHECK(VoteRecord::from_json(garbage.record.to_json()) == garbage.record);

  CHECK_THROWS_AS(vote_validate(*chat, "s", {}, atomic_criteria(), tpl, {{"text", "x"}},
                                ReviewStage::atomic, nullptr),
                  ValidationError);
}

TEST_CASE("candidate generation cleans list markers and keeps single sentences") {
  auto chat = scripted({"gen"}, [](const ChatRequest&) {
    return "1. Alpha met Beta at the Gamma hall.\n2) \"Delta sold Epsilon a boat.\"\n"
           "- Two sentences here. Not allowed.\n\n* Zeta taught Eta near Theta.";
  });
  const auto tpl = builtin_template("atomic_generation");
  auto out = generate_atomic_candidates(*chat, {"gen"}, 10, tpl);
  CHECK(out == std::vector<std::string>{"Alpha met Beta at the Gamma hall.",
                                        "Delta sold Epsilon a boat.",
                                        "Zeta taught Eta near Theta."});
  CHECK(generate_atomic_candidates(*chat, {"gen"}, 2, tpl).size() == 2);
  CHECK(generate_atomic_candidates(*chat, {"gen"}, 0, tpl).empty());

  auto silent = scripted({"gen"}, [](const ChatRequest&) { return "Sure! Here you go:"; });
  CHECK_THROWS_AS(generate_atomic_candidates(*silent, {"gen"}, 3, tpl), ProviderError);
}

TEST_CASE("description expansion votes with the semantic-consistency criterion") {
  const std::vector<std::string> paraphrases{
      "Paxton, a film director, presented a new movie concept to producer Helen and actor Blake.",
      "A new movie concept was presented by film director Paxton to producer Helen and actor "
      "Blake.",
      "Producer Helen and actor Blake were presented a new movie concept by film director "
      "Paxton."};
  int expand_calls = 0;
  auto chat = scripted({"exp", "v1", "v2", "v3"}, [&](const ChatRequest& r) -> std::string {
    if (r.template_id == "description_expansion") {
      ++expand_calls;
      std::string out;
      for (const auto& p : paraphrases) out += p + "\n";
      return out;
    }
    CHECK(r.rendered_prompt.find("semantic_consistency") != std::string::npos);
    return "fictional: PASS\nrole_rich: PASS\nconcise: PASS\nsemantic_consistency: PASS";
  });
  ExpansionOptions opts{{"exp"}, validators(), 3, 3};
  auto res = expand_descriptions(*chat, paxton(), opts, builtin_template("description_expansion"),
                                 builtin_template("description_validation"));
  REQUIRE(res.descriptions.size() == 3);
  for (int i = 0; i < 3; ++i) {
    CHECK(res.descriptions[i].index == i + 1);
    CHECK(res.descriptions[i].text == paraphrases[i]);
    CHECK(res.descriptions[i].knowledge_id == paxton().id);
  }
  CHECK_FALSE(res.review);
  CHECK(expand_calls == 1);

  opts.k = 0;
  CHECK(expand_descriptions(*chat, paxton(), opts, builtin_template("description_expansion"),
                            builtin_template("description_validation"))
            .descriptions.empty());

  // Duplicates never count twice, so asking for 5 exhausts the round budget.
  opts.k = 5;
  expand_calls = 0;
  auto partial = expand_descriptions(*chat, paxton(), opts,
                                     builtin_template("description_expansion"),
                                     builtin_template("description_validation"));
  CHECK(partial.descriptions.size() == 3);
  CHECK(expand_calls == 3);
  REQUIRE(partial.review);
  CHECK(partial.review->stage == ReviewStage::description);
  CHECK(partial.review->original_payload.size() == 3);
}

TEST_CASE("element annotation resolves spans and routes failures to review") {
  std::string reply = "director :: Paxton\nproducer :: Helen\nactor :: Blake";
  auto chat = scripted({"ann"}, [&](const ChatRequest&) { return reply; });
  const auto tpl = builtin_template("element_annotation");

  auto ok = annotate_elements(*chat, paxton(), {"ann"}, tpl);
  REQUIRE(ok.annotation);
  CHECK_FALSE(ok.review);
  const auto& pairs = ok.annotation->pairs;
  REQUIRE(pairs.size() == 3);
  CHECK(pairs[0].element_text == "director");
  CHECK(pairs[0].argument_text == "Paxton");
  // "Film " is 5 characters, "director " 9 more.
  CHECK(pairs[0].element_span == scog::corpus::Span{5, 13});
  CHECK(pairs[0].argument_span == scog::corpus::Span{14, 20});
  CHECK(pairs[1].argument_text == "Helen");
  CHECK(pairs[2].argument_text == "Blake");

  reply = "director :: Spielberg";
  auto missing = annotate_elements(*chat, paxton(), {"ann"}, tpl);
  CHECK_FALSE(missing.annotation);
  REQUIRE(missing.review);
  CHECK(missing.review->target_id == paxton().id);
  CHECK(missing.review->stage == ReviewStage::annotation);

  reply = "the director is Paxton";
  CHECK(annotate_elements(*chat, paxton(), {"ann"}, tpl).review);

  AtomicKnowledge single = paxton();
  single.text = "Baker Rolf sold bread.";
  reply = "Baker :: Rolf";
  REQUIRE(annotate_elements(*chat, single, {"ann"}, tpl).annotation);
  CHECK(annotate_elements(*chat, single, {"ann"}, tpl).annotation->pairs.size() == 1);
}

TEST_CASE("question generation yields one stem per pair and never leaks the answer") {
  const std::string director_stem =
      "The director who presented a new movie concept to producer Helen and actor Blake is ___";
  int leaks_left = 1;
  auto chat = scripted({"qg"}, [&](const ChatRequest& r) -> std::string {
    if (r.rendered_prompt.find("Scenario element: director") != std::string::npos) {
      if (leaks_left-- > 0) return "Paxton, the director, pitched to Helen and Blake; name: ___";
      return director_stem;
    }
    if (r.rendered_prompt.find("Scenario element: producer") != std::string::npos) {
      return "\"The producer who heard the pitch from director Paxton with actor Blake is ___\"";
    }
    return "Blake is the actor ___";  // always leaks
  });
  const auto k = paxton();
  scog::corpus::ScenarioAnnotation a;
  a.knowledge_id = k.id;
  for (auto [e, g] : {std::pair{"director", "Paxton"}, {"producer", "Helen"}, {"actor", "Blake"}}) {
    a.pairs.push_back({e, scog::corpus::resolve_span(k.text, e), g,
                       scog::corpus::resolve_span(k.text, g)});
  }
  auto out = generate_questions(*chat, a, k.text, {"qg"}, builtin_template("question_generation"));
  REQUIRE(out.questions.size() == 2);
  CHECK(out.questions[0].prompt == director_stem);
  CHECK(out.questions[0].answer == "Paxton");
  CHECK(out.questions[1].prompt.front() == 'T');
  CHECK(out.questions[1].answer == "Helen");
  for (const auto& q : out.questions) CHECK(q.prompt.find(q.answer) == std::string::npos);
  REQUIRE(out.reviews.size() == 1);
  CHECK(out.reviews[0].target_id == question_review_key(k.id, "actor"));
  CHECK(out.reviews[0].stage == ReviewStage::question);
}

TEST_CASE("m pairs produce exactly m questions") {
  auto chat = scripted({"qg"}, [](const ChatRequest&) { return "Someone in the scene is ___"; });
  const auto k = paxton();
  scog::corpus::ScenarioAnnotation a;
  a.knowledge_id = k.id;
  for (auto [e, g] : {std::pair{"director", "Paxton"}, {"producer", "Helen"}, {"actor", "Blake"}}) {
    a.pairs.push_back({e, scog::corpus::resolve_span(k.text, e), g,
                       scog::corpus::resolve_span(k.text, g)});
  }
  auto out = generate_questions(*chat, a, k.text, {"qg"}, builtin_template("question_generation"));
  CHECK(out.questions.size() == 3);
  CHECK(out.reviews.empty());
}

TEST_CASE("review queue is an append-only event log") {
  TempDir dir;
  const auto path = dir / "review.jsonl";
  CHECK_THROWS_AS(ReviewQueue::open_existing(path), ValidationError);
  auto q = ReviewQueue::open(path);
  ReviewRequest req{"k-1", ReviewStage::annotation, "span not found", {{"text", "x"}}};
  const auto id = q.enqueue(req);
  CHECK(q.enqueue(req) == id);
  CHECK(q.items().size() == 1);
  CHECK(id.rfind("rv-", 0) == 0);

  const auto id2 = q.enqueue({"k-2", ReviewStage::annotation, "span not found", nullptr});
  CHECK_THROWS_AS(q.resolve(id, ReviewStatus::corrected), ValidationError);
  CHECK_THROWS_AS(q.resolve(id, ReviewStatus::accepted, nlohmann::json{{"a", 1}}), ValidationError);
  CHECK_THROWS_AS(q.resolve(id, ReviewStatus::pending), ValidationError);
  CHECK_THROWS_AS(q.resolve("rv-missing", ReviewStatus::accepted), ValidationError);
  q.resolve(id, ReviewStatus::accepted);
  CHECK(q.find(id)->status == ReviewStatus::accepted);
  CHECK_THROWS_AS(q.resolve(id, ReviewStatus::rejected), ValidationError);
  q.resolve(id2, ReviewStatus::corrected, nlohmann::json{{"fixed", true}});

  const auto before = scog::corpus::read_file(path);
  auto reopened = ReviewQueue::open_existing(path);
  REQUIRE(reopened.items().size() == 2);
  CHECK(reopened.find(id)->status == ReviewStatus::accepted);
  CHECK(reopened.find(id2)->corrected_payload->at("fixed") == true);
  // Four events: two enqueues, two resolutions.
  CHECK(std::count(before.begin(), before.end(), '\n') == 4);
}

TEST_CASE("review resolutions fold into downstream records") {
  struct Rec {
    std::string key;
    int value;
  };
  auto key = [](const Rec& r) { return r.key; };
  auto parse = [](const nlohmann::json& j) { return Rec{j.at("key"), j.at("value")}; };
  std::function<std::string(const Rec&)> key_fn = key;
  std::function<Rec(const nlohmann::json&)> parse_fn = parse;

  ReviewQueue q;
  const auto drop = q.enqueue({"a", ReviewStage::annotation, "inspection", nullptr});
  const auto fix = q.enqueue({"b", ReviewStage::annotation, "inspection", nullptr});
  const auto add = q.enqueue({"c", ReviewStage::annotation, "failed",
                              nlohmann::json{{"key", "c"}, {"value", 3}}});
  q.enqueue({"d", ReviewStage::annotation, "failed", nlohmann::json{{"key", "d"}, {"value", 4}}});
  q.enqueue({"a", ReviewStage::question, "other stage", nullptr});

  std::vector<Rec> recs{{"a", 1}, {"b", 2}};
  auto pending = apply_reviews(recs, q, ReviewStage::annotation, key_fn, parse_fn);
  CHECK(pending.size() == 2);

  q.resolve(drop, ReviewStatus::rejected);
  q.resolve(fix, ReviewStatus::corrected, nlohmann::json{{"key", "b"}, {"value", 20}});
  q.resolve(add, ReviewStatus::accepted);
  auto out = apply_reviews(recs, q, ReviewStage::annotation, key_fn, parse_fn);
  REQUIRE(out.size() == 2);
  CHECK(out[0].key == "b");
  CHECK(out[0].value == 20);
  CHECK(out[1].key == "c");
}

TEST_CASE("inspection sampling is deterministic and roughly proportional") {
  int picked = 0;
  for (int i = 0; i < 2000; ++i) {
    const auto id = "id-" + std::to_string(i);
    const bool a = selected_for_inspection(id, 0.1, 42);
    CHECK(a == selected_for_inspection(id, 0.1, 42));
    picked += a;
  }
  CHECK(picked > 140);
  CHECK(picked < 260);
  CHECK_FALSE(selected_for_inspection("x", 0.0, 1));
  CHECK(selected_for_inspection("x", 1.0, 1));
}
