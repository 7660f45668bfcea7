#include <doctest.h>

#include <map>
#include <set>

#include "scog/sft/segment.hpp"
#include "scog/sft/split.hpp"

using namespace scog::sft;
using scog::ValidationError;
using scog::seeded_shuffle;
using scog::corpus::KnowledgeDescription;
using scog::corpus::ScenarioQuestion;

TEST_CASE("segmentation splits right after the first verb") {
  const auto p = segment_at_first_verb(
      "Film director Paxton presented a new movie concept to producer Helen and actor Blake.");
  CHECK(p.prompt == "Film director Paxton presented");
  CHECK(p.target == " a new movie concept to producer Helen and actor Blake.");

  const auto runs = segment_at_first_verb("Runs.");
  CHECK(runs.prompt == "Runs");
  CHECK(runs.target == ".");

  CHECK_THROWS_AS(segment_at_first_verb("Stars."), NoVerbError);
  try {
    segment_at_first_verb("Stars.");
  } catch (const NoVerbError& e) {
    CHECK(e.text() == "Stars.");
  }
}

TEST_CASE("lexicon inflection rules") {
  const auto& lex = VerbLexicon::builtin();
  // Each form paired with the rule that should accept it.
  for (std::string w : {"presented", "moved", "planned", "carried", "carries", "reaches",
                        "rescued", "running", "making", "stopping", "was", "has", "sold",
                        "taught", "Runs", "guarded", "starred"}) {
    CAPTURE(w);
    CHECK(lex.is_verb(w));
  }
  for (std::string w : {"stars", "star", "guard", "director", "concept", "bed", "morning",
                        "hundred", "string", "films", "producer"}) {
    CAPTURE(w);
    CHECK_FALSE(lex.is_verb(w));
  }
}

TEST_CASE("names and nouns after determiners are not verbs") {
  auto p = segment_at_first_verb(
      "Captain James Morrison rescued endangered wildlife from a burning zoo.");
  CHECK(p.prompt == "Captain James Morrison rescued");
  // "Hope" is a name here; "the meeting" is a noun phrase.
  p = segment_at_first_verb("Mayor Hope opened the meeting hall to visitors.");
  CHECK(p.prompt == "Mayor Hope opened");
  p = segment_at_first_verb("After the meeting, chef Ana cooked, and everyone ate.");
  CHECK(p.prompt == "After the meeting, chef Ana cooked");
  CHECK(p.target == ", and everyone ate.");
  p = segment_at_first_verb("The pilot has flown over the islands.");
  CHECK(p.prompt == "The pilot has");
}

TEST_CASE("concatenation identity holds for every emitted pair") {
  const std::vector<std::string> texts{
      "Film director Paxton presented a new movie concept to producer Helen and actor Blake.",
      "Producer Helen and actor Blake were shown a new movie concept by film director Paxton.",
      "  Baker Lin  sold   bread to   teacher Mo.  ",
      "Astronaut Zoë Kral delivered a crystal engine to engineer Ruth at Vela Station.",
      "\"Gardener Ilse planted seven silver trees,\" said the mayor.",
  };
  for (const auto& t : texts) {
    CAPTURE(t);
    const auto p = segment_at_first_verb(t);
    CHECK(p.prompt + p.target == t);
    CHECK_FALSE(p.prompt.empty());
    CHECK_FALSE(p.target.empty());
  }
}

TEST_CASE("first_verb_index overrides the lexicon") {
  KnowledgeDescription d;
  d.id = "d1";
  d.text = "Stars shine over chef Ana.";
  d.first_verb_index = 1;
  auto corpus = build_sft_corpus({d});
  REQUIRE(corpus.pairs.size() == 1);
  CHECK(corpus.pairs[0].prompt == "Stars shine");
  CHECK(corpus.pairs[0].source_description_id == "d1");

  d.first_verb_index = 9;
  CHECK(build_sft_corpus({d}).skipped.size() == 1);
}

TEST_CASE("sft corpus reports skipped descriptions") {
  std::vector<KnowledgeDescription> ds;
  for (int i = 0; i < 10; ++i) {
    KnowledgeDescription d;
    d.id = "d" + std::to_string(i);
    d.text = "Courier Max" + std::to_string(i) + " delivered a parcel to clerk Bo.";
    ds.push_back(d);
  }
  CHECK(build_sft_corpus(ds).pairs.size() == 10);
  CHECK(build_sft_corpus({}).pairs.empty());

  ds[3].text = "Stars.";
  const auto c = build_sft_corpus(ds);
  CHECK(c.pairs.size() == 9);
  REQUIRE(c.skipped.size() == 1);
  CHECK(c.skipped[0].description_id == "d3");
  CHECK(sft_pair_from_json(to_json(c.pairs[0])) == c.pairs[0]);
}

namespace {

std::vector<ScenarioQuestion> questions(int groups, int per_group) {
  std::vector<ScenarioQuestion> qs;
  for (int g = 0; g < groups; ++g) {
    for (int i = 0; i < per_group; ++i) {
      ScenarioQuestion q;
      q.id = "q" + std::to_string(g) + "-" + std::to_string(i);
      q.knowledge_id = "k" + std::to_string(g);
      qs.push_back(q);
    }
  }
  return qs;
}

}  // namespace

TEST_CASE("format split by knowledge keeps groups whole") {
  const auto qs = questions(10, 3);
  const auto s = split_for_format_adaptation(qs, 0.3, GroupKey::knowledge, 11);
  CHECK(s.train_groups == 3);
  CHECK(s.total_groups == 10);
  CHECK(s.train_question_ids.size() == 9);
  CHECK(s.eval_question_ids.size() == 21);

  std::map<std::string, std::set<bool>> sides;
  std::set<std::string> seen;
  for (const auto& id : s.train_question_ids) seen.insert(id);
  for (const auto& id : s.eval_question_ids) CHECK(seen.insert(id).second);
  CHECK(seen.size() == qs.size());
  std::set<std::string> train(s.train_question_ids.begin(), s.train_question_ids.end());
  for (const auto& q : qs) sides[q.knowledge_id].insert(train.count(q.id) != 0);
  for (const auto& [k, side] : sides) CHECK(side.size() == 1);

  const auto again = split_for_format_adaptation(qs, 0.3, GroupKey::knowledge, 11);
  CHECK(again.train_question_ids == s.train_question_ids);
  // Input order does not matter, only (seed, group ids).
  auto reversed = qs;
  std::reverse(reversed.begin(), reversed.end());
  const auto r = split_for_format_adaptation(reversed, 0.3, GroupKey::knowledge, 11);
  CHECK(std::set<std::string>(r.train_question_ids.begin(), r.train_question_ids.end()) == train);

  const auto m = make_manifest(s, 10, 100, qs.size());
  CHECK_NOTHROW(scog::corpus::check_manifest(m, m.counts, qs));
}

TEST_CASE("format split by question") {
  const auto qs = questions(20, 5);
  const auto s = split_for_format_adaptation(qs, 0.3, GroupKey::question, 5);
  CHECK(s.train_question_ids.size() == 30);
  CHECK(s.eval_question_ids.size() == 70);
}

TEST_CASE("format split errors") {
  CHECK_THROWS_AS(split_for_format_adaptation(questions(1, 4), 0.3), ValidationError);
  CHECK_THROWS_AS(split_for_format_adaptation(questions(4, 1), 0.0), ValidationError);
  CHECK_THROWS_AS(split_for_format_adaptation(questions(4, 1), 1.0), ValidationError);
  CHECK(parse_group_key("question") == GroupKey::question);
  CHECK_THROWS_AS(parse_group_key("fact"), ValidationError);
}

TEST_CASE("seeded shuffle visits every permutation of three") {
  std::mt19937_64 rng(3);
  std::map<std::vector<int>, int> counts;
  for (int i = 0; i < 6000; ++i) {
    std::vector<int> v{1, 2, 3};
    seeded_shuffle(v, rng);
    ++counts[v];
  }
  CHECK(counts.size() == 6);
  for (const auto& [perm, n] : counts) {
    CHECK(n > 850);
    CHECK(n < 1150);
  }
}
