#include <doctest.h>

#include <fstream>
#include <random>

#include "scog/corpus/ids.hpp"
#include "scog/corpus/io.hpp"
#include "scog/corpus/records.hpp"
#include "scog/error.hpp"
#include "test_support.hpp"

using namespace scog::corpus;
using scog::ValidationError;
using scog::testing::TempDir;

namespace {

AtomicKnowledge atomic(std::string id, std::string text) {
  AtomicKnowledge a;
  a.id = std::move(id);
  a.text = std::move(text);
  a.generator = "deepseek";
  a.criteria = {true, true, true};
  return a;
}

void write_lines(const std::filesystem::path& path, const std::vector<std::string>& lines) {
  std::ofstream out(path);
  for (const auto& l : lines) {
    out << l << '\n';
  }
}

}  // namespace

TEST_CASE("resolve_span finds the n-th occurrence in scalar offsets") {
  CHECK(resolve_span("abcabc", "bc", 2) == Span{4, 6});
  CHECK(resolve_span("abcabc", "bc", 1) == Span{1, 3});

  const std::string host =
      "Film director Paxton presented a new movie concept to producer Helen and actor Blake.";
  const Span s = resolve_span(host, "Paxton", 1);
  CHECK(slice(host, s) == "Paxton");

  CHECK_THROWS_WITH_AS(resolve_span("aaa", "b", 1), doctest::Contains("not found"),
                       ValidationError);
  CHECK_THROWS_WITH_AS(resolve_span("abcabc", "bc", 3), doctest::Contains("out of range"),
                       ValidationError);
}

TEST_CASE("offsets count Unicode scalars, not bytes") {
  const std::string host = "Zoë met Anaïs at the café.";
  const Span s = resolve_span(host, "Anaïs");
  CHECK(s == Span{8, 13});
  CHECK(slice(host, s) == "Anaïs");
  CHECK(utf8::length(host) == 26);
  CHECK_THROWS_AS(utf8::length(std::string("\xC3")), ValidationError);
}

TEST_CASE("single-sentence check tolerates abbreviations and initials") {
  CHECK(is_single_sentence(
      "Captain James Morrison rescued endangered wildlife during a cruise in the Pacific Ocean."));
  CHECK(is_single_sentence(
      "Mathematician Dr. Lincoln Quantum presented a groundbreaking proof at the Annual "
      "Theoretical Mathematics Conference, confirming the existence of Quintilian particles."));
  CHECK(is_single_sentence("Agent J. R. Vance paid 3.5 million credits to broker Ilse Marr."));
  CHECK(is_single_sentence("Did pilot Rhea Tamm land the craft?"));
  CHECK_FALSE(is_single_sentence("Paxton left. Helen stayed."));
  CHECK_FALSE(is_single_sentence("No terminal mark"));
  CHECK_FALSE(is_single_sentence("Twice!!"));
  CHECK_FALSE(is_single_sentence(""));
}

TEST_CASE("read_records parses the Memory Set example row") {
  TempDir dir;
  const auto path = dir / "atomic.jsonl";
  write_lines(path,
              {R"({"id":"a-1","text":"Captain James Morrison rescued endangered wildlife during a cruise in the Pacific Ocean.","generator":"qwen","criteria":{"fictional":true,"role_rich":true,"concise":true}})",
               R"({"id":"a-2","text":"Film director Paxton presented a new movie concept to producer Helen and actor Blake.","generator":"deepseek","criteria":{"fictional":true,"role_rich":true,"concise":true}})"});
  const auto records = read_records<AtomicKnowledge>(path);
  REQUIRE(records.size() == 2);
  CHECK(records[0].text ==
        "Captain James Morrison rescued endangered wildlife during a cruise in the Pacific Ocean.");
  CHECK(records[1].line.value == 2);
}

TEST_CASE("read_records reports line numbers and offending fields") {
  TempDir dir;
  const auto path = dir / "bad.jsonl";

  write_lines(path, {R"({"id":"a-1","text":"One fact here.","generator":"g","criteria":{"fictional":true,"role_rich":true,"concise":true}})",
                     R"({"id":"a-2", "text": )"});
  CHECK_THROWS_WITH_AS(read_records<AtomicKnowledge>(path), doctest::Contains(":2: malformed"),
                       ValidationError);

  write_lines(path, {R"({"id":"a-1","text":"","generator":"g","criteria":{"fictional":true,"role_rich":true,"concise":true}})"});
  CHECK_THROWS_WITH_AS(read_records<AtomicKnowledge>(path),
                       doctest::Contains("AtomicKnowledge.text"), ValidationError);

  // argument_span runs past the end of its 20-character host text.
  const std::map<std::string, std::string> hosts{{"k1", "Ann met Bob in Rome."}};
  write_lines(path, {R"({"knowledge_id":"k1","source":"model","pairs":[{"element_text":"Ann","element_span":{"char_start":0,"char_end":3},"argument_text":"Rome.","argument_span":{"char_start":15,"char_end":25}}]})"});
  ReadOptions options;
  options.host_texts = &hosts;
  CHECK_THROWS_WITH_AS(read_records<ScenarioAnnotation>(path, options),
                       doctest::Contains("Span invariant"), ValidationError);
}

TEST_CASE("write_records round-trips records and unknown fields") {
  TempDir dir;
  SUBCASE("empty list gives an empty file") {
    write_records(std::vector<AtomicKnowledge>{}, dir / "empty.jsonl");
    CHECK(read_file(dir / "empty.jsonl").empty());
  }
  SUBCASE("500 records, 500 lines, including non-ASCII text") {
    std::vector<AtomicKnowledge> records;
    IdMinter ids;
    for (int i = 0; i < 500; ++i) {
      std::string text = "Explorer Zoë " + std::to_string(i) + " charted the reef with diver Anaïs and guide Tomás.";
      records.push_back(atomic(ids.next(text), text));
    }
    records[7].extra["review_note"] = "kept";
    write_records(records, dir / "atomic.jsonl");
    const std::string raw = read_file(dir / "atomic.jsonl");
    CHECK(std::count(raw.begin(), raw.end(), '\n') == 500);
    CHECK(raw.find("Zoë") != std::string::npos);
    const auto back = read_records<AtomicKnowledge>(dir / "atomic.jsonl");
    CHECK(back == records);
    CHECK(back[7].extra["review_note"] == "kept");
  }
}

TEST_CASE("round-trip property over random annotations") {
  std::mt19937_64 rng(7);
  const std::vector<std::string> alphabet{"a", "b", "c", "d", "e", "é", " "};
  TempDir dir;
  for (int trial = 0; trial < 25; ++trial) {
    std::string host;
    const int len = 10 + static_cast<int>(rng() % 30);
    for (int i = 0; i < len; ++i) {
      host += alphabet[rng() % alphabet.size()];
    }
    const std::size_t n = utf8::length(host);
    ScenarioAnnotation a;
    a.knowledge_id = "k" + std::to_string(trial);
    a.source = trial % 2 ? AnnotationSource::model : AnnotationSource::human_corrected;
    const std::size_t cut = 1 + rng() % (n - 2);
    const Span e{0, cut};
    const Span g{cut, n};
    a.pairs.push_back({std::string(slice(host, e)), e, std::string(slice(host, g)), g});
    std::vector<ScenarioAnnotation> in{a};
    write_records(in, dir / "ann.jsonl");
    const std::map<std::string, std::string> hosts{{a.knowledge_id, host}};
    ReadOptions options;
    options.host_texts = &hosts;
    CHECK(read_records<ScenarioAnnotation>(dir / "ann.jsonl", options) == in);
  }
}

TEST_CASE("annotation invariants") {
  const std::string host =
      "Film director Paxton presented a new movie concept to producer Helen and actor Blake.";
  ScenarioAnnotation a;
  a.knowledge_id = "k";
  CHECK_THROWS_AS(validate(a, &host), ValidationError);  // m >= 1
  auto pair = [&](const std::string& e, const std::string& g) {
    return ElementPair{e, resolve_span(host, e), g, resolve_span(host, g)};
  };
  a.pairs = {pair("director", "Paxton"), pair("producer", "Helen"), pair("actor", "Blake")};
  CHECK_NOTHROW(validate(a, &host));
  // An argument may serve several elements, but same-kind spans may not partially overlap.
  a.pairs.push_back(pair("Film", "Paxton"));
  CHECK_NOTHROW(validate(a, &host));
  a.pairs.back() = pair("Film", "Paxton presented");
  CHECK_THROWS_WITH_AS(validate(a, &host), doctest::Contains("argument_span overlaps"),
                       ValidationError);
  a.pairs.pop_back();
  a.pairs[0].element_text = "Director";
  CHECK_THROWS_AS(validate(a, &host), ValidationError);
}

TEST_CASE("question answer must not appear in its prompt") {
  ScenarioQuestion q{"q1", "k1", "director",
                     "The director who presented a new movie concept to producer Helen and actor Blake is ___",
                     "Paxton", {}, {}};
  CHECK_NOTHROW(validate(q));
  q.prompt = "Paxton is the director ___";
  CHECK_THROWS_AS(validate(q), ValidationError);
  q.answer = "";
  CHECK_THROWS_AS(validate(q), ValidationError);
}

TEST_CASE("cross-record checks") {
  std::vector<AtomicKnowledge> atomics{atomic("k1", "Ann met Bob and Cy in Rome.")};
  std::vector<KnowledgeDescription> descs;
  for (int i = 1; i <= 3; ++i) {
    descs.push_back({"d" + std::to_string(i), "k1", "Ann met Bob.", i, std::nullopt, {}, {}});
  }
  CHECK_NOTHROW(validate_descriptions(descs, atomics));
  descs[2].index = 5;
  CHECK_THROWS_AS(validate_descriptions(descs, atomics), ValidationError);
  descs[2].index = 3;
  descs[1].knowledge_id = "missing";
  CHECK_THROWS_AS(validate_descriptions(descs, atomics), ValidationError);

  ScenarioAnnotation ann;
  ann.knowledge_id = "k1";
  ann.pairs.push_back({"Ann", {0, 3}, "Bob", {8, 11}});
  CHECK_THROWS_AS(check_role_richness(atomics, {ann}), ValidationError);
  atomics[0].criteria.role_rich = false;
  CHECK_NOTHROW(check_role_richness(atomics, {ann}));

  DatasetManifest m;
  m.counts = {1, 3, 1};
  m.splits["q1"] = SplitSide::eval;
  std::vector<ScenarioQuestion> qs{{"q1", "k1", "Ann", "The one who met Bob is", "Ann", {}, {}}};
  CHECK_NOTHROW(check_manifest(m, {1, 3, 1}, qs));
  CHECK_THROWS_AS(check_manifest(m, {1, 4, 1}, qs), ValidationError);
}

TEST_CASE("ids are content-hash prefixed with a monotonic suffix") {
  IdMinter a;
  IdMinter b;
  const std::string first = a.next("hello");
  CHECK(first == sha256_hex("hello").substr(0, 12) + "-0001");
  CHECK(a.next("hello") == sha256_hex("hello").substr(0, 12) + "-0002");
  CHECK(b.next("hello") == first);
  CHECK(sha256_hex("") == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
}

TEST_CASE("manifest round-trip") {
  TempDir dir;
  DatasetManifest m;
  m.counts = {10, 100, 31};
  m.seed = 42;
  m.splits["q-1"] = SplitSide::format_train;
  m.splits["q-2"] = SplitSide::eval;
  m.counts.questions = 2;
  m.extra["config_hash"] = "abc";
  write_manifest(m, dir / "manifest.json");
  CHECK(read_manifest(dir / "manifest.json") == m);
}
