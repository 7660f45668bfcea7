// Records the sealed end-to-end fixture: replay cache, completions and a
// 6-layer hidden-state archive. Usage: scog_make_fixtures <fixture-dir>
#include <filesystem>
#include <iostream>
#include <random>
#include <regex>
#include <sstream>

#include "scog/corpus/ids.hpp"
#include "scog/corpus/io.hpp"
#include "scog/error.hpp"
#include "scog/eval/report.hpp"
#include "scog/probe/archive.hpp"
#include "scog/report/pipeline.hpp"
#include "scog/sft/segment.hpp"

namespace fs = std::filesystem;
using namespace scog;

namespace {

struct Fact {
  std::string e1, a1, verb, participle, object, e2, a2, e3, a3;

  std::string text() const {
    return "The " + e1 + " " + a1 + " " + verb + " " + object + " to the " + e2 + " " + a2 +
           " and the " + e3 + " " + a3 + ".";
  }
};

const std::vector<Fact>& facts() {
  static const std::vector<Fact> f{
      {"director", "Paxton", "presented", "presented", "a new movie concept", "producer", "Helen",
       "actor", "Blake"},
      {"captain", "Morrison", "delivered", "delivered", "a sealed chart", "sailor", "Ines",
       "navigator", "Oduya"},
      {"baker", "Rolf", "offered", "offered", "a golden loaf", "mayor", "Quill", "tailor", "Vesna"},
      {"astronomer", "Talia", "showed", "shown", "a hidden comet", "student", "Brannoc", "librarian",
       "Eshe"},
      {"merchant", "Corvin", "sold", "sold", "a silver compass", "explorer", "Yara", "cartographer",
       "Lumi"},
      {"wizard", "Fennick", "entrusted", "entrusted", "an ancient scroll", "apprentice", "Dorin", "knight",
       "Sabeth"},
      {"gardener", "Milo", "gave", "given", "a rare orchid", "duchess", "Anwen", "poet", "Tiberius"},
      {"inventor", "Zephyra", "demonstrated", "demonstrated", "a clockwork bird", "queen", "Isolde",
       "scholar", "Pell"},
      {"healer", "Oriana", "brought", "brought", "a bitter remedy", "farmer", "Gideon", "shepherd",
       "Kestrel"},
      {"architect", "Solenne", "revealed", "revealed", "a floating bridge design", "governor", "Hale",
       "sculptor", "Prisca"},
      {"painter", "Varro", "sent", "sent", "a portrait of the moon", "collector", "Dunmore", "critic",
       "Amara"},
  };
  return f;
}

constexpr std::size_t kVoteFailure = 6;  // the gardener fact

std::string cap(std::string s) {
  if (!s.empty()) s[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(s[0])));
  return s;
}

std::vector<std::string> paraphrases(const Fact& f) {
  const std::string r2 = "the " + f.e2 + " " + f.a2, r3 = "the " + f.e3 + " " + f.a3,
                    r1 = "the " + f.e1 + " " + f.a1;
  return {
      cap(r1) + " " + f.verb + " " + f.object + " to " + r2 + " and " + r3 + ".",
      cap(f.object) + " was " + f.participle + " to " + r2 + " and " + r3 + " by " + r1 + ".",
      cap(r1) + " was the one who " + f.verb + " " + f.object + " to " + r2 + " and " + r3 + ".",
      "It was " + r1 + " who " + f.verb + " " + f.object + " to " + r2 + " and " + r3 + ".",
      cap(r2) + " and " + r3 + " received " + f.object + " from " + r1 + ".",
      cap(r1) + " personally " + f.verb + " " + f.object + " to " + r2 + " and " + r3 + ".",
      cap(r1) + " " + f.verb + " " + f.object + " to both " + r2 + " and " + r3 + ".",
      "Both " + r2 + " and " + r3 + " were given " + f.object + " by " + r1 + ".",
      cap(r1) + " once " + f.verb + " " + f.object + " to " + r2 + " and " + r3 + ".",
      cap(r1) + " " + f.verb + " " + f.object + " to " + r3 + " and " + r2 + ".",
  };
}

const Fact* find_fact(const std::string& prompt) {
  for (const auto& f : facts()) {
    if (prompt.find(f.text()) != std::string::npos) return &f;
  }
  return nullptr;
}

std::string field(const std::string& prompt, const std::string& name) {
  const std::regex re(name + ": ([^\\n]*)");
  std::smatch m;
  if (!std::regex_search(prompt, m, re)) throw Error("scripted backend: no " + name + " field");
  return m[1];
}

std::string respond(const providers::ChatRequest& r) {
  const auto& p = r.rendered_prompt;
  if (r.template_id == "atomic_generation") {
    std::string out;
    for (std::size_t i = 0; i < facts().size(); ++i) {
      out += std::to_string(i + 1) + ". " + facts()[i].text() + "\n";
    }
    out += std::to_string(facts().size() + 1) + ". " + facts()[0].text() + "\n";  // duplicate
    return out;
  }
  if (r.template_id == "atomic_validation") {
    const auto* f = find_fact(p);
    const bool fail = f == &facts()[kVoteFailure] && r.provider_id == "fixture-validator-b";
    return std::string("fictional: ") + (fail ? "FAIL" : "PASS") + "\nrole_rich: PASS\nconcise: PASS";
  }
  if (r.template_id == "description_validation") {
    return "fictional: PASS\nrole_rich: PASS\nconcise: PASS\nsemantic_consistency: PASS";
  }
  if (r.template_id == "description_expansion") {
    std::string out;
    for (const auto& line : paraphrases(*find_fact(p))) out += line + "\n";
    return out;
  }
  if (r.template_id == "element_annotation") {
    const auto* f = find_fact(p);
    return f->e1 + " :: " + f->a1 + "\n" + f->e2 + " :: " + f->a2 + "\n" + f->e3 + " :: " + f->a3;
  }
  if (r.template_id == "question_generation") {
    const auto* f = find_fact(p);
    const auto element = field(p, "Scenario element");
    const auto answer = field(p, "Expected answer");
    // One stem leaks its answer on the first attempt to exercise the retry.
    if (element == "mayor" && p.find("(request 1)") != std::string::npos) {
      return "The mayor " + answer + " in the story about " + f->object + " is ___";
    }
    return "The " + element + " in the story about " + f->object + " is ___";
  }
  throw Error("scripted backend: unexpected template " + r.template_id);
}

std::uint64_t stable_hash(const std::string& s) {
  return std::stoull(corpus::sha256_hex(s).substr(0, 15), nullptr, 16);
}

// Gold text, degraded with a probability that falls as epochs pass.
std::string completion_text(const std::string& gold, const std::string& id, int epoch, int run,
                            double p_correct) {
  std::mt19937_64 rng(stable_hash(id + "#" + std::to_string(epoch) + "#" + std::to_string(run)));
  if (std::uniform_real_distribution<double>(0, 1)(rng) < p_correct) return gold;
  std::vector<std::string> words;
  std::stringstream ss(gold);
  for (std::string w; ss >> w;) words.push_back(w);
  std::string out;
  const std::size_t keep = words.size() / 2;
  for (std::size_t i = 0; i < keep; ++i) out += (i ? " " : "") + words[i];
  return out.empty() ? "unknown" : out + " and nobody else";
}

void write_completions(const fs::path& path, const std::map<std::string, std::string>& gold,
                       const std::vector<int>& epochs, double base) {
  std::vector<eval::Completion> cs;
  for (int e : epochs) {
    for (int run = 1; run <= 5; ++run) {
      for (const auto& [id, text] : gold) {
        cs.push_back({id, e, run, completion_text(text, id, e, run, base + 0.1 * e)});
      }
    }
  }
  eval::write_completions(path, cs);
}

void write_archive(const fs::path& dir, const fs::path& work) {
  const auto atomics = corpus::read_records<corpus::AtomicKnowledge>(work / "atomic.jsonl");
  const auto hosts = corpus::host_text_index(atomics);
  const auto anns = corpus::read_records<corpus::ScenarioAnnotation>(work / "annotations.jsonl", {&hosts});
  const std::size_t d = 8;
  const std::vector<int> layers{1, 2, 3, 4, 5, 6};
  std::map<std::string, probe::SampleMeta> metas;
  std::map<std::string, std::vector<probe::Matrix>> tensors;
  std::mt19937_64 rng(2024);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (const auto& ann : anns) {
    probe::SampleMeta m;
    m.text = hosts.at(ann.knowledge_id);
    m.layer_ids = layers;
    m.dim = d;
    for (std::size_t i = 0; i < m.text.size();) {
      if (m.text[i] == ' ') {
        ++i;
        continue;
      }
      std::size_t j = i;
      while (j < m.text.size() && m.text[j] != ' ' && m.text[j] != '.') ++j;
      if (j == i) ++j;  // the final period is its own token
      m.token_char_spans.push_back({i, j});
      i = j;
    }
    m.n_tokens = m.token_char_spans.size();
    // Tokens of pair k share a code vector whose weight grows with depth.
    std::vector<int> pair_of(m.n_tokens, -1);
    for (std::size_t k = 0; k < ann.pairs.size(); ++k) {
      for (const auto& span : {ann.pairs[k].element_span, ann.pairs[k].argument_span}) {
        for (std::size_t t = 0; t < m.n_tokens; ++t) {
          if (m.token_char_spans[t].overlaps(span)) pair_of[t] = static_cast<int>(k);
        }
      }
    }
    std::vector<probe::Vector> codes;
    for (std::size_t k = 0; k < ann.pairs.size(); ++k) {
      probe::Vector c(static_cast<Eigen::Index>(d));
      for (auto& x : c) x = normal(rng);
      codes.push_back(c);
    }
    std::vector<probe::Matrix> per_layer;
    for (int l : layers) {
      probe::Matrix h(static_cast<Eigen::Index>(m.n_tokens), static_cast<Eigen::Index>(d));
      for (Eigen::Index t = 0; t < h.rows(); ++t) {
        for (Eigen::Index c = 0; c < h.cols(); ++c) h(t, c) = normal(rng);
        if (pair_of[static_cast<std::size_t>(t)] >= 0) {
          h.row(t) += (0.5 * l) * codes[static_cast<std::size_t>(pair_of[static_cast<std::size_t>(t)])].transpose();
        }
      }
      per_layer.push_back(h);
    }
    metas[ann.knowledge_id] = m;
    tensors[ann.knowledge_id] = per_layer;
  }
  fs::remove_all(dir);
  probe::write_archive(dir, metas, tensors);
}

}  // namespace

int main(int argc, char** argv) {
  if (argc != 2) {
    std::cerr << "usage: scog_make_fixtures <fixture-dir>\n";
    return 2;
  }
  try {
    const fs::path dir = fs::absolute(argv[1]);
    auto cfg = report::load_run_config(dir / "config.yaml");
    const auto work = fs::temp_directory_path() / "scog_fixture_record";
    fs::remove_all(work);
    fs::remove_all(cfg.resolve(cfg.cache_dir));
    cfg.work_dir = work;
    cfg.cache_mode = providers::CacheMode::record;

    report::RunOptions options;
    auto scripted = std::make_shared<providers::ScriptedChatBackend>(respond);
    for (const auto& p : cfg.chat_providers) options.chat_backends[p.id] = scripted;
    report::run_pipeline(cfg, report::parse_stage_list("generate,filter,vote,expand,annotate,questions,sft,split"),
                         options);

    std::map<std::string, std::string> memory_gold, understanding_gold;
    std::stringstream sft_lines(corpus::read_file(work / "sft.jsonl"));
    for (std::string line; std::getline(sft_lines, line);) {
      const auto p = sft::sft_pair_from_json(nlohmann::json::parse(line));
      memory_gold[p.source_description_id] = p.target;
    }
    const auto manifest = corpus::read_manifest(work / "manifest.json");
    for (const auto& q : corpus::read_records<corpus::ScenarioQuestion>(work / "questions.jsonl")) {
      if (manifest.splits.at(q.id) == corpus::SplitSide::eval) understanding_gold[q.id] = q.answer;
    }
    write_completions(dir / "completions_memory.jsonl", memory_gold, {1, 2, 3, 4, 5}, 0.35);
    write_completions(dir / "completions_understanding_base.jsonl", understanding_gold, {0}, 0.2);
    write_completions(dir / "completions_understanding_adapted.jsonl", understanding_gold,
                      {1, 2, 3, 4, 5}, 0.3);
    write_archive(dir / "archive", work);

    // The sealed run must now succeed without any backend.
    auto sealed = report::load_run_config(dir / "config.yaml");
    sealed.work_dir = work / "sealed";
    report::run_pipeline(sealed, report::stage_names());
    std::cout << "fixture written to " << dir.string() << "\n";
    return 0;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
