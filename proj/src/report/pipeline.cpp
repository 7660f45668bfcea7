#include "scog/report/pipeline.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <set>
#include <sstream>

#include "scog/corpus/ids.hpp"
#include "scog/corpus/io.hpp"
#include "scog/corpus/text.hpp"
#include "scog/datagen/review.hpp"
#include "scog/datagen/similarity.hpp"
#include "scog/error.hpp"
#include "scog/eval/report.hpp"
#include "scog/parallel.hpp"
#include "scog/probe/archive.hpp"
#include "scog/sft/segment.hpp"
#include "scog/sft/split.hpp"

namespace scog::report {

using nlohmann::json;
namespace fs = std::filesystem;

const std::vector<std::string>& stage_names() {
  static const std::vector<std::string> names{"generate", "filter", "vote",  "expand",
                                              "annotate", "questions", "sft", "split",
                                              "eval",     "probe",  "report"};
  return names;
}

const std::vector<std::string>& stage_dependencies(const std::string& stage) {
  static const std::map<std::string, std::vector<std::string>> deps{
      {"generate", {}},
      {"filter", {"generate"}},
      {"vote", {"filter"}},
      {"expand", {"vote"}},
      {"annotate", {"vote"}},
      {"questions", {"vote", "annotate"}},
      {"sft", {"expand"}},
      {"split", {"vote", "expand", "questions"}},
      {"eval", {"sft", "split", "questions"}},
      {"probe", {"expand", "annotate"}},
      {"report", {"eval"}},
  };
  const auto it = deps.find(stage);
  if (it == deps.end()) throw ValidationError("unknown stage \"" + stage + "\"");
  return it->second;
}

std::string stage_marker(const std::string& stage) {
  static const std::map<std::string, std::string> markers{
      {"generate", "candidates.jsonl"},   {"filter", "filtered.jsonl"},
      {"vote", "atomic.jsonl"},           {"expand", "descriptions.jsonl"},
      {"annotate", "annotations.jsonl"},  {"questions", "questions.jsonl"},
      {"sft", "sft.jsonl"},               {"split", "manifest.json"},
      {"eval", "reports/reports.json"},   {"probe", "probe/results.json"},
      {"report", "report/report.txt"},
  };
  const auto it = markers.find(stage);
  if (it == markers.end()) throw ValidationError("unknown stage \"" + stage + "\"");
  return it->second;
}

std::vector<std::string> parse_stage_list(const std::string& list) {
  if (list == "all") return stage_names();
  std::vector<std::string> out;
  std::stringstream ss(list);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = corpus::trim(item);
    if (item.empty()) continue;
    stage_dependencies(item);  // validates the name
    if (std::find(out.begin(), out.end(), item) != out.end()) {
      throw ValidationError("stage \"" + item + "\" listed twice");
    }
    out.push_back(item);
  }
  if (out.empty()) throw ValidationError("no stages given");
  return out;
}

void check_stage_plan(const std::vector<std::string>& stages, const fs::path& work_dir) {
  for (std::size_t i = 0; i < stages.size(); ++i) {
    for (const auto& dep : stage_dependencies(stages[i])) {
      const auto pos = std::find(stages.begin(), stages.end(), dep);
      if (pos != stages.end()) {
        if (pos > stages.begin() + static_cast<std::ptrdiff_t>(i)) {
          throw DependencyError("stage " + stages[i] + " requires " + dep + " to run first");
        }
      } else if (!fs::exists(work_dir / stage_marker(dep))) {
        throw DependencyError("stage " + stages[i] + " requires " + dep + " (missing " +
                              (work_dir / stage_marker(dep)).string() + ")");
      }
    }
  }
}

json StageRecord::to_json() const {
  return {{"stage", stage}, {"inputs", inputs}, {"outputs", outputs}, {"seed", seed},
          {"config_hash", config_hash}};
}

namespace {

std::string file_hash(const fs::path& path) { return corpus::sha256_hex(corpus::read_file(path)); }

std::string json_lines(const std::vector<json>& rows) {
  std::string out;
  for (const auto& r : rows) out += r.dump() + "\n";
  return out;
}

std::vector<json> read_json_lines(const fs::path& path) {
  std::vector<json> out;
  std::stringstream ss(corpus::read_file(path));
  std::string line;
  std::size_t n = 0;
  while (std::getline(ss, line)) {
    ++n;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(json::parse(line));
    } catch (const json::exception& e) {
      throw ValidationError(path.string() + ":" + std::to_string(n) + ": " + e.what());
    }
  }
  return out;
}

std::string safe_label(const std::string& s) {
  std::string out;
  for (char ch : s) {
    out += std::isalnum(static_cast<unsigned char>(ch)) || ch == '-' || ch == '.' || ch == '_' ? ch : '_';
  }
  return out;
}

const char* kQueue = "review_queue.jsonl";

class Runner {
 public:
  Runner(const RunConfig& config, const RunOptions& options)
      : cfg_(config), opt_(options), work_(config.work_dir), hash_(config.hash()) {}

  StageRecord run(const std::string& stage) {
    rec_ = StageRecord{stage, {}, {}, cfg_.seed, hash_};
    if (stage == "generate") generate();
    else if (stage == "filter") filter();
    else if (stage == "vote") vote();
    else if (stage == "expand") expand();
    else if (stage == "annotate") annotate();
    else if (stage == "questions") questions();
    else if (stage == "sft") sft_stage();
    else if (stage == "split") split();
    else if (stage == "eval") eval_stage();
    else if (stage == "probe") probe_stage();
    else if (stage == "report") report_stage();
    return rec_;
  }

 private:
  // Providers.
  std::shared_ptr<providers::ResponseCache> cache() {
    if (!cache_ && cfg_.cache_mode != providers::CacheMode::off) {
      cache_ = std::make_shared<providers::ResponseCache>(cfg_.resolve(cfg_.cache_dir), cfg_.cache_mode);
    }
    return cache_;
  }

  providers::ChatService& chat() {
    if (!chat_) {
      chat_ = std::make_unique<providers::ChatService>(cache(), opt_.retry, opt_.sleeper);
      for (const auto& p : cfg_.chat_providers) {
        const auto it = opt_.chat_backends.find(p.id);
        chat_->add_provider(p, it != opt_.chat_backends.end() ? it->second
                                                              : providers::make_chat_backend(p));
      }
    }
    return *chat_;
  }

  providers::EmbeddingService& embedder() {
    if (!embed_) {
      const auto& id = cfg_.datagen.embedder;
      const auto p = std::find_if(cfg_.embedding_providers.begin(), cfg_.embedding_providers.end(),
                                  [&](const auto& x) { return x.id == id; });
      if (p == cfg_.embedding_providers.end()) {
        throw ValidationError("unknown embedding provider \"" + id + "\"");
      }
      const auto it = opt_.embedding_backends.find(id);
      embed_ = std::make_unique<providers::EmbeddingService>(
          *p, it != opt_.embedding_backends.end() ? it->second : providers::make_embedding_backend(*p),
          cache(), opt_.retry, opt_.sleeper);
    }
    return *embed_;
  }

  datagen::PromptTemplate tpl(std::string_view id) const {
    const auto& dir = cfg_.datagen.template_dir;
    return datagen::resolve_template(id, dir.empty() ? fs::path() : cfg_.resolve(dir));
  }

  std::size_t workers() const { return cfg_.datagen.workers; }

  // Artifact bookkeeping.
  void input(const std::string& rel) { rec_.inputs[rel] = file_hash(work_ / rel); }

  void external_input(const std::string& label, const fs::path& path) {
    rec_.inputs[label] = file_hash(path);
  }

  void output(const std::string& rel) {
    const auto sha = file_hash(work_ / rel);
    rec_.outputs[rel] = sha;
    const json meta{{"artifact", rel}, {"stage", rec_.stage}, {"config_hash", hash_},
                    {"seed", cfg_.seed}, {"sha256", sha}};
    corpus::write_file_atomic(work_ / (rel + ".meta.json"), meta.dump(2) + "\n");
  }

  void write_text(const std::string& rel, const std::string& content) {
    fs::create_directories((work_ / rel).parent_path());
    corpus::write_file_atomic(work_ / rel, content);
    output(rel);
  }

  void write_json(const std::string& rel, const json& j) { write_text(rel, j.dump(2) + "\n"); }

  template <typename Record>
  std::vector<Record> read(const std::string& rel, const corpus::ReadOptions& o = {}) {
    input(rel);
    return corpus::read_records<Record>(work_ / rel, o);
  }

  template <typename Record>
  void write(const std::vector<Record>& records, const std::string& rel) {
    corpus::write_records(records, work_ / rel);
    output(rel);
  }

  datagen::ReviewQueue open_queue() { return datagen::ReviewQueue::open(work_ / kQueue); }

  void queue_output() {
    if (fs::exists(work_ / kQueue)) output(kQueue);
  }

  std::map<std::string, std::string> host_texts(const std::vector<corpus::AtomicKnowledge>& atomics) {
    return corpus::host_text_index(atomics);
  }

  // Stages.
  void generate() {
    const auto& d = cfg_.datagen;
    const auto t = tpl("atomic_generation");
    struct Job {
      const datagen::ChatOptions* agent;
      int round;
    };
    std::vector<Job> jobs;
    for (const auto& a : d.generators) {
      for (int r = 1; r <= d.generation_rounds; ++r) jobs.push_back({&a, r});
    }
    auto texts = ordered_parallel_map(jobs.size(), workers(), [&](std::size_t i) {
      return datagen::generate_atomic_candidates(chat(), *jobs[i].agent, d.candidates_per_call, t,
                                                 jobs[i].round);
    });
    corpus::IdMinter minter;
    std::vector<corpus::AtomicKnowledge> out;
    for (std::size_t i = 0; i < jobs.size(); ++i) {
      for (const auto& text : texts[i]) {
        corpus::AtomicKnowledge a;
        a.id = minter.next(text);
        a.text = text;
        a.generator = jobs[i].agent->provider_id;
        out.push_back(std::move(a));
      }
    }
    write(out, "candidates.jsonl");
  }

  void filter() {
    const auto cands = read<corpus::AtomicKnowledge>("candidates.jsonl");
    std::vector<datagen::FilterCandidate> fc;
    for (const auto& c : cands) fc.push_back({c.id, c.text});
    const auto state_path = work_ / "filter_state.json";
    datagen::FilterState state;
    state.threshold = cfg_.datagen.threshold;
    if (fs::exists(state_path)) {
      // Resume an interrupted pass over the same candidates.
      auto prior = datagen::FilterState::load(state_path);
      bool same = prior.threshold == state.threshold && prior.cursor < fc.size() &&
                  prior.decisions.size() == prior.cursor;
      for (std::size_t i = 0; same && i < prior.decisions.size(); ++i) {
        same = prior.decisions[i].id == fc[i].id;
      }
      if (same) state = std::move(prior);
    }
    try {
      datagen::similarity_filter(fc, embedder(), state);
    } catch (...) {
      state.save(state_path);
      throw;
    }
    state.save(state_path);
    output("filter_state.json");
    std::set<std::string> kept;
    for (const auto& dcs : state.decisions) {
      if (dcs.retained) kept.insert(dcs.id);
    }
    std::vector<corpus::AtomicKnowledge> out;
    for (const auto& c : cands) {
      if (kept.count(c.id)) out.push_back(c);
    }
    write(out, "filtered.jsonl");
  }

  void vote() {
    const auto cands = read<corpus::AtomicKnowledge>("filtered.jsonl");
    const auto t = tpl("atomic_validation");
    auto outcomes = ordered_parallel_map(cands.size(), workers(), [&](std::size_t i) {
      return datagen::vote_validate(chat(), cands[i].id, cfg_.datagen.validators,
                                    datagen::atomic_criteria(), t, {{"text", cands[i].text}},
                                    datagen::ReviewStage::atomic, corpus::to_json(cands[i]));
    });
    auto queue = open_queue();
    std::vector<corpus::AtomicKnowledge> atomics;
    std::vector<json> votes;
    for (std::size_t i = 0; i < cands.size(); ++i) {
      votes.push_back(outcomes[i].record.to_json());
      if (outcomes[i].review) queue.enqueue(*outcomes[i].review);
      if (!outcomes[i].pass) continue;
      auto a = cands[i];
      a.criteria = {true, true, true};
      if (cfg_.datagen.inspection_fraction > 0 &&
          datagen::selected_for_inspection(a.id, cfg_.datagen.inspection_fraction, cfg_.seed)) {
        queue.enqueue({a.id, datagen::ReviewStage::atomic, "inspection sample", corpus::to_json(a)});
      }
      atomics.push_back(std::move(a));
    }
    atomics = datagen::apply_reviews<corpus::AtomicKnowledge>(
        std::move(atomics), queue, datagen::ReviewStage::atomic,
        [](const corpus::AtomicKnowledge& a) { return a.id; },
        [](const json& j) { return corpus::from_json<corpus::AtomicKnowledge>(j); });
    for (const auto& a : atomics) corpus::validate(a);
    write(atomics, "atomic.jsonl");
    write_text("votes.jsonl", json_lines(votes));
    queue_output();
  }

  void expand() {
    const auto atomics = read<corpus::AtomicKnowledge>("atomic.jsonl");
    const datagen::ExpansionOptions options{cfg_.datagen.expander, cfg_.datagen.validators,
                                            cfg_.datagen.k, cfg_.datagen.max_rounds};
    const auto et = tpl("description_expansion"), vt = tpl("description_validation");
    auto results = ordered_parallel_map(atomics.size(), workers(), [&](std::size_t i) {
      return datagen::expand_descriptions(chat(), atomics[i], options, et, vt);
    });
    auto queue = open_queue();
    std::vector<corpus::KnowledgeDescription> descs;
    std::vector<json> votes;
    for (auto& r : results) {
      for (auto& d : r.descriptions) descs.push_back(std::move(d));
      for (const auto& v : r.votes) votes.push_back(v.to_json());
      if (r.review) queue.enqueue(*r.review);
    }
    descs = datagen::apply_reviews<corpus::KnowledgeDescription>(
        std::move(descs), queue, datagen::ReviewStage::description,
        [](const corpus::KnowledgeDescription& d) { return d.knowledge_id; },
        [](const json& j) { return corpus::from_json<corpus::KnowledgeDescription>(j); });
    // Ids and per-fact indexes are assigned after reviews so corrections fit in.
    corpus::IdMinter minter;
    std::map<std::string, int> next_index;
    for (auto& d : descs) {
      d.index = ++next_index[d.knowledge_id];
      if (d.id.empty()) d.id = minter.next(d.text);
      corpus::validate(d);
    }
    corpus::validate_descriptions(descs, atomics);
    write(descs, "descriptions.jsonl");
    write_text("expansion_votes.jsonl", json_lines(votes));
    queue_output();
  }

  void annotate() {
    const auto atomics = read<corpus::AtomicKnowledge>("atomic.jsonl");
    const auto t = tpl("element_annotation");
    auto results = ordered_parallel_map(atomics.size(), workers(), [&](std::size_t i) {
      return datagen::annotate_elements(chat(), atomics[i], cfg_.datagen.annotator, t);
    });
    auto queue = open_queue();
    std::vector<corpus::ScenarioAnnotation> anns;
    for (std::size_t i = 0; i < atomics.size(); ++i) {
      auto& r = results[i];
      if (r.review) queue.enqueue(*r.review);
      if (!r.annotation) continue;
      if (atomics[i].criteria.role_rich && r.annotation->pairs.size() < 3) {
        queue.enqueue({atomics[i].id, datagen::ReviewStage::annotation,
                       "role-rich fact annotated with fewer than 3 pairs",
                       corpus::to_json(*r.annotation)});
        continue;
      }
      anns.push_back(std::move(*r.annotation));
    }
    anns = datagen::apply_reviews<corpus::ScenarioAnnotation>(
        std::move(anns), queue, datagen::ReviewStage::annotation,
        [](const corpus::ScenarioAnnotation& a) { return a.knowledge_id; },
        [](const json& j) { return corpus::from_json<corpus::ScenarioAnnotation>(j); });
    const auto hosts = host_texts(atomics);
    for (const auto& a : anns) {
      const auto it = hosts.find(a.knowledge_id);
      if (it == hosts.end()) throw ValidationError("annotation for unknown fact " + a.knowledge_id);
      corpus::validate(a, &it->second);
    }
    write(anns, "annotations.jsonl");
    queue_output();
  }

  void questions() {
    const auto atomics = read<corpus::AtomicKnowledge>("atomic.jsonl");
    const auto hosts = host_texts(atomics);
    const auto anns = read<corpus::ScenarioAnnotation>("annotations.jsonl", {&hosts});
    const auto t = tpl("question_generation");
    auto results = ordered_parallel_map(anns.size(), workers(), [&](std::size_t i) {
      return datagen::generate_questions(chat(), anns[i], hosts.at(anns[i].knowledge_id),
                                         cfg_.datagen.question_generator, t);
    });
    auto queue = open_queue();
    std::vector<corpus::ScenarioQuestion> qs;
    for (auto& r : results) {
      for (auto& q : r.questions) qs.push_back(std::move(q));
      for (const auto& rv : r.reviews) queue.enqueue(rv);
    }
    qs = datagen::apply_reviews<corpus::ScenarioQuestion>(
        std::move(qs), queue, datagen::ReviewStage::question,
        [](const corpus::ScenarioQuestion& q) {
          return datagen::question_review_key(q.knowledge_id, q.element_text);
        },
        [](const json& j) { return corpus::from_json<corpus::ScenarioQuestion>(j); });
    corpus::IdMinter minter;
    for (auto& q : qs) {
      if (q.id.empty()) q.id = minter.next(q.prompt);
      corpus::validate(q);
    }
    write(qs, "questions.jsonl");
    queue_output();
  }

  void sft_stage() {
    const auto descs = read<corpus::KnowledgeDescription>("descriptions.jsonl");
    const auto corpus_ = sft::build_sft_corpus(descs);
    std::vector<json> pairs, skipped;
    for (const auto& p : corpus_.pairs) pairs.push_back(sft::to_json(p));
    for (const auto& s : corpus_.skipped) {
      skipped.push_back({{"description_id", s.description_id}, {"reason", s.reason}});
    }
    write_text("sft.jsonl", json_lines(pairs));
    write_text("sft_skipped.jsonl", json_lines(skipped));
  }

  void split() {
    const auto atomics = read<corpus::AtomicKnowledge>("atomic.jsonl");
    const auto descs = read<corpus::KnowledgeDescription>("descriptions.jsonl");
    const auto qs = read<corpus::ScenarioQuestion>("questions.jsonl");
    const auto s = sft::split_for_format_adaptation(qs, cfg_.prep.split_fraction,
                                                    cfg_.prep.group_key, cfg_.seed);
    const auto manifest = sft::make_manifest(s, atomics.size(), descs.size(), qs.size());
    corpus::check_manifest(manifest, {atomics.size(), descs.size(), qs.size()}, qs);
    corpus::write_manifest(manifest, work_ / "manifest.json");
    output("manifest.json");
  }

  void eval_stage() {
    input("sft.jsonl");
    std::map<std::string, std::string> memory_gold, understanding_gold;
    for (const auto& j : read_json_lines(work_ / "sft.jsonl")) {
      const auto p = sft::sft_pair_from_json(j);
      memory_gold[p.source_description_id] = p.target;
    }
    input("manifest.json");
    const auto manifest = corpus::read_manifest(work_ / "manifest.json");
    for (const auto& q : read<corpus::ScenarioQuestion>("questions.jsonl")) {
      const auto it = manifest.splits.find(q.id);
      if (it != manifest.splits.end() && it->second == corpus::SplitSide::eval) {
        understanding_gold[q.id] = q.answer;
      }
    }
    const eval::EvalOptions options{cfg_.eval.runs, cfg_.eval.averaging, cfg_.eval.workers};
    std::vector<eval::MetricReport> reports;
    for (const auto& in : cfg_.eval.inputs) {
      const auto path = cfg_.resolve(in.completions);
      external_input(in.completions, path);
      const auto cs = eval::read_completions(path);
      std::set<int> epochs;
      for (const auto& c : cs) epochs.insert(c.epoch);
      if (epochs.empty()) throw ValidationError(in.completions + ": no completions");
      const auto& gold = in.set == eval::SetName::memory ? memory_gold : understanding_gold;
      for (int e : epochs) {
        auto r = eval::evaluate_set(cs, gold, in.set, e, options);
        r.label = in.label;
        reports.push_back(r);
      }
    }
    json all = json::array();
    std::map<std::string, std::vector<eval::MetricReport>> by_label;
    for (const auto& r : reports) {
      all.push_back(eval::to_json(r));
      by_label[r.label].push_back(r);
    }
    write_json("reports/reports.json", all);
    write_text("reports/reports.csv", eval::reports_csv(reports));
    for (const auto& [label, rs] : by_label) {
      const auto rows = eval::trend_table(rs);
      write_json("reports/trend_" + safe_label(label) + ".json", eval::to_json(rows));
      write_text("reports/trend_" + safe_label(label) + ".csv", eval::trend_csv(rows));
    }
    std::vector<eval::DeltaReport> deltas;
    auto latest = [&](const std::string& label, eval::SetName set) {
      const eval::MetricReport* best = nullptr;
      for (const auto& r : reports) {
        if (r.label == label && r.set == set && (!best || r.epoch > best->epoch)) best = &r;
      }
      if (!best) {
        throw ValidationError("no " + eval::to_string(set) + " report labeled \"" + label + "\"");
      }
      return *best;
    };
    json dj = json::array();
    for (const auto& d : cfg_.eval.deltas) {
      deltas.push_back(eval::delta_report(latest(d.baseline, d.set), latest(d.adapted, d.set)));
      dj.push_back(eval::to_json(deltas.back()));
    }
    write_json("reports/deltas.json", dj);
    write_text("reports/delta.csv", eval::delta_csv(deltas));
  }

  void probe_stage() {
    const auto& pc = cfg_.probe;
    const auto dir = cfg_.resolve(pc.archive);
    const auto archive = probe::HiddenArchive::open(dir);
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(dir)) files.push_back(entry.path());
    std::sort(files.begin(), files.end());
    for (const auto& f : files) external_input(pc.archive + "/" + f.filename().string(), f);

    const auto atomics = read<corpus::AtomicKnowledge>("atomic.jsonl");
    const auto hosts = host_texts(atomics);
    const auto anns = read<corpus::ScenarioAnnotation>("annotations.jsonl", {&hosts});
    const auto descs = read<corpus::KnowledgeDescription>("descriptions.jsonl");

    int l = pc.total_layers.value_or(0);
    if (!pc.total_layers) {
      for (const auto& [_, meta] : archive.samples()) {
        for (int id : meta.layer_ids) l = std::max(l, id);
      }
    }
    const auto levels = probe::layer_levels(l);
    std::vector<probe::SkippedSample> skipped;
    const auto samples = probe::probe_samples(archive, anns, descs, &skipped);

    ProbeResults results;
    results.total_layers = l;
    results.level_agg = to_string(pc.level_agg);
    for (auto kind : pc.levels) {
      LevelResult lr;
      lr.level = levels.get(kind);
      lr.overlap = levels.overlap;
      const std::vector<int> ids(lr.level.layer_ids.begin(), lr.level.layer_ids.end());
      const auto level_name = probe::to_string(kind);

      auto train_eval = [&](const probe::PairSet& set, probe::Arch arch, const std::string& tag,
                            std::vector<probe::EpochStats>* history) {
        const auto tr = probe::train_probe(set.pairs, arch, pc.train);
        std::vector<probe::PairExample> held;
        for (auto i : tr.heldout_indices) held.push_back(set.pairs[i]);
        write_json("probe/" + tag + "_" + probe::to_string(arch) + ".params.json", tr.params.to_json());
        if (history) *history = tr.history;
        return probe::evaluate_probe(tr.params, held, pc.train.threshold);
      };

      if (pc.level_agg == LevelAgg::mean) {
        const auto set = probe::build_pairs(samples, archive, ids, pc.train.negative_ratio, pc.train.seed);
        lr.balance = set.balance;
        for (auto arch : pc.archs) {
          ArchResult a;
          a.heldout = train_eval(set, arch, level_name, &a.history);
          lr.archs[arch] = a;
        }
      } else {
        std::map<probe::Arch, ArchResult> acc;
        for (std::size_t k = 0; k < ids.size(); ++k) {
          const auto set = probe::build_pairs(samples, archive, {ids[k]}, pc.train.negative_ratio,
                                              pc.train.seed);
          if (k == 0) lr.balance = set.balance;
          for (auto arch : pc.archs) {
            acc[arch].per_layer.push_back(
                train_eval(set, arch, level_name + "_L" + std::to_string(ids[k]), nullptr));
          }
        }
        for (auto& [arch, a] : acc) {
          std::size_t tp = 0, fp = 0, tn = 0, fn = 0;
          double p = 0, r = 0, f = 0, acc_sum = 0;
          for (const auto& m : a.per_layer) {
            tp += m.tp, fp += m.fp, tn += m.tn, fn += m.fn;
            p += m.precision, r += m.recall, f += m.f1, acc_sum += m.accuracy;
          }
          const double n = static_cast<double>(a.per_layer.size());
          a.heldout = probe::metrics_from_counts(tp, fp, tn, fn, pc.train.threshold);
          a.heldout.precision = p / n;
          a.heldout.recall = r / n;
          a.heldout.f1 = f / n;
          a.heldout.accuracy = acc_sum / n;
        }
        lr.archs = std::move(acc);
      }
      for (const auto& s : skipped) lr.balance.skipped.push_back(s);

      if (pc.attention) {
        const auto examples =
            probe::build_attention_examples(samples, archive, ids, pc.candidate_mode);
        auto params = probe::ProbeParams::identity_attention(archive.dim());
        if (pc.train_attention) {
          params = probe::train_attention(examples, pc.train).params;
          write_json("probe/" + level_name + "_attention.params.json", params.to_json());
        }
        lr.attention = probe::attention_analysis(params, examples);
      }
      results.levels.push_back(std::move(lr));
    }
    write_json("probe/results.json", to_json(results));
  }

  void report_stage() {
    for (const auto& rel : {"reports/reports.json", "reports/deltas.json", "probe/results.json"}) {
      if (fs::exists(work_ / rel)) input(rel);
    }
    const auto inputs = load_report_inputs(work_);
    const auto written = emit_report(
        inputs, {ReportFormat::table, ReportFormat::csv, ReportFormat::plot_data}, work_ / "report");
    for (const auto& p : written) output(fs::relative(p, work_).generic_string());
  }

  const RunConfig& cfg_;
  const RunOptions& opt_;
  fs::path work_;
  std::string hash_;
  StageRecord rec_;
  std::shared_ptr<providers::ResponseCache> cache_;
  std::unique_ptr<providers::ChatService> chat_;
  std::unique_ptr<providers::EmbeddingService> embed_;
};

json load_state(const fs::path& path) {
  if (!fs::exists(path)) return json::object();
  try {
    return json::parse(corpus::read_file(path));
  } catch (const json::exception& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
}

}  // namespace

ReportInputs load_report_inputs(const fs::path& work_dir) {
  ReportInputs in;
  auto parse = [](const fs::path& p) {
    try {
      return json::parse(corpus::read_file(p));
    } catch (const json::exception& e) {
      throw ValidationError(p.string() + ": " + e.what());
    }
  };
  if (fs::exists(work_dir / "reports/reports.json")) {
    for (const auto& r : parse(work_dir / "reports/reports.json")) {
      in.reports.push_back(eval::metric_report_from_json(r));
    }
  }
  if (fs::exists(work_dir / "reports/deltas.json")) {
    for (const auto& d : parse(work_dir / "reports/deltas.json")) {
      in.deltas.push_back(eval::delta_report(eval::metric_report_from_json(d.at("baseline")),
                                             eval::metric_report_from_json(d.at("adapted"))));
    }
  }
  if (fs::exists(work_dir / "probe/results.json")) {
    in.probe = probe_results_from_json(parse(work_dir / "probe/results.json"));
  }
  return in;
}

RunResult run_pipeline(const RunConfig& config, const std::vector<std::string>& stages,
                       const RunOptions& options) {
  for (const auto& s : stages) stage_dependencies(s);
  validate(config, stages);
  check_stage_plan(stages, config.work_dir);
  fs::create_directories(config.work_dir);

  const auto state_path = config.work_dir / "run_state.json";
  const auto hash = config.hash();
  std::vector<std::string> completed;
  if (options.resume) {
    const auto prior = load_state(state_path);
    if (prior.value("config_hash", "") == hash) {
      completed = prior.value("completed", std::vector<std::string>{});
    }
  }
  auto save_state = [&](const json& failed, const json& error) {
    const json state{{"config_hash", hash}, {"completed", completed}, {"failed", failed},
                     {"error", error}};
    corpus::write_file_atomic(state_path, state.dump(2) + "\n");
  };

  RunResult result;
  Runner runner(config, options);
  for (const auto& stage : stages) {
    const bool done = std::find(completed.begin(), completed.end(), stage) != completed.end();
    if (options.resume && done && fs::exists(config.work_dir / stage_marker(stage))) {
      result.skipped.push_back(stage);
      continue;
    }
    StageRecord rec;
    try {
      rec = runner.run(stage);
    } catch (const std::exception& e) {
      save_state(stage, e.what());
      throw;
    }
    std::ofstream(config.work_dir / "run_log.jsonl", std::ios::app) << rec.to_json().dump() << "\n";
    if (!done) completed.push_back(stage);
    save_state(nullptr, nullptr);
    if (options.on_stage) options.on_stage(rec);
    result.stages.push_back(std::move(rec));
  }
  return result;
}

}  // namespace scog::report
