#include <CLI11.hpp>
#include <spdlog/sinks/stdout_sinks.h>
#include <spdlog/spdlog.h>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "scog/corpus/io.hpp"
#include "scog/datagen/review.hpp"
#include "scog/error.hpp"
#include "scog/eval/report.hpp"
#include "scog/probe/archive.hpp"
#include "scog/probe/pairs.hpp"
#include "scog/probe/probe.hpp"
#include "scog/report/config.hpp"
#include "scog/report/pipeline.hpp"
#include "scog/report/plots.hpp"
#include "scog/sft/segment.hpp"
#include "scog/sft/split.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace scog;

namespace {

json parse_json_file(const fs::path& path) {
  try {
    return json::parse(corpus::read_file(path));
  } catch (const json::exception& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
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

void write_or_print(const std::string& out, const std::string& content) {
  if (out.empty() || out == "-") {
    std::cout << content;
  } else {
    corpus::write_file_atomic(out, content);
  }
}

report::RunConfig config_with(const std::string& path, const std::string& work_dir) {
  auto cfg = report::load_run_config(path);
  if (!work_dir.empty()) cfg.work_dir = fs::absolute(work_dir);
  return cfg;
}

void print_run(const report::RunResult& r) {
  for (const auto& s : r.skipped) spdlog::info("stage {} already complete, skipped", s);
  for (const auto& s : r.stages) {
    spdlog::info("stage {} wrote {} artifact(s)", s.stage, s.outputs.size());
  }
}

struct Paths {
  std::string atomic, annotations, descriptions;
};

struct ProbeInputs {
  probe::HiddenArchive archive;
  std::vector<probe::ProbeSample> samples;
  std::vector<probe::SkippedSample> skipped;
  probe::LayerLevels levels;
};

ProbeInputs load_probe_inputs(const std::string& archive_dir, const Paths& p, int total_layers) {
  auto archive = probe::HiddenArchive::open(archive_dir);
  const auto atomics = corpus::read_records<corpus::AtomicKnowledge>(p.atomic);
  const auto hosts = corpus::host_text_index(atomics);
  const auto anns = corpus::read_records<corpus::ScenarioAnnotation>(p.annotations, {&hosts});
  std::vector<corpus::KnowledgeDescription> descs;
  if (!p.descriptions.empty()) {
    descs = corpus::read_records<corpus::KnowledgeDescription>(p.descriptions);
  }
  if (total_layers <= 0) {
    for (const auto& [_, m] : archive.samples()) {
      for (int id : m.layer_ids) total_layers = std::max(total_layers, id);
    }
  }
  ProbeInputs in{archive, {}, {}, probe::layer_levels(total_layers)};
  in.samples = probe::probe_samples(in.archive, anns, descs, &in.skipped);
  return in;
}

std::vector<probe::PairExample> read_pairs(const std::string& path) {
  std::vector<probe::PairExample> pairs;
  for (const auto& j : read_json_lines(path)) pairs.push_back(probe::pair_example_from_json(j));
  if (pairs.empty()) throw ValidationError(path + ": no pairs");
  return pairs;
}

int run_cli(int argc, char** argv) {
  CLI::App app{"Scenario-knowledge corpus, evaluation and probing toolkit"};
  app.require_subcommand(1);
  std::string log_level = "info";
  app.add_option("--log-level", log_level, "trace|debug|info|warn|error|off");

  // run
  auto* run = app.add_subcommand("run", "Run pipeline stages from a config file");
  std::string config_path, stages = "all", work_dir;
  bool resume = false;
  run->add_option("--config", config_path, "YAML run config")->required();
  run->add_option("--stages", stages, "comma-separated stages or \"all\"");
  run->add_option("--work-dir", work_dir, "artifact directory (overrides the config)");
  run->add_flag("--resume", resume, "skip stages completed under the same config hash");

  // datagen
  auto* dg = app.add_subcommand("datagen", "Corpus synthesis stages");
  dg->require_subcommand(1);
  std::string dg_config, dg_work, dg_agent;
  std::size_t dg_count = 0, dg_k = 0;
  double dg_threshold = -1;
  auto add_stage = [&](const std::string& name, const std::string& help) {
    auto* c = dg->add_subcommand(name, help);
    c->add_option("--config", dg_config, "YAML run config")->required();
    c->add_option("--work-dir", dg_work, "artifact directory (overrides the config)");
    return c;
  };
  auto* dg_generate = add_stage("generate", "Generate atomic fact candidates");
  dg_generate->add_option("--count", dg_count, "facts requested per call");
  dg_generate->add_option("--agent", dg_agent, "only this generator provider");
  auto* dg_filter = add_stage("filter", "Greedy embedding-distance filter");
  dg_filter->add_option("--threshold", dg_threshold, "minimum L2 distance (default 0.5)");
  auto* dg_vote = add_stage("vote", "Unanimous validator vote");
  auto* dg_expand = add_stage("expand", "Paraphrase facts into descriptions");
  dg_expand->add_option("--k", dg_k, "descriptions per fact (default 10)");
  auto* dg_annotate = add_stage("annotate", "Annotate scenario elements");
  auto* dg_questions = add_stage("questions", "Generate completion-style questions");
  auto* review = dg->add_subcommand("review", "Human review queue");
  review->require_subcommand(1);
  std::string queue_path, review_id, decision, payload_path, stage_filter, status_filter;
  auto* review_list = review->add_subcommand("list", "List review items");
  review_list->add_option("--queue", queue_path, "queue event file")->required();
  review_list->add_option("--stage", stage_filter, "atomic|description|annotation|question");
  review_list->add_option("--status", status_filter, "pending|accepted|rejected|corrected");
  auto* review_resolve = review->add_subcommand("resolve", "Resolve one review item");
  review_resolve->add_option("--queue", queue_path, "queue event file")->required();
  review_resolve->add_option("--id", review_id, "item id")->required();
  review_resolve->add_option("--decision", decision, "accept|reject|corrected")->required();
  review_resolve->add_option("--payload", payload_path, "JSON file with the corrected record(s)");

  // prep
  auto* prep = app.add_subcommand("prep", "Supervised-pair preparation");
  prep->require_subcommand(1);
  std::string prep_in, prep_out, prep_group = "knowledge", prep_atomic, prep_desc;
  double prep_fraction = 0.3;
  std::uint64_t prep_seed = 0;
  auto* prep_sft = prep->add_subcommand("sft", "Split descriptions at the first verb");
  prep_sft->add_option("--in", prep_in, "descriptions.jsonl")->required();
  prep_sft->add_option("--out", prep_out, "sft.jsonl")->required();
  auto* prep_split = prep->add_subcommand("split", "Format-adaptation split of the questions");
  prep_split->add_option("--in", prep_in, "questions.jsonl")->required();
  prep_split->add_option("--fraction", prep_fraction, "share of groups for format training");
  prep_split->add_option("--group", prep_group, "knowledge|question");
  prep_split->add_option("--seed", prep_seed, "shuffle seed");
  prep_split->add_option("--atomic", prep_atomic, "atomic.jsonl (for manifest counts)");
  prep_split->add_option("--descriptions", prep_desc, "descriptions.jsonl (for manifest counts)");
  prep_split->add_option("--out", prep_out, "manifest.json")->required();

  // eval
  auto* ev = app.add_subcommand("eval", "Output-level evaluation");
  ev->require_subcommand(1);
  std::string ev_completions, ev_gold, ev_set = "memory", ev_label, ev_out, ev_reports,
                                       ev_baseline, ev_adapted, ev_averaging = "items-then-runs";
  int ev_epoch = 0, ev_runs = 5;
  std::size_t ev_workers = 1;
  auto* ev_outputs = ev->add_subcommand("outputs", "Score completions against gold answers");
  ev_outputs->add_option("--completions", ev_completions, "completions JSONL")->required();
  ev_outputs->add_option("--gold", ev_gold, "sft.jsonl (memory) or questions.jsonl (understanding)")
      ->required();
  ev_outputs->add_option("--set", ev_set, "memory|understanding");
  ev_outputs->add_option("--epoch", ev_epoch, "epoch to score")->required();
  ev_outputs->add_option("--runs", ev_runs, "expected runs per item");
  ev_outputs->add_option("--averaging", ev_averaging, "items-then-runs|pooled");
  ev_outputs->add_option("--workers", ev_workers, "scoring threads");
  ev_outputs->add_option("--label", ev_label, "model label");
  ev_outputs->add_option("--out", ev_out, "report JSON (stdout when omitted)");
  auto* ev_trend = ev->add_subcommand("trend", "Metric-vs-epoch table from report files");
  ev_trend->add_option("--reports", ev_reports, "directory of report JSON files")->required();
  ev_trend->add_option("--out", ev_out, "CSV output (stdout when omitted)");
  auto* ev_delta = ev->add_subcommand("delta", "Adapted minus baseline");
  ev_delta->add_option("--baseline", ev_baseline, "baseline report JSON")->required();
  ev_delta->add_option("--adapted", ev_adapted, "adapted report JSON")->required();
  ev_delta->add_option("--out", ev_out, "CSV output (stdout when omitted)");

  // probe
  auto* pr = app.add_subcommand("probe", "Internal-representation probes");
  pr->require_subcommand(1);
  std::string pr_archive, pr_level = "mid", pr_pairs, pr_arch = "linear", pr_params, pr_out,
                          pr_mode = "arguments", pr_history;
  Paths pr_paths;
  int pr_layers = 0;
  double pr_ratio = 1.13, pr_threshold = 0.5;
  probe::TrainConfig pr_train;
  auto corpus_opts = [&](CLI::App* c) {
    c->add_option("--archive", pr_archive, "hidden-state archive directory")->required();
    c->add_option("--atomic", pr_paths.atomic, "atomic.jsonl")->required();
    c->add_option("--annotations", pr_paths.annotations, "annotations.jsonl")->required();
    c->add_option("--descriptions", pr_paths.descriptions, "descriptions.jsonl");
    c->add_option("--level", pr_level, "head|mid|tail");
    c->add_option("--total-layers", pr_layers, "layer count l (default: highest archived layer)");
  };
  auto* pr_build = pr->add_subcommand("build-pairs", "Build labeled element/argument pairs");
  corpus_opts(pr_build);
  pr_build->add_option("--ratio", pr_ratio, "negatives per positive");
  pr_build->add_option("--seed", pr_train.seed, "subsampling seed");
  pr_build->add_option("--out", pr_out, "pairs JSONL")->required();
  auto* pr_train_cmd = pr->add_subcommand("train", "Train a probe");
  pr_train_cmd->add_option("--pairs", pr_pairs, "pairs JSONL")->required();
  pr_train_cmd->add_option("--arch", pr_arch, "linear|sim_mlp|enh_mlp");
  pr_train_cmd->add_option("--epochs", pr_train.epochs, "epochs");
  pr_train_cmd->add_option("--lr", pr_train.learning_rate, "learning rate");
  pr_train_cmd->add_option("--seed", pr_train.seed, "init, split and shuffle seed");
  pr_train_cmd->add_option("--batch-size", pr_train.batch_size, "mini-batch size");
  pr_train_cmd->add_option("--split", pr_train.split_fraction, "training share");
  pr_train_cmd->add_option("--max-steps", pr_train.max_steps, "step cap (0 = none)");
  pr_train_cmd->add_option("--out", pr_out, "params JSON")->required();
  pr_train_cmd->add_option("--history", pr_history, "per-epoch history JSON");
  auto* pr_eval = pr->add_subcommand("eval", "Threshold evaluation of a trained probe");
  pr_eval->add_option("--params", pr_params, "params JSON")->required();
  pr_eval->add_option("--pairs", pr_pairs, "pairs JSONL")->required();
  pr_eval->add_option("--threshold", pr_threshold, "positive iff probability >= threshold");
  auto* pr_att = pr->add_subcommand("attention-analysis", "Target vs non-target attention scores");
  corpus_opts(pr_att);
  pr_att->add_option("--mode", pr_mode, "arguments|tokens");
  pr_att->add_option("--params", pr_params, "attention params JSON (identity when omitted)");

  // report
  auto* rep = app.add_subcommand("report", "Emit tables, CSV and plot data");
  std::string rep_work, rep_formats = "table,csv,plot-data", rep_out;
  rep->add_option("--work-dir", rep_work, "pipeline work directory")->required();
  rep->add_option("--format", rep_formats, "comma-separated: table,csv,plot-data");
  rep->add_option("--out", rep_out, "output directory (default <work-dir>/report)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }
  spdlog::set_level(spdlog::level::from_str(log_level));
  spdlog::set_default_logger(spdlog::stderr_logger_mt("scog"));

  if (run->parsed()) {
    report::RunOptions options;
    options.resume = resume;
    print_run(report::run_pipeline(config_with(config_path, work_dir),
                                   report::parse_stage_list(stages), options));
    return 0;
  }
  if (dg->parsed()) {
    if (review->parsed()) {
      auto queue = datagen::ReviewQueue::open_existing(queue_path);
      if (review_list->parsed()) {
        for (const auto& item : queue.items()) {
          if (!stage_filter.empty() && datagen::to_string(item.stage) != stage_filter) continue;
          if (!status_filter.empty() && datagen::to_string(item.status) != status_filter) continue;
          json j{{"id", item.id},         {"target_id", item.target_id},
                 {"stage", datagen::to_string(item.stage)},
                 {"status", datagen::to_string(item.status)},
                 {"reason", item.reason}, {"original_payload", item.original_payload}};
          if (item.corrected_payload) j["corrected_payload"] = *item.corrected_payload;
          std::cout << j.dump() << "\n";
        }
      } else {
        std::optional<json> payload;
        if (!payload_path.empty()) payload = parse_json_file(payload_path);
        queue.resolve(review_id, datagen::parse_review_status(decision), payload);
      }
      return 0;
    }
    auto cfg = config_with(dg_config, dg_work);
    std::string stage;
    for (auto* c : {dg_generate, dg_filter, dg_vote, dg_expand, dg_annotate, dg_questions}) {
      if (c->parsed()) stage = c->get_name();
    }
    if (dg_count) cfg.datagen.candidates_per_call = dg_count;
    if (!dg_agent.empty()) {
      std::erase_if(cfg.datagen.generators, [&](const auto& a) { return a.provider_id != dg_agent; });
      if (cfg.datagen.generators.empty()) {
        throw ValidationError("--agent " + dg_agent + " is not a configured generator");
      }
    }
    if (dg_threshold >= 0) cfg.datagen.threshold = dg_threshold;
    if (dg_k) cfg.datagen.k = dg_k;
    print_run(report::run_pipeline(cfg, {stage}));
    return 0;
  }
  if (prep->parsed()) {
    if (prep_sft->parsed()) {
      const auto result =
          sft::build_sft_corpus(corpus::read_records<corpus::KnowledgeDescription>(prep_in));
      std::string lines;
      for (const auto& p : result.pairs) lines += sft::to_json(p).dump() + "\n";
      corpus::write_file_atomic(prep_out, lines);
      for (const auto& s : result.skipped) {
        spdlog::warn("skipped {}: {}", s.description_id, s.reason);
      }
      std::cout << json{{"pairs", result.pairs.size()}, {"skipped", result.skipped.size()}}.dump()
                << "\n";
    } else {
      const auto qs = corpus::read_records<corpus::ScenarioQuestion>(prep_in);
      const auto split = sft::split_for_format_adaptation(qs, prep_fraction,
                                                          sft::parse_group_key(prep_group), prep_seed);
      const std::size_t n_atomic =
          prep_atomic.empty() ? 0 : corpus::read_records<corpus::AtomicKnowledge>(prep_atomic).size();
      const std::size_t n_desc =
          prep_desc.empty() ? 0 : corpus::read_records<corpus::KnowledgeDescription>(prep_desc).size();
      corpus::write_manifest(sft::make_manifest(split, n_atomic, n_desc, qs.size()), prep_out);
      std::cout << json{{"train_questions", split.train_question_ids.size()},
                        {"eval_questions", split.eval_question_ids.size()},
                        {"train_groups", split.train_groups},
                        {"total_groups", split.total_groups}}
                       .dump()
                << "\n";
    }
    return 0;
  }
  if (ev->parsed()) {
    if (ev_outputs->parsed()) {
      const auto set = eval::parse_set_name(ev_set);
      std::map<std::string, std::string> gold;
      if (set == eval::SetName::memory) {
        for (const auto& j : read_json_lines(ev_gold)) {
          const auto p = sft::sft_pair_from_json(j);
          gold[p.source_description_id] = p.target;
        }
      } else {
        for (const auto& q : corpus::read_records<corpus::ScenarioQuestion>(ev_gold)) {
          gold[q.id] = q.answer;
        }
      }
      auto r = eval::evaluate_set(eval::read_completions(ev_completions), gold, set, ev_epoch,
                                  {ev_runs, eval::parse_averaging(ev_averaging), ev_workers});
      r.label = ev_label;
      write_or_print(ev_out, eval::to_json(r).dump(2) + "\n");
    } else if (ev_trend->parsed()) {
      std::vector<eval::MetricReport> reports;
      std::vector<fs::path> files;
      for (const auto& e : fs::directory_iterator(ev_reports)) {
        if (e.path().extension() == ".json") files.push_back(e.path());
      }
      std::sort(files.begin(), files.end());
      for (const auto& f : files) {
        const auto j = parse_json_file(f);
        if (j.is_array()) {
          for (const auto& r : j) reports.push_back(eval::metric_report_from_json(r));
        } else {
          reports.push_back(eval::metric_report_from_json(j));
        }
      }
      write_or_print(ev_out, eval::trend_csv(eval::trend_table(reports)));
    } else {
      const auto d = eval::delta_report(eval::metric_report_from_json(parse_json_file(ev_baseline)),
                                        eval::metric_report_from_json(parse_json_file(ev_adapted)));
      write_or_print(ev_out, eval::delta_csv({d}));
    }
    return 0;
  }
  if (pr->parsed()) {
    if (pr_build->parsed()) {
      const auto in = load_probe_inputs(pr_archive, pr_paths, pr_layers);
      const auto level = in.levels.get(probe::parse_level_kind(pr_level));
      auto set = probe::build_pairs(in.samples, in.archive,
                                    {level.layer_ids.begin(), level.layer_ids.end()}, pr_ratio,
                                    pr_train.seed);
      for (const auto& s : in.skipped) set.balance.skipped.push_back(s);
      std::string lines;
      for (const auto& p : set.pairs) lines += probe::to_json(p).dump() + "\n";
      corpus::write_file_atomic(pr_out, lines);
      std::cout << json{{"level", pr_level},
                        {"layer_ids", level.layer_ids},
                        {"overlap", in.levels.overlap},
                        {"balance", probe::to_json(set.balance)}}
                       .dump(2)
                << "\n";
    } else if (pr_train_cmd->parsed()) {
      const auto result = probe::train_probe(read_pairs(pr_pairs), probe::parse_arch(pr_arch), pr_train);
      corpus::write_file_atomic(pr_out, result.params.to_json().dump(2) + "\n");
      json history = json::array();
      for (const auto& e : result.history) history.push_back(probe::to_json(e));
      if (!pr_history.empty()) corpus::write_file_atomic(pr_history, history.dump(2) + "\n");
      std::cout << history.back().dump(2) << "\n";
    } else if (pr_eval->parsed()) {
      const auto params = probe::ProbeParams::from_json(parse_json_file(pr_params));
      const auto pairs = read_pairs(pr_pairs);
      std::cout << probe::to_json(probe::evaluate_probe(params, pairs, pr_threshold)).dump(2) << "\n";
    } else {
      const auto in = load_probe_inputs(pr_archive, pr_paths, pr_layers);
      const auto level = in.levels.get(probe::parse_level_kind(pr_level));
      const auto examples = probe::build_attention_examples(
          in.samples, in.archive, {level.layer_ids.begin(), level.layer_ids.end()},
          probe::parse_candidate_mode(pr_mode));
      const auto params = pr_params.empty()
                              ? probe::ProbeParams::identity_attention(in.archive.dim())
                              : probe::ProbeParams::from_json(parse_json_file(pr_params));
      std::cout << probe::to_json(probe::attention_analysis(params, examples)).dump(2) << "\n";
    }
    return 0;
  }
  if (rep->parsed()) {
    const auto written = report::emit_report(report::load_report_inputs(rep_work),
                                             report::parse_report_formats(rep_formats),
                                             rep_out.empty() ? fs::path(rep_work) / "report" : fs::path(rep_out));
    for (const auto& p : written) std::cout << p.string() << "\n";
    return 0;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run_cli(argc, argv);
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const ProviderError& e) {
    std::cerr << "provider error: " << e.what() << "\n";
    return 3;
  } catch (const DependencyError& e) {
    std::cerr << "dependency error: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
