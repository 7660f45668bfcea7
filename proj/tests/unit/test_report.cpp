#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>

#include "scog/corpus/io.hpp"
#include "scog/error.hpp"
#include "scog/report/pipeline.hpp"
#include "test_support.hpp"

using namespace scog::report;
using scog::DependencyError;
using scog::ValidationError;
using scog::testing::TempDir;
using nlohmann::json;
namespace eval = scog::eval;

namespace fs = std::filesystem;

namespace {

const fs::path kFixture = fs::path(SCOG_FIXTURE_DIR) / "e2e";

json minimal_config() {
  return yaml_to_json(R"(
seed: 3
providers:
  - {id: gen, kind: stub-hash}
  - {id: emb, kind: stub-bow, role: embedding, dim: 32}
datagen:
  generators: [gen]
  embedder: emb
  validators: [gen]
  expander: gen
  annotator: {provider: gen, temperature: 0.2, max_tokens: 64}
  question_generator: gen
)");
}

std::size_t count_lines(const fs::path& p) {
  std::ifstream in(p);
  std::size_t n = 0;
  for (std::string line; std::getline(in, line);) n += !line.empty();
  return n;
}

eval::MetricReport make_report(const std::string& label, eval::SetName set, int epoch, double v) {
  eval::MetricReport r;
  r.label = label;
  r.set = set;
  r.epoch = epoch;
  for (const auto& m : {"em", "bleu1", "bleu4", "rouge1", "rouge2", "rougeL"}) r.set_metric(m, v);
  r.n_items = 4;
  r.n_runs = 5;
  return r;
}

// Runs the sealed fixture once per test binary.
const fs::path& fixture_run() {
  static TempDir dir;
  static bool done = false;
  if (!done) {
    auto cfg = load_run_config(kFixture / "config.yaml");
    cfg.work_dir = dir / "work";
    run_pipeline(cfg, stage_names());
    done = true;
  }
  static const fs::path work = dir / "work";
  return work;
}

}  // namespace

TEST_CASE("yaml scalars prefer bool, integer, real, then string") {
  const auto j = yaml_to_json("a: true\nb: 12\nc: 0.25\nd: hello\ne: \"12\"\nf: [1, x]\n");
  CHECK(j["a"] == true);
  CHECK(j["b"].is_number_integer());
  CHECK(j["c"].get<double>() == doctest::Approx(0.25));
  CHECK(j["d"] == "hello");
  CHECK(j["e"] == "12");
  CHECK(j["f"][0] == 1);
  CHECK(j["f"][1] == "x");
}

TEST_CASE("config parsing fills defaults and resolves agents") {
  const auto cfg = run_config_from_json(minimal_config(), "/base");
  CHECK(cfg.seed == 3);
  CHECK(cfg.work_dir == fs::path("/base/work"));
  CHECK(cfg.cache_mode == scog::providers::CacheMode::replay);
  REQUIRE(cfg.chat_providers.size() == 1);
  REQUIRE(cfg.embedding_providers.size() == 1);
  CHECK(cfg.embedding_providers[0].dim == 32);
  CHECK(cfg.datagen.annotator.provider_id == "gen");
  CHECK(cfg.datagen.annotator.temperature == doctest::Approx(0.2));
  CHECK(cfg.datagen.annotator.max_tokens == 64);
  CHECK(cfg.datagen.k == 10);
  CHECK(cfg.prep.split_fraction == doctest::Approx(0.3));
  CHECK(cfg.probe.train.seed == 3);
  CHECK_NOTHROW(validate(cfg, {"generate", "filter", "vote"}));
}

TEST_CASE("config parsing rejects unknown keys and bad values") {
  auto j = minimal_config();
  j["datagen"]["kk"] = 3;
  CHECK_THROWS_AS(run_config_from_json(j, "/base"), ValidationError);

  j = minimal_config();
  j["surprise"] = 1;
  CHECK_THROWS_AS(run_config_from_json(j, "/base"), ValidationError);

  j = minimal_config();
  j["prep"]["split_fraction"] = "lots";
  CHECK_THROWS_AS(run_config_from_json(j, "/base"), ValidationError);

  j = minimal_config();
  j["providers"][0]["kind"] = "carrier-pigeon";
  CHECK_THROWS_AS(run_config_from_json(j, "/base"), ValidationError);
}

TEST_CASE("validate catches agents naming unknown providers") {
  auto j = minimal_config();
  j["datagen"]["validators"] = json::array({"gen", "ghost"});
  const auto cfg = run_config_from_json(j, "/base");
  CHECK_THROWS_AS(validate(cfg, {"vote"}), ValidationError);
  CHECK_NOTHROW(validate(cfg, {"generate"}));
}

TEST_CASE("config hash ignores the work dir and tracks hashed settings") {
  auto a = run_config_from_json(minimal_config(), "/base");
  auto b = a;
  b.work_dir = "/elsewhere";
  CHECK(a.hash() == b.hash());
  b.seed = 4;
  CHECK(a.hash() != b.hash());
  CHECK(a.hash().size() == 64);
}

TEST_CASE("stage lists and plans") {
  CHECK(parse_stage_list("all") == stage_names());
  CHECK(stage_names().size() == 11);
  CHECK(parse_stage_list("vote, expand") == std::vector<std::string>{"vote", "expand"});
  CHECK_THROWS_AS(parse_stage_list("vote,bogus"), ValidationError);
  CHECK_THROWS_AS(parse_stage_list("vote,vote"), ValidationError);

  TempDir dir;
  CHECK_NOTHROW(check_stage_plan(stage_names(), dir.path()));
  // questions needs annotate first
  CHECK_THROWS_AS(check_stage_plan({"generate", "filter", "vote", "questions", "annotate"}, dir.path()),
                  DependencyError);
  // nothing on disk to resume from
  CHECK_THROWS_AS(check_stage_plan({"expand"}, dir.path()), DependencyError);
  std::ofstream(dir / "atomic.jsonl") << "";
  CHECK_NOTHROW(check_stage_plan({"expand"}, dir.path()));
}

TEST_CASE("plot series validation") {
  PlotSeries s{"em", {"1", "2"}, {0.5, 0.6}, std::nullopt, std::nullopt};
  CHECK_NOTHROW(validate(s));
  s.y.push_back(0.7);
  CHECK_THROWS_AS(validate(s), ValidationError);
  s.y.pop_back();
  s.err_min = std::vector<double>{0.4, 0.7};
  s.err_max = std::vector<double>{0.6, 0.8};
  CHECK_THROWS_AS(validate(s), ValidationError);  // 0.7 > 0.6 at x=2
  s.err_min = std::vector<double>{0.4, 0.5};
  CHECK_NOTHROW(validate(s));
  s.err_max.reset();
  CHECK_THROWS_AS(validate(s), ValidationError);
}

TEST_CASE("trend charts have one series per metric over the epochs") {
  std::vector<eval::MetricReport> reports;
  for (int e = 1; e <= 5; ++e) reports.push_back(make_report("m", eval::SetName::memory, e, 0.1 * e));
  const auto charts = trend_charts(eval::trend_table(reports), "m");
  REQUIRE(charts.size() == 1);
  REQUIRE(charts[0].series.size() == 6);
  for (const auto& s : charts[0].series) {
    CHECK(s.x == std::vector<std::string>{"1", "2", "3", "4", "5"});
    CHECK(s.y[4] == doctest::Approx(0.5));
  }
  const auto csv = chart_csv(charts[0]);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 1 + 6 * 5);
}

TEST_CASE("report formats") {
  CHECK(parse_report_formats("table,csv,plot-data").size() == 3);
  CHECK_THROWS_AS(parse_report_formats("table,pdf"), ValidationError);
  CHECK_THROWS_AS(parse_report_formats(""), ValidationError);
}

TEST_CASE("emit_report refuses empty input") {
  TempDir dir;
  CHECK_THROWS_AS(emit_report({}, {ReportFormat::table}, dir.path()), ValidationError);
}

TEST_CASE("emit_report writes tables, csv and plot data") {
  ReportInputs in;
  const auto base = make_report("base", eval::SetName::understanding, 0, 0.16);
  const auto adapted = make_report("tuned", eval::SetName::understanding, 5, 0.25);
  in.reports = {base, adapted};
  in.deltas = {eval::delta_report(base, adapted)};
  TempDir dir;
  const auto written = emit_report(in, parse_report_formats("table,csv,plot-data"), dir.path());
  CHECK(fs::exists(dir / "report.txt"));
  CHECK(fs::exists(dir / "reports.csv"));
  CHECK(fs::exists(dir / "delta.csv"));
  CHECK(fs::exists(dir / "plots.json"));
  CHECK(report_table(in).find("+0.0900") != std::string::npos);
  const auto plots = json::parse(scog::corpus::read_file(dir / "plots.json"));
  CHECK(plots["charts"].is_array());
  CHECK(!written.empty());
}

TEST_CASE("sealed fixture pipeline produces the expected corpus") {
  const auto& work = fixture_run();
  CHECK(count_lines(work / "atomic.jsonl") == 10);
  CHECK(count_lines(work / "descriptions.jsonl") == 100);
  CHECK(count_lines(work / "annotations.jsonl") == 10);
  CHECK(count_lines(work / "questions.jsonl") == 30);
  CHECK(count_lines(work / "sft.jsonl") == 100);
  CHECK(count_lines(work / "run_log.jsonl") == 11);
  for (const auto& stage : stage_names()) CHECK(fs::exists(work / stage_marker(stage)));
  CHECK(fs::exists(work / "atomic.jsonl.meta.json"));
  const auto state = json::parse(scog::corpus::read_file(work / "run_state.json"));
  CHECK(state["completed"].size() == 11);
}

TEST_CASE("probe and attention charts from the fixture run") {
  const auto inputs = load_report_inputs(fixture_run());
  REQUIRE(inputs.probe);
  CHECK(inputs.probe->total_layers == 6);
  REQUIRE(inputs.probe->levels.size() == 3);
  const auto chart = probe_chart(*inputs.probe, scog::probe::Arch::enh_mlp);
  REQUIRE(chart.series.size() == 4);
  for (const auto& s : chart.series) CHECK(s.x.size() == 3);
  CHECK(chart.series[3].y == std::vector<double>{0.5, 0.5, 0.5});
  const auto att = attention_chart(*inputs.probe);
  REQUIRE(att);
  REQUIRE(att->series.size() == 2);
  for (const auto& s : att->series) {
    REQUIRE(s.err_min);
    CHECK_NOTHROW(validate(s));
  }
  CHECK(inputs.reports.size() == 11);
  CHECK(inputs.deltas.size() == 1);
}

TEST_CASE("resume skips completed stages under the same config") {
  TempDir dir;
  auto cfg = load_run_config(kFixture / "config.yaml");
  cfg.work_dir = dir / "work";
  run_pipeline(cfg, parse_stage_list("generate,filter,vote"));
  RunOptions resume;
  resume.resume = true;
  const auto r = run_pipeline(cfg, parse_stage_list("generate,filter,vote,expand"), resume);
  CHECK(r.skipped == std::vector<std::string>{"generate", "filter", "vote"});
  REQUIRE(r.stages.size() == 1);
  CHECK(r.stages[0].stage == "expand");
  CHECK(r.stages[0].seed == 7);
}

TEST_CASE("strict replay misses are provider errors") {
  TempDir dir;
  auto cfg = load_run_config(kFixture / "config.yaml");
  cfg.work_dir = dir / "work";
  cfg.datagen.candidates_per_call = 11;  // a prompt never recorded
  CHECK_THROWS_AS(run_pipeline(cfg, parse_stage_list("generate")), scog::ProviderError);
  const auto state = json::parse(scog::corpus::read_file(cfg.work_dir / "run_state.json"));
  CHECK(state["failed"] == "generate");
}
