#include "scog/report/config.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include <yaml-cpp/yaml.h>

#include "scog/corpus/ids.hpp"
#include "scog/error.hpp"

namespace scog::report {

using nlohmann::json;
namespace fs = std::filesystem;

std::string to_string(LevelAgg agg) {
  return agg == LevelAgg::mean ? "mean" : "per-layer-mean-metrics";
}

LevelAgg parse_level_agg(const std::string& name) {
  if (name == "mean") return LevelAgg::mean;
  if (name == "per-layer-mean-metrics") return LevelAgg::per_layer_mean_metrics;
  throw ValidationError("unknown level aggregation \"" + name +
                        "\" (mean|per-layer-mean-metrics)");
}

namespace {

json scalar_to_json(const YAML::Node& node) {
  const std::string& s = node.Scalar();
  if (node.Tag() == "!") return s;  // quoted
  if (s == "true" || s == "True") return true;
  if (s == "false" || s == "False") return false;
  if (s == "null" || s == "~" || s.empty()) return nullptr;
  try {
    std::size_t used = 0;
    const long long v = std::stoll(s, &used);
    if (used == s.size()) return v;
  } catch (const std::exception&) {
  }
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used == s.size()) return v;
  } catch (const std::exception&) {
  }
  return s;
}

json node_to_json(const YAML::Node& node) {
  switch (node.Type()) {
    case YAML::NodeType::Null:
    case YAML::NodeType::Undefined:
      return nullptr;
    case YAML::NodeType::Scalar:
      return scalar_to_json(node);
    case YAML::NodeType::Sequence: {
      json out = json::array();
      for (const auto& child : node) out.push_back(node_to_json(child));
      return out;
    }
    case YAML::NodeType::Map: {
      json out = json::object();
      for (const auto& kv : node) out[kv.first.as<std::string>()] = node_to_json(kv.second);
      return out;
    }
  }
  return nullptr;
}

// Reads one config object, rejecting keys nobody asked for.
class Section {
 public:
  Section(const json& j, std::string where) : j_(j), where_(std::move(where)) {
    if (!j_.is_object()) throw ValidationError(where_ + ": expected a mapping");
  }
  ~Section() noexcept(false) {
    if (std::uncaught_exceptions() > 0) return;
    for (const auto& [key, _] : j_.items()) {
      if (!seen_.count(key)) throw ValidationError(where_ + ": unknown key \"" + key + "\"");
    }
  }
  bool has(const std::string& key) {
    seen_.insert(key);
    return j_.contains(key) && !j_.at(key).is_null();
  }
  const json& raw(const std::string& key) {
    seen_.insert(key);
    return j_.at(key);
  }
  std::string path(const std::string& key) const { return where_ + "." + key; }

  template <typename T>
  void get(const std::string& key, T& out) {
    if (!has(key)) return;
    try {
      out = j_.at(key).get<T>();
    } catch (const json::exception&) {
      throw ValidationError(path(key) + ": wrong type");
    }
  }
  template <typename T, typename Parse>
  void parse(const std::string& key, T& out, Parse&& fn) {
    if (!has(key)) return;
    if (!j_.at(key).is_string()) throw ValidationError(path(key) + ": expected a string");
    out = fn(j_.at(key).get<std::string>());
  }

 private:
  const json& j_;
  std::string where_;
  std::set<std::string> seen_;
};

datagen::ChatOptions agent_from(const json& j, const std::string& where) {
  datagen::ChatOptions a;
  if (j.is_string()) {
    a.provider_id = j.get<std::string>();
    return a;
  }
  Section s(j, where);
  s.get("provider", a.provider_id);
  s.get("temperature", a.temperature);
  s.get("max_tokens", a.max_tokens);
  if (a.provider_id.empty()) throw ValidationError(where + ".provider: required");
  return a;
}

json agent_json(const datagen::ChatOptions& a) {
  return {{"provider", a.provider_id}, {"temperature", a.temperature}, {"max_tokens", a.max_tokens}};
}

std::vector<datagen::ChatOptions> agents_from(Section& s, const std::string& key) {
  std::vector<datagen::ChatOptions> out;
  if (!s.has(key)) return out;
  const auto& list = s.raw(key);
  if (!list.is_array()) throw ValidationError(s.path(key) + ": expected a list");
  for (std::size_t i = 0; i < list.size(); ++i) {
    out.push_back(agent_from(list[i], s.path(key) + "[" + std::to_string(i) + "]"));
  }
  return out;
}

providers::ProviderConfig provider_from(const json& j, const std::string& where, std::string& role) {
  providers::ProviderConfig p;
  Section s(j, where);
  s.get("id", p.id);
  s.get("kind", p.kind);
  s.get("endpoint", p.endpoint);
  s.get("model", p.model);
  s.get("max_concurrency", p.max_concurrency);
  s.get("retries", p.retries);
  s.get("dim", p.dim);
  role = "chat";
  s.get("role", role);
  if (p.id.empty()) throw ValidationError(where + ".id: required");
  static const std::vector<std::string> kinds{"http", "stub-hash", "stub-bow", "replay-only"};
  if (std::find(kinds.begin(), kinds.end(), p.kind) == kinds.end()) {
    throw ValidationError(where + ".kind: unknown provider kind \"" + p.kind + "\"");
  }
  if (role != "chat" && role != "embedding") {
    throw ValidationError(where + ".role: expected chat or embedding");
  }
  if (p.max_concurrency < 1) throw ValidationError(where + ".max_concurrency: must be >= 1");
  if (p.retries < 1) throw ValidationError(where + ".retries: must be >= 1");
  return p;
}

json provider_json(const providers::ProviderConfig& p, const std::string& role) {
  return {{"id", p.id},         {"kind", p.kind},       {"endpoint", p.endpoint},
          {"model", p.model},   {"role", role},         {"max_concurrency", p.max_concurrency},
          {"retries", p.retries}, {"dim", p.dim}};
}

}  // namespace

json yaml_to_json(const std::string& yaml_text) {
  try {
    return node_to_json(YAML::Load(yaml_text));
  } catch (const YAML::Exception& e) {
    throw ValidationError(std::string("config: ") + e.what());
  }
}

fs::path RunConfig::resolve(const std::string& path) const {
  const fs::path p(path);
  return p.is_absolute() ? p : base_dir / p;
}

json RunConfig::to_json() const {
  json chat = json::array(), embed = json::array();
  for (const auto& p : chat_providers) chat.push_back(provider_json(p, "chat"));
  for (const auto& p : embedding_providers) embed.push_back(provider_json(p, "embedding"));
  json all_providers = chat;
  for (const auto& e : embed) all_providers.push_back(e);
  json gens = json::array(), vals = json::array();
  for (const auto& a : datagen.generators) gens.push_back(agent_json(a));
  for (const auto& a : datagen.validators) vals.push_back(agent_json(a));
  json inputs = json::array(), deltas = json::array();
  for (const auto& in : eval.inputs) {
    inputs.push_back({{"label", in.label}, {"set", eval::to_string(in.set)},
                      {"completions", in.completions}});
  }
  for (const auto& d : eval.deltas) {
    deltas.push_back({{"baseline", d.baseline}, {"adapted", d.adapted},
                      {"set", eval::to_string(d.set)}});
  }
  json levels = json::array(), archs = json::array();
  for (auto l : probe.levels) levels.push_back(probe::to_string(l));
  for (auto a : probe.archs) archs.push_back(probe::to_string(a));
  const auto& t = probe.train;
  return {
      {"seed", seed},
      {"cache", {{"dir", cache_dir}, {"mode", providers::to_string(cache_mode)}}},
      {"providers", all_providers},
      {"datagen",
       {{"generators", gens},
        {"candidates_per_call", datagen.candidates_per_call},
        {"generation_rounds", datagen.generation_rounds},
        {"embedder", datagen.embedder},
        {"threshold", datagen.threshold},
        {"validators", vals},
        {"expander", agent_json(datagen.expander)},
        {"k", datagen.k},
        {"max_rounds", datagen.max_rounds},
        {"annotator", agent_json(datagen.annotator)},
        {"question_generator", agent_json(datagen.question_generator)},
        {"inspection_fraction", datagen.inspection_fraction},
        {"template_dir", datagen.template_dir},
        {"workers", datagen.workers}}},
      {"prep",
       {{"split_fraction", prep.split_fraction}, {"group_key", sft::to_string(prep.group_key)}}},
      {"eval",
       {{"runs", eval.runs},
        {"averaging", eval::to_string(eval.averaging)},
        {"workers", eval.workers},
        {"inputs", inputs},
        {"deltas", deltas}}},
      {"probe",
       {{"archive", probe.archive},
        {"total_layers", probe.total_layers ? json(*probe.total_layers) : json(nullptr)},
        {"levels", levels},
        {"archs", archs},
        {"epochs", t.epochs},
        {"learning_rate", t.learning_rate},
        {"seed", t.seed},
        {"batch_size", t.batch_size},
        {"split_fraction", t.split_fraction},
        {"negative_ratio", t.negative_ratio},
        {"max_steps", t.max_steps},
        {"threshold", t.threshold},
        {"level_agg", to_string(probe.level_agg)},
        {"attention", probe.attention},
        {"train_attention", probe.train_attention},
        {"candidate_mode", probe::to_string(probe.candidate_mode)}}}};
}

std::string RunConfig::hash() const { return corpus::sha256_hex(to_json().dump()); }

RunConfig run_config_from_json(const json& j, const fs::path& base_dir) {
  RunConfig c;
  c.base_dir = base_dir;
  c.work_dir = base_dir / "work";
  Section top(j, "config");
  if (top.has("work_dir")) {
    const auto& w = top.raw("work_dir");
    if (!w.is_string()) throw ValidationError("config.work_dir: expected a string");
    c.work_dir = c.resolve(w.get<std::string>());
  }
  top.get("seed", c.seed);
  c.probe.train.seed = c.seed;

  if (top.has("cache")) {
    Section s(top.raw("cache"), "config.cache");
    s.get("dir", c.cache_dir);
    s.parse("mode", c.cache_mode, providers::parse_cache_mode);
  }
  if (top.has("providers")) {
    const auto& list = top.raw("providers");
    if (!list.is_array()) throw ValidationError("config.providers: expected a list");
    std::set<std::string> ids;
    for (std::size_t i = 0; i < list.size(); ++i) {
      std::string role;
      auto p = provider_from(list[i], "config.providers[" + std::to_string(i) + "]", role);
      if (!ids.insert(p.id).second) throw ValidationError("duplicate provider id " + p.id);
      (role == "chat" ? c.chat_providers : c.embedding_providers).push_back(std::move(p));
    }
  }
  if (top.has("datagen")) {
    Section s(top.raw("datagen"), "config.datagen");
    auto& d = c.datagen;
    d.generators = agents_from(s, "generators");
    s.get("candidates_per_call", d.candidates_per_call);
    s.get("generation_rounds", d.generation_rounds);
    s.get("embedder", d.embedder);
    s.get("threshold", d.threshold);
    d.validators = agents_from(s, "validators");
    if (s.has("expander")) d.expander = agent_from(s.raw("expander"), s.path("expander"));
    s.get("k", d.k);
    s.get("max_rounds", d.max_rounds);
    if (s.has("annotator")) d.annotator = agent_from(s.raw("annotator"), s.path("annotator"));
    if (s.has("question_generator")) {
      d.question_generator = agent_from(s.raw("question_generator"), s.path("question_generator"));
    }
    s.get("inspection_fraction", d.inspection_fraction);
    s.get("template_dir", d.template_dir);
    s.get("workers", d.workers);
    if (!(d.threshold >= 0.0)) throw ValidationError("config.datagen.threshold: must be >= 0");
    if (d.generation_rounds < 1 || d.max_rounds < 1) {
      throw ValidationError("config.datagen: rounds must be >= 1");
    }
    if (!(d.inspection_fraction >= 0.0 && d.inspection_fraction <= 1.0)) {
      throw ValidationError("config.datagen.inspection_fraction: must lie in [0, 1]");
    }
    if (d.workers == 0) throw ValidationError("config.datagen.workers: must be >= 1");
  }
  if (top.has("prep")) {
    Section s(top.raw("prep"), "config.prep");
    s.get("split_fraction", c.prep.split_fraction);
    s.parse("group_key", c.prep.group_key, sft::parse_group_key);
    if (!(c.prep.split_fraction > 0.0 && c.prep.split_fraction < 1.0)) {
      throw ValidationError("config.prep.split_fraction: must lie strictly between 0 and 1");
    }
  }
  if (top.has("eval")) {
    Section s(top.raw("eval"), "config.eval");
    auto& e = c.eval;
    s.get("runs", e.runs);
    s.parse("averaging", e.averaging, eval::parse_averaging);
    s.get("workers", e.workers);
    if (s.has("inputs")) {
      const auto& list = s.raw("inputs");
      if (!list.is_array()) throw ValidationError("config.eval.inputs: expected a list");
      for (std::size_t i = 0; i < list.size(); ++i) {
        Section in(list[i], "config.eval.inputs[" + std::to_string(i) + "]");
        EvalInput x;
        in.get("label", x.label);
        in.parse("set", x.set, eval::parse_set_name);
        in.get("completions", x.completions);
        if (x.label.empty() || x.completions.empty()) {
          throw ValidationError("config.eval.inputs[" + std::to_string(i) +
                                "]: label and completions are required");
        }
        e.inputs.push_back(x);
      }
    }
    if (s.has("deltas")) {
      const auto& list = s.raw("deltas");
      if (!list.is_array()) throw ValidationError("config.eval.deltas: expected a list");
      for (std::size_t i = 0; i < list.size(); ++i) {
        Section d(list[i], "config.eval.deltas[" + std::to_string(i) + "]");
        DeltaSpec x;
        d.get("baseline", x.baseline);
        d.get("adapted", x.adapted);
        d.parse("set", x.set, eval::parse_set_name);
        e.deltas.push_back(x);
      }
    }
    if (e.runs < 1) throw ValidationError("config.eval.runs: must be >= 1");
    if (e.workers == 0) throw ValidationError("config.eval.workers: must be >= 1");
  }
  if (top.has("probe")) {
    Section s(top.raw("probe"), "config.probe");
    auto& p = c.probe;
    s.get("archive", p.archive);
    if (s.has("total_layers")) p.total_layers = s.raw("total_layers").get<int>();
    if (s.has("levels")) {
      p.levels.clear();
      for (const auto& l : s.raw("levels")) p.levels.push_back(probe::parse_level_kind(l.get<std::string>()));
    }
    if (s.has("archs")) {
      p.archs.clear();
      for (const auto& a : s.raw("archs")) p.archs.push_back(probe::parse_arch(a.get<std::string>()));
    }
    s.get("epochs", p.train.epochs);
    s.get("learning_rate", p.train.learning_rate);
    s.get("seed", p.train.seed);
    s.get("batch_size", p.train.batch_size);
    s.get("split_fraction", p.train.split_fraction);
    s.get("negative_ratio", p.train.negative_ratio);
    s.get("max_steps", p.train.max_steps);
    s.get("threshold", p.train.threshold);
    s.parse("level_agg", p.level_agg, parse_level_agg);
    s.get("attention", p.attention);
    s.get("train_attention", p.train_attention);
    s.parse("candidate_mode", p.candidate_mode, probe::parse_candidate_mode);
    probe::validate(p.train);
  }
  return c;
}

RunConfig load_run_config(const fs::path& path) {
  if (!fs::exists(path)) throw ValidationError("config file " + path.string() + " not found");
  std::ifstream in(path);
  std::stringstream buf;
  buf << in.rdbuf();
  return run_config_from_json(yaml_to_json(buf.str()), fs::absolute(path).parent_path());
}

void validate(const RunConfig& c, const std::vector<std::string>& stages) {
  auto wants = [&](const std::string& stage) {
    return stages.empty() || std::find(stages.begin(), stages.end(), stage) != stages.end();
  };
  auto chat = [&](const datagen::ChatOptions& a, const std::string& role) {
    if (a.provider_id.empty()) throw ValidationError("config.datagen." + role + ": not set");
    const bool known = std::any_of(c.chat_providers.begin(), c.chat_providers.end(),
                                   [&](const auto& p) { return p.id == a.provider_id; });
    if (!known) {
      throw ValidationError("config.datagen." + role + ": unknown chat provider \"" +
                            a.provider_id + "\"");
    }
  };
  if (wants("generate")) {
    if (c.datagen.generators.empty()) throw ValidationError("config.datagen.generators: empty");
    for (const auto& a : c.datagen.generators) chat(a, "generators");
  }
  if (wants("filter")) {
    const bool known = std::any_of(c.embedding_providers.begin(), c.embedding_providers.end(),
                                   [&](const auto& p) { return p.id == c.datagen.embedder; });
    if (!known) {
      throw ValidationError("config.datagen.embedder: unknown embedding provider \"" +
                            c.datagen.embedder + "\"");
    }
  }
  if (wants("vote") || wants("expand")) {
    if (c.datagen.validators.empty()) throw ValidationError("config.datagen.validators: empty");
    for (const auto& a : c.datagen.validators) chat(a, "validators");
  }
  if (wants("expand")) chat(c.datagen.expander, "expander");
  if (wants("annotate")) chat(c.datagen.annotator, "annotator");
  if (wants("questions")) chat(c.datagen.question_generator, "question_generator");
  if (!c.datagen.template_dir.empty() && !fs::is_directory(c.resolve(c.datagen.template_dir))) {
    throw ValidationError("config.datagen.template_dir: " + c.datagen.template_dir +
                          " is not a directory");
  }
  if (wants("eval")) {
    if (c.eval.inputs.empty()) throw ValidationError("config.eval.inputs: empty");
    for (const auto& in : c.eval.inputs) {
      if (!fs::exists(c.resolve(in.completions))) {
        throw ValidationError("config.eval.inputs: " + in.completions + " not found");
      }
    }
    for (const auto& d : c.eval.deltas) {
      for (const auto& label : {d.baseline, d.adapted}) {
        const bool known = std::any_of(c.eval.inputs.begin(), c.eval.inputs.end(), [&](const auto& in) {
          return in.label == label && in.set == d.set;
        });
        if (!known) {
          throw ValidationError("config.eval.deltas: no " + eval::to_string(d.set) +
                                " input labeled \"" + label + "\"");
        }
      }
    }
  }
  if (wants("probe")) {
    if (c.probe.archive.empty()) throw ValidationError("config.probe.archive: not set");
    if (!fs::exists(c.resolve(c.probe.archive) / "manifest.json")) {
      throw ValidationError("config.probe.archive: no manifest.json under " + c.probe.archive);
    }
    if (c.probe.levels.empty() || c.probe.archs.empty()) {
      throw ValidationError("config.probe: levels and archs must be nonempty");
    }
  }
}

}  // namespace scog::report
