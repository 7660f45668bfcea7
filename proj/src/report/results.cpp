#include "scog/report/results.hpp"

#include "scog/error.hpp"

namespace scog::report {

using nlohmann::json;

json to_json(const ProbeResults& r) {
  json levels = json::array();
  for (const auto& l : r.levels) {
    json archs = json::object();
    for (const auto& [arch, a] : l.archs) {
      json history = json::array(), per_layer = json::array();
      for (const auto& e : a.history) history.push_back(probe::to_json(e));
      for (const auto& m : a.per_layer) per_layer.push_back(probe::to_json(m));
      archs[probe::to_string(arch)] = {
          {"heldout", probe::to_json(a.heldout)}, {"history", history}, {"per_layer", per_layer}};
    }
    levels.push_back({{"kind", probe::to_string(l.level.kind)},
                      {"layer_ids", l.level.layer_ids},
                      {"overlap", l.overlap},
                      {"balance", probe::to_json(l.balance)},
                      {"archs", archs},
                      {"attention", l.attention ? probe::to_json(*l.attention) : json(nullptr)}});
  }
  return {{"total_layers", r.total_layers}, {"level_agg", r.level_agg}, {"levels", levels}};
}

ProbeResults probe_results_from_json(const json& j) {
  try {
    ProbeResults r;
    r.total_layers = j.at("total_layers").get<int>();
    r.level_agg = j.at("level_agg").get<std::string>();
    for (const auto& lj : j.at("levels")) {
      LevelResult l;
      l.level.kind = probe::parse_level_kind(lj.at("kind").get<std::string>());
      l.level.layer_ids = lj.at("layer_ids").get<std::array<int, 3>>();
      l.overlap = lj.at("overlap").get<bool>();
      l.balance = probe::balance_report_from_json(lj.at("balance"));
      for (const auto& [name, aj] : lj.at("archs").items()) {
        ArchResult a;
        a.heldout = probe::probe_metrics_from_json(aj.at("heldout"));
        for (const auto& e : aj.at("history")) {
          probe::EpochStats s;
          s.epoch = e.at("epoch").get<int>();
          s.steps = e.at("steps").get<std::size_t>();
          s.train_loss = e.at("train_loss").get<double>();
          s.heldout = probe::probe_metrics_from_json(e.at("heldout"));
          s.heldout_accuracy = e.at("heldout_accuracy").get<double>();
          a.history.push_back(s);
        }
        for (const auto& m : aj.at("per_layer")) a.per_layer.push_back(probe::probe_metrics_from_json(m));
        l.archs[probe::parse_arch(name)] = a;
      }
      if (!lj.at("attention").is_null()) {
        l.attention = probe::attention_summary_from_json(lj.at("attention"));
      }
      r.levels.push_back(l);
    }
    return r;
  } catch (const json::exception& e) {
    throw ValidationError(std::string("probe results: ") + e.what());
  }
}

}  // namespace scog::report
