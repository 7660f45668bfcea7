#include "scog/eval/report.hpp"

#include <cstdio>
#include <set>
#include <sstream>

#include "scog/corpus/io.hpp"
#include "scog/error.hpp"
#include "scog/eval/metrics.hpp"
#include "scog/parallel.hpp"

namespace scog::eval {

using nlohmann::json;

std::string to_string(SetName set) { return set == SetName::memory ? "memory" : "understanding"; }

SetName parse_set_name(const std::string& name) {
  if (name == "memory") return SetName::memory;
  if (name == "understanding") return SetName::understanding;
  throw ValidationError("unknown set \"" + name + "\" (memory|understanding)");
}

std::string to_string(Averaging a) {
  return a == Averaging::items_then_runs ? "items-then-runs" : "pooled";
}

Averaging parse_averaging(const std::string& name) {
  if (name == "items-then-runs") return Averaging::items_then_runs;
  if (name == "pooled") return Averaging::pooled;
  throw ValidationError("unknown averaging \"" + name + "\" (items-then-runs|pooled)");
}

json to_json(const Completion& c) {
  return {{"id", c.id}, {"epoch", c.epoch}, {"run_index", c.run_index}, {"text", c.text}};
}

Completion completion_from_json(const json& j) {
  try {
    return Completion{j.at("id").get<std::string>(), j.at("epoch").get<int>(),
                      j.at("run_index").get<int>(), j.at("text").get<std::string>()};
  } catch (const json::exception& e) {
    throw ValidationError(std::string("Completion: ") + e.what());
  }
}

std::vector<Completion> read_completions(const std::filesystem::path& path) {
  std::vector<Completion> out;
  std::istringstream in(corpus::read_file(path));
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (corpus::trim(line).empty()) continue;
    try {
      out.push_back(completion_from_json(json::parse(line)));
    } catch (const std::exception& e) {
      throw ValidationError(path.string() + ":" + std::to_string(n) + ": " + e.what());
    }
  }
  return out;
}

void write_completions(const std::filesystem::path& path, const std::vector<Completion>& cs) {
  std::string body;
  for (const auto& c : cs) body += to_json(c).dump() + "\n";
  corpus::write_file_atomic(path, body);
}

const std::vector<std::string>& metric_names() {
  static const std::vector<std::string> names{"em", "bleu1", "bleu4", "rouge1", "rouge2", "rougeL"};
  return names;
}

double MetricReport::metric(const std::string& name) const {
  if (name == "em") return em;
  if (name == "bleu1") return bleu1;
  if (name == "bleu4") return bleu4;
  if (name == "rouge1") return rouge1;
  if (name == "rouge2") return rouge2;
  if (name == "rougeL") return rougeL;
  throw ValidationError("unknown metric \"" + name + "\"");
}

void MetricReport::set_metric(const std::string& name, double value) {
  if (name == "em") em = value;
  else if (name == "bleu1") bleu1 = value;
  else if (name == "bleu4") bleu4 = value;
  else if (name == "rouge1") rouge1 = value;
  else if (name == "rouge2") rouge2 = value;
  else if (name == "rougeL") rougeL = value;
  else throw ValidationError("unknown metric \"" + name + "\"");
}

json to_json(const MetricReport& r) {
  json j{{"label", r.label},       {"set", to_string(r.set)},     {"epoch", r.epoch},
         {"n_items", r.n_items},   {"n_runs", r.n_runs},          {"averaging", to_string(r.averaging)}};
  for (const auto& m : metric_names()) j[m] = r.metric(m);
  return j;
}

MetricReport metric_report_from_json(const json& j) {
  if (!j.is_object()) {
    throw ValidationError("MetricReport: expected one report object, got " + std::string(j.type_name()));
  }
  try {
    MetricReport r;
    r.label = j.value("label", "");
    r.set = parse_set_name(j.at("set").get<std::string>());
    r.epoch = j.at("epoch").get<int>();
    r.n_items = j.value("n_items", std::size_t{0});
    r.n_runs = j.value("n_runs", std::size_t{0});
    r.averaging = parse_averaging(j.value("averaging", "items-then-runs"));
    for (const auto& m : metric_names()) {
      const double v = j.at(m).get<double>();
      if (!(v >= 0.0 && v <= 1.0)) {
        throw ValidationError("MetricReport." + m + ": outside [0, 1]");
      }
      r.set_metric(m, v);
    }
    return r;
  } catch (const json::exception& e) {
    throw ValidationError(std::string("MetricReport: ") + e.what());
  }
}

MetricReport evaluate_set(const std::vector<Completion>& completions,
                          const std::map<std::string, std::string>& gold, SetName set, int epoch,
                          const EvalOptions& options) {
  if (options.expected_runs < 1) {
    throw ValidationError("expected run count must be positive");
  }
  // run -> id -> completion index
  std::map<int, std::map<std::string, std::size_t>> runs;
  std::set<std::string> ids;
  for (std::size_t i = 0; i < completions.size(); ++i) {
    const auto& c = completions[i];
    if (c.epoch != epoch) continue;
    if (c.run_index < 1 || c.run_index > options.expected_runs) {
      throw ValidationError("completion " + c.id + ": run_index " + std::to_string(c.run_index) +
                            " outside 1.." + std::to_string(options.expected_runs));
    }
    if (!gold.count(c.id)) {
      throw ValidationError("completion id " + c.id + " has no gold reference");
    }
    if (!runs[c.run_index].emplace(c.id, i).second) {
      throw ValidationError("duplicate completion for " + c.id + " in run " +
                            std::to_string(c.run_index));
    }
    ids.insert(c.id);
  }
  if (ids.empty()) {
    throw ValidationError("no completions for epoch " + std::to_string(epoch));
  }
  std::string missing;
  for (int r = 1; r <= options.expected_runs; ++r) {
    if (!runs.count(r) || runs[r].size() != ids.size()) {
      missing += (missing.empty() ? "" : ", ") + std::to_string(r);
    }
  }
  if (!missing.empty()) {
    throw ValidationError("epoch " + std::to_string(epoch) + ": runs missing or incomplete: " +
                          missing);
  }

  // Flattened (run, item) jobs in a fixed order; reduction below is sequential.
  std::vector<std::size_t> jobs;
  for (const auto& [r, items] : runs) {
    for (const auto& [id, idx] : items) jobs.push_back(idx);
  }
  const auto scores = ordered_parallel_map(jobs.size(), options.workers, [&](std::size_t k) {
    const auto& c = completions[jobs[k]];
    return score_item(c.text, gold.at(c.id));
  });

  MetricReport report;
  report.set = set;
  report.epoch = epoch;
  report.n_items = ids.size();
  report.n_runs = runs.size();
  report.averaging = options.averaging;
  auto get = [](const ItemScores& s, const std::string& m) {
    if (m == "em") return s.em;
    if (m == "bleu1") return s.bleu1;
    if (m == "bleu4") return s.bleu4;
    if (m == "rouge1") return s.rouge1;
    if (m == "rouge2") return s.rouge2;
    return s.rougeL;
  };
  const double n_items = static_cast<double>(ids.size());
  for (const auto& m : metric_names()) {
    double total = 0.0;
    if (options.averaging == Averaging::items_then_runs) {
      for (std::size_t r = 0; r < runs.size(); ++r) {
        double run_sum = 0.0;
        for (std::size_t i = 0; i < ids.size(); ++i) run_sum += get(scores[r * ids.size() + i], m);
        total += run_sum / n_items;
      }
      report.set_metric(m, total / static_cast<double>(runs.size()));
    } else {
      for (const auto& s : scores) total += get(s, m);
      report.set_metric(m, total / static_cast<double>(scores.size()));
    }
  }
  return report;
}

std::vector<TrendRow> trend_table(const std::vector<MetricReport>& reports) {
  if (reports.empty()) {
    throw ValidationError("trend table needs at least one report");
  }
  std::set<SetName> sets;
  std::map<int, std::map<SetName, MetricReport>> by_epoch;
  for (const auto& r : reports) {
    sets.insert(r.set);
    if (!by_epoch[r.epoch].emplace(r.set, r).second) {
      throw ValidationError("duplicate report for set " + to_string(r.set) + " at epoch " +
                            std::to_string(r.epoch));
    }
  }
  std::vector<TrendRow> rows;
  for (const auto& [epoch, cells] : by_epoch) {
    TrendRow row;
    row.epoch = epoch;
    for (SetName s : sets) {
      auto it = cells.find(s);
      row.cells[s] = it == cells.end() ? std::nullopt : std::optional<MetricReport>(it->second);
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

DeltaReport delta_report(const MetricReport& baseline, const MetricReport& adapted) {
  if (baseline.set != adapted.set) {
    throw ValidationError("delta between different sets (" + to_string(baseline.set) + " vs " +
                          to_string(adapted.set) + ")");
  }
  DeltaReport d{baseline, adapted, {}};
  for (const auto& m : metric_names()) d.deltas[m] = adapted.metric(m) - baseline.metric(m);
  return d;
}

json to_json(const std::vector<TrendRow>& rows) {
  json out = json::array();
  for (const auto& row : rows) {
    json cells = json::object();
    for (const auto& [set, cell] : row.cells) {
      if (cell) {
        json c = json::object();
        for (const auto& m : metric_names()) c[m] = cell->metric(m);
        c["gap"] = false;
        cells[to_string(set)] = c;
      } else {
        cells[to_string(set)] = {{"gap", true}};
      }
    }
    out.push_back({{"epoch", row.epoch}, {"sets", cells}});
  }
  return out;
}

json to_json(const DeltaReport& d) {
  return {{"baseline", to_json(d.baseline)}, {"adapted", to_json(d.adapted)}, {"deltas", d.deltas}};
}

std::string format_metric(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

std::string reports_csv(const std::vector<MetricReport>& reports) {
  std::string out = "label,set,epoch";
  for (const auto& m : metric_names()) out += "," + m;
  out += ",n_items,n_runs\n";
  for (const auto& r : reports) {
    out += r.label + "," + to_string(r.set) + "," + std::to_string(r.epoch);
    for (const auto& m : metric_names()) out += "," + format_metric(r.metric(m));
    out += "," + std::to_string(r.n_items) + "," + std::to_string(r.n_runs) + "\n";
  }
  return out;
}

std::string trend_csv(const std::vector<TrendRow>& rows) {
  std::string out = "epoch";
  const auto& sets = rows.front().cells;
  for (const auto& [set, cell] : sets) {
    for (const auto& m : metric_names()) out += "," + to_string(set) + "_" + m;
  }
  out += "\n";
  for (const auto& row : rows) {
    out += std::to_string(row.epoch);
    for (const auto& [set, cell] : row.cells) {
      for (const auto& m : metric_names()) {
        out += "," + (cell ? format_metric(cell->metric(m)) : std::string("NA"));
      }
    }
    out += "\n";
  }
  return out;
}

std::string delta_csv(const std::vector<DeltaReport>& deltas) {
  std::string out = "label,set";
  for (const auto& m : metric_names()) {
    out += ",baseline_" + m + ",adapted_" + m + ",delta_" + m;
  }
  out += "\n";
  for (const auto& d : deltas) {
    out += d.adapted.label + "," + to_string(d.adapted.set);
    for (const auto& m : metric_names()) {
      out += "," + format_metric(d.baseline.metric(m)) + "," + format_metric(d.adapted.metric(m)) +
             "," + format_metric(d.deltas.at(m));
    }
    out += "\n";
  }
  return out;
}

}  // namespace scog::eval
