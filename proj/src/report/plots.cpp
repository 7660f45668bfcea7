#include "scog/report/plots.hpp"

#include <cctype>
#include <cstdio>
#include <map>
#include <sstream>

#include "scog/corpus/io.hpp"
#include "scog/error.hpp"

namespace scog::report {

using nlohmann::json;
namespace fs = std::filesystem;

void validate(const PlotSeries& s) {
  if (s.x.size() != s.y.size()) {
    throw ValidationError("series " + s.name + ": |x| = " + std::to_string(s.x.size()) +
                          " but |y| = " + std::to_string(s.y.size()));
  }
  if (s.err_min.has_value() != s.err_max.has_value()) {
    throw ValidationError("series " + s.name + ": error bars need both min and max");
  }
  if (!s.err_min) return;
  if (s.err_min->size() != s.y.size() || s.err_max->size() != s.y.size()) {
    throw ValidationError("series " + s.name + ": error bar length differs from y");
  }
  for (std::size_t i = 0; i < s.y.size(); ++i) {
    if (!((*s.err_min)[i] <= s.y[i] && s.y[i] <= (*s.err_max)[i])) {
      throw ValidationError("series " + s.name + ": error bar does not bracket y at " + s.x[i]);
    }
  }
}

json to_json(const PlotSeries& s) {
  json j{{"name", s.name}, {"x", s.x}, {"y", s.y}};
  if (s.err_min) {
    j["err_min"] = *s.err_min;
    j["err_max"] = *s.err_max;
  }
  return j;
}

json to_json(const Chart& c) {
  json series = json::array();
  for (const auto& s : c.series) series.push_back(to_json(s));
  return {{"id", c.id},           {"kind", c.kind},       {"title", c.title},
          {"x_label", c.x_label}, {"y_label", c.y_label}, {"series", series}};
}

std::string chart_csv(const Chart& c) {
  std::string out = "series,x,y,err_min,err_max\n";
  for (const auto& s : c.series) {
    for (std::size_t i = 0; i < s.y.size(); ++i) {
      out += s.name + "," + s.x[i] + "," + eval::format_metric(s.y[i]) + ",";
      if (s.err_min) {
        out += eval::format_metric((*s.err_min)[i]) + "," + eval::format_metric((*s.err_max)[i]);
      } else {
        out += ",";
      }
      out += "\n";
    }
  }
  return out;
}

namespace {

std::string safe_name(const std::string& s) {
  std::string out;
  for (char ch : s) {
    const bool ok = std::isalnum(static_cast<unsigned char>(ch)) || ch == '-' || ch == '.' || ch == '_';
    out += ok ? ch : '_';
  }
  return out.empty() ? "_" : out;
}

void add_checked(Chart& c, PlotSeries s) {
  validate(s);
  c.series.push_back(std::move(s));
}

std::map<std::string, std::vector<eval::MetricReport>> by_label(
    const std::vector<eval::MetricReport>& reports) {
  std::map<std::string, std::vector<eval::MetricReport>> out;
  for (const auto& r : reports) out[r.label].push_back(r);
  return out;
}

std::string pad(const std::string& s, std::size_t width) {
  return s.size() >= width ? s : s + std::string(width - s.size(), ' ');
}

std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::string layers_text(const probe::LayerLevel& l) {
  return std::to_string(l.layer_ids[0]) + "-" + std::to_string(l.layer_ids[1]) + "-" +
         std::to_string(l.layer_ids[2]);
}

}  // namespace

std::vector<Chart> trend_charts(const std::vector<eval::TrendRow>& rows, const std::string& label) {
  std::vector<Chart> out;
  for (eval::SetName set : {eval::SetName::memory, eval::SetName::understanding}) {
    Chart c{"trend_" + safe_name(label) + "_" + eval::to_string(set), "line",
            label + " " + eval::to_string(set) + " set", "epoch", "score", {}};
    for (const auto& metric : eval::metric_names()) {
      PlotSeries s{metric, {}, {}, std::nullopt, std::nullopt};
      for (const auto& row : rows) {
        const auto it = row.cells.find(set);
        if (it == row.cells.end() || !it->second) continue;
        s.x.push_back(std::to_string(row.epoch));
        s.y.push_back(it->second->metric(metric));
      }
      if (!s.y.empty()) add_checked(c, std::move(s));
    }
    if (!c.series.empty()) out.push_back(std::move(c));
  }
  return out;
}

Chart probe_chart(const ProbeResults& results, probe::Arch arch) {
  Chart c{"probe_" + probe::to_string(arch), "bar", probe::to_string(arch) + " probe", "level",
          "score", {}};
  PlotSeries p{"precision", {}, {}, {}, {}}, r{"recall", {}, {}, {}, {}}, f{"f1", {}, {}, {}, {}},
      base{"baseline", {}, {}, {}, {}};
  for (const auto& l : results.levels) {
    const auto it = l.archs.find(arch);
    if (it == l.archs.end()) continue;
    const auto x = probe::to_string(l.level.kind);
    for (auto* s : {&p, &r, &f, &base}) s->x.push_back(x);
    p.y.push_back(it->second.heldout.precision);
    r.y.push_back(it->second.heldout.recall);
    f.y.push_back(it->second.heldout.f1);
    base.y.push_back(0.5);
  }
  if (p.y.empty()) {
    throw ValidationError("no probe results for architecture " + probe::to_string(arch));
  }
  for (auto* s : {&p, &r, &f, &base}) add_checked(c, std::move(*s));
  return c;
}

std::optional<Chart> attention_chart(const ProbeResults& results) {
  Chart c{"attention", "bar", "attention scores", "level", "attention", {}};
  PlotSeries t{"target", {}, {}, std::vector<double>{}, std::vector<double>{}};
  PlotSeries n{"non_target", {}, {}, std::vector<double>{}, std::vector<double>{}};
  for (const auto& l : results.levels) {
    if (!l.attention) continue;
    const auto x = probe::to_string(l.level.kind);
    for (auto [s, g] : {std::pair{&t, &l.attention->target}, std::pair{&n, &l.attention->non_target}}) {
      s->x.push_back(x);
      s->y.push_back(g->avg);
      s->err_min->push_back(g->min);
      s->err_max->push_back(g->max);
    }
  }
  if (t.y.empty()) return std::nullopt;
  add_checked(c, std::move(t));
  add_checked(c, std::move(n));
  return c;
}

std::string to_string(ReportFormat f) {
  switch (f) {
    case ReportFormat::table: return "table";
    case ReportFormat::csv: return "csv";
    case ReportFormat::plot_data: return "plot-data";
  }
  return "table";
}

ReportFormat parse_report_format(const std::string& name) {
  for (auto f : {ReportFormat::table, ReportFormat::csv, ReportFormat::plot_data}) {
    if (to_string(f) == name) return f;
  }
  throw ValidationError("unknown report format \"" + name + "\" (table|csv|plot-data)");
}

std::set<ReportFormat> parse_report_formats(const std::string& list) {
  std::set<ReportFormat> out;
  std::stringstream ss(list);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.insert(parse_report_format(item));
  }
  if (out.empty()) throw ValidationError("no report formats given");
  return out;
}

std::string report_table(const ReportInputs& in) {
  std::string out;
  if (!in.reports.empty()) {
    out += pad("label", 24) + pad("set", 15) + pad("epoch", 7);
    for (const auto& m : eval::metric_names()) out += pad(m, 9);
    out += "items  runs\n";
    for (const auto& r : in.reports) {
      out += pad(r.label, 24) + pad(eval::to_string(r.set), 15) + pad(std::to_string(r.epoch), 7);
      for (const auto& m : eval::metric_names()) out += pad(fixed(r.metric(m), 4), 9);
      out += pad(std::to_string(r.n_items), 7) + std::to_string(r.n_runs) + "\n";
    }
  }
  for (const auto& d : in.deltas) {
    out += "\ndelta " + d.adapted.label + " vs " + d.baseline.label + " (" +
           eval::to_string(d.adapted.set) + ")\n";
    for (const auto& m : eval::metric_names()) {
      const double delta = d.deltas.at(m);
      out += pad(m, 9) + pad(fixed(d.baseline.metric(m), 4), 9) + pad(fixed(d.adapted.metric(m), 4), 9) +
             (delta >= 0 ? "+" : "") + fixed(delta, 4) + "\n";
    }
  }
  if (in.probe) {
    out += "\nprobes (l = " + std::to_string(in.probe->total_layers) + ", " + in.probe->level_agg +
           ")\n";
    out += pad("level", 7) + pad("layers", 10) + pad("arch", 10) + pad("precision", 11) +
           pad("recall", 9) + pad("f1", 9) + "accuracy\n";
    for (const auto& l : in.probe->levels) {
      for (const auto& [arch, a] : l.archs) {
        out += pad(probe::to_string(l.level.kind), 7) + pad(layers_text(l.level), 10) +
               pad(probe::to_string(arch), 10) + pad(fixed(a.heldout.precision, 4), 11) +
               pad(fixed(a.heldout.recall, 4), 9) + pad(fixed(a.heldout.f1, 4), 9) +
               fixed(a.heldout.accuracy, 4) + "\n";
      }
      if (l.attention) {
        out += pad(probe::to_string(l.level.kind), 7) + "attention target avg " +
               fixed(l.attention->target.avg, 4) + " non-target avg " +
               fixed(l.attention->non_target.avg, 4) + "\n";
      }
    }
  }
  return out;
}

std::vector<fs::path> emit_report(const ReportInputs& in, const std::set<ReportFormat>& formats,
                                  const fs::path& out_dir) {
  if (in.reports.empty() && in.deltas.empty() && !in.probe) {
    throw ValidationError("nothing to report: no metric reports, deltas or probe results");
  }
  fs::create_directories(out_dir);
  std::vector<fs::path> written;
  auto write = [&](const std::string& name, const std::string& content) {
    corpus::write_file_atomic(out_dir / name, content);
    written.push_back(out_dir / name);
  };
  const auto labels = by_label(in.reports);

  if (formats.count(ReportFormat::table)) write("report.txt", report_table(in));
  if (formats.count(ReportFormat::csv)) {
    if (!in.reports.empty()) {
      write("reports.csv", eval::reports_csv(in.reports));
      for (const auto& [label, rs] : labels) {
        write("trend_" + safe_name(label) + ".csv", eval::trend_csv(eval::trend_table(rs)));
      }
    }
    if (!in.deltas.empty()) write("delta.csv", eval::delta_csv(in.deltas));
    if (in.probe) {
      std::string csv = "level,layer_ids,arch,precision,recall,f1,accuracy,tp,fp,tn,fn\n";
      std::string att = "level,group,avg,max,min,count\n";
      for (const auto& l : in.probe->levels) {
        for (const auto& [arch, a] : l.archs) {
          const auto& m = a.heldout;
          csv += probe::to_string(l.level.kind) + "," + layers_text(l.level) + "," +
                 probe::to_string(arch) + "," + eval::format_metric(m.precision) + "," +
                 eval::format_metric(m.recall) + "," + eval::format_metric(m.f1) + "," +
                 eval::format_metric(m.accuracy) + "," + std::to_string(m.tp) + "," +
                 std::to_string(m.fp) + "," + std::to_string(m.tn) + "," + std::to_string(m.fn) +
                 "\n";
        }
        if (l.attention) {
          for (auto [name, g] : {std::pair{"target", &l.attention->target},
                                 std::pair{"non_target", &l.attention->non_target}}) {
            att += probe::to_string(l.level.kind) + "," + name + "," + eval::format_metric(g->avg) +
                   "," + eval::format_metric(g->max) + "," + eval::format_metric(g->min) + "," +
                   std::to_string(g->count) + "\n";
          }
        }
      }
      write("probe.csv", csv);
      write("attention.csv", att);
    }
  }
  if (formats.count(ReportFormat::plot_data)) {
    std::vector<Chart> charts;
    for (const auto& [label, rs] : labels) {
      for (auto& c : trend_charts(eval::trend_table(rs), label)) charts.push_back(std::move(c));
    }
    if (in.probe) {
      std::set<probe::Arch> archs;
      for (const auto& l : in.probe->levels) {
        for (const auto& [arch, _] : l.archs) archs.insert(arch);
      }
      for (auto arch : archs) charts.push_back(probe_chart(*in.probe, arch));
      if (auto c = attention_chart(*in.probe)) charts.push_back(std::move(*c));
    }
    json all = json::array();
    for (const auto& c : charts) {
      all.push_back(to_json(c));
      write(c.id + ".csv", chart_csv(c));
    }
    write("plots.json", json{{"charts", all}}.dump(2) + "\n");
  }
  return written;
}

}  // namespace scog::report
