#include "scog/probe/pairs.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "scog/error.hpp"
#include "scog/random.hpp"

namespace scog::probe {

std::string to_string(LevelKind kind) {
  switch (kind) {
    case LevelKind::head: return "head";
    case LevelKind::mid: return "mid";
    case LevelKind::tail: return "tail";
  }
  return "head";
}

LevelKind parse_level_kind(const std::string& name) {
  if (name == "head") return LevelKind::head;
  if (name == "mid") return LevelKind::mid;
  if (name == "tail") return LevelKind::tail;
  throw ValidationError("unknown level \"" + name + "\" (head|mid|tail)");
}

const LayerLevel& LayerLevels::get(LevelKind kind) const {
  return kind == LevelKind::head ? head : kind == LevelKind::mid ? mid : tail;
}

LayerLevels layer_levels(int l) {
  if (l < 6) {
    throw ValidationError("layer levels need at least 6 layers, got " + std::to_string(l));
  }
  const int h = l / 2;
  LayerLevels out;
  out.head = {LevelKind::head, {1, 2, 3}};
  out.mid = {LevelKind::mid, {h - 1, h, h + 1}};
  out.tail = {LevelKind::tail, {l - 2, l - 1, l}};
  out.overlap = out.mid.layer_ids.front() <= 3 || out.mid.layer_ids.back() >= l - 2;
  return out;
}

namespace {

// Pooled representations for one sample, with its layer matrices loaded once.
class SampleView {
 public:
  SampleView(const HiddenArchive& archive, const std::string& sample_id,
             const std::vector<int>& layer_ids)
      : meta_(archive.sample(sample_id)), sample_id_(sample_id) {
    if (layer_ids.empty()) throw ValidationError("no layers selected");
    for (int layer : layer_ids) layers_.push_back(archive.layer(sample_id, layer));
  }

  const SampleMeta& meta() const { return meta_; }

  Vector pool(const TokenRange& r) const {
    if (r.size() == 0 || r.begin >= r.end) {
      throw ValidationError("empty token span in sample " + sample_id_);
    }
    if (r.end > meta_.n_tokens) {
      throw ValidationError("token span [" + std::to_string(r.begin) + ", " +
                            std::to_string(r.end) + ") outside the " +
                            std::to_string(meta_.n_tokens) + " tokens of sample " + sample_id_);
    }
    Vector acc = Vector::Zero(static_cast<Eigen::Index>(meta_.dim));
    for (const auto& m : layers_) {
      acc += m.middleRows(static_cast<Eigen::Index>(r.begin), static_cast<Eigen::Index>(r.size()))
                 .colwise()
                 .mean()
                 .transpose();
    }
    Vector out = acc / static_cast<double>(layers_.size());
    if (!out.allFinite()) {
      throw ValidationError("non-finite hidden state in sample " + sample_id_);
    }
    return out;
  }

 private:
  const SampleMeta& meta_;
  std::string sample_id_;
  std::vector<Matrix> layers_;
};

struct Located {
  TokenRange element;
  TokenRange argument;
};

std::vector<Located> locate(const ProbeSample& s, const SampleMeta& meta) {
  std::vector<Located> out;
  for (const auto& p : s.pairs) {
    out.push_back({tokens_for_span(meta, p.element_span), tokens_for_span(meta, p.argument_span)});
  }
  return out;
}

std::vector<int> to_vector(const LayerLevel& level) {
  return std::vector<int>(level.layer_ids.begin(), level.layer_ids.end());
}

}  // namespace

Vector level_representation(const HiddenArchive& archive, const std::string& sample_id,
                            const TokenRange& range, const std::vector<int>& layer_ids) {
  return SampleView(archive, sample_id, layer_ids).pool(range);
}

Vector level_representation(const HiddenArchive& archive, const std::string& sample_id,
                            const TokenRange& range, const LayerLevel& level) {
  return level_representation(archive, sample_id, range, to_vector(level));
}

std::vector<ProbeSample> probe_samples(const HiddenArchive& archive,
                                       const std::vector<corpus::ScenarioAnnotation>& annotations,
                                       const std::vector<corpus::KnowledgeDescription>& descriptions,
                                       std::vector<SkippedSample>* skipped) {
  std::map<std::string, const corpus::ScenarioAnnotation*> by_knowledge;
  for (const auto& a : annotations) by_knowledge[a.knowledge_id] = &a;
  std::map<std::string, std::string> parent;
  for (const auto& d : descriptions) parent[d.id] = d.knowledge_id;

  std::vector<ProbeSample> out;
  auto skip = [&](const std::string& id, std::string reason) {
    if (skipped) skipped->push_back({id, std::move(reason)});
  };
  for (const auto& [id, meta] : archive.samples()) {
    std::string knowledge = id;
    if (!by_knowledge.count(id)) {
      auto it = parent.find(id);
      if (it == parent.end() || !by_knowledge.count(it->second)) {
        skip(id, "no annotation for this sample");
        continue;
      }
      knowledge = it->second;
    }
    ProbeSample s{id, {}};
    try {
      for (auto p : by_knowledge.at(knowledge)->pairs) {
        auto fits = [&](const corpus::Span& sp, const std::string& surface) {
          return sp.char_end <= corpus::utf8::length(meta.text) &&
                 corpus::slice(meta.text, sp) == surface;
        };
        if (!fits(p.element_span, p.element_text)) {
          p.element_span = corpus::resolve_span(meta.text, p.element_text);
        }
        if (!fits(p.argument_span, p.argument_text)) {
          p.argument_span = corpus::resolve_span(meta.text, p.argument_text);
        }
        s.pairs.push_back(std::move(p));
      }
    } catch (const ValidationError& e) {
      skip(id, e.what());
      continue;
    }
    out.push_back(std::move(s));
  }
  return out;
}

PairSet build_pairs(const std::vector<ProbeSample>& samples, const HiddenArchive& archive,
                    const std::vector<int>& layer_ids, double negative_ratio, std::uint64_t seed) {
  if (!(negative_ratio > 0.0) || !std::isfinite(negative_ratio)) {
    throw ValidationError("negative ratio must be positive");
  }
  struct Usable {
    const ProbeSample* sample;
    std::vector<Located> spans;
  };
  PairSet out;
  std::vector<Usable> usable;
  for (const auto& s : samples) {
    try {
      usable.push_back({&s, locate(s, archive.sample(s.sample_id))});
    } catch (const ValidationError& e) {
      out.balance.skipped.push_back({s.sample_id, e.what()});
    }
  }

  std::size_t positives = 0, candidates = 0;
  for (const auto& u : usable) {
    const std::size_t m = u.spans.size();
    positives += m;
    candidates += m * m - m;
  }
  const auto target = static_cast<std::size_t>(std::llround(negative_ratio * static_cast<double>(positives)));
  std::vector<bool> keep(candidates, true);
  if (target < candidates) {
    std::vector<std::size_t> order(candidates);
    for (std::size_t k = 0; k < candidates; ++k) order[k] = k;
    std::mt19937_64 rng(seed);
    seeded_shuffle(order, rng);
    std::fill(keep.begin(), keep.end(), false);
    for (std::size_t k = 0; k < target; ++k) keep[order[k]] = true;
  }

  std::size_t neg_index = 0;
  for (const auto& u : usable) {
    SampleView view(archive, u.sample->sample_id, layer_ids);
    std::vector<Vector> elements, arguments;
    for (const auto& loc : u.spans) {
      elements.push_back(view.pool(loc.element));
      arguments.push_back(view.pool(loc.argument));
    }
    const int m = static_cast<int>(u.spans.size());
    for (int i = 0; i < m; ++i) {
      for (int j = 0; j < m; ++j) {
        if (i != j && !keep[neg_index++]) continue;
        out.pairs.push_back({u.sample->sample_id, i, j, elements[static_cast<std::size_t>(i)],
                             arguments[static_cast<std::size_t>(j)], i == j ? 1 : 0});
      }
    }
  }
  auto& b = out.balance;
  b.samples_used = usable.size();
  b.positives = positives;
  b.candidate_negatives = candidates;
  b.negatives = out.pairs.size() - positives;
  b.positive_fraction =
      out.pairs.empty() ? 0.0 : static_cast<double>(positives) / static_cast<double>(out.pairs.size());
  return out;
}

std::string to_string(CandidateMode mode) {
  return mode == CandidateMode::arguments ? "arguments" : "tokens";
}

CandidateMode parse_candidate_mode(const std::string& name) {
  if (name == "arguments") return CandidateMode::arguments;
  if (name == "tokens") return CandidateMode::tokens;
  throw ValidationError("unknown candidate mode \"" + name + "\" (arguments|tokens)");
}

std::vector<AttentionExample> build_attention_examples(const std::vector<ProbeSample>& samples,
                                                       const HiddenArchive& archive,
                                                       const std::vector<int>& layer_ids,
                                                       CandidateMode mode,
                                                       BalanceReport* report) {
  std::vector<AttentionExample> out;
  for (const auto& s : samples) {
    std::vector<Located> spans;
    try {
      spans = locate(s, archive.sample(s.sample_id));
    } catch (const ValidationError& e) {
      if (report) report->skipped.push_back({s.sample_id, e.what()});
      continue;
    }
    SampleView view(archive, s.sample_id, layer_ids);
    std::vector<Vector> arguments;
    for (const auto& loc : spans) arguments.push_back(view.pool(loc.argument));
    for (std::size_t i = 0; i < spans.size(); ++i) {
      AttentionExample ex;
      ex.sample_id = s.sample_id;
      ex.element_index = static_cast<int>(i);
      ex.h_e = view.pool(spans[i].element);
      if (mode == CandidateMode::arguments) {
        ex.candidates = arguments;
        ex.target = static_cast<int>(i);
      } else {
        ex.candidates.push_back(arguments[i]);
        ex.target = 0;
        const auto& e = spans[i].element;
        const auto& a = spans[i].argument;
        for (std::size_t t = 0; t < view.meta().n_tokens; ++t) {
          const bool inside = (t >= e.begin && t < e.end) || (t >= a.begin && t < a.end);
          if (!inside) ex.candidates.push_back(view.pool({t, t + 1}));
        }
      }
      out.push_back(std::move(ex));
    }
  }
  return out;
}

}  // namespace scog::probe

namespace scog::probe {

namespace {

nlohmann::json vector_json(const Vector& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

Vector vector_from(const nlohmann::json& j) {
  const auto xs = j.get<std::vector<double>>();
  return Eigen::Map<const Vector>(xs.data(), static_cast<Eigen::Index>(xs.size()));
}

}  // namespace

nlohmann::json to_json(const PairExample& p) {
  return {{"sample_id", p.sample_id},       {"element_index", p.element_index},
          {"argument_index", p.argument_index}, {"label", p.label},
          {"h_e", vector_json(p.h_e)},      {"h_a", vector_json(p.h_a)}};
}

PairExample pair_example_from_json(const nlohmann::json& j) {
  try {
    PairExample p{j.at("sample_id").get<std::string>(), j.at("element_index").get<int>(),
                  j.at("argument_index").get<int>(), vector_from(j.at("h_e")),
                  vector_from(j.at("h_a")), j.at("label").get<int>()};
    if (p.h_e.size() != p.h_a.size() || p.h_e.size() == 0) {
      throw ValidationError("pair " + p.sample_id + ": h_e and h_a dims differ or are empty");
    }
    if (p.label != (p.element_index == p.argument_index ? 1 : 0)) {
      throw ValidationError("pair " + p.sample_id + ": label disagrees with i == j");
    }
    return p;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("PairExample: ") + e.what());
  }
}

nlohmann::json to_json(const BalanceReport& b) {
  nlohmann::json skipped = nlohmann::json::array();
  for (const auto& s : b.skipped) skipped.push_back({{"sample_id", s.sample_id}, {"reason", s.reason}});
  return {{"samples_used", b.samples_used},
          {"skipped", skipped},
          {"positives", b.positives},
          {"candidate_negatives", b.candidate_negatives},
          {"negatives", b.negatives},
          {"positive_fraction", b.positive_fraction}};
}

BalanceReport balance_report_from_json(const nlohmann::json& j) {
  try {
    BalanceReport b;
    b.samples_used = j.at("samples_used").get<std::size_t>();
    for (const auto& s : j.at("skipped")) {
      b.skipped.push_back({s.at("sample_id").get<std::string>(), s.at("reason").get<std::string>()});
    }
    b.positives = j.at("positives").get<std::size_t>();
    b.candidate_negatives = j.at("candidate_negatives").get<std::size_t>();
    b.negatives = j.at("negatives").get<std::size_t>();
    b.positive_fraction = j.at("positive_fraction").get<double>();
    return b;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("BalanceReport: ") + e.what());
  }
}

}  // namespace scog::probe
