#include "scog/datagen/similarity.hpp"

#include <cmath>

#include "scog/corpus/io.hpp"
#include "scog/error.hpp"

namespace scog::datagen {

using nlohmann::json;

std::vector<double> normalize_embedding(std::span<const double> v) {
  double sq = 0.0;
  for (double x : v) {
    if (!std::isfinite(x)) {
      throw ValidationError("normalize_embedding: non-finite component");
    }
    sq += x * x;
  }
  if (sq == 0.0) {
    throw ValidationError("normalize_embedding: zero vector");
  }
  const double norm = std::sqrt(sq);
  std::vector<double> out(v.begin(), v.end());
  for (double& x : out) {
    x /= norm;
  }
  return out;
}

double l2_distance(std::span<const double> a, std::span<const double> b) {
  double sq = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    sq += d * d;
  }
  return std::sqrt(sq);
}

void EmbeddingIndex::insert(std::string record_id, std::vector<double> unit) {
  if (dim_ == 0) {
    dim_ = unit.size();
  }
  if (unit.size() != dim_) {
    throw ValidationError("EmbeddingIndex: vector dim " + std::to_string(unit.size()) +
                          " != index dim " + std::to_string(dim_));
  }
  double sq = 0.0;
  for (double x : unit) {
    sq += x * x;
  }
  if (std::abs(std::sqrt(sq) - 1.0) > 1e-9) {
    throw ValidationError("EmbeddingIndex: vector for " + record_id + " is not unit norm");
  }
  entries_.push_back({std::move(record_id), std::move(unit)});
}

double EmbeddingIndex::min_pairwise_distance() const {
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    for (std::size_t j = i + 1; j < entries_.size(); ++j) {
      best = std::min(best, l2_distance(entries_[i].vector, entries_[j].vector));
    }
  }
  return best;
}

json EmbeddingIndex::to_json() const {
  json entries = json::array();
  for (const auto& e : entries_) {
    entries.push_back({{"record_id", e.record_id}, {"vector", e.vector}});
  }
  return {{"dim", dim_}, {"entries", entries}};
}

EmbeddingIndex EmbeddingIndex::from_json(const json& j) {
  EmbeddingIndex index(j.at("dim").get<std::size_t>());
  for (const auto& e : j.at("entries")) {
    index.insert(e.at("record_id").get<std::string>(), e.at("vector").get<std::vector<double>>());
  }
  return index;
}

Neighbor nearest_distance(const EmbeddingIndex& index, std::span<const double> v) {
  Neighbor best;
  if (index.empty()) {
    return best;
  }
  if (v.size() != index.dim()) {
    throw ValidationError("nearest_distance: query dim " + std::to_string(v.size()) +
                          " != index dim " + std::to_string(index.dim()));
  }
  for (const auto& e : index.entries()) {
    const double d = l2_distance(v, e.vector);
    if (d < best.distance) {
      best.distance = d;
      best.id = e.record_id;
    }
  }
  return best;
}

json FilterState::to_json() const {
  json ds = json::array();
  for (const auto& d : decisions) {
    json row{{"id", d.id}, {"retained", d.retained}};
    // JSON has no infinity; an absent distance means the index was empty.
    if (std::isfinite(d.distance)) {
      row["distance"] = d.distance;
    }
    if (d.neighbor) {
      row["neighbor"] = *d.neighbor;
    }
    ds.push_back(std::move(row));
  }
  return {{"cursor", cursor}, {"threshold", threshold}, {"index", index.to_json()},
          {"decisions", ds}};
}

FilterState FilterState::from_json(const json& j) {
  FilterState s;
  s.cursor = j.at("cursor").get<std::size_t>();
  s.threshold = j.at("threshold").get<double>();
  s.index = EmbeddingIndex::from_json(j.at("index"));
  for (const auto& row : j.at("decisions")) {
    FilterDecision d;
    d.id = row.at("id").get<std::string>();
    d.retained = row.at("retained").get<bool>();
    if (row.contains("distance")) {
      d.distance = row["distance"].get<double>();
    }
    if (row.contains("neighbor")) {
      d.neighbor = row["neighbor"].get<std::string>();
    }
    s.decisions.push_back(std::move(d));
  }
  return s;
}

void FilterState::save(const std::filesystem::path& path) const {
  corpus::write_file_atomic(path, to_json().dump(2) + "\n");
}

FilterState FilterState::load(const std::filesystem::path& path) {
  try {
    return from_json(json::parse(corpus::read_file(path)));
  } catch (const json::exception& e) {
    throw ValidationError(path.string() + ": malformed filter state: " + e.what());
  }
}

FilterDecision filter_step(FilterState& state, const std::string& id, std::span<const double> unit) {
  const Neighbor nn = nearest_distance(state.index, unit);
  FilterDecision d{id, nn.distance > state.threshold, nn.distance, nn.id};
  if (d.retained) {
    state.index.insert(id, std::vector<double>(unit.begin(), unit.end()));
  }
  state.decisions.push_back(d);
  ++state.cursor;
  return d;
}

void similarity_filter(const std::vector<FilterCandidate>& candidates,
                       providers::EmbeddingService& embedder, FilterState& state) {
  if (state.cursor > candidates.size()) {
    throw ValidationError("filter cursor " + std::to_string(state.cursor) + " is past the " +
                          std::to_string(candidates.size()) + " candidates");
  }
  while (state.cursor < candidates.size()) {
    const auto& c = candidates[state.cursor];
    const auto raw = embedder.embed(c.text);
    filter_step(state, c.id, normalize_embedding(raw.values));
  }
}

std::vector<FilterCandidate> similarity_filter(const std::vector<FilterCandidate>& candidates,
                                               providers::EmbeddingService& embedder,
                                               double threshold) {
  FilterState state;
  state.threshold = threshold;
  similarity_filter(candidates, embedder, state);
  std::vector<FilterCandidate> kept;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    if (state.decisions[i].retained) {
      kept.push_back(candidates[i]);
    }
  }
  return kept;
}

}  // namespace scog::datagen
