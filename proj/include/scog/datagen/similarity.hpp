#pragma once

#include <cstddef>
#include <filesystem>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "scog/providers/providers.hpp"

namespace scog::datagen {

/// Scales `v` to unit L2 norm. Throws ValidationError for zero or non-finite input.
std::vector<double> normalize_embedding(std::span<const double> v);

double l2_distance(std::span<const double> a, std::span<const double> b);

struct Neighbor {
  double distance = std::numeric_limits<double>::infinity();
  std::optional<std::string> id;
};

/// Exact-scan store of unit vectors keyed by record id.
class EmbeddingIndex {
 public:
  struct Entry {
    std::string record_id;
    std::vector<double> vector;
  };

  explicit EmbeddingIndex(std::size_t dim = 0) : dim_(dim) {}

  std::size_t dim() const { return dim_; }
  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }
  const std::vector<Entry>& entries() const { return entries_; }

  /// Requires matching dim and unit norm (within 1e-9).
  void insert(std::string record_id, std::vector<double> unit);

  /// Smallest pairwise distance among stored vectors (+inf with < 2 entries).
  double min_pairwise_distance() const;

  nlohmann::json to_json() const;
  static EmbeddingIndex from_json(const nlohmann::json& j);

 private:
  std::size_t dim_;
  std::vector<Entry> entries_;
};

/// (+inf, none) on an empty index. Throws ValidationError on dim mismatch.
Neighbor nearest_distance(const EmbeddingIndex& index, std::span<const double> v);

struct FilterCandidate {
  std::string id;
  std::string text;
};

struct FilterDecision {
  std::string id;
  bool retained = false;
  double distance = std::numeric_limits<double>::infinity();
  std::optional<std::string> neighbor;
};

/// Progress of a greedy filter pass. `cursor` is the next candidate to embed;
/// a pass interrupted by a provider failure leaves everything before it intact.
struct FilterState {
  EmbeddingIndex index;
  std::size_t cursor = 0;
  double threshold = 0.5;
  std::vector<FilterDecision> decisions;

  nlohmann::json to_json() const;
  static FilterState from_json(const nlohmann::json& j);
  void save(const std::filesystem::path& path) const;
  static FilterState load(const std::filesystem::path& path);
};

/// One greedy step: keep iff the nearest retained vector is farther than
/// `threshold`, then insert it.
FilterDecision filter_step(FilterState& state, const std::string& id, std::span<const double> unit);

/// Runs (or resumes) the pass over `candidates` in order. On a provider error
/// the state is left at the failing cursor and the error propagates.
void similarity_filter(const std::vector<FilterCandidate>& candidates,
                       providers::EmbeddingService& embedder, FilterState& state);

/// Convenience wrapper for a fresh pass; returns the retained candidates.
std::vector<FilterCandidate> similarity_filter(const std::vector<FilterCandidate>& candidates,
                                               providers::EmbeddingService& embedder,
                                               double threshold = 0.5);

}  // namespace scog::datagen
