#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "scog/error.hpp"

namespace scog::datagen {

enum class ReviewStage { atomic, description, annotation, question };
enum class ReviewStatus { pending, accepted, rejected, corrected };

std::string to_string(ReviewStage stage);
std::string to_string(ReviewStatus status);
ReviewStage parse_review_stage(const std::string& name);
ReviewStatus parse_review_status(const std::string& name);

/// What a pipeline stage asks a human to look at.
struct ReviewRequest {
  std::string target_id;
  ReviewStage stage = ReviewStage::atomic;
  std::string reason;
  nlohmann::json original_payload;
  friend bool operator==(const ReviewRequest&, const ReviewRequest&) = default;
};

struct ReviewItem {
  std::string id;
  std::string target_id;
  ReviewStage stage = ReviewStage::atomic;
  ReviewStatus status = ReviewStatus::pending;
  std::string reason;
  nlohmann::json original_payload;
  std::optional<nlohmann::json> corrected_payload;
};

/// "rv-" + 12 hex of sha256(stage, target, reason).
std::string review_item_id(const ReviewRequest& request);

/// Review items backed by an append-only JSONL event file. Every enqueue or
/// resolution appends one line; the current state is the fold of the events.
class ReviewQueue {
 public:
  ReviewQueue() = default;  // in-memory, nothing persisted

  /// Creates the file if missing.
  static ReviewQueue open(const std::filesystem::path& path);
  /// Throws ValidationError if the file does not exist.
  static ReviewQueue open_existing(const std::filesystem::path& path);

  /// Idempotent: re-enqueueing the same request returns the existing id.
  std::string enqueue(const ReviewRequest& request);

  /// `decision` must not be pending; a payload is required for (and only for)
  /// corrected. Throws ValidationError for unknown or already resolved items.
  void resolve(const std::string& item_id, ReviewStatus decision,
               std::optional<nlohmann::json> corrected_payload = std::nullopt);

  const std::vector<ReviewItem>& items() const { return items_; }
  const ReviewItem* find(const std::string& item_id) const;
  std::vector<ReviewItem> items_for(ReviewStage stage) const;

 private:
  void append(const nlohmann::json& event);
  void apply(const nlohmann::json& event, std::size_t line);

  std::filesystem::path path_;
  std::vector<ReviewItem> items_;
};

/// Deterministic sample for manual inspection: an id is picked when the
/// first 8 bytes of sha256(seed:id), read as a fraction of 2^64, fall below
/// `fraction`. Independent of processing order.
bool selected_for_inspection(const std::string& id, double fraction, std::uint64_t seed);

/// Folds resolutions for `stage` into `records`, where `key` names the target
/// id each record answers to:
///   rejected  drops every record with that key;
///   corrected replaces them with the payload (one record or an array);
///   accepted  adds the original payload when no record carries the key;
///   pending   leaves `records` unchanged.
template <typename Record>
std::vector<Record> apply_reviews(std::vector<Record> records, const ReviewQueue& queue,
                                  ReviewStage stage,
                                  const std::function<std::string(const Record&)>& key,
                                  const std::function<Record(const nlohmann::json&)>& parse) {
  for (const auto& item : queue.items_for(stage)) {
    auto matches = [&](const Record& r) { return key(r) == item.target_id; };
    switch (item.status) {
      case ReviewStatus::pending:
        break;
      case ReviewStatus::rejected:
        std::erase_if(records, matches);
        break;
      case ReviewStatus::corrected: {
        std::vector<Record> replacement;
        const auto& p = *item.corrected_payload;
        if (p.is_array()) {
          for (const auto& x : p) replacement.push_back(parse(x));
        } else {
          replacement.push_back(parse(p));
        }
        auto it = std::find_if(records.begin(), records.end(), matches);
        const auto pos = it - records.begin();
        std::erase_if(records, matches);
        records.insert(records.begin() + pos, replacement.begin(), replacement.end());
        break;
      }
      case ReviewStatus::accepted:
        if (std::none_of(records.begin(), records.end(), matches) &&
            !item.original_payload.is_null()) {
          const auto& p = item.original_payload;
          if (p.is_array()) {
            for (const auto& x : p) records.push_back(parse(x));
          } else {
            records.push_back(parse(p));
          }
        }
        break;
    }
  }
  return records;
}

}  // namespace scog::datagen
