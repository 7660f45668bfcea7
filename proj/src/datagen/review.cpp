#include "scog/datagen/review.hpp"

#include <fstream>

#include "scog/corpus/ids.hpp"
#include "scog/corpus/io.hpp"

namespace scog::datagen {

namespace fs = std::filesystem;
using nlohmann::json;

std::string to_string(ReviewStage stage) {
  switch (stage) {
    case ReviewStage::atomic: return "atomic";
    case ReviewStage::description: return "description";
    case ReviewStage::annotation: return "annotation";
    case ReviewStage::question: return "question";
  }
  return "atomic";
}

std::string to_string(ReviewStatus status) {
  switch (status) {
    case ReviewStatus::pending: return "pending";
    case ReviewStatus::accepted: return "accepted";
    case ReviewStatus::rejected: return "rejected";
    case ReviewStatus::corrected: return "corrected";
  }
  return "pending";
}

ReviewStage parse_review_stage(const std::string& name) {
  for (auto s : {ReviewStage::atomic, ReviewStage::description, ReviewStage::annotation,
                 ReviewStage::question}) {
    if (to_string(s) == name) return s;
  }
  throw ValidationError("unknown review stage \"" + name + "\"");
}

ReviewStatus parse_review_status(const std::string& name) {
  for (auto s : {ReviewStatus::pending, ReviewStatus::accepted, ReviewStatus::rejected,
                 ReviewStatus::corrected}) {
    if (to_string(s) == name) return s;
  }
  // "accept" / "reject" read naturally on the command line.
  if (name == "accept") return ReviewStatus::accepted;
  if (name == "reject") return ReviewStatus::rejected;
  throw ValidationError("unknown review decision \"" + name + "\"");
}

std::string review_item_id(const ReviewRequest& request) {
  const json key{{"stage", to_string(request.stage)},
                 {"target", request.target_id},
                 {"reason", request.reason}};
  return "rv-" + corpus::sha256_hex(key.dump()).substr(0, 12);
}

bool selected_for_inspection(const std::string& id, double fraction, std::uint64_t seed) {
  if (fraction <= 0.0) return false;
  if (fraction >= 1.0) return true;
  const std::string h = corpus::sha256_hex(std::to_string(seed) + ":" + id);
  const std::uint64_t x = std::stoull(h.substr(0, 16), nullptr, 16);
  return static_cast<double>(x) < fraction * 18446744073709551616.0;
}

ReviewQueue ReviewQueue::open(const fs::path& path) {
  if (!fs::exists(path)) {
    if (path.has_parent_path()) {
      fs::create_directories(path.parent_path());
    }
    std::ofstream(path, std::ios::binary);
  }
  return open_existing(path);
}

ReviewQueue ReviewQueue::open_existing(const fs::path& path) {
  if (!fs::exists(path)) {
    throw ValidationError("review queue " + path.string() + " does not exist");
  }
  ReviewQueue q;
  std::ifstream in(path, std::ios::binary);
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (corpus::trim(line).empty()) continue;
    try {
      q.apply(json::parse(line), n);
    } catch (const json::exception& e) {
      throw ValidationError(path.string() + ":" + std::to_string(n) + ": " + e.what());
    }
  }
  q.path_ = path;
  return q;
}

const ReviewItem* ReviewQueue::find(const std::string& item_id) const {
  for (const auto& item : items_) {
    if (item.id == item_id) return &item;
  }
  return nullptr;
}

std::vector<ReviewItem> ReviewQueue::items_for(ReviewStage stage) const {
  std::vector<ReviewItem> out;
  for (const auto& item : items_) {
    if (item.stage == stage) out.push_back(item);
  }
  return out;
}

void ReviewQueue::apply(const json& event, std::size_t line) {
  const auto kind = event.at("event").get<std::string>();
  const auto id = event.at("id").get<std::string>();
  if (kind == "enqueue") {
    if (find(id)) return;
    ReviewItem item;
    item.id = id;
    item.target_id = event.at("target_id").get<std::string>();
    item.stage = parse_review_stage(event.at("stage").get<std::string>());
    item.reason = event.value("reason", "");
    item.original_payload = event.value("payload", json());
    items_.push_back(std::move(item));
    return;
  }
  if (kind == "resolve") {
    std::optional<json> payload;
    if (event.contains("corrected_payload")) payload = event["corrected_payload"];
    resolve(id, parse_review_status(event.at("status").get<std::string>()), payload);
    return;
  }
  throw ValidationError("review event on line " + std::to_string(line) + ": unknown kind \"" +
                        kind + "\"");
}

void ReviewQueue::append(const json& event) {
  if (path_.empty()) return;
  std::ofstream out(path_, std::ios::binary | std::ios::app);
  out << event.dump() << '\n';
  if (!out) {
    throw Error("cannot append to review queue " + path_.string());
  }
}

std::string ReviewQueue::enqueue(const ReviewRequest& request) {
  const std::string id = review_item_id(request);
  if (find(id)) return id;
  const json event{{"event", "enqueue"},
                   {"id", id},
                   {"target_id", request.target_id},
                   {"stage", to_string(request.stage)},
                   {"reason", request.reason},
                   {"payload", request.original_payload}};
  ReviewItem item{id, request.target_id, request.stage, ReviewStatus::pending, request.reason,
                  request.original_payload, std::nullopt};
  items_.push_back(std::move(item));
  append(event);
  return id;
}

void ReviewQueue::resolve(const std::string& item_id, ReviewStatus decision,
                          std::optional<json> corrected_payload) {
  ReviewItem* item = nullptr;
  for (auto& it : items_) {
    if (it.id == item_id) item = &it;
  }
  if (!item) {
    throw ValidationError("no review item " + item_id);
  }
  if (item->status != ReviewStatus::pending) {
    throw ValidationError("review item " + item_id + " is already " + to_string(item->status));
  }
  if (decision == ReviewStatus::pending) {
    throw ValidationError("resolve needs accepted, rejected or corrected");
  }
  if (decision == ReviewStatus::corrected && !corrected_payload) {
    throw ValidationError("corrected resolution of " + item_id + " needs a payload");
  }
  if (decision != ReviewStatus::corrected && corrected_payload) {
    throw ValidationError("only a corrected resolution carries a payload");
  }
  item->status = decision;
  item->corrected_payload = std::move(corrected_payload);
  json event{{"event", "resolve"}, {"id", item_id}, {"status", to_string(decision)}};
  if (item->corrected_payload) {
    event["corrected_payload"] = *item->corrected_payload;
  }
  append(event);
}

}  // namespace scog::datagen
