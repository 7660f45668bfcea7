#include "scog/providers/cache.hpp"

#include <mutex>

#include "scog/corpus/ids.hpp"
#include "scog/corpus/io.hpp"
#include "scog/error.hpp"

namespace scog::providers {

namespace fs = std::filesystem;
using nlohmann::json;

CacheMode parse_cache_mode(const std::string& name) {
  if (name == "off") return CacheMode::off;
  if (name == "record") return CacheMode::record;
  if (name == "replay") return CacheMode::replay;
  if (name == "strict-replay" || name == "strict_replay") return CacheMode::strict_replay;
  throw ValidationError("unknown cache mode \"" + name + "\" (off|record|replay|strict-replay)");
}

std::string to_string(CacheMode mode) {
  switch (mode) {
    case CacheMode::off: return "off";
    case CacheMode::record: return "record";
    case CacheMode::replay: return "replay";
    case CacheMode::strict_replay: return "strict-replay";
  }
  return "off";
}

ResponseCache::ResponseCache(fs::path dir, CacheMode mode) : dir_(std::move(dir)), mode_(mode) {
  if (mode_ == CacheMode::strict_replay && !fs::is_directory(dir_)) {
    throw ValidationError("sealed cache directory " + dir_.string() + " does not exist");
  }
}

fs::path ResponseCache::entry_path(const std::string& key) const {
  return dir_ / key.substr(0, 2) / (key + ".json");
}

std::optional<CacheEntry> ResponseCache::lookup(const std::string& key) const {
  if (!reads()) {
    return std::nullopt;
  }
  std::shared_lock lock(mutex_);
  const fs::path path = entry_path(key);
  if (!fs::exists(path)) {
    return std::nullopt;
  }
  const json j = json::parse(corpus::read_file(path));
  CacheEntry entry;
  entry.key = j.at("key").get<std::string>();
  entry.payload = j.at("payload");
  entry.timestamp = j.value("timestamp", std::int64_t{0});
  entry.request = j.value("request", json());
  if (entry.key != key) {
    throw Error("cache entry " + path.string() + " holds key " + entry.key);
  }
  return entry;
}

void ResponseCache::store(const CacheEntry& entry) {
  if (!writes()) {
    return;
  }
  std::unique_lock lock(mutex_);
  json j{{"key", entry.key},
         {"payload", entry.payload},
         {"timestamp", entry.timestamp},
         {"request", entry.request}};
  corpus::write_file_atomic(entry_path(entry.key), j.dump(2) + "\n");
}

std::string canonical_key(const json& request) { return corpus::sha256_hex(request.dump()); }

}  // namespace scog::providers
