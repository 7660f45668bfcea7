#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <shared_mutex>
#include <string>

#include <json.hpp>

namespace scog::providers {

enum class CacheMode {
  off,            // never read or write
  record,         // always call the backend, store every response
  replay,         // serve hits, call the backend on a miss and store it
  strict_replay,  // serve hits, a miss is an error (sealed cache)
};

CacheMode parse_cache_mode(const std::string& name);
std::string to_string(CacheMode mode);

struct CacheEntry {
  std::string key;
  nlohmann::json payload;
  std::int64_t timestamp = 0;  // seconds since epoch at record time
  nlohmann::json request;      // canonical request, kept for auditing
};

/// Content-addressed response store: one file per key under
/// `<dir>/<key[0..2)>/<key>.json`. Concurrent lookups, serialized stores.
class ResponseCache {
 public:
  ResponseCache(std::filesystem::path dir, CacheMode mode);

  CacheMode mode() const { return mode_; }
  const std::filesystem::path& dir() const { return dir_; }

  std::optional<CacheEntry> lookup(const std::string& key) const;
  void store(const CacheEntry& entry);

  bool reads() const { return mode_ == CacheMode::replay || mode_ == CacheMode::strict_replay; }
  bool writes() const { return mode_ == CacheMode::record || mode_ == CacheMode::replay; }

 private:
  std::filesystem::path entry_path(const std::string& key) const;

  std::filesystem::path dir_;
  CacheMode mode_;
  mutable std::shared_mutex mutex_;
};

/// sha256 over the canonical (sorted-key) JSON encoding of `request`.
std::string canonical_key(const nlohmann::json& request);

}  // namespace scog::providers
