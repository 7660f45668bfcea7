#include "scog/providers/providers.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <thread>

#include "scog/corpus/ids.hpp"

namespace scog::providers {

using nlohmann::json;

void validate(const ChatRequest& request) {
  if (request.provider_id.empty()) {
    throw ValidationError("ChatRequest.provider_id: empty");
  }
  if (!(request.temperature >= 0.0) || !std::isfinite(request.temperature)) {
    throw ValidationError("ChatRequest.temperature: must be a finite value >= 0");
  }
  if (request.rendered_prompt.empty()) {
    throw ValidationError("ChatRequest.rendered_prompt: empty");
  }
  if (request.max_tokens <= 0) {
    throw ValidationError("ChatRequest.max_tokens: must be positive");
  }
}

namespace {

json canonical_request(const ChatRequest& r) {
  return json{{"provider_id", r.provider_id},
              {"template_id", r.template_id},
              {"rendered_prompt", r.rendered_prompt},
              {"temperature", r.temperature},
              {"max_tokens", r.max_tokens}};
}

std::int64_t now_seconds() {
  return std::chrono::duration_cast<std::chrono::seconds>(
             std::chrono::system_clock::now().time_since_epoch())
      .count();
}

void default_sleep(std::chrono::milliseconds d) { std::this_thread::sleep_for(d); }

// Runs `attempt` up to `max_attempts` times, sleeping base*mult^k between
// transient failures.
template <typename Fn>
auto with_retries(const std::string& what, int max_attempts, const RetryPolicy& policy,
                  const Sleeper& sleep, CallStats& stats, Fn&& attempt) {
  max_attempts = std::max(1, max_attempts);
  auto delay = policy.base_delay;
  for (int k = 1;; ++k) {
    ++stats.backend_attempts;
    try {
      auto result = attempt();
      spdlog::debug("{}: succeeded on attempt {}/{}", what, k, max_attempts);
      return result;
    } catch (const TransportError& e) {
      spdlog::warn("{}: attempt {}/{} failed: {}", what, k, max_attempts, e.what());
      if (k >= max_attempts) {
        ++stats.failures;
        throw ProviderError(what + ": transport failure after " + std::to_string(k) +
                            " attempts: " + e.what());
      }
      sleep(delay);
      delay = std::chrono::milliseconds(
          static_cast<std::int64_t>(static_cast<double>(delay.count()) * policy.multiplier));
    } catch (const ProviderError&) {
      ++stats.failures;
      throw;
    }
  }
}

// Releases a semaphore slot on scope exit.
class SlotGuard {
 public:
  explicit SlotGuard(std::counting_semaphore<>& sem) : sem_(sem) { sem_.acquire(); }
  ~SlotGuard() { sem_.release(); }
  SlotGuard(const SlotGuard&) = delete;
  SlotGuard& operator=(const SlotGuard&) = delete;

 private:
  std::counting_semaphore<>& sem_;
};

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

}  // namespace

std::string cache_key(const ChatRequest& request) {
  return canonical_key(canonical_request(request));
}

std::string credential_env_var(std::string_view provider_id) {
  std::string name;
  for (unsigned char c : provider_id) {
    name.push_back(std::isalnum(c) ? static_cast<char>(std::toupper(c)) : '_');
  }
  return name + "_API_KEY";
}

struct ChatService::Provider {
  ProviderConfig config;
  std::shared_ptr<ChatBackend> backend;
  std::unique_ptr<std::counting_semaphore<>> slots;
};

ChatService::ChatService(std::shared_ptr<ResponseCache> cache, RetryPolicy retry, Sleeper sleeper)
    : cache_(std::move(cache)),
      retry_(retry),
      sleeper_(sleeper ? std::move(sleeper) : Sleeper(default_sleep)) {}

ChatService::~ChatService() = default;

void ChatService::add_provider(const ProviderConfig& config, std::shared_ptr<ChatBackend> backend) {
  if (config.id.empty()) {
    throw ValidationError("provider id must be nonempty");
  }
  if (config.max_concurrency < 1) {
    throw ValidationError("provider " + config.id + ": max_concurrency must be >= 1");
  }
  auto p = std::make_unique<Provider>();
  p->config = config;
  p->backend = std::move(backend);
  p->slots = std::make_unique<std::counting_semaphore<>>(config.max_concurrency);
  providers_[config.id] = std::move(p);
}

std::string ChatService::complete(const ChatRequest& request) {
  validate(request);
  ++stats_.requests;
  auto it = providers_.find(request.provider_id);
  if (it == providers_.end()) {
    throw ValidationError("unknown provider \"" + request.provider_id + "\"");
  }
  Provider& provider = *it->second;
  const json canonical = canonical_request(request);
  const std::string key = canonical_key(canonical);
  if (cache_) {
    if (auto hit = cache_->lookup(key)) {
      ++stats_.cache_hits;
      return hit->payload.get<std::string>();
    }
    if (cache_->mode() == CacheMode::strict_replay) {
      ++stats_.failures;
      throw ProviderError("cache miss in strict-replay mode for provider " + request.provider_id +
                          " (template " + request.template_id + ", key " + key + ")");
    }
  }
  if (!provider.backend) {
    throw ProviderError("provider " + request.provider_id + " has no backend configured");
  }
  std::string text;
  {
    SlotGuard slot(*provider.slots);
    text = with_retries("chat " + request.provider_id, provider.config.retries, retry_, sleeper_,
                        stats_, [&] { return provider.backend->complete(request); });
  }
  if (cache_) {
    cache_->store(CacheEntry{key, text, now_seconds(), canonical});
  }
  return text;
}

EmbeddingService::EmbeddingService(ProviderConfig config, std::shared_ptr<EmbeddingBackend> backend,
                                   std::shared_ptr<ResponseCache> cache, RetryPolicy retry,
                                   Sleeper sleeper)
    : config_(std::move(config)),
      backend_(std::move(backend)),
      cache_(std::move(cache)),
      retry_(retry),
      sleeper_(sleeper ? std::move(sleeper) : Sleeper(default_sleep)),
      slots_(std::make_unique<std::counting_semaphore<>>(std::max(1, config_.max_concurrency))) {
  if (config_.dim == 0) {
    throw ValidationError("embedding provider " + config_.id + ": dim must be configured");
  }
}

EmbeddingService::~EmbeddingService() = default;

EmbeddingVector EmbeddingService::embed(std::string_view text) {
  if (text.empty()) {
    throw ValidationError("embed: text must be nonempty");
  }
  ++stats_.requests;
  const json canonical{{"provider_id", config_.id},
                       {"template_id", "embedding"},
                       {"model", config_.model},
                       {"input", std::string(text)}};
  const std::string key = canonical_key(canonical);
  std::vector<double> values;
  bool from_cache = false;
  if (cache_) {
    if (auto hit = cache_->lookup(key)) {
      ++stats_.cache_hits;
      values = hit->payload.get<std::vector<double>>();
      from_cache = true;
    } else if (cache_->mode() == CacheMode::strict_replay) {
      ++stats_.failures;
      throw ProviderError("cache miss in strict-replay mode for embedding provider " + config_.id);
    }
  }
  if (!from_cache) {
    if (!backend_) {
      throw ProviderError("embedding provider " + config_.id + " has no backend configured");
    }
    SlotGuard slot(*slots_);
    values = with_retries("embed " + config_.id, config_.retries, retry_, sleeper_, stats_,
                          [&] { return backend_->embed(text); });
  }
  if (values.size() != config_.dim) {
    throw ValidationError("embedding provider " + config_.id + " returned dim " +
                          std::to_string(values.size()) + ", configured " +
                          std::to_string(config_.dim));
  }
  for (double v : values) {
    if (!std::isfinite(v)) {
      throw ValidationError("embedding provider " + config_.id + " returned a non-finite value");
    }
  }
  if (cache_ && !from_cache) {
    cache_->store(CacheEntry{key, values, now_seconds(), canonical});
  }
  return EmbeddingVector{std::move(values), config_.dim, config_.model};
}

std::vector<double> HashBasisEmbedder::embed(std::string_view text) {
  std::vector<double> v(dim_, 0.0);
  v[fnv1a(text) % dim_] = 1.0;
  return v;
}

std::vector<double> BagOfWordsEmbedder::embed(std::string_view text) {
  std::vector<double> v(dim_, 0.0);
  std::string word;
  auto flush = [&] {
    if (!word.empty()) {
      v[fnv1a(word) % dim_] += 1.0;
      word.clear();
    }
  };
  for (unsigned char c : text) {
    if (std::isalnum(c) || c >= 0x80) {
      word.push_back(static_cast<char>(std::tolower(c)));
    } else {
      flush();
    }
  }
  flush();
  if (std::all_of(v.begin(), v.end(), [](double x) { return x == 0.0; })) {
    v[fnv1a(text) % dim_] = 1.0;
  }
  return v;
}

std::shared_ptr<ChatBackend> make_chat_backend(const ProviderConfig& config) {
  if (config.kind == "http") {
    return make_http_chat_backend(config);
  }
  if (config.kind == "replay-only") {
    return nullptr;
  }
  throw ValidationError("provider " + config.id + ": unsupported chat kind \"" + config.kind + "\"");
}

std::shared_ptr<EmbeddingBackend> make_embedding_backend(const ProviderConfig& config) {
  if (config.kind == "http") {
    return make_http_embedding_backend(config);
  }
  if (config.kind == "stub-hash") {
    return std::make_shared<HashBasisEmbedder>(config.dim);
  }
  if (config.kind == "stub-bow") {
    return std::make_shared<BagOfWordsEmbedder>(config.dim);
  }
  if (config.kind == "replay-only") {
    return nullptr;
  }
  throw ValidationError("provider " + config.id + ": unsupported embedding kind \"" + config.kind +
                        "\"");
}

}  // namespace scog::providers
