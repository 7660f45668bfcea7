#pragma once

#include <atomic>
#include <chrono>
#include <cstddef>
#include <functional>
#include <map>
#include <memory>
#include <semaphore>
#include <string>
#include <string_view>
#include <vector>

#include "scog/error.hpp"
#include "scog/providers/cache.hpp"

namespace scog::providers {

/// Transient failure (connection reset, 5xx, 429). Retried by the services;
/// any other ProviderError from a backend is final.
class TransportError : public ProviderError {
 public:
  using ProviderError::ProviderError;
};

struct ChatRequest {
  std::string provider_id;
  std::string template_id;
  std::string rendered_prompt;
  double temperature = 1.0;
  int max_tokens = 512;
};

/// temperature >= 0, prompt nonempty, max_tokens > 0.
void validate(const ChatRequest& request);

/// Key over (provider_id, template_id, rendered_prompt, temperature, max_tokens).
std::string cache_key(const ChatRequest& request);

struct EmbeddingVector {
  std::vector<double> values;
  std::size_t dim = 0;
  std::string model_id;
};

struct ProviderConfig {
  std::string id;
  std::string kind = "http";  // http | stub-hash | stub-bow | replay-only
  std::string endpoint;
  std::string model;
  int max_concurrency = 4;
  int retries = 3;   // total attempts per request
  std::size_t dim = 0;  // embedding providers only
};

/// `<PROVIDER_ID>_API_KEY` with the id uppercased and non-alphanumerics as '_'.
std::string credential_env_var(std::string_view provider_id);

class ChatBackend {
 public:
  virtual ~ChatBackend() = default;
  virtual std::string complete(const ChatRequest& request) = 0;
};

class EmbeddingBackend {
 public:
  virtual ~EmbeddingBackend() = default;
  virtual std::vector<double> embed(std::string_view text) = 0;
};

struct RetryPolicy {
  std::chrono::milliseconds base_delay{250};
  double multiplier = 2.0;
};

using Sleeper = std::function<void(std::chrono::milliseconds)>;

/// Counters exposed for logs and tests.
struct CallStats {
  std::atomic<std::size_t> requests{0};
  std::atomic<std::size_t> cache_hits{0};
  std::atomic<std::size_t> backend_attempts{0};
  std::atomic<std::size_t> failures{0};
};

/// Routes chat requests to per-provider backends through the response cache,
/// with bounded in-flight requests per provider and exponential-backoff retries.
class ChatService {
 public:
  explicit ChatService(std::shared_ptr<ResponseCache> cache = nullptr, RetryPolicy retry = {},
                       Sleeper sleeper = {});
  ~ChatService();
  ChatService(const ChatService&) = delete;
  ChatService& operator=(const ChatService&) = delete;

  /// `backend` may be null for replay-only providers.
  void add_provider(const ProviderConfig& config, std::shared_ptr<ChatBackend> backend);
  bool has_provider(const std::string& id) const { return providers_.count(id) != 0; }

  std::string complete(const ChatRequest& request);

  const CallStats& stats() const { return stats_; }

 private:
  struct Provider;
  std::shared_ptr<ResponseCache> cache_;
  RetryPolicy retry_;
  Sleeper sleeper_;
  std::map<std::string, std::unique_ptr<Provider>> providers_;
  CallStats stats_;
};

/// Embedding client for one provider: validation, cache, retries, dim check.
class EmbeddingService {
 public:
  EmbeddingService(ProviderConfig config, std::shared_ptr<EmbeddingBackend> backend,
                   std::shared_ptr<ResponseCache> cache = nullptr, RetryPolicy retry = {},
                   Sleeper sleeper = {});
  ~EmbeddingService();

  EmbeddingVector embed(std::string_view text);

  std::size_t dim() const { return config_.dim; }
  const ProviderConfig& config() const { return config_; }
  const CallStats& stats() const { return stats_; }

 private:
  ProviderConfig config_;
  std::shared_ptr<EmbeddingBackend> backend_;
  std::shared_ptr<ResponseCache> cache_;
  RetryPolicy retry_;
  Sleeper sleeper_;
  std::unique_ptr<std::counting_semaphore<>> slots_;
  CallStats stats_;
};

// Offline backends.

/// Answers through a callable; used for fixtures and tests.
class ScriptedChatBackend : public ChatBackend {
 public:
  using Script = std::function<std::string(const ChatRequest&)>;
  explicit ScriptedChatBackend(Script script) : script_(std::move(script)) {}
  std::string complete(const ChatRequest& request) override { return script_(request); }

 private:
  Script script_;
};

/// Unit basis vector e_k with k = hash(text) mod dim.
class HashBasisEmbedder : public EmbeddingBackend {
 public:
  explicit HashBasisEmbedder(std::size_t dim) : dim_(dim) {}
  std::vector<double> embed(std::string_view text) override;

 private:
  std::size_t dim_;
};

/// Hashed bag of lowercased words (unnormalized counts).
class BagOfWordsEmbedder : public EmbeddingBackend {
 public:
  explicit BagOfWordsEmbedder(std::size_t dim) : dim_(dim) {}
  std::vector<double> embed(std::string_view text) override;

 private:
  std::size_t dim_;
};

// HTTP backends speaking the chat-completions object shape.
std::shared_ptr<ChatBackend> make_http_chat_backend(const ProviderConfig& config);
std::shared_ptr<EmbeddingBackend> make_http_embedding_backend(const ProviderConfig& config);

/// Backend for `config.kind`; null for replay-only providers.
std::shared_ptr<ChatBackend> make_chat_backend(const ProviderConfig& config);
std::shared_ptr<EmbeddingBackend> make_embedding_backend(const ProviderConfig& config);

}  // namespace scog::providers
