#include <httplib.h>

#include <cstdlib>

#include "scog/providers/providers.hpp"

namespace scog::providers {

using nlohmann::json;

namespace {

struct Endpoint {
  std::string origin;  // scheme://host[:port]
  std::string path;
};

Endpoint split_endpoint(const std::string& url) {
  const auto scheme = url.find("://");
  if (scheme == std::string::npos) {
    throw ValidationError("endpoint \"" + url + "\" lacks a scheme (http:// or https://)");
  }
  const auto slash = url.find('/', scheme + 3);
  if (slash == std::string::npos) {
    return {url, "/"};
  }
  return {url.substr(0, slash), url.substr(slash)};
}

class HttpPoster {
 public:
  explicit HttpPoster(const ProviderConfig& config)
      : provider_id_(config.id), endpoint_(split_endpoint(config.endpoint)) {
    if (const char* key = std::getenv(credential_env_var(config.id).c_str())) {
      token_ = key;
    }
  }

  json post(const json& body) const {
    httplib::Client client(endpoint_.origin);
    client.set_connection_timeout(10);
    client.set_read_timeout(120);
    httplib::Headers headers;
    if (!token_.empty()) {
      headers.emplace("Authorization", "Bearer " + token_);
    }
    auto res = client.Post(endpoint_.path, headers, body.dump(), "application/json");
    if (!res) {
      throw TransportError(provider_id_ + ": " + httplib::to_string(res.error()));
    }
    if (res->status == 429 || res->status >= 500) {
      throw TransportError(provider_id_ + ": HTTP " + std::to_string(res->status));
    }
    if (res->status != 200) {
      throw ProviderError(provider_id_ + ": HTTP " + std::to_string(res->status) + ": " +
                          res->body.substr(0, 200));
    }
    try {
      return json::parse(res->body);
    } catch (const json::exception& e) {
      throw ProviderError(provider_id_ + ": response is not JSON: " + e.what());
    }
  }

 private:
  std::string provider_id_;
  Endpoint endpoint_;
  std::string token_;
};

class HttpChatBackend : public ChatBackend {
 public:
  explicit HttpChatBackend(const ProviderConfig& config) : config_(config), poster_(config) {}

  std::string complete(const ChatRequest& request) override {
    const json body{{"model", config_.model},
                    {"messages", json::array({{{"role", "user"}, {"content", request.rendered_prompt}}})},
                    {"temperature", request.temperature},
                    {"max_tokens", request.max_tokens},
                    {"stream", false}};
    const json reply = poster_.post(body);
    try {
      return reply.at("choices").at(0).at("message").at("content").get<std::string>();
    } catch (const json::exception&) {
      throw ProviderError(config_.id + ": response lacks choices[0].message.content");
    }
  }

 private:
  ProviderConfig config_;
  HttpPoster poster_;
};

class HttpEmbeddingBackend : public EmbeddingBackend {
 public:
  explicit HttpEmbeddingBackend(const ProviderConfig& config) : config_(config), poster_(config) {}

  std::vector<double> embed(std::string_view text) override {
    const json reply = poster_.post(json{{"model", config_.model}, {"input", std::string(text)}});
    try {
      // Accept a bare float array, {"embedding": [...]}, or {"data": [{"embedding": [...]}]}.
      if (reply.is_array()) {
        return reply.get<std::vector<double>>();
      }
      if (reply.contains("embedding")) {
        return reply.at("embedding").get<std::vector<double>>();
      }
      return reply.at("data").at(0).at("embedding").get<std::vector<double>>();
    } catch (const json::exception&) {
      throw ProviderError(config_.id + ": response is not an embedding array");
    }
  }

 private:
  ProviderConfig config_;
  HttpPoster poster_;
};

}  // namespace

std::shared_ptr<ChatBackend> make_http_chat_backend(const ProviderConfig& config) {
  return std::make_shared<HttpChatBackend>(config);
}

std::shared_ptr<EmbeddingBackend> make_http_embedding_backend(const ProviderConfig& config) {
  return std::make_shared<HttpEmbeddingBackend>(config);
}

}  // namespace scog::providers
