#pragma once

#include <atomic>
#include <cstddef>
#include <string>

#include "stylefx/backend.hpp"

namespace stylefx {

struct HttpConfig {
  std::string base_url;  // e.g. "http://localhost:8000/v1"
  std::string api_key;   // sent as a bearer token when non-empty
  std::string model;
  std::size_t max_attempts = 4;
  double initial_backoff_ms = 250.0;
  double backoff_factor = 2.0;
  double max_backoff_ms = 8000.0;
  double timeout_s = 120.0;
  /// Fixed temperature sent regardless of the request (some hosted endpoints
  /// accept only 1.0). Negative means use the request's value.
  double forced_temperature = -1.0;
};

/// Chat-completions client. Connection errors, 429 and 5xx are retried with
/// exponential backoff; after max_attempts the call raises BackendUnavailable.
/// A 2xx reply without choices[0].message.content raises ProtocolError.
class HttpChatBackend : public ChatBackend {
 public:
  explicit HttpChatBackend(HttpConfig config);
  ChatResponse complete(const ChatRequest& request) override;
  std::string id() const override;

  /// HTTP requests issued so far, across threads.
  std::size_t attempts() const noexcept { return attempts_.load(); }

 private:
  HttpConfig config_;
  std::atomic<std::size_t> attempts_{0};
};

/// POST {base_url}/embeddings with {model, input[]}; reads data[i].embedding.
class HttpEmbeddingProvider : public EmbeddingProvider {
 public:
  explicit HttpEmbeddingProvider(HttpConfig config);
  std::vector<std::vector<double>> embed(const std::vector<std::string>& texts) override;
  std::size_t attempts() const noexcept { return attempts_.load(); }

 private:
  HttpConfig config_;
  std::atomic<std::size_t> attempts_{0};
};

}  // namespace stylefx
