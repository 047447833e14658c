#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "stylefx/feature_catalog.hpp"

namespace stylefx {

struct ChatRequest {
  std::string system_prompt;
  std::string user_message;
  double temperature = 0.7;
  std::size_t max_tokens = 512;
  std::size_t sample_index = 1;
  std::uint64_t rng_seed = 0;
};

struct ChatResponse {
  std::string text;
  std::string backend_id;
  std::size_t word_count = 0;
  double latency_ms = 0.0;
};

/// Whitespace-token count.
std::size_t word_count(std::string_view text);

/// Throws InvalidSpec when temperature or max_tokens are out of range.
void validate_request(const ChatRequest& request);

/// Implementations must be safe to call from several threads at once.
class ChatBackend {
 public:
  virtual ~ChatBackend() = default;
  virtual ChatResponse complete(const ChatRequest& request) = 0;
  virtual std::string id() const = 0;
};

class EmbeddingProvider {
 public:
  virtual ~EmbeddingProvider() = default;
  /// One unit vector per text. Provider failures raise BackendUnavailable.
  virtual std::vector<std::vector<double>> embed(const std::vector<std::string>& texts) = 0;
};

/// Serves stored vectors keyed by text; unknown text is a provider failure.
class FixtureEmbeddingProvider : public EmbeddingProvider {
 public:
  explicit FixtureEmbeddingProvider(EmbeddingMap vectors);
  std::vector<std::vector<double>> embed(const std::vector<std::string>& texts) override;
  const EmbeddingMap& vectors() const noexcept { return vectors_; }

 private:
  EmbeddingMap vectors_;
};

/// JSON object text -> array of numbers. Vectors are normalized on load.
EmbeddingMap load_embedding_fixture(const std::filesystem::path& path);

}  // namespace stylefx
