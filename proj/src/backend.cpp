#include "stylefx/backend.hpp"

#include <cctype>

#include "stylefx/error.hpp"
#include "stylefx/io.hpp"

namespace stylefx {

std::size_t word_count(std::string_view text) {
  std::size_t n = 0;
  bool in_word = false;
  for (unsigned char c : text) {
    const bool space = std::isspace(c) != 0;
    if (!space && !in_word) ++n;
    in_word = !space;
  }
  return n;
}

void validate_request(const ChatRequest& request) {
  if (!(request.temperature >= 0.0 && request.temperature <= 2.0))
    throw Error(ErrorKind::InvalidSpec, "temperature must lie in [0, 2]");
  if (request.max_tokens < 1) throw Error(ErrorKind::InvalidSpec, "max_tokens must be >= 1");
}

FixtureEmbeddingProvider::FixtureEmbeddingProvider(EmbeddingMap vectors) {
  for (auto& [text, v] : vectors) vectors_[text] = normalized(v);
}

std::vector<std::vector<double>> FixtureEmbeddingProvider::embed(const std::vector<std::string>& texts) {
  if (texts.empty()) throw Error(ErrorKind::EmptyInput, "nothing to embed");
  std::vector<std::vector<double>> out;
  out.reserve(texts.size());
  for (const auto& t : texts) {
    auto it = vectors_.find(t);
    if (it == vectors_.end()) throw Error(ErrorKind::BackendUnavailable, "no fixture vector for '" + t + "'");
    out.push_back(it->second);
  }
  return out;
}

EmbeddingMap load_embedding_fixture(const std::filesystem::path& path) {
  EmbeddingMap out;
  try {
    auto j = Json::parse(read_text_file(path));
    for (auto& [text, v] : j.items()) out[text] = normalized(v.get<std::vector<double>>());
  } catch (const Json::exception& e) {
    throw Error(ErrorKind::ParseError, path.filename().string() + ": " + e.what());
  }
  return out;
}

}  // namespace stylefx
