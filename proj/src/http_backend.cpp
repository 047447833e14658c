#include "stylefx/http_backend.hpp"

#include <algorithm>
#include <chrono>
#include <thread>

#include "httplib.h"
#include "stylefx/error.hpp"
#include "stylefx/io.hpp"

namespace stylefx {

namespace {

struct Endpoint {
  std::string origin;  // scheme://host[:port]
  std::string prefix;  // path without trailing slash
};

Endpoint split_url(const std::string& url) {
  auto scheme = url.find("://");
  if (scheme == std::string::npos) throw Error(ErrorKind::InvalidConfig, "endpoint URL needs a scheme: " + url);
  auto slash = url.find('/', scheme + 3);
  Endpoint e;
  e.origin = url.substr(0, slash);
  e.prefix = slash == std::string::npos ? "" : url.substr(slash);
  while (!e.prefix.empty() && e.prefix.back() == '/') e.prefix.pop_back();
  return e;
}

bool retryable(int status) { return status == 429 || status >= 500; }

/// POSTs `body` with retries; returns the 2xx response body.
std::string post_json(const HttpConfig& cfg, const std::string& path, const std::string& body,
                      std::atomic<std::size_t>& attempts) {
  const Endpoint ep = split_url(cfg.base_url);
  httplib::Headers headers;
  if (!cfg.api_key.empty()) headers.emplace("Authorization", "Bearer " + cfg.api_key);

  double backoff = cfg.initial_backoff_ms;
  std::string last_error = "no attempt made";
  const std::size_t max_attempts = std::max<std::size_t>(cfg.max_attempts, 1);
  for (std::size_t attempt = 1; attempt <= max_attempts; ++attempt) {
    // one client per call keeps the backend reentrant
    httplib::Client client(ep.origin);
    const auto timeout = std::chrono::duration<double>(cfg.timeout_s);
    client.set_connection_timeout(std::chrono::duration_cast<std::chrono::microseconds>(timeout));
    client.set_read_timeout(std::chrono::duration_cast<std::chrono::microseconds>(timeout));
    ++attempts;
    auto res = client.Post(ep.prefix + path, headers, body, "application/json");
    if (res && res->status >= 200 && res->status < 300) return res->body;
    if (res && !retryable(res->status))
      throw Error(ErrorKind::BackendUnavailable,
                  "HTTP " + std::to_string(res->status) + " from " + cfg.base_url + path);
    last_error = res ? "HTTP " + std::to_string(res->status) : httplib::to_string(res.error());
    if (attempt < max_attempts) {
      std::this_thread::sleep_for(std::chrono::duration<double, std::milli>(backoff));
      backoff = std::min(backoff * cfg.backoff_factor, cfg.max_backoff_ms);
    }
  }
  throw Error(ErrorKind::BackendUnavailable,
              cfg.base_url + path + " failed after " + std::to_string(max_attempts) + " attempts: " + last_error);
}

}  // namespace

HttpChatBackend::HttpChatBackend(HttpConfig config) : config_(std::move(config)) {
  split_url(config_.base_url);
}

std::string HttpChatBackend::id() const { return "http:" + config_.model; }

ChatResponse HttpChatBackend::complete(const ChatRequest& request) {
  validate_request(request);
  Json body;
  body["model"] = config_.model;
  body["messages"] = Json::array();
  if (!request.system_prompt.empty())
    body["messages"].push_back({{"role", "system"}, {"content", request.system_prompt}});
  body["messages"].push_back({{"role", "user"}, {"content", request.user_message}});
  body["temperature"] = config_.forced_temperature >= 0.0 ? config_.forced_temperature : request.temperature;
  body["max_tokens"] = request.max_tokens;
  body["seed"] = request.rng_seed;

  const auto start = std::chrono::steady_clock::now();
  const std::string reply = post_json(config_, "/chat/completions", dump_json(body), attempts_);
  const auto stop = std::chrono::steady_clock::now();

  ChatResponse out;
  try {
    auto j = Json::parse(reply);
    out.text = j.at("choices").at(0).at("message").at("content").get<std::string>();
  } catch (const Json::exception& e) {
    throw Error(ErrorKind::ProtocolError, std::string("chat reply: ") + e.what());
  }
  out.backend_id = id();
  out.word_count = word_count(out.text);
  out.latency_ms = std::chrono::duration<double, std::milli>(stop - start).count();
  return out;
}

HttpEmbeddingProvider::HttpEmbeddingProvider(HttpConfig config) : config_(std::move(config)) {
  split_url(config_.base_url);
}

std::vector<std::vector<double>> HttpEmbeddingProvider::embed(const std::vector<std::string>& texts) {
  if (texts.empty()) throw Error(ErrorKind::EmptyInput, "nothing to embed");
  Json body{{"model", config_.model}, {"input", texts}};
  const std::string reply = post_json(config_, "/embeddings", dump_json(body), attempts_);
  std::vector<std::vector<double>> out(texts.size());
  try {
    auto j = Json::parse(reply);
    const auto& data = j.at("data");
    if (data.size() != texts.size()) throw Error(ErrorKind::ProtocolError, "embedding count mismatch");
    for (std::size_t i = 0; i < data.size(); ++i) {
      const std::size_t slot = data[i].value("index", i);
      if (slot >= out.size()) throw Error(ErrorKind::ProtocolError, "embedding index out of range");
      out[slot] = normalized(data[i].at("embedding").get<std::vector<double>>());
    }
  } catch (const Json::exception& e) {
    throw Error(ErrorKind::ProtocolError, std::string("embedding reply: ") + e.what());
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::ProtocolError) throw;
    throw Error(ErrorKind::ProtocolError, e.what());
  }
  return out;
}

}  // namespace stylefx
