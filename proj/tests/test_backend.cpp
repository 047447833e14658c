#include <atomic>
#include <thread>

#include "doctest.h"
#include "httplib.h"
#include "stylefx/backend.hpp"
#include "stylefx/error.hpp"
#include "stylefx/http_backend.hpp"
#include "stylefx/io.hpp"

using namespace stylefx;

namespace {

// In-process OpenAI-style server; the first `failures` calls answer `fail_status`.
struct FakeServer {
  httplib::Server server;
  std::thread thread;
  int port = 0;
  std::atomic<int> calls{0};
  int failures = 0;
  int fail_status = 500;
  std::string last_body;

  explicit FakeServer(int failures_, int status = 500) : failures(failures_), fail_status(status) {
    server.Post("/v1/chat/completions", [this](const httplib::Request& req, httplib::Response& res) {
      if (calls.fetch_add(1) < failures) {
        res.status = fail_status;
        res.set_content("{\"error\":\"busy\"}", "application/json");
        return;
      }
      last_body = req.body;
      auto body = Json::parse(req.body);
      Json reply = {{"choices", {{{"message", {{"role", "assistant"}, {"content", "echo " + body["model"].get<std::string>()}}}}}}};
      res.set_content(reply.dump(), "application/json");
    });
    server.Post("/v1/embeddings", [this](const httplib::Request& req, httplib::Response& res) {
      calls.fetch_add(1);
      auto body = Json::parse(req.body);
      Json data = Json::array();
      for (std::size_t i = 0; i < body["input"].size(); ++i)
        data.push_back({{"index", i}, {"embedding", {3.0, 4.0 * static_cast<double>(i)}}});
      res.set_content(Json{{"data", data}}.dump(), "application/json");
    });
    server.Post("/bad/chat/completions", [](const httplib::Request&, httplib::Response& res) {
      res.set_content("{\"choices\":[]}", "application/json");
    });
    port = server.bind_to_any_port("127.0.0.1");
    thread = std::thread([this] { server.listen_after_bind(); });
    server.wait_until_ready();
  }
  ~FakeServer() {
    server.stop();
    thread.join();
  }
  HttpConfig config(const std::string& prefix = "/v1") const {
    HttpConfig c;
    c.base_url = "http://127.0.0.1:" + std::to_string(port) + prefix;
    c.model = "m1";
    c.initial_backoff_ms = 1;
    c.max_backoff_ms = 4;
    c.timeout_s = 5;
    return c;
  }
};

}  // namespace

TEST_SUITE("backend") {
  TEST_CASE("word count and request validation") {
    CHECK(word_count("  a b\n c ") == 3);
    CHECK(word_count("") == 0);
    ChatRequest r;
    CHECK_NOTHROW(validate_request(r));
    r.temperature = -0.1;
    CHECK_THROWS_AS(validate_request(r), Error);
    r.temperature = 0.5;
    r.max_tokens = 0;
    CHECK_THROWS_AS(validate_request(r), Error);
  }

  TEST_CASE("fixture embeddings are unit norm; unknown text fails") {
    FixtureEmbeddingProvider p({{"x", {3.0, 4.0}}});
    auto v = p.embed({"x"});
    CHECK(v[0][0] == doctest::Approx(0.6));
    CHECK(v[0][1] == doctest::Approx(0.8));
    try {
      p.embed({"y"});
      FAIL("expected BackendUnavailable");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::BackendUnavailable);
    }
  }

  TEST_CASE("http: a 500 is retried and then succeeds") {
    FakeServer s(1);
    HttpChatBackend b(s.config());
    ChatRequest r{"sys", "hello", 0.3, 16, 1, 9};
    auto resp = b.complete(r);
    CHECK(resp.text == "echo m1");
    CHECK(resp.word_count == 2);
    CHECK(b.attempts() == 2);
    CHECK(b.id() == "http:m1");
    auto sent = Json::parse(s.last_body);
    CHECK(sent["messages"].size() == 2);
    CHECK(sent["messages"][0]["content"] == "sys");
    CHECK(sent["temperature"].get<double>() == doctest::Approx(0.3));
  }

  TEST_CASE("http: 429 is retried too") {
    FakeServer s(2, 429);
    HttpChatBackend b(s.config());
    CHECK(b.complete(ChatRequest{"", "x"}).text == "echo m1");
    CHECK(b.attempts() == 3);
  }

  TEST_CASE("http: exhausting attempts raises BackendUnavailable") {
    FakeServer s(100);
    auto cfg = s.config();
    cfg.max_attempts = 3;
    HttpChatBackend b(cfg);
    try {
      b.complete(ChatRequest{"", "x"});
      FAIL("expected BackendUnavailable");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::BackendUnavailable);
    }
    CHECK(s.calls.load() == 3);
  }

  TEST_CASE("http: a 4xx other than 429 is not retried") {
    FakeServer s(100, 400);
    HttpChatBackend b(s.config());
    CHECK_THROWS_AS(b.complete(ChatRequest{"", "x"}), Error);
    CHECK(s.calls.load() == 1);
  }

  TEST_CASE("http: a reply without content is a protocol error") {
    FakeServer s(0);
    HttpChatBackend b(s.config("/bad"));
    try {
      b.complete(ChatRequest{"", "x"});
      FAIL("expected ProtocolError");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::ProtocolError);
    }
  }

  TEST_CASE("http: unreachable endpoint raises BackendUnavailable") {
    HttpConfig c;
    c.base_url = "http://127.0.0.1:1/v1";
    c.model = "m";
    c.max_attempts = 2;
    c.initial_backoff_ms = 1;
    c.timeout_s = 1;
    HttpChatBackend b(c);
    try {
      b.complete(ChatRequest{"", "x"});
      FAIL("expected BackendUnavailable");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::BackendUnavailable);
    }
    CHECK(b.attempts() == 2);
  }

  TEST_CASE("http embeddings are normalized") {
    FakeServer s(0);
    HttpEmbeddingProvider p(s.config());
    auto v = p.embed({"a", "b"});
    REQUIRE(v.size() == 2);
    CHECK(v[0][0] == doctest::Approx(1.0));
    CHECK(v[1][0] == doctest::Approx(0.6));
    CHECK(v[1][1] == doctest::Approx(0.8));
  }
}
