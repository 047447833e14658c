#include <atomic>
#include <set>

#include "doctest.h"
#include "stylefx/error.hpp"
#include "stylefx/genharness.hpp"
#include "stylefx/simulator.hpp"
#include "support.hpp"

using namespace stylefx;

namespace {

// Echoes the system prompt; fails after `budget` calls.
class EchoBackend : public ChatBackend {
 public:
  explicit EchoBackend(int budget = 1 << 30) : budget_(budget) {}
  ChatResponse complete(const ChatRequest& r) override {
    if (budget_.fetch_sub(1) <= 0) throw Error(ErrorKind::BackendUnavailable, "down");
    return {r.system_prompt + " #" + std::to_string(r.sample_index), "echo", 0, 0};
  }
  std::string id() const override { return "echo"; }

 private:
  std::atomic<int> budget_;
};

DialogueSeed seed(std::string id, std::string topic = "Finance") {
  return {std::move(id), Domain::Daily, std::move(topic), "It's all over . I'm bankrupt ."};
}

}  // namespace

TEST_SUITE("genharness") {
  TEST_CASE("system prompt templates") {
    CHECK(build_system_prompt("Finance", PromptSpec::neutral()) == "You are having a conversation about Finance.");
    CHECK(build_system_prompt("Finance", PromptSpec::single("concise")) ==
          "You are having a conversation about Finance. Please be concise in your response.");
    CHECK(build_system_prompt("Finance", PromptSpec::pair("concise", "expert", false)) ==
          "You are a helpful assistant having a conversation about Finance. Please be concise but expert in your "
          "response.");
    CHECK(build_system_prompt("Finance", PromptSpec::pair("concise", "expert", true, Joiner::And)) ==
          "You are a helpful assistant having a conversation about Finance. Please be expert and concise in your "
          "response.");
  }

  TEST_CASE("spec validation and keys") {
    PromptSpec bad = PromptSpec::single("x");
    bad.side_feature = "y";
    CHECK_THROWS_AS(validate_spec(bad), Error);
    PromptSpec missing;
    missing.mode = PromptMode::Single;
    CHECK_THROWS_AS(validate_spec(missing), Error);
    CHECK(PromptSpec::pair("concise", "expert", false).key() == "pair-normal:concise+expert:but~ha");
    std::set<std::string> keys;
    for (const auto& s : {PromptSpec::neutral(), PromptSpec::single("a"), PromptSpec::pair("a", "b", false),
                          PromptSpec::pair("a", "b", true), PromptSpec::pair("a", "b", false, Joiner::And)})
      keys.insert(s.key());
    CHECK(keys.size() == 5);
    for (auto m : {PromptMode::Neutral, PromptMode::Single, PromptMode::PairNormal, PromptMode::PairReversed,
                   PromptMode::SteeredSingle})
      CHECK(parse_prompt_mode(to_string(m)) == m);
  }

  TEST_CASE("batch output is ordered and independent of concurrency") {
    std::vector<DialogueSeed> seeds{seed("s1"), seed("s2", "Work"), seed("s3")};
    EchoBackend b;
    GenerationOptions o;
    auto one = generate_batch(b, seeds, PromptSpec::single("concise"), 3, o);
    o.max_concurrency = 8;
    auto many = generate_batch(b, seeds, PromptSpec::single("concise"), 3, o);
    REQUIRE(one.records.size() == 9);
    CHECK(one.complete);
    for (std::size_t i = 0; i < 9; ++i) {
      CHECK(one.records[i].id() == many.records[i].id());
      CHECK(one.records[i].text == many.records[i].text);
    }
    CHECK(one.records[0].id() == "s1/single:concise/1");
    CHECK(one.records[5].id() == "s2/single:concise/3");
  }

  TEST_CASE("backend failure keeps earlier records and marks the batch partial") {
    EchoBackend b(4);
    auto batch = generate_batch(b, {seed("s1"), seed("s2")}, PromptSpec::single("concise"), 3, {});
    CHECK_FALSE(batch.complete);
    CHECK(batch.records.size() == 4);
    CHECK_FALSE(batch.error.empty());
  }

  TEST_CASE("simulator responses are reproducible under a fixed seed") {
    SimChatBackend sim(load_sim_model(testing::data_dir() / "sim_world.json"));
    GenerationOptions o;
    o.rng_seed = 17;
    auto a = generate_samples(sim, seed("s1"), PromptSpec::single("concise"), 4, o);
    o.max_concurrency = 4;
    auto b = generate_samples(sim, seed("s1"), PromptSpec::single("concise"), 4, o);
    for (std::size_t i = 0; i < 4; ++i) CHECK(a.records[i].text == b.records[i].text);
    CHECK(a.records[0].text != a.records[1].text);
  }

  TEST_CASE("json round trip") {
    StyledResponse r{"s1", PromptSpec::pair("a", "b", true), 2, "hi there", 2, "sim"};
    r.spec.steered_feature = "a";
    auto back = styled_response_from_json(Json::parse(to_json(r).dump()));
    CHECK(back.id() == r.id());
    CHECK(back.spec == r.spec);
    CHECK(back.text == r.text);
  }
}
