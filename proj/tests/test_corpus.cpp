#include <filesystem>
#include <fstream>
#include <map>
#include <set>

#include "doctest.h"
#include "stylefx/corpus.hpp"
#include "stylefx/error.hpp"
#include "support.hpp"

using namespace stylefx;

namespace {

std::filesystem::path write_tmp(const std::string& name, const std::string& text) {
  auto p = std::filesystem::temp_directory_path() / name;
  std::ofstream(p) << text;
  return p;
}

std::vector<DialogueSeed> one_stratum(std::size_t n) {
  std::vector<DialogueSeed> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back({"s" + std::to_string(i), Domain::Daily, "Work", "hi"});
  return out;
}

}  // namespace

TEST_SUITE("corpus") {
  TEST_CASE("bundled fixture: 200 seeds over 2 x 10 topics") {
    auto topics = load_topics(testing::data_dir() / "topics.json");
    auto seeds = load_seeds(testing::data_dir() / "seeds.jsonl", topics);
    CHECK(seeds.size() == 200);
    std::map<std::pair<Domain, std::string>, int> strata;
    for (const auto& s : seeds) ++strata[{s.domain, s.topic}];
    CHECK(strata.size() == 20);
    for (const auto& [k, n] : strata) CHECK(n == 10);
    bool found = false;
    for (const auto& s : seeds)
      found |= s.domain == Domain::Daily && s.topic == "Finance" && s.first_message == "It's all over . I'm bankrupt .";
    CHECK(found);
  }

  TEST_CASE("malformed records name the line") {
    auto p = write_tmp("stylefx_seeds_bad.jsonl",
                       "{\"seed_id\":\"a\",\"domain\":\"Daily\",\"topic\":\"Work\",\"first_message\":\"hi\"}\n"
                       "{\"seed_id\":\"b\",\"domain\":\"Daily\",\"topic\":\"Work\",\"first_message\":\"  \"}\n");
    try {
      load_seeds(p);
      FAIL("expected ParseError");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::ParseError);
      CHECK(std::string(e.what()).find("record 2") != std::string::npos);
    }
    auto q = write_tmp("stylefx_seeds_topic.jsonl",
                       "{\"seed_id\":\"a\",\"domain\":\"Daily\",\"topic\":\"Cooking\",\"first_message\":\"hi\"}\n");
    TopicSets topics{{Domain::Daily, {"Work"}}};
    try {
      load_seeds(q, topics);
      FAIL("expected UnknownTopic");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::UnknownTopic);
    }
  }

  TEST_CASE("ten seeds split 6/2/2") {
    auto s = split_dataset(one_stratum(10), {3, 1, 1}, 1);
    CHECK(s.train.size() == 6);
    CHECK(s.validation.size() == 2);
    CHECK(s.test.size() == 2);
  }

  TEST_CASE("remainders go train, validation, test and stay within one of the ratio") {
    for (std::size_t n = 1; n <= 40; ++n) {
      auto s = split_dataset(one_stratum(n), {3, 1, 1}, 7);
      const double w[3] = {0.6, 0.2, 0.2};
      const std::size_t c[3] = {s.train.size(), s.validation.size(), s.test.size()};
      CHECK(c[0] + c[1] + c[2] == n);
      for (int i = 0; i < 3; ++i) CHECK(std::abs(static_cast<double>(c[i]) - n * w[i]) <= 1.0);
      CHECK(c[0] >= c[1]);
    }
    auto s7 = split_dataset(one_stratum(7), {3, 1, 1}, 7);
    CHECK(s7.train.size() == 5);
    CHECK(s7.validation.size() == 1);
    CHECK(s7.test.size() == 1);
  }

  TEST_CASE("split is a partition and deterministic; seed changes membership") {
    auto seeds = load_seeds(testing::data_dir() / "seeds.jsonl");
    auto a = split_dataset(seeds, {3, 1, 1}, 42);
    auto b = split_dataset(seeds, {3, 1, 1}, 42);
    CHECK(split_to_json(a) == split_to_json(b));
    std::set<std::string> all;
    for (const auto* part : {&a.train, &a.validation, &a.test}) all.insert(part->begin(), part->end());
    CHECK(all.size() == 200);
    auto c = split_dataset(seeds, {3, 1, 1}, 43);
    CHECK(c.test != a.test);
    auto back = split_from_json(split_to_json(a));
    CHECK(back.train == a.train);
    CHECK(split_hash(back) == split_hash(a));
  }

  TEST_CASE("empty corpus is rejected") { CHECK_THROWS_AS(split_dataset({}, {3, 1, 1}, 0), Error); }
}
