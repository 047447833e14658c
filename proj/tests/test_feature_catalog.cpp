#include <algorithm>
#include <random>
#include <set>

#include "doctest.h"
#include "stylefx/backend.hpp"
#include "stylefx/error.hpp"
#include "stylefx/feature_catalog.hpp"
#include "support.hpp"

using namespace stylefx;

namespace {

CandidateFeature cand(std::string lemma, std::size_t freq) { return {std::move(lemma), freq, {}}; }

std::set<std::set<std::string>> partition(const std::vector<FeatureCluster>& clusters) {
  std::set<std::set<std::string>> out;
  for (const auto& c : clusters) {
    std::set<std::string> s;
    for (const auto& m : c.members) s.insert(m.lemma);
    out.insert(s);
  }
  return out;
}

struct Fixture {
  std::vector<CandidateFeature> candidates;
  EmbeddingMap embeddings;
};

Fixture survey_fixture() {
  auto dir = testing::data_dir();
  auto mentions = load_mentions(dir / "mentions.jsonl");
  auto table = load_adjectivization_table(dir / "adjectivization.tsv");
  return {filter_by_frequency(normalize_mentions(mentions, table), 5), load_embedding_fixture(dir / "embeddings.json")};
}

}  // namespace

TEST_SUITE("feature_catalog") {
  TEST_CASE("mentions are trimmed and lowercased; empty forms rejected") {
    auto m = make_mention("  Concise ", "P1", "a");
    CHECK(m.surface_form == "concise");
    CHECK_THROWS_AS(make_mention("   ", "P1", "a"), Error);
  }

  TEST_CASE("normalize groups through the table and counts distinct papers") {
    std::vector<RawFeatureMention> ms{make_mention("conciseness", "P1", "a"), make_mention("concise", "P2", "b"),
                                      make_mention("helpful", "P1", "a"), make_mention("helpful", "P1", "c")};
    auto out = normalize_mentions(ms, {{"conciseness", "concise"}});
    REQUIRE(out.size() == 2);
    CHECK(out[0].lemma == "concise");
    CHECK(out[0].frequency == 2);
    CHECK(out[0].mentions.size() == 2);
    CHECK(out[1].lemma == "helpful");
    CHECK(out[1].frequency == 1);
    CHECK_THROWS_AS(normalize_mentions({}, {}), Error);
  }

  TEST_CASE("survey fixture: 462 lemmas, three quarters singletons") {
    auto dir = testing::data_dir();
    auto cands = normalize_mentions(load_mentions(dir / "mentions.jsonl"),
                                    load_adjectivization_table(dir / "adjectivization.tsv"));
    CHECK(cands.size() == 462);
    const auto singles = std::count_if(cands.begin(), cands.end(), [](const auto& c) { return c.frequency == 1; });
    CHECK(static_cast<double>(singles) / cands.size() == doctest::Approx(0.75).epsilon(0.01));
  }

  TEST_CASE("frequency filter: inclusive boundary, identity at 1, nested") {
    std::vector<CandidateFeature> cs{cand("a", 4), cand("b", 5), cand("c", 9)};
    auto f5 = filter_by_frequency(cs, 5);
    REQUIRE(f5.size() == 2);
    CHECK(f5[0].lemma == "b");
    CHECK(filter_by_frequency(cs, 1).size() == 3);
    for (std::size_t k = 1; k < 10; ++k) CHECK(filter_by_frequency(cs, k).size() >= filter_by_frequency(cs, k + 1).size());
    CHECK_THROWS_AS(filter_by_frequency(cs, 0), Error);
  }

  TEST_CASE("survey fixture filters to the 16 candidates") {
    auto fx = survey_fixture();
    CHECK(fx.candidates.size() == 16);
  }

  TEST_CASE("identical embeddings merge, orthogonal ones do not") {
    std::vector<CandidateFeature> cs{cand("x", 1), cand("y", 1)};
    CHECK(cluster_features(cs, {{"x", {1, 0}}, {"y", {1, 0}}}, 0.5).size() == 1);
    CHECK(cluster_features(cs, {{"x", {1, 0}}, {"y", {0, 1}}}, 0.5).size() == 2);
  }

  TEST_CASE("threshold is strict") {
    std::vector<CandidateFeature> cs{cand("x", 1), cand("y", 1)};
    EmbeddingMap e{{"x", {1.0, 0.0}}, {"y", {1.0, 1.0}}};
    const double sim = dot(normalized(e["x"]), normalized(e["y"]));
    CHECK(cluster_features(cs, e, sim).size() == 2);
    CHECK(cluster_features(cs, e, std::nextafter(sim, 0.0)).size() == 1);
  }

  TEST_CASE("missing embedding is reported by lemma") {
    std::vector<CandidateFeature> cs{cand("x", 1), cand("ghost", 1)};
    try {
      cluster_features(cs, {{"x", {1, 0}}}, 0.5);
      FAIL("expected MissingEmbedding");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::MissingEmbedding);
      CHECK(std::string(e.what()).find("ghost") != std::string::npos);
    }
  }

  TEST_CASE("fixture clustering reproduces the four merges") {
    auto fx = survey_fixture();
    auto clusters = cluster_features(fx.candidates, fx.embeddings, 0.5);
    CHECK(clusters.size() == 12);
    auto parts = partition(clusters);
    for (auto [a, b] : {std::pair{"concise", "short"}, std::pair{"expert", "professional"},
                        std::pair{"helpful", "informative"}, std::pair{"empathetic", "caring"}})
      CHECK(parts.contains(std::set<std::string>{a, b}));
  }

  TEST_CASE("clustering is a permutation-invariant partition") {
    auto fx = survey_fixture();
    const auto reference = partition(cluster_features(fx.candidates, fx.embeddings, 0.5));
    std::mt19937 gen(3);
    for (int trial = 0; trial < 20; ++trial) {
      auto shuffled = fx.candidates;
      std::shuffle(shuffled.begin(), shuffled.end(), gen);
      auto clusters = cluster_features(shuffled, fx.embeddings, 0.5);
      CHECK(partition(clusters) == reference);
      std::multiset<std::string> seen;
      for (const auto& c : clusters)
        for (const auto& m : c.members) seen.insert(m.lemma);
      std::multiset<std::string> expect;
      for (const auto& c : fx.candidates) expect.insert(c.lemma);
      CHECK(seen == expect);
    }
  }

  TEST_CASE("raising the threshold never reduces the cluster count") {
    auto fx = survey_fixture();
    std::size_t prev = 0;
    for (double t = -0.5; t < 1.0; t += 0.05) {
      const auto n = cluster_features(fx.candidates, fx.embeddings, t).size();
      CHECK(n >= prev);
      prev = n;
    }
  }

  TEST_CASE("canonical member: highest frequency, lexicographic tie-break") {
    FeatureCluster a{{cand("concise", 12), cand("short", 7)}, {}};
    FeatureCluster b{{cand("y", 3), cand("x", 3)}, {}};
    auto cat = canonicalize_catalog(std::vector<FeatureCluster>{a, b});
    CHECK(cat.features() == std::vector<std::string>{"concise", "x"});
    CHECK(cat.canonical_of("short") == "concise");
    CHECK(cat.canonical_of("y") == "x");
    CHECK(cat.frequency("concise") == 19);
    CHECK_THROWS_AS(canonicalize_catalog(std::vector<FeatureCluster>{}), Error);
  }

  TEST_CASE("fixture catalog has the twelve canonical features with unit embeddings") {
    auto fx = survey_fixture();
    auto cat = canonicalize_catalog(cluster_features(fx.candidates, fx.embeddings, 0.5), fx.embeddings);
    const std::set<std::string> got(cat.features().begin(), cat.features().end());
    const std::set<std::string> want{"concise", "expert", "helpful", "empathetic", "friendly", "detailed",
                                     "engaging", "curious", "polite", "impartial", "outgoing", "efficient"};
    CHECK(got == want);
    for (const auto& f : cat.features()) {
      const auto* e = cat.embedding(f);
      REQUIRE(e != nullptr);
      CHECK(std::sqrt(dot(*e, *e)) == doctest::Approx(1.0).epsilon(1e-12));
    }
  }

  TEST_CASE("catalog validation and round trip") {
    CHECK_THROWS_AS(StyleCatalog({"a", "a"}, {}), Error);
    CHECK_THROWS_AS(StyleCatalog({"a"}, {{"b", "zzz"}}), Error);
    CHECK_THROWS_AS(StyleCatalog({"a"}, {}, {{"a", {2.0, 0.0}}}), Error);
    auto fx = survey_fixture();
    auto cat = canonicalize_catalog(cluster_features(fx.candidates, fx.embeddings, 0.5), fx.embeddings);
    auto path = std::filesystem::temp_directory_path() / "stylefx_catalog_test.jsonl";
    save_catalog(cat, path);
    auto back = load_catalog(path);
    CHECK(back.features() == cat.features());
    CHECK(back.alias_map() == cat.alias_map());
    CHECK(catalog_to_jsonl(back) == catalog_to_jsonl(cat));
    std::filesystem::remove(path);
  }
}
