// Acceptance checks. One PASS/FAIL line per criterion; exit status is the
// number of failures. Tolerances and limits are pinned below.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <functional>
#include <map>
#include <set>
#include <string>

#include "stylefx/corpus.hpp"
#include "stylefx/feature_catalog.hpp"
#include "stylefx/genharness.hpp"
#include "stylefx/io.hpp"
#include "stylefx/judge.hpp"
#include "stylefx/mitigate.hpp"
#include "stylefx/refmodel.hpp"
#include "stylefx/rng.hpp"
#include "stylefx/simulator.hpp"
#include "stylefx/stats.hpp"
#include "stylefx/steering.hpp"
#include "support.hpp"

using namespace stylefx;
namespace fs = std::filesystem;

namespace {

constexpr double kBinomTol = 1e-12;
constexpr double kBinomMaxSeconds = 1.0;
constexpr double kPipelineTol = 0.05;
constexpr std::size_t kPipelineMinJudged = 100;
constexpr double kPipelineMaxSeconds = 120.0;
constexpr std::size_t kPipelineRuns = 8;
constexpr std::size_t kPipelineSamples = 3;
constexpr double kPositionBand = 0.04;
constexpr std::size_t kPositionTrials = 1000;
constexpr double kMinCosine = 0.9;
constexpr double kMinPlusFlip = 0.9;
constexpr double kMaxMinusFlip = 0.1;
constexpr std::size_t kTrainPairs = 32;
constexpr std::size_t kHeldOut = 50;
constexpr double kPlantedMaxSeconds = 60.0;
constexpr std::size_t kBakePrompts = 16;
constexpr double kAlpha = 0.05;

struct Outcome {
  bool pass = false;
  std::string detail;
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(const char* f, double a) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

Outcome binomial_oracle() {
  const auto t0 = std::chrono::steady_clock::now();
  double worst = 0.0;
  for (std::size_t n = 1; n <= 20; ++n)
    for (std::size_t k = 0; k <= n; ++k)
      worst = std::max(worst, std::abs(binom_two_sided_p(k, n) - testing::brute_binom_p(k, n)));
  const bool spots = binom_two_sided_p(2, 10) == 0.109375 && binom_two_sided_p(0, 10) == 0.001953125;
  const double secs = seconds_since(t0);
  return {worst <= kBinomTol && spots && secs < kBinomMaxSeconds,
          "max|diff|=" + fmt("%.3g", worst) + " spots=" + (spots ? "ok" : "bad") + " t=" + fmt("%.3fs", secs)};
}

Outcome pipeline_oracle() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto model = load_sim_model(testing::data_dir() / "sim_world.json");
  const auto seeds = load_seeds(testing::data_dir() / "seeds.jsonl");
  SimChatBackend sim(model);
  MarkerJudgeBackend judge(model);
  std::vector<std::string> features;
  for (const auto& [f, vocab] : model.marker_vocab) features.push_back(f);
  const auto catalog = StyleCatalog::from_names(features);

  // Each run draws one neutral reference per seed; pooling independent runs
  // averages over references as well as over styled samples.
  std::vector<ComparisonRecord> records;
  for (std::size_t run = 0; run < kPipelineRuns; ++run) {
    GenerationOptions gen;
    gen.rng_seed = hash_combine(2024, run);
    std::map<std::string, StyledResponse> refs;
    for (const auto& s : seeds) refs.emplace(s.seed_id, generate_neutral_reference(sim, s, gen));
    for (const auto& main : features) {
      auto batch = generate_batch(sim, seeds, PromptSpec::single(main), kPipelineSamples, gen);
      if (!batch.complete) return {false, "generation incomplete: " + batch.error};
      auto r = judge_against_references(judge, batch.records, refs, features, true, gen.rng_seed, 1);
      records.insert(records.end(), r.begin(), r.end());
    }
  }
  const auto matrix = build_win_matrix(records, catalog, kAlpha);

  double worst = 0.0;
  std::size_t min_judged = SIZE_MAX, checked = 0, sign_errors = 0, length_mismatch = 0;
  for (const auto& main : features) {
    const std::size_t len_c = testing::oracle_length(model, main);
    for (const auto& side : features) {
      const auto& cell = matrix.at(main, side);
      if (cell.no_data()) return {false, "NoData at " + main + "/" + side};
      const double p_c = model.marker_density * (1.0 + testing::oracle_weight(model, main, side));
      const double expect = testing::expected_marker_rate(len_c, p_c, model.base_length, model.marker_density);
      worst = std::max(worst, std::abs(*cell.rate - expect));
      min_judged = std::min(min_judged, cell.judged);
      ++checked;
    }
    // Length is deterministic: equal lengths are all-Unknown, otherwise 0 or 1.
    const auto& len_cell = matrix.at(main, kLengthFeature);
    if (len_c == model.base_length) {
      length_mismatch += !len_cell.no_data();
    } else {
      const double expect = len_c > model.base_length ? 1.0 : 0.0;
      length_mismatch += len_cell.no_data() || *len_cell.rate != expect;
    }
  }
  for (const auto& [key, value] : model.contamination) {
    if (value == 0.0) continue;
    const double rate = *matrix.at(key.first, key.second).rate;
    sign_errors += (value > 0) != (rate > 0.5);
  }
  const double cn_ex = *matrix.at("concise", "expert").rate;
  const double secs = seconds_since(t0);
  const bool pass = worst <= kPipelineTol && min_judged >= kPipelineMinJudged && sign_errors == 0 &&
                    length_mismatch == 0 && cn_ex < 0.5 && secs < kPipelineMaxSeconds;
  return {pass, "cells=" + std::to_string(checked) + " max|rate-analytic|=" + fmt("%.4f", worst) +
                    " min_judged=" + std::to_string(min_judged) + " sign_errors=" + std::to_string(sign_errors) +
                    " length_mismatch=" + std::to_string(length_mismatch) + " concise->expert=" +
                    fmt("%.3f", cn_ex) + " t=" + fmt("%.1fs", secs)};
}

Outcome position_bias() {
  ConstantBackend always_a("A");
  std::vector<StyledResponse> cands;
  std::map<std::string, StyledResponse> refs;
  for (std::size_t i = 0; i < kPositionTrials; ++i) {
    const auto id = "s" + std::to_string(i);
    cands.push_back({id, PromptSpec::single("concise"), 1, "candidate text", 2, "stub"});
    refs.emplace(id, StyledResponse{id, PromptSpec::neutral(), 1, "reference text", 2, "stub"});
  }
  const auto records = judge_against_references(always_a, cands, refs, {"concise"}, false, 99, 4);
  const auto w = win_rate(records);
  const auto [lo, hi] = testing::binom_central_band(kPositionTrials);
  const bool band_ok = static_cast<double>(lo) / kPositionTrials >= 0.5 - kPositionBand &&
                       static_cast<double>(hi) / kPositionTrials <= 0.5 + kPositionBand;
  const bool pass = w.judged == kPositionTrials && w.wins >= lo && w.wins <= hi && band_ok &&
                    std::abs(*w.rate - 0.5) <= kPositionBand;
  return {pass, "rate=" + fmt("%.3f", *w.rate) + " judged=" + std::to_string(w.judged) + " band=[" +
                    std::to_string(lo) + "," + std::to_string(hi) + "]"};
}

bool decides_a(const Checkpoint& ckpt, const Tokens& prompt, std::span<const Intervention> iv) {
  const auto logits = forward_with_capture(ckpt, prompt, -1, {}, iv).logits;
  return logits['A'] > logits['B'];
}

Outcome planted_direction() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto pm = testing::make_planted_model(11);
  const auto seeds = load_seeds(testing::data_dir() / "seeds.jsonl");
  std::vector<TrainExample> train;
  for (std::size_t i = 0; i < kTrainPairs; ++i)
    train.push_back({seeds[2 * i].seed_id, seeds[2 * i].topic, seeds[2 * i].first_message,
                     "Sure, here is a careful, precise answer.", "ok"});
  const auto pairs = build_contrastive_pairs(train, "expert").pairs;
  const std::size_t layer = default_layer(pm.ckpt.config.n_layers);
  const auto vectors = extract_steering_vectors(pm.ckpt, pairs, "expert", {layer}, -2, 4);
  const auto& v = vectors.at(0).vector;
  const double cos = testing::cosine(v, pm.direction);

  const auto plus = apply_layer_offset(pm.ckpt, layer, v);
  const auto minus = apply_layer_offset(pm.ckpt, layer, scaled(v, -1.0));
  std::size_t base_a = 0, plus_flip = 0, minus_flip = 0;
  for (std::size_t i = 0; i < kHeldOut; ++i) {
    const auto& s = seeds[2 * i + 1];
    const auto prompt =
        encode_chat("", contrastive_body(s.topic, "expert", s.first_message, "A styled reply here.", "plain reply"));
    const bool base = decides_a(pm.ckpt, prompt, {});
    base_a += base;
    plus_flip += decides_a(pm.ckpt, prompt, std::span(&plus, 1)) != base;
    minus_flip += decides_a(pm.ckpt, prompt, std::span(&minus, 1)) != base;
  }
  const double plus_rate = static_cast<double>(plus_flip) / kHeldOut;
  const double minus_rate = static_cast<double>(minus_flip) / kHeldOut;
  const double secs = seconds_since(t0);
  const bool pass = pairs.size() >= 32 && cos >= kMinCosine && base_a == 0 && plus_rate >= kMinPlusFlip &&
                    minus_rate <= kMaxMinusFlip && secs < kPlantedMaxSeconds;
  return {pass, "layer=" + std::to_string(layer) + " pairs=" + std::to_string(pairs.size()) +
                    " cos=" + fmt("%.4f", cos) + " baseline_A=" + std::to_string(base_a) + "/" +
                    std::to_string(kHeldOut) + " +v_flip=" + fmt("%.2f", plus_rate) + " -v_flip=" +
                    fmt("%.2f", minus_rate) + " t=" + fmt("%.1fs", secs)};
}

Outcome bake_equivalence() {
  ModelConfig cfg;
  cfg.init_seed = 5;
  const auto ckpt = init_model(cfg);
  Rng rng(77);
  const std::size_t layer = rng.below(cfg.n_layers);
  std::vector<float> offset(cfg.d_model);
  for (auto& x : offset) x = static_cast<float>(rng.uniform01() * 2.0 - 1.0);
  const auto baked = bake_bias(ckpt, layer, offset);
  const auto path = fs::temp_directory_path() / ("stylefx_accept_" + hex64(rng.next_u64()) + ".ckpt");
  const auto reloaded = checkpoint_roundtrip(baked, path);
  fs::remove(path);
  const auto iv = apply_layer_offset(ckpt, layer, offset);
  std::size_t hook_mismatch = 0, roundtrip_mismatch = 0;
  for (std::size_t i = 0; i < kBakePrompts; ++i) {
    Tokens prompt(8 + rng.below(56));
    for (auto& t : prompt) t = static_cast<int>(32 + rng.below(95));
    const auto hooked = forward_with_capture(ckpt, prompt, -1, {}, std::span(&iv, 1)).logits;
    const auto fixed = forward_with_capture(baked, prompt, -1, {}).logits;
    const auto loaded = forward_with_capture(reloaded, prompt, -1, {}).logits;
    hook_mismatch += fixed != hooked;
    roundtrip_mismatch += loaded != fixed;
  }
  const bool same_ckpt = reloaded == baked;
  return {hook_mismatch == 0 && roundtrip_mismatch == 0 && same_ckpt,
          "layer=" + std::to_string(layer) + " prompts=" + std::to_string(kBakePrompts) + " hook_mismatch=" +
              std::to_string(hook_mismatch) + " roundtrip_mismatch=" + std::to_string(roundtrip_mismatch) +
              " checkpoint_equal=" + (same_ckpt ? "yes" : "no")};
}

Outcome clustering_regression() {
  const auto dir = testing::data_dir();
  const auto cands = filter_by_frequency(
      normalize_mentions(load_mentions(dir / "mentions.jsonl"), load_adjectivization_table(dir / "adjectivization.tsv")),
      5);
  const auto emb = load_embedding_fixture(dir / "embeddings.json");
  const auto clusters = cluster_features(cands, emb, 0.5);
  const auto catalog = canonicalize_catalog(clusters, emb);
  std::set<std::set<std::string>> multi;
  for (const auto& c : clusters)
    if (c.members.size() > 1) {
      std::set<std::string> s;
      for (const auto& m : c.members) s.insert(m.lemma);
      multi.insert(s);
    }
  const std::set<std::set<std::string>> want{
      {"concise", "short"}, {"expert", "professional"}, {"helpful", "informative"}, {"empathetic", "caring"}};
  const bool pass = cands.size() == 16 && catalog.size() == 12 && multi == want;
  return {pass, "candidates=" + std::to_string(cands.size()) + " features=" + std::to_string(catalog.size()) +
                    " merges=" + std::to_string(multi.size())};
}

Outcome split_correctness() {
  const auto seeds = load_seeds(testing::data_dir() / "seeds.jsonl",
                                load_topics(testing::data_dir() / "topics.json"));
  const auto a = split_dataset(seeds, {3, 1, 1}, 42);
  const auto b = split_dataset(seeds, {3, 1, 1}, 42);
  std::map<std::string, std::string> stratum;
  for (const auto& s : seeds) stratum[s.seed_id] = std::string(to_string(s.domain)) + "/" + s.topic;
  std::map<std::string, std::array<int, 3>> counts;
  const std::vector<std::string>* parts[3] = {&a.train, &a.validation, &a.test};
  for (int p = 0; p < 3; ++p)
    for (const auto& id : *parts[p]) ++counts[stratum.at(id)][p];
  std::size_t bad_strata = 0;
  for (const auto& [k, c] : counts) bad_strata += c != std::array<int, 3>{6, 2, 2};
  const auto pa = fs::temp_directory_path() / "stylefx_accept_split_a.json";
  const auto pb = fs::temp_directory_path() / "stylefx_accept_split_b.json";
  save_split(a, pa);
  save_split(b, pb);
  const bool identical = read_text_file(pa) == read_text_file(pb);
  fs::remove(pa);
  fs::remove(pb);
  const bool pass = a.train.size() == 120 && a.validation.size() == 40 && a.test.size() == 40 &&
                    counts.size() == 20 && bad_strata == 0 && identical;
  return {pass, std::to_string(a.train.size()) + "/" + std::to_string(a.validation.size()) + "/" +
                    std::to_string(a.test.size()) + " strata=" + std::to_string(counts.size()) +
                    " off_6_2_2=" + std::to_string(bad_strata) + " byte_identical=" + (identical ? "yes" : "no")};
}

Outcome table2_roundtrip() {
  const auto reports = load_mitigation_counts(testing::data_dir() / "table2_counts.csv", kAlpha);
  auto find = [&](const std::string& main) -> const MitigationReport* {
    for (const auto& r : reports)
      if (r.pair.main == main) return &r;
    return nullptr;
  };
  const auto* ce = find("concise");
  const auto* pe = find("polite");
  if (ce == nullptr || pe == nullptr) return {false, "missing report"};
  struct Want {
    const MitigationReport* r;
    Method m;
    const char* f;
    double v;
  };
  const Want wants[] = {{ce, Method::OnlyMain, "concise", 0.812}, {ce, Method::OnlyMain, "expert", 0.281},
                        {ce, Method::Prompting, "expert", 0.709}, {ce, Method::Steering, "concise", 0.367},
                        {pe, Method::OnlyMain, "polite", 0.697},  {pe, Method::Prompting, "polite", 0.983}};
  std::size_t value_errors = 0, star_errors = 0, cells = 0;
  for (const auto& w : wants) {
    const auto c = w.r->cell(w.m, w.f);
    value_errors += c.no_data() || *c.rate != w.v;
  }
  for (const auto& r : reports)
    for (const auto& [key, c] : r.cells) {
      ++cells;
      const bool oracle_sig = testing::brute_binom_p(c.wins, c.judged) <= kAlpha;
      const bool starred_sig = starred(c).back() == '*';
      star_errors += oracle_sig != starred_sig || oracle_sig != c.significant;
    }
  return {value_errors == 0 && star_errors == 0 && cells == 40,
          "reports=" + std::to_string(reports.size()) + " cells=" + std::to_string(cells) +
              " value_errors=" + std::to_string(value_errors) + " star_errors=" + std::to_string(star_errors)};
}

Outcome screening_regression() {
  const auto rows = load_count_rows(testing::data_dir() / "pooled_matrix_counts.csv");
  std::vector<std::string> mains;
  for (const auto& r : rows)
    if (r.main == r.side) mains.push_back(r.main);
  const auto matrix = matrix_from_counts(rows, mains, kAlpha);
  const auto hits = screen_side_effects(matrix, kAlpha);
  std::set<std::pair<std::string, std::string>> flagged;
  std::size_t diagonal = 0;
  for (const auto& h : hits) {
    if (h.polarity == Polarity::Degradation) flagged.insert({h.main, h.side});
    diagonal += h.main == h.side;
  }
  std::size_t found = 0;
  for (const auto& p : default_pairs()) found += flagged.contains({p.main, p.side});
  return {mains.size() == 12 && found == 5 && diagonal == 0,
          "flagged=" + std::to_string(hits.size()) + " table_pairs_found=" + std::to_string(found) +
              "/5 diagonal=" + std::to_string(diagonal)};
}

}  // namespace

int main() {
  const std::pair<const char*, std::function<Outcome()>> criteria[] = {
      {"binomial-oracle", binomial_oracle},
      {"pipeline-oracle-equivalence", pipeline_oracle},
      {"position-bias-neutralization", position_bias},
      {"caa-planted-direction", planted_direction},
      {"bake-hook-equivalence", bake_equivalence},
      {"clustering-regression", clustering_regression},
      {"split-correctness", split_correctness},
      {"table2-fixture-roundtrip", table2_roundtrip},
      {"screening-regression", screening_regression},
  };
  int failures = 0, index = 0;
  for (const auto& [name, run] : criteria) {
    ++index;
    Outcome o;
    try {
      o = run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failures += !o.pass;
    std::printf("%s %d %s: %s\n", o.pass ? "PASS" : "FAIL", index, name, o.detail.c_str());
    std::fflush(stdout);
  }
  return failures;
}
