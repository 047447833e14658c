// stylefx command-line driver. Each subcommand is one stage of a run stored
// under --run-dir; stages reuse record files that already exist.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "stylefx/backend.hpp"
#include "stylefx/corpus.hpp"
#include "stylefx/error.hpp"
#include "stylefx/feature_catalog.hpp"
#include "stylefx/genharness.hpp"
#include "stylefx/http_backend.hpp"
#include "stylefx/io.hpp"
#include "stylefx/judge.hpp"
#include "stylefx/mitigate.hpp"
#include "stylefx/refmodel.hpp"
#include "stylefx/report.hpp"
#include "stylefx/rng.hpp"
#include "stylefx/run_store.hpp"
#include "stylefx/simulator.hpp"
#include "stylefx/stats.hpp"
#include "stylefx/steering.hpp"

namespace fs = std::filesystem;
using namespace stylefx;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitPartial = 2;
constexpr int kExitBackend = 3;
constexpr int kExitConfig = 4;

struct Globals {
  std::string config_path;
  std::string run_dir = "runs/default";
  std::string backend;  // overrides config "backend"
  std::size_t max_concurrency = 0;
  std::optional<std::uint64_t> seed;
};

void log(const std::string& msg) { std::cerr << "[stylefx] " << msg << '\n'; }

int exit_code_for(ErrorKind k) {
  switch (k) {
    case ErrorKind::BackendUnavailable:
    case ErrorKind::ProtocolError:
      return kExitBackend;
    case ErrorKind::InvalidConfig:
    case ErrorKind::InvalidSpec:
    case ErrorKind::ParseError:
    case ErrorKind::UnknownTopic:
    case ErrorKind::UnknownFeature:
    case ErrorKind::IoError:
    case ErrorKind::ChecksumError:
    case ErrorKind::MissingEmbedding:
      return kExitConfig;
    default:
      return 1;
  }
}

[[noreturn]] void config_error(const std::string& msg) { throw Error(ErrorKind::InvalidConfig, msg); }

/// Loaded config plus everything derived from it.
class Context {
 public:
  explicit Context(const Globals& g) : globals_(g), store_(g.run_dir) {
    if (g.config_path.empty()) config_error("--config is required");
    config_path_ = fs::absolute(g.config_path);
    try {
      config_ = Json::parse(read_text_file(config_path_));
    } catch (const Json::parse_error& e) {
      throw Error(ErrorKind::ParseError, "config: " + std::string(e.what()));
    }
    backend_ = !g.backend.empty() ? g.backend : config_.value("backend", std::string("sim"));
    if (backend_ != "sim" && backend_ != "http" && backend_ != "refmodel")
      config_error("unknown backend '" + backend_ + "' (sim|http|refmodel)");
    seed_ = g.seed ? *g.seed : config_.value("seed", std::uint64_t{0});
    // Command-line overrides change the records, so they are part of the hash.
    Json effective = config_;
    effective["backend"] = backend_;
    effective["seed"] = seed_;
    config_hash_ = hex64(fnv1a64(effective.dump()));
    concurrency_ = g.max_concurrency ? g.max_concurrency : config_.value("max_concurrency", std::size_t{1});

    if (store_.has_manifest()) {
      manifest_ = store_.load_manifest();
      if (manifest_.config_hash != config_hash_)
        config_error("run dir " + g.run_dir + " was created with a different config (hash " + manifest_.config_hash +
                     "); use a new --run-dir");
    } else {
      manifest_.run_id = fs::path(g.run_dir).filename().string();
      manifest_.config_hash = config_hash_;
      manifest_.timestamps["created"] = utc_timestamp();
    }
  }

  const Json& config() const { return config_; }
  RunStore& store() { return store_; }
  RunManifest& manifest() { return manifest_; }
  std::uint64_t seed() const { return seed_; }
  std::size_t concurrency() const { return concurrency_; }
  const std::string& backend_name() const { return backend_; }

  fs::path path(const std::string& key, const Json& section) const {
    if (!section.contains(key)) config_error("config is missing '" + key + "'");
    fs::path p = section.at(key).get<std::string>();
    return p.is_absolute() ? p : config_path_.parent_path() / p;
  }
  const Json& section(const std::string& name) const {
    static const Json empty = Json::object();
    return config_.contains(name) ? config_.at(name) : empty;
  }

  void begin(const std::string& stage, const std::vector<std::string>& needed) {
    require_predecessors(manifest_, stage, needed);
    manifest_.timestamps[stage + ".started"] = utc_timestamp();
  }
  void finish(const std::string& stage, const std::string& status) {
    manifest_.stage_status[stage] = status;
    manifest_.timestamps[stage + ".finished"] = utc_timestamp();
    store_.save_manifest(manifest_);
  }
  void save() { store_.save_manifest(manifest_); }

  GenerationOptions generation() const {
    const auto& g = section("generation");
    GenerationOptions o;
    o.temperature = g.value("temperature", 0.7);
    o.max_tokens = g.value("max_tokens", std::size_t{512});
    o.rng_seed = seed_;
    o.max_concurrency = concurrency_;
    return o;
  }
  std::size_t samples() const { return section("generation").value("samples", std::size_t{5}); }
  double alpha() const { return config_.value("alpha", 0.05); }

  JudgeOptions judge_options() const {
    const auto& j = section("judge");
    JudgeOptions o;
    o.strict = j.value("strict", false);
    o.temperature = j.value("temperature", 0.0);
    o.max_tokens = j.value("max_tokens", std::size_t{8});
    return o;
  }

  SimStyleModel& sim_model() {
    if (!sim_) sim_ = load_sim_model(path("sim_model", section("simulator")));
    return *sim_;
  }

  HttpConfig http_config(const Json& s) const {
    HttpConfig c;
    c.base_url = s.value("base_url", std::string());
    c.model = s.value("model", std::string());
    if (c.base_url.empty() || c.model.empty()) config_error("http backend needs base_url and model");
    if (s.contains("api_key_env"))
      if (const char* key = std::getenv(s.at("api_key_env").get<std::string>().c_str())) c.api_key = key;
    c.max_attempts = s.value("max_attempts", c.max_attempts);
    c.timeout_s = s.value("timeout_s", c.timeout_s);
    c.forced_temperature = s.value("forced_temperature", c.forced_temperature);
    return c;
  }

  Checkpoint& base_checkpoint() {
    if (!ckpt_) {
      const auto& r = section("refmodel");
      if (r.contains("checkpoint")) {
        ckpt_ = load_checkpoint(path("checkpoint", r));
      } else {
        ModelConfig mc;
        mc.n_layers = r.value("n_layers", mc.n_layers);
        mc.d_model = r.value("d_model", mc.d_model);
        mc.n_heads = r.value("n_heads", mc.n_heads);
        mc.d_ff = r.value("d_ff", mc.d_ff);
        mc.max_seq = r.value("max_seq", mc.max_seq);
        mc.init_seed = r.value("init_seed", mc.init_seed);
        ckpt_ = init_model(mc);
      }
    }
    return *ckpt_;
  }

  ChatBackend& generator() {
    if (!generator_) {
      if (backend_ == "sim") generator_ = std::make_unique<SimChatBackend>(sim_model());
      else if (backend_ == "http") generator_ = std::make_unique<HttpChatBackend>(http_config(section("http")));
      else generator_ = std::make_unique<RefModelBackend>(base_checkpoint());
      manifest_.backend_ids["generator"] = generator_->id();
    }
    return *generator_;
  }

  ChatBackend& judge() {
    if (!judge_) {
      const auto& j = section("judge");
      const auto kind = j.value("backend", backend_ == "http" ? std::string("http") : std::string("sim"));
      if (kind == "sim") judge_ = std::make_unique<MarkerJudgeBackend>(sim_model());
      else if (kind == "http") judge_ = std::make_unique<HttpChatBackend>(http_config(j.value("http", section("http"))));
      else config_error("unknown judge backend '" + kind + "' (sim|http)");
      manifest_.backend_ids["judge"] = judge_->id();
    }
    return *judge_;
  }

  std::vector<DialogueSeed> seeds() {
    if (seeds_.empty()) {
      const auto& c = section("corpus");
      TopicSets topics;
      if (c.contains("topics")) topics = load_topics(path("topics", c));
      seeds_ = load_seeds(path("seeds", c), topics);
    }
    return seeds_;
  }

  fs::path catalog_path() const { return store_.dir() / "catalog.jsonl"; }
  fs::path split_path() const { return store_.dir() / "split.json"; }
  StyleCatalog catalog() const { return load_catalog(catalog_path()); }
  CorpusSplit split() const { return load_split(split_path()); }

 private:
  Globals globals_;
  RunStore store_;
  fs::path config_path_;
  Json config_;
  std::string config_hash_;
  std::string backend_;
  std::uint64_t seed_ = 0;
  std::size_t concurrency_ = 1;
  RunManifest manifest_;
  std::optional<SimStyleModel> sim_;
  std::optional<Checkpoint> ckpt_;
  std::unique_ptr<ChatBackend> generator_;
  std::unique_ptr<ChatBackend> judge_;
  std::vector<DialogueSeed> seeds_;
};

std::vector<OrderedJson> as_json(const std::vector<StyledResponse>& rs) {
  std::vector<OrderedJson> out;
  for (const auto& r : rs) out.push_back(to_json(r));
  return out;
}

std::vector<OrderedJson> as_json(const std::vector<ComparisonRecord>& rs) {
  std::vector<OrderedJson> out;
  for (const auto& r : rs) out.push_back(to_json(r));
  return out;
}

std::vector<StyledResponse> read_responses(RunStore& store, std::string_view stage, std::string_view name) {
  std::vector<StyledResponse> out;
  for (const auto& j : store.read_records(stage, name)) out.push_back(styled_response_from_json(j));
  return out;
}

std::vector<ComparisonRecord> read_comparisons(const fs::path& file) {
  std::vector<ComparisonRecord> out;
  for (const auto& j : read_jsonl(file)) out.push_back(comparison_record_from_json(j));
  return out;
}

std::map<std::string, StyledResponse> by_seed(const std::vector<StyledResponse>& rs) {
  std::map<std::string, StyledResponse> out;
  for (const auto& r : rs) out.emplace(r.seed_id, r);
  return out;
}

/// Generates a record set unless it is already stored. Returns false when
/// the backend failed part-way; nothing is written in that case.
bool ensure_generated(Context& ctx, std::string_view stage, const std::string& name,
                      const std::function<GenerationBatch()>& run) {
  if (ctx.store().has_records(stage, name)) {
    log("reusing " + std::string(stage) + "/" + name);
    return true;
  }
  log("generating " + std::string(stage) + "/" + name);
  auto batch = run();
  if (!batch.complete) {
    log("backend failure in " + name + ": " + batch.error);
    return false;
  }
  ctx.store().write_records(stage, name, as_json(batch.records));
  return true;
}

std::vector<DialogueSeed> seeds_in(const std::vector<DialogueSeed>& all, const std::vector<std::string>& ids) {
  return select_seeds(all, ids);
}

// extract-features ---------------------------------------------------------

int cmd_extract(Context& ctx) {
  ctx.begin("extract", {});
  const auto& c = ctx.section("catalog");
  StyleCatalog catalog;
  if (c.contains("catalog_file")) {
    catalog = load_catalog(ctx.path("catalog_file", c));
  } else {
    const auto mentions = load_mentions(ctx.path("mentions", c));
    AdjectivizationTable table;
    if (c.contains("adjectivization")) table = load_adjectivization_table(ctx.path("adjectivization", c));
    const auto candidates =
        filter_by_frequency(normalize_mentions(mentions, table), c.value("min_frequency", std::size_t{5}));
    EmbeddingMap emb;
    if (c.contains("embeddings")) {
      emb = load_embedding_fixture(ctx.path("embeddings", c));
    } else {
      HttpEmbeddingProvider provider(ctx.http_config(c.at("embedding_http")));
      std::vector<std::string> lemmas;
      for (const auto& cand : candidates) lemmas.push_back(cand.lemma);
      const auto vecs = provider.embed(lemmas);
      for (std::size_t i = 0; i < lemmas.size(); ++i) emb[lemmas[i]] = vecs[i];
    }
    const auto clusters = cluster_features(candidates, emb, c.value("similarity_threshold", 0.5));
    catalog = canonicalize_catalog(clusters, emb);
    log(std::to_string(candidates.size()) + " candidates -> " + std::to_string(catalog.size()) + " features");
  }
  const auto text = catalog_to_jsonl(catalog);
  if (fs::exists(ctx.catalog_path()) && read_text_file(ctx.catalog_path()) != text)
    config_error("stored catalog differs from the recomputed one");
  write_text_file(ctx.catalog_path(), text);

  const auto& corpus = ctx.section("corpus");
  SplitRatio ratio{3, 1, 1};
  if (corpus.contains("split_ratio")) ratio = corpus.at("split_ratio").get<SplitRatio>();
  const auto split = split_dataset(ctx.seeds(), ratio, corpus.value("split_seed", ctx.seed()));
  if (fs::exists(ctx.split_path()) && split_hash(load_split(ctx.split_path())) != split_hash(split))
    config_error("stored split differs from the recomputed one");
  save_split(split, ctx.split_path());

  ctx.manifest().catalog_hash = hex64(fnv1a64(text));
  ctx.manifest().split_hash = split_hash(split);
  ctx.finish("extract", "complete");
  std::cout << "features: ";
  for (const auto& f : catalog.features()) std::cout << f << ' ';
  std::cout << "\nsplit: " << split.train.size() << '/' << split.validation.size() << '/' << split.test.size() << '\n';
  return kExitOk;
}

// generate / judge -------------------------------------------------------------

int cmd_generate(Context& ctx) {
  ctx.begin("generate", {"extract"});
  const auto catalog = ctx.catalog();
  const auto seeds = ctx.seeds();
  auto& backend = ctx.generator();
  const auto opts = ctx.generation();
  const auto n = ctx.samples();
  bool ok = ensure_generated(ctx, "generate", "neutral", [&] {
    GenerationBatch b;
    for (const auto& s : seeds) b.records.push_back(generate_neutral_reference(backend, s, opts));
    return b;
  });
  for (const auto& f : catalog.features()) {
    if (!ok) break;
    const auto spec = PromptSpec::single(f);
    ok = ensure_generated(ctx, "generate", spec.key(), [&] { return generate_batch(backend, seeds, spec, n, opts); });
  }
  ctx.manifest().extra["templates"]["neutral"] = build_system_prompt("{topic}", PromptSpec::neutral());
  ctx.manifest().extra["templates"]["single"] = build_system_prompt("{topic}", PromptSpec::single("{feature}"));
  ctx.finish("generate", ok ? "complete" : "failed");
  return ok ? kExitOk : kExitBackend;
}

int cmd_judge(Context& ctx) {
  ctx.begin("judge", {"generate"});
  const auto catalog = ctx.catalog();
  const auto refs = by_seed(read_responses(ctx.store(), "generate", "neutral"));
  auto& judge = ctx.judge();
  const bool include_length = ctx.section("judge").value("include_length", true);
  std::size_t failures = 0;
  for (const auto& f : catalog.features()) {
    const auto name = PromptSpec::single(f).key();
    if (ctx.store().has_records("judge", name)) {
      log("reusing judge/" + name);
      continue;
    }
    log("judging " + name);
    const auto cands = read_responses(ctx.store(), "generate", name);
    const auto recs = judge_against_references(judge, cands, refs, catalog.features(), include_length, ctx.seed(),
                                               ctx.concurrency(), ctx.judge_options());
    for (const auto& r : recs) failures += !r.failure.empty();
    ctx.store().write_records("judge", name, as_json(recs));
  }
  if (failures) log(std::to_string(failures) + " judge calls failed and were recorded as Unknown");
  ctx.manifest().extra["judge_prompt"] = build_judge_prompt("{feature}", "{response_a}", "{response_b}").user;
  ctx.finish("judge", "complete");
  return kExitOk;
}

std::vector<ComparisonRecord> audit_records(Context& ctx) {
  std::vector<ComparisonRecord> all;
  for (const auto& file : ctx.store().record_files("judge")) {
    auto r = read_comparisons(file);
    all.insert(all.end(), r.begin(), r.end());
  }
  return all;
}

std::size_t feature_no_data(const WinRateMatrix& m) {
  std::size_t n = 0;
  for (const auto& c : m.cells) n += c.no_data() && c.side != kLengthFeature;
  return n;
}

// matrix / screen --------------------------------------------------------------

int cmd_matrix(Context& ctx) {
  ctx.begin("matrix", {"judge"});
  const auto catalog = ctx.catalog();
  const auto records = audit_records(ctx);
  std::map<std::string, Domain> domain_of;
  for (const auto& s : ctx.seeds()) domain_of[s.seed_id] = s.domain;

  auto write = [&](const WinRateMatrix& m, const std::string& tag) {
    export_matrix_csv(m, ctx.store().dir() / ("matrix_" + tag + ".csv"));
    write_text_file(ctx.store().dir() / ("matrix_" + tag + "_counts.csv"), matrix_counts_csv(m));
    render_heatmap_svg(m, ctx.store().dir() / ("heatmap_" + tag + ".svg"), "Win rate vs. Neutral (" + tag + ")");
  };
  auto pooled = build_win_matrix(records, catalog, ctx.alpha());
  pooled.domains = {Domain::Task, Domain::Daily};
  write(pooled, "pooled");
  for (Domain d : {Domain::Task, Domain::Daily}) {
    std::vector<ComparisonRecord> slice;
    for (const auto& r : records)
      if (domain_of.at(r.seed_id) == d) slice.push_back(r);
    auto m = build_win_matrix(slice, catalog, ctx.alpha());
    m.slice = std::string(to_string(d));
    m.domains = {d};
    write(m, to_lower(to_string(d)));
  }
  const auto missing = feature_no_data(pooled);
  ctx.finish("matrix", missing ? "partial" : "complete");
  std::cout << matrix_csv(pooled);
  if (missing) log(std::to_string(missing) + " feature cells have no judged comparisons");
  return missing ? kExitPartial : kExitOk;
}

OrderedJson to_json(const SideEffectPair& p) {
  OrderedJson d = OrderedJson::array();
  for (auto x : p.domains) d.push_back(std::string(to_string(x)));
  return {{"main", p.main}, {"side", p.side}, {"domains", d}, {"polarity", std::string(to_string(p.polarity))},
          {"rate", p.rate}, {"p_value", p.p_value}};
}

int cmd_screen(Context& ctx, double alpha, double min_gap, bool enhancement) {
  ctx.begin("screen", {"matrix"});
  const auto catalog = ctx.catalog();
  const auto records = audit_records(ctx);
  std::map<std::string, Domain> domain_of;
  for (const auto& s : ctx.seeds()) domain_of[s.seed_id] = s.domain;
  // One line per (pair, slice) in which the cell is significant.
  std::vector<OrderedJson> out;
  auto emit = [&](const std::vector<ComparisonRecord>& recs, const std::string& slice, std::set<Domain> domains) {
    for (auto p : screen_side_effects(build_win_matrix(recs, catalog, alpha), alpha, min_gap, enhancement)) {
      p.domains = domains;
      auto j = to_json(p);
      j["slice"] = slice;
      out.push_back(std::move(j));
    }
  };
  emit(records, "pooled", {Domain::Task, Domain::Daily});
  for (Domain d : {Domain::Task, Domain::Daily}) {
    std::vector<ComparisonRecord> slice;
    for (const auto& r : records)
      if (domain_of.at(r.seed_id) == d) slice.push_back(r);
    emit(slice, std::string(to_string(d)), {d});
  }
  const std::string name = "side_effects";
  if (!ctx.store().has_records("screen", name)) ctx.store().write_records("screen", name, out);
  for (const auto& j : out) std::cout << dump_json(j) << '\n';
  ctx.finish("screen", "complete");
  return kExitOk;
}

// steer --------------------------------------------------------------------------

std::vector<std::size_t> candidate_layers(Context& ctx, const Checkpoint& ckpt) {
  const auto& s = ctx.section("steering");
  const auto paper = s.value("candidate_layers", kPaperCandidateLayers);
  const auto depth = s.value("reference_depth", std::size_t{32});
  std::vector<std::size_t> out;
  OrderedJson mapping = OrderedJson::array();
  for (const auto& [p, l] : map_candidate_layers(paper, ckpt.config.n_layers, depth)) {
    out.push_back(l);
    mapping.push_back({p, l});
  }
  ctx.manifest().extra["layer_mapping"] = mapping;
  return out;
}

fs::path steer_dir(Context& ctx) { return ctx.store().dir() / "steer"; }

void require_refmodel(Context& ctx) {
  if (ctx.backend_name() != "refmodel") config_error("steering needs --backend refmodel");
}

int cmd_steer_extract(Context& ctx, const std::string& feature) {
  require_refmodel(ctx);
  ctx.begin("steer", {"extract"});
  const auto& ckpt = ctx.base_checkpoint();
  const auto seeds = seeds_in(ctx.seeds(), ctx.split().train);
  auto& backend = ctx.generator();
  auto opts = ctx.generation();
  const auto prefix = PrefixStyle::HelpfulAssistant;
  const auto styled_spec = PromptSpec::single(feature, prefix);
  const auto neutral_spec = PromptSpec::neutral(prefix);
  bool ok = ensure_generated(ctx, "steer", "train-" + styled_spec.key(),
                             [&] { return generate_batch(backend, seeds, styled_spec, 1, opts); });
  ok = ok && ensure_generated(ctx, "steer", "train-" + neutral_spec.key(),
                              [&] { return generate_batch(backend, seeds, neutral_spec, 1, opts); });
  if (!ok) return kExitBackend;
  const auto styled = by_seed(read_responses(ctx.store(), "steer", "train-" + styled_spec.key()));
  const auto neutral = by_seed(read_responses(ctx.store(), "steer", "train-" + neutral_spec.key()));
  std::vector<TrainExample> examples;
  for (const auto& s : seeds)
    examples.push_back({s.seed_id, s.topic, s.first_message, styled.at(s.seed_id).text, neutral.at(s.seed_id).text});
  const auto set = build_contrastive_pairs(examples, feature);
  const auto layers = candidate_layers(ctx, ckpt);
  const auto vectors = extract_steering_vectors(ckpt, set.pairs, feature, layers, -2, ctx.concurrency());
  save_steering_vectors(vectors, steer_dir(ctx) / ("vectors_" + safe_name(feature) + ".jsonl"));
  log(std::to_string(set.pairs.size()) + " pairs, " + std::to_string(set.skipped) + " skipped");
  ctx.save();
  return kExitOk;
}

OrderedJson to_json(const LayerSelection& s) {
  OrderedJson rates = OrderedJson::object();
  for (const auto& [l, w] : s.win_rates)
    rates[std::to_string(l)] = {{"wins", w.wins}, {"judged", w.judged},
                                {"rate", w.rate ? OrderedJson(*w.rate) : OrderedJson(nullptr)}};
  return {{"feature", s.feature}, {"candidate_layers", s.candidate_layers}, {"win_rates", rates},
          {"best_layer", s.best_layer}, {"validated", s.validated}};
}

int cmd_steer_select(Context& ctx, const std::string& feature, bool skip_validation) {
  require_refmodel(ctx);
  ctx.begin("steer", {"extract"});
  const auto& ckpt = ctx.base_checkpoint();
  const auto vectors = load_steering_vectors(steer_dir(ctx) / ("vectors_" + safe_name(feature) + ".jsonl"));
  LayerSelection sel;
  if (skip_validation) {
    sel = default_layer_selection(ckpt, vectors, feature);
  } else {
    const auto seeds = seeds_in(ctx.seeds(), ctx.split().validation);
    SelectionOptions o;
    o.generation = ctx.generation();
    o.multiplier = ctx.section("steering").value("multiplier", 1.0);
    o.judge = ctx.judge_options();
    const auto neutral_spec = PromptSpec::neutral(o.prefix);
    if (!ensure_generated(ctx, "steer", "validation-" + neutral_spec.key(),
                          [&] { return generate_batch(ctx.generator(), seeds, neutral_spec, 1, o.generation); }))
      return kExitBackend;
    const auto refs = by_seed(read_responses(ctx.store(), "steer", "validation-" + neutral_spec.key()));
    sel = select_best_layer(ckpt, vectors, seeds, refs, ctx.judge(), feature, o);
  }
  write_text_file(steer_dir(ctx) / ("selection_" + safe_name(feature) + ".json"), dump_json(to_json(sel), 2));
  std::cout << dump_json(to_json(sel), 2) << '\n';
  ctx.save();
  return kExitOk;
}

int cmd_steer_bake(Context& ctx, const std::string& feature) {
  require_refmodel(ctx);
  ctx.begin("steer", {"extract"});
  const auto sel = Json::parse(read_text_file(steer_dir(ctx) / ("selection_" + safe_name(feature) + ".json")));
  const std::size_t layer = sel.at("best_layer").get<std::size_t>();
  const auto vectors = load_steering_vectors(steer_dir(ctx) / ("vectors_" + safe_name(feature) + ".jsonl"));
  const SteeringVector* v = nullptr;
  for (const auto& x : vectors)
    if (x.layer == layer) v = &x;
  if (v == nullptr) config_error("no vector for layer " + std::to_string(layer));
  const auto offset = scaled(v->vector, ctx.section("steering").value("multiplier", 1.0));
  const auto out = steer_dir(ctx) / ("baked_" + safe_name(feature) + ".ckpt");
  const auto baked = checkpoint_roundtrip(bake_bias(ctx.base_checkpoint(), layer, offset), out);
  ctx.manifest().extra["baked"][feature] = {{"layer", layer}, {"checkpoint", checkpoint_hash(baked)}};
  ctx.finish("steer", "complete");
  std::cout << out.string() << '\n';
  return kExitOk;
}

// mitigate / report --------------------------------------------------------------

std::optional<SideEffectPair> find_pair(const std::string& main, const std::string& side) {
  for (const auto& p : default_pairs())
    if (p.main == main && p.side == side) return p;
  return std::nullopt;
}

// Default variants keep the bare name: the "but" joiner, and steering with the
// main feature prompted.
std::string mitigation_name(const SideEffectPair& p, Method m, const std::string& variant = {}) {
  return p.main + "+" + p.side + "-" + std::string(to_string(m)) + (variant.empty() ? "" : "~" + variant);
}

int cmd_mitigate(Context& ctx, const std::string& pair_arg, const std::string& method_arg, double alpha,
                 std::size_t samples, const std::string& joiner, const std::string& steer_prompt) {
  ctx.begin("mitigate", {"extract"});
  const auto colon = pair_arg.find(':');
  if (colon == std::string::npos) config_error("--pair must be main:side");
  const auto main = pair_arg.substr(0, colon), side = pair_arg.substr(colon + 1);
  const auto catalog = ctx.catalog();
  if (!catalog.contains(main) || !catalog.contains(side))
    throw Error(ErrorKind::UnknownFeature, "pair " + pair_arg + " is not in the catalog");
  auto pair = find_pair(main, side).value_or(SideEffectPair{main, side, {Domain::Task, Domain::Daily}});

  MitigationPlan plan;
  plan.pair = pair;
  plan.method = parse_method(method_arg);
  plan.test_ids = ctx.split().test;
  plan.n_samples = samples;
  plan.joiner = parse_joiner(joiner);
  std::string variant;
  if (plan.method == Method::Steering) {
    if (steer_prompt == "neutral") variant = "neutral";
  } else if (plan.joiner != Joiner::But) {
    variant = std::string(to_string(plan.joiner));
  }
  if (plan.method == Method::Steering) {
    require_refmodel(ctx);
    plan.baked_checkpoint = steer_dir(ctx) / ("baked_" + safe_name(side) + ".ckpt");
    if (!fs::exists(*plan.baked_checkpoint)) config_error("run `steer bake` for " + side + " first");
  }
  validate_plan(plan);
  const auto corpus = ctx.seeds();
  const auto seeds = plan_seeds(plan, corpus);
  auto gen = ctx.generation();
  const auto neutral_spec = PromptSpec::neutral(plan.prefix);
  bool ok = ensure_generated(ctx, "mitigate", "neutral-" + neutral_spec.key(), [&] {
    return generate_batch(ctx.generator(), select_seeds(corpus, plan.test_ids), neutral_spec, 1, gen);
  });
  const auto name = mitigation_name(pair, plan.method, variant);
  ok = ok && ensure_generated(ctx, "mitigate", "gen-" + name, [&] {
    if (plan.method == Method::Steering) {
      SteerOptions so;
      so.generation = gen;
      so.n_samples = samples;
      so.prefix = plan.prefix;
      if (variant.empty()) so.prompt_feature = main;
      return steered_generate(load_checkpoint(*plan.baked_checkpoint), seeds, side, so);
    }
    return prompt_intervention_generate(ctx.generator(), plan, corpus, gen);
  });
  if (!ok) {
    ctx.finish("mitigate", "failed");
    return kExitBackend;
  }
  if (!ctx.store().has_records("mitigate", "judge-" + name)) {
    const auto refs = by_seed(read_responses(ctx.store(), "mitigate", "neutral-" + neutral_spec.key()));
    EvalOptions eo;
    eo.alpha = alpha;
    eo.run_seed = ctx.seed();
    eo.max_concurrency = ctx.concurrency();
    eo.judge = ctx.judge_options();
    auto report = new_report(pair, "run", eo, plan.joiner);
    const auto recs =
        run_mitigation_eval(report, plan, read_responses(ctx.store(), "mitigate", "gen-" + name), refs, ctx.judge(), eo);
    ctx.store().write_records("mitigate", "judge-" + name, as_json(recs));
  }
  ctx.manifest().extra["mitigation_templates"][name] =
      build_system_prompt("{topic}", plan_prompt_spec(plan));
  ctx.finish("mitigate", "complete");
  std::cout << "stored " << name << '\n';
  return kExitOk;
}

std::vector<MitigationReport> reports_from_store(Context& ctx, double alpha) {
  const auto split = ctx.split();
  const std::set<std::string> test(split.test.begin(), split.test.end());
  std::map<std::string, Domain> domain_of;
  for (const auto& s : ctx.seeds()) domain_of[s.seed_id] = s.domain;
  std::vector<ComparisonRecord> audit;
  if (ctx.manifest().stage_status.contains("judge")) audit = audit_records(ctx);

  struct Variant {
    std::string label;
    std::vector<std::pair<Method, std::string>> rows;  // method, record variant
  };
  const std::vector<Variant> variants{
      {"but", {{Method::Prompting, ""}, {Method::PromptingReversed, ""}, {Method::Steering, ""}}},
      {"and", {{Method::Prompting, "and"}, {Method::PromptingReversed, "and"}}},
      {"steer-neutral-prompt", {{Method::Steering, "neutral"}}},
  };

  std::vector<MitigationReport> reports;
  for (const auto& pair : default_pairs()) {
    for (const auto& v : variants) {
      auto report = new_report(pair, "run");
      report.template_label = v.label;
      bool any = false;
      for (const auto& [m, tag] : v.rows) {
        const auto name = "judge-" + mitigation_name(pair, m, tag);
        if (!ctx.store().has_records("mitigate", name)) continue;
        std::vector<ComparisonRecord> recs;
        for (const auto& j : ctx.store().read_records("mitigate", name))
          recs.push_back(comparison_record_from_json(j));
        add_rows(report, m, recs, alpha);
        any = true;
      }
      if (!any) continue;
      std::set<std::string> eligible;
      for (const auto& id : test)
        if (pair.domains.contains(domain_of.at(id))) eligible.insert(id);
      add_audit_rows(report, audit, eligible, alpha);
      reports.push_back(std::move(report));
    }
  }
  return reports;
}

int cmd_report(Context& ctx, const std::string& counts, const std::string& matrix_counts, double alpha) {
  std::vector<MitigationReport> reports;
  if (!counts.empty() || !matrix_counts.empty()) {
    if (!counts.empty()) reports = load_mitigation_counts(counts, alpha);
    if (!matrix_counts.empty()) {
      const auto rows = load_count_rows(matrix_counts);
      std::vector<std::string> mains;
      for (const auto& r : rows)
        if (r.main == r.side) mains.push_back(r.main);
      const auto m = matrix_from_counts(rows, mains, alpha);
      export_matrix_csv(m, ctx.store().dir() / "fixture_matrix.csv");
      render_heatmap_svg(m, ctx.store().dir() / "fixture_heatmap.svg", "Win rate vs. Neutral (fixture)");
    }
  } else {
    ctx.begin("report", {"mitigate"});
    reports = reports_from_store(ctx, alpha);
  }
  std::size_t missing = 0;
  for (const auto& r : reports)
    for (Method m : r.methods)
      for (const auto& f : r.eval_features) missing += r.cell(m, f).no_data();
  write_text_file(ctx.store().dir() / "mitigation_table.csv", report_table_csv(reports));
  write_text_file(ctx.store().dir() / "mitigation_counts.csv", report_counts_csv(reports));
  std::cout << report_table_csv(reports);
  if (counts.empty() && matrix_counts.empty()) ctx.finish("report", missing ? "partial" : "complete");
  else ctx.save();
  return missing ? kExitPartial : kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"stylefx: style side-effect audit and mitigation"};
  app.require_subcommand(1);
  Globals g;
  app.add_option("--config", g.config_path, "JSON run configuration")->check(CLI::ExistingFile);
  app.add_option("--run-dir", g.run_dir, "Run directory (manifest and records)");
  app.add_option("--backend", g.backend, "Generation backend")->check(CLI::IsMember({"sim", "http", "refmodel"}));
  app.add_option("--max-concurrency", g.max_concurrency, "Concurrent backend calls");
  app.add_option("--seed", g.seed, "Run seed");

  auto* extract = app.add_subcommand("extract-features", "Build the feature catalog and the corpus split");
  auto* generate = app.add_subcommand("generate", "Generate neutral and single-feature responses");
  auto* judge = app.add_subcommand("judge", "Judge styled responses against neutral references");
  auto* matrix = app.add_subcommand("matrix", "Aggregate the win-rate matrix and render heatmaps");

  auto* screen = app.add_subcommand("screen", "List significant side effects");
  double screen_alpha = 0.05, min_gap = 0.0;
  bool enhancement = false;
  screen->add_option("--alpha", screen_alpha, "Significance level");
  screen->add_option("--min-gap", min_gap, "Minimum distance of the rate from 0.5");
  screen->add_flag("--include-enhancement", enhancement, "Also list rates above 0.5");

  auto* steer = app.add_subcommand("steer", "Contrastive steering vectors");
  steer->require_subcommand(1);
  std::string feature;
  bool skip_validation = false;
  auto* s_extract = steer->add_subcommand("extract", "Extract vectors at the candidate layers");
  auto* s_select = steer->add_subcommand("select", "Pick the injection layer on the validation split");
  auto* s_bake = steer->add_subcommand("bake", "Bake the selected vector into a checkpoint");
  for (auto* s : {s_extract, s_select, s_bake}) s->add_option("--feature", feature, "Style feature")->required();
  s_select->add_flag("--skip-validation", skip_validation, "Use the default layer");

  auto* mitigate = app.add_subcommand("mitigate", "Run one mitigation method on one pair");
  std::string pair, method = "prompt";
  double alpha = 0.05;
  std::size_t samples = 5;
  mitigate->add_option("--pair", pair, "main:side")->required();
  mitigate->add_option("--method", method, "prompt|prompt-reversed|steer")
      ->check(CLI::IsMember({"prompt", "prompt-reversed", "steer"}));
  mitigate->add_option("--alpha", alpha, "Significance level");
  mitigate->add_option("--samples", samples, "Samples per seed");
  std::string joiner = "but", steer_prompt = "main";
  mitigate->add_option("--joiner", joiner, "Conjunction in the pair prompt")->check(CLI::IsMember({"and", "but"}));
  mitigate->add_option("--steer-prompt", steer_prompt, "Prompt used with the baked checkpoint")
      ->check(CLI::IsMember({"main", "neutral"}));

  auto* report = app.add_subcommand("report", "Write the mitigation table");
  std::string counts, matrix_counts;
  double report_alpha = 0.05;
  report->add_option("--counts", counts, "Raw-count mitigation CSV instead of the run store")
      ->check(CLI::ExistingFile);
  report->add_option("--matrix-counts", matrix_counts, "Raw-count matrix CSV to render")->check(CLI::ExistingFile);
  report->add_option("--alpha", report_alpha, "Significance level");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitConfig;
  }

  try {
    Context ctx(g);
    if (extract->parsed()) return cmd_extract(ctx);
    if (generate->parsed()) return cmd_generate(ctx);
    if (judge->parsed()) return cmd_judge(ctx);
    if (matrix->parsed()) return cmd_matrix(ctx);
    if (screen->parsed()) return cmd_screen(ctx, screen_alpha, min_gap, enhancement);
    if (s_extract->parsed()) return cmd_steer_extract(ctx, feature);
    if (s_select->parsed()) return cmd_steer_select(ctx, feature, skip_validation);
    if (s_bake->parsed()) return cmd_steer_bake(ctx, feature);
    if (mitigate->parsed()) return cmd_mitigate(ctx, pair, method, alpha, samples, joiner, steer_prompt);
    if (report->parsed()) return cmd_report(ctx, counts, matrix_counts, report_alpha);
  } catch (const Error& e) {
    std::cerr << "stylefx: " << e.what() << '\n';
    return exit_code_for(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "stylefx: " << e.what() << '\n';
    return 1;
  }
  return kExitOk;
}
