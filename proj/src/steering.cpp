#include "stylefx/steering.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

#include "stylefx/concurrency.hpp"
#include "stylefx/error.hpp"
#include "stylefx/rng.hpp"

namespace stylefx {

std::string contrastive_body(std::string_view topic, std::string_view feature, std::string_view user_message,
                             std::string_view choice_a, std::string_view choice_b) {
  std::string upper(feature);
  for (char& c : upper) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  std::string s = "You are having a conversation about ";
  s += topic;
  s += ". Please choose the option that shows that you are " + upper + ".\n";
  s += "User message: ";
  s += user_message;
  s += "\nChoice A: ";
  s += choice_a;
  s += "\nChoice B: ";
  s += choice_b;
  s += "\nYour decision:";
  return s;
}

ContrastiveSet build_contrastive_pairs(const std::vector<TrainExample>& examples, std::string_view feature) {
  ContrastiveSet out;
  for (const auto& ex : examples) {
    if (ex.styled_text == ex.neutral_text) {
      ++out.skipped;
      continue;
    }
    ContrastivePair p;
    p.pair_id = std::string(feature) + "/" + ex.seed_id + "/" + std::to_string(out.pairs.size());
    p.seed_id = ex.seed_id;
    p.prompt_body = contrastive_body(ex.topic, feature, ex.user_message, ex.styled_text, ex.neutral_text);
    out.pairs.push_back(std::move(p));
  }
  if (out.pairs.empty())
    throw Error(ErrorKind::InsufficientData, "no usable contrastive pairs for " + std::string(feature) + " (" +
                                                 std::to_string(out.skipped) + " skipped)");
  return out;
}

Tokens encode_contrastive(std::string_view body, std::string_view completion) {
  Tokens t = encode_chat("", body);
  for (unsigned char c : completion) t.push_back(c);
  t.push_back(kEndOfText);
  return t;
}

std::vector<SteeringVector> extract_steering_vectors(const Checkpoint& model, const std::vector<ContrastivePair>& pairs,
                                                     const std::string& feature, const std::vector<std::size_t>& layers,
                                                     long capture_pos, std::size_t max_concurrency) {
  if (pairs.empty()) throw Error(ErrorKind::InsufficientData, "no contrastive pairs");
  if (layers.empty()) throw Error(ErrorKind::InvalidSpec, "no candidate layers");
  const std::size_t d = model.config.d_model;
  // diffs[p][k] = h+ - h- for pair p at layers[k]
  std::vector<std::vector<std::vector<float>>> diffs(pairs.size());
  parallel_for(pairs.size(), max_concurrency, [&](std::size_t p) {
    const auto pos = encode_contrastive(pairs[p].prompt_body, pairs[p].positive_completion);
    const auto neg = encode_contrastive(pairs[p].prompt_body, pairs[p].negative_completion);
    const std::size_t longest = std::max(pos.size(), neg.size());
    if (longest > model.config.max_seq)
      throw Error(ErrorKind::SequenceTooLong, "pair " + pairs[p].pair_id + ": " + std::to_string(longest) +
                                                  " tokens > max_seq " + std::to_string(model.config.max_seq));
    const auto hp = forward_with_capture(model, pos, capture_pos, layers);
    const auto hn = forward_with_capture(model, neg, capture_pos, layers);
    diffs[p].resize(layers.size(), std::vector<float>(d));
    for (std::size_t k = 0; k < layers.size(); ++k) {
      const auto& a = hp.trace.at(layers[k]);
      const auto& b = hn.trace.at(layers[k]);
      for (std::size_t i = 0; i < d; ++i) diffs[p][k][i] = a[i] - b[i];
    }
  });
  std::vector<SteeringVector> out;
  for (std::size_t k = 0; k < layers.size(); ++k) {
    std::vector<double> sum(d, 0.0);
    for (const auto& per_pair : diffs)
      for (std::size_t i = 0; i < d; ++i) sum[i] += per_pair[k][i];
    SteeringVector v{feature, layers[k], std::vector<float>(d), pairs.size()};
    for (std::size_t i = 0; i < d; ++i) {
      v.vector[i] = static_cast<float>(sum[i] / static_cast<double>(pairs.size()));
      if (!std::isfinite(v.vector[i])) throw Error(ErrorKind::InvalidSpec, "non-finite steering component");
    }
    out.push_back(std::move(v));
  }
  return out;
}

std::vector<std::pair<std::size_t, std::size_t>> map_candidate_layers(const std::vector<std::size_t>& paper_layers,
                                                                     std::size_t n_layers,
                                                                     std::size_t reference_depth) {
  if (n_layers == 0 || reference_depth == 0) throw Error(ErrorKind::InvalidConfig, "empty layer range");
  std::vector<std::size_t> sorted = paper_layers;
  std::sort(sorted.begin(), sorted.end());
  sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
  std::vector<std::pair<std::size_t, std::size_t>> out;
  long next_free = static_cast<long>(n_layers) - 1;
  for (auto it = sorted.rbegin(); it != sorted.rend(); ++it) {
    const long raw = std::lround(static_cast<double>(*it) * static_cast<double>(n_layers) /
                                 static_cast<double>(reference_depth));
    long mapped = std::min(raw, next_free);
    if (mapped < 0) mapped = 0;  // more candidates than layers: collisions kept
    out.emplace_back(*it, static_cast<std::size_t>(mapped));
    next_free = mapped - 1;
  }
  std::reverse(out.begin(), out.end());
  return out;
}

std::size_t default_layer(std::size_t n_layers, std::size_t reference_depth) {
  std::vector<std::size_t> layers = kPaperCandidateLayers;
  if (std::find(layers.begin(), layers.end(), kPaperDefaultLayer) == layers.end()) layers.push_back(kPaperDefaultLayer);
  for (const auto& [paper, mapped] : map_candidate_layers(layers, n_layers, reference_depth))
    if (paper == kPaperDefaultLayer) return mapped;
  return n_layers / 2;
}

std::size_t pick_best_layer(const std::map<std::size_t, WinRate>& win_rates) {
  std::optional<std::size_t> best;
  double best_rate = -1.0;
  for (const auto& [layer, wr] : win_rates)  // ascending layer order
    if (wr.rate && *wr.rate > best_rate) {
      best = layer;
      best_rate = *wr.rate;
    }
  if (!best) throw Error(ErrorKind::SelectionFailed, "every candidate layer has no judged comparisons");
  return *best;
}

std::vector<float> scaled(const std::vector<float>& v, double multiplier) {
  std::vector<float> out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = static_cast<float>(v[i] * multiplier);
  return out;
}

LayerSelection select_best_layer(const Checkpoint& model, const std::vector<SteeringVector>& vectors,
                                 const std::vector<DialogueSeed>& validation_seeds,
                                 const std::map<std::string, StyledResponse>& neutral_by_seed, ChatBackend& judge,
                                 const std::string& feature, const SelectionOptions& options) {
  LayerSelection sel;
  sel.feature = feature;
  for (const auto& v : vectors) {
    if (v.feature != feature) continue;
    sel.candidate_layers.push_back(v.layer);
    const Checkpoint baked = bake_bias(model, v.layer, scaled(v.vector, options.multiplier));
    RefModelBackend backend(baked);
    PromptSpec spec = PromptSpec::neutral(options.prefix);
    spec.steered_feature = feature;
    auto batch = generate_batch(backend, validation_seeds, spec, options.n_samples, options.generation);
    auto records = judge_against_references(judge, batch.records, neutral_by_seed, {feature}, false,
                                            hash_combine(options.generation.rng_seed, v.layer),
                                            options.generation.max_concurrency, options.judge);
    sel.win_rates[v.layer] = win_rate(records);
  }
  if (sel.candidate_layers.empty()) throw Error(ErrorKind::SelectionFailed, "no vectors for " + feature);
  sel.best_layer = pick_best_layer(sel.win_rates);
  return sel;
}

LayerSelection default_layer_selection(const Checkpoint& model, const std::vector<SteeringVector>& vectors,
                                       const std::string& feature) {
  LayerSelection sel;
  sel.feature = feature;
  sel.validated = false;
  sel.best_layer = default_layer(model.config.n_layers);
  for (const auto& v : vectors)
    if (v.feature == feature) sel.candidate_layers.push_back(v.layer);
  if (std::find(sel.candidate_layers.begin(), sel.candidate_layers.end(), sel.best_layer) == sel.candidate_layers.end())
    throw Error(ErrorKind::SelectionFailed, "no vector at default layer " + std::to_string(sel.best_layer));
  return sel;
}

GenerationBatch steered_generate(const Checkpoint& baked, const std::vector<DialogueSeed>& seeds,
                                 const std::string& steered_feature, const SteerOptions& options) {
  if (!baked.bias_enabled || !baked.layer_bias) throw Error(ErrorKind::NotBaked, "checkpoint has no baked bias");
  PromptSpec spec = options.prompt_feature ? PromptSpec::single(*options.prompt_feature, options.prefix)
                                           : PromptSpec::neutral(options.prefix);
  if (options.prompt_feature) spec.mode = PromptMode::SteeredSingle;
  spec.steered_feature = steered_feature;
  RefModelBackend backend(baked);
  return generate_batch(backend, seeds, spec, options.n_samples, options.generation);
}

OrderedJson to_json(const SteeringVector& v) {
  OrderedJson j;
  j["feature"] = v.feature;
  j["layer"] = v.layer;
  j["d_model"] = v.vector.size();
  j["n_pairs"] = v.n_pairs;
  j["components"] = v.vector;
  return j;
}

SteeringVector steering_vector_from_json(const Json& j) {
  try {
    SteeringVector v;
    v.feature = j.at("feature").get<std::string>();
    v.layer = j.at("layer").get<std::size_t>();
    v.n_pairs = j.at("n_pairs").get<std::size_t>();
    v.vector = j.at("components").get<std::vector<float>>();
    if (v.vector.size() != j.at("d_model").get<std::size_t>())
      throw Error(ErrorKind::ParseError, "steering vector length disagrees with d_model");
    return v;
  } catch (const Json::exception& e) {
    throw Error(ErrorKind::ParseError, std::string("steering vector: ") + e.what());
  }
}

void save_steering_vectors(const std::vector<SteeringVector>& vectors, const std::filesystem::path& path) {
  std::string out;
  for (const auto& v : vectors) out += dump_json(to_json(v)) + "\n";
  write_text_file(path, out);
}

std::vector<SteeringVector> load_steering_vectors(const std::filesystem::path& path) {
  std::vector<SteeringVector> out;
  for (const auto& j : read_jsonl(path)) out.push_back(steering_vector_from_json(j));
  return out;
}

}  // namespace stylefx
