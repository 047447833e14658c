#include "stylefx/genharness.hpp"

#include "stylefx/concurrency.hpp"
#include "stylefx/error.hpp"
#include "stylefx/rng.hpp"

namespace stylefx {

std::string_view to_string(PromptMode m) noexcept {
  switch (m) {
    case PromptMode::Neutral: return "neutral";
    case PromptMode::Single: return "single";
    case PromptMode::PairNormal: return "pair-normal";
    case PromptMode::PairReversed: return "pair-reversed";
    case PromptMode::SteeredSingle: return "steered-single";
  }
  return "?";
}

std::string_view to_string(Joiner j) noexcept { return j == Joiner::And ? "and" : "but"; }

std::string_view to_string(PrefixStyle p) noexcept {
  return p == PrefixStyle::Conversation ? "conversation" : "helpful-assistant";
}

PromptMode parse_prompt_mode(std::string_view s) {
  for (auto m : {PromptMode::Neutral, PromptMode::Single, PromptMode::PairNormal, PromptMode::PairReversed,
                 PromptMode::SteeredSingle})
    if (to_string(m) == s) return m;
  throw Error(ErrorKind::ParseError, "unknown prompt mode '" + std::string(s) + "'");
}

Joiner parse_joiner(std::string_view s) {
  if (s == "and") return Joiner::And;
  if (s == "but") return Joiner::But;
  throw Error(ErrorKind::ParseError, "unknown joiner '" + std::string(s) + "'");
}

PrefixStyle parse_prefix_style(std::string_view s) {
  if (s == "conversation") return PrefixStyle::Conversation;
  if (s == "helpful-assistant") return PrefixStyle::HelpfulAssistant;
  throw Error(ErrorKind::ParseError, "unknown prefix style '" + std::string(s) + "'");
}

std::string PromptSpec::key() const {
  std::string k(to_string(mode));
  if (main_feature) k += ":" + *main_feature;
  if (side_feature) k += "+" + *side_feature;
  if (mode == PromptMode::PairNormal || mode == PromptMode::PairReversed) k += ":" + std::string(to_string(joiner));
  if (steered_feature) k += "@" + *steered_feature;
  if (prefix_style == PrefixStyle::HelpfulAssistant) k += "~ha";
  return k;
}

PromptSpec PromptSpec::neutral(PrefixStyle prefix) {
  PromptSpec s;
  s.prefix_style = prefix;
  return s;
}

PromptSpec PromptSpec::single(std::string feature, PrefixStyle prefix) {
  PromptSpec s;
  s.mode = PromptMode::Single;
  s.main_feature = std::move(feature);
  s.prefix_style = prefix;
  return s;
}

PromptSpec PromptSpec::pair(std::string main, std::string side, bool reversed, Joiner joiner, PrefixStyle prefix) {
  PromptSpec s;
  s.mode = reversed ? PromptMode::PairReversed : PromptMode::PairNormal;
  s.main_feature = std::move(main);
  s.side_feature = std::move(side);
  s.joiner = joiner;
  s.prefix_style = prefix;
  return s;
}

void validate_spec(const PromptSpec& spec) {
  auto bad = [&](const char* why) { throw Error(ErrorKind::InvalidSpec, spec.key() + ": " + why); };
  const bool has_main = spec.main_feature && !spec.main_feature->empty();
  const bool has_side = spec.side_feature && !spec.side_feature->empty();
  switch (spec.mode) {
    case PromptMode::Neutral:
      if (spec.main_feature || spec.side_feature) bad("neutral prompts take no features");
      break;
    case PromptMode::Single:
    case PromptMode::SteeredSingle:
      if (!has_main) bad("main feature required");
      if (spec.side_feature) bad("side feature not allowed");
      break;
    case PromptMode::PairNormal:
    case PromptMode::PairReversed:
      if (!has_main || !has_side) bad("main and side features required");
      break;
  }
}

std::string build_system_prompt(std::string_view topic, const PromptSpec& spec) {
  validate_spec(spec);
  std::string out = spec.prefix_style == PrefixStyle::Conversation ? "You are having a conversation about "
                                                                   : "You are a helpful assistant having a conversation about ";
  out += topic;
  out += '.';
  switch (spec.mode) {
    case PromptMode::Neutral: break;
    case PromptMode::Single:
    case PromptMode::SteeredSingle: out += " Please be " + *spec.main_feature + " in your response."; break;
    case PromptMode::PairNormal:
    case PromptMode::PairReversed: {
      const bool rev = spec.mode == PromptMode::PairReversed;
      const std::string& first = rev ? *spec.side_feature : *spec.main_feature;
      const std::string& second = rev ? *spec.main_feature : *spec.side_feature;
      out += " Please be " + first + " " + std::string(to_string(spec.joiner)) + " " + second + " in your response.";
      break;
    }
  }
  return out;
}

std::string StyledResponse::id() const { return seed_id + "/" + spec.key() + "/" + std::to_string(sample_index); }

std::uint64_t request_seed(std::uint64_t run_seed, std::string_view seed_id, const PromptSpec& spec,
                           std::size_t sample_index) {
  return hash_combine(hash_combine(run_seed, fnv1a64(seed_id)), hash_combine(fnv1a64(spec.key()), sample_index));
}

GenerationBatch generate_batch(ChatBackend& backend, const std::vector<DialogueSeed>& seeds, const PromptSpec& spec,
                               std::size_t n_samples, const GenerationOptions& options) {
  if (n_samples < 1) throw Error(ErrorKind::InvalidSpec, "n_samples must be >= 1");
  validate_spec(spec);
  const std::size_t total = seeds.size() * n_samples;
  std::vector<std::optional<StyledResponse>> slots(total);
  std::vector<std::string> errors(total);
  parallel_for(total, options.max_concurrency, [&](std::size_t i) {
    const DialogueSeed& seed = seeds[i / n_samples];
    const std::size_t sample = i % n_samples + 1;
    ChatRequest req;
    req.system_prompt = build_system_prompt(seed.topic, spec);
    req.user_message = seed.first_message;
    req.temperature = options.temperature;
    req.max_tokens = options.max_tokens;
    req.sample_index = sample;
    req.rng_seed = request_seed(options.rng_seed, seed.seed_id, spec, sample);
    try {
      ChatResponse resp = backend.complete(req);
      slots[i] = StyledResponse{seed.seed_id, spec, sample, std::move(resp.text), resp.word_count, resp.backend_id};
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::BackendUnavailable && e.kind() != ErrorKind::ProtocolError) throw;
      errors[i] = e.what();
    }
  });
  GenerationBatch batch;
  for (std::size_t i = 0; i < total; ++i) {
    if (slots[i]) {
      batch.records.push_back(std::move(*slots[i]));
    } else {
      batch.complete = false;
      if (batch.error.empty()) batch.error = errors[i];
    }
  }
  return batch;
}

GenerationBatch generate_samples(ChatBackend& backend, const DialogueSeed& seed, const PromptSpec& spec,
                                 std::size_t n_samples, const GenerationOptions& options) {
  return generate_batch(backend, {seed}, spec, n_samples, options);
}

StyledResponse generate_neutral_reference(ChatBackend& backend, const DialogueSeed& seed,
                                          const GenerationOptions& options, PrefixStyle prefix) {
  auto batch = generate_samples(backend, seed, PromptSpec::neutral(prefix), 1, options);
  if (!batch.complete) throw Error(ErrorKind::BackendUnavailable, batch.error);
  return std::move(batch.records.front());
}

OrderedJson to_json(const PromptSpec& spec) {
  OrderedJson j;
  j["mode"] = to_string(spec.mode);
  j["main_feature"] = spec.main_feature ? OrderedJson(*spec.main_feature) : OrderedJson(nullptr);
  j["side_feature"] = spec.side_feature ? OrderedJson(*spec.side_feature) : OrderedJson(nullptr);
  j["joiner"] = to_string(spec.joiner);
  j["prefix_style"] = to_string(spec.prefix_style);
  if (spec.steered_feature) j["steered_feature"] = *spec.steered_feature;
  return j;
}

PromptSpec prompt_spec_from_json(const Json& j) {
  auto opt = [&](const char* key) -> std::optional<std::string> {
    if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
    return j.at(key).get<std::string>();
  };
  PromptSpec s;
  s.mode = parse_prompt_mode(j.at("mode").get<std::string>());
  s.main_feature = opt("main_feature");
  s.side_feature = opt("side_feature");
  s.joiner = parse_joiner(j.value("joiner", std::string("but")));
  s.prefix_style = parse_prefix_style(j.value("prefix_style", std::string("conversation")));
  s.steered_feature = opt("steered_feature");
  return s;
}

OrderedJson to_json(const StyledResponse& r) {
  OrderedJson j;
  j["seed_id"] = r.seed_id;
  j["prompt_spec"] = to_json(r.spec);
  j["sample_index"] = r.sample_index;
  j["text"] = r.text;
  j["word_count"] = r.word_count;
  j["backend_id"] = r.backend_id;
  return j;
}

StyledResponse styled_response_from_json(const Json& j) {
  try {
    StyledResponse r;
    r.seed_id = j.at("seed_id").get<std::string>();
    r.spec = prompt_spec_from_json(j.at("prompt_spec"));
    r.sample_index = j.at("sample_index").get<std::size_t>();
    r.text = j.at("text").get<std::string>();
    r.word_count = j.at("word_count").get<std::size_t>();
    r.backend_id = j.value("backend_id", std::string{});
    return r;
  } catch (const Json::exception& e) {
    throw Error(ErrorKind::ParseError, std::string("response record: ") + e.what());
  }
}

}  // namespace stylefx
