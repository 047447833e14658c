#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "stylefx/backend.hpp"
#include "stylefx/corpus.hpp"
#include "stylefx/io.hpp"

namespace stylefx {

enum class PromptMode { Neutral, Single, PairNormal, PairReversed, SteeredSingle };
enum class Joiner { And, But };
enum class PrefixStyle { Conversation, HelpfulAssistant };

std::string_view to_string(PromptMode m) noexcept;
std::string_view to_string(Joiner j) noexcept;
std::string_view to_string(PrefixStyle p) noexcept;
PromptMode parse_prompt_mode(std::string_view s);
Joiner parse_joiner(std::string_view s);
PrefixStyle parse_prefix_style(std::string_view s);

struct PromptSpec {
  PromptMode mode = PromptMode::Neutral;
  std::optional<std::string> main_feature;
  std::optional<std::string> side_feature;
  Joiner joiner = Joiner::But;
  PrefixStyle prefix_style = PrefixStyle::Conversation;
  /// Feature whose vector is baked into the generating checkpoint, if any.
  std::optional<std::string> steered_feature;

  /// Stable short identifier, e.g. "pair-normal:concise+expert:but".
  std::string key() const;
  bool operator==(const PromptSpec&) const = default;

  static PromptSpec neutral(PrefixStyle prefix = PrefixStyle::Conversation);
  static PromptSpec single(std::string feature, PrefixStyle prefix = PrefixStyle::Conversation);
  static PromptSpec pair(std::string main, std::string side, bool reversed, Joiner joiner = Joiner::But,
                         PrefixStyle prefix = PrefixStyle::HelpfulAssistant);
};

/// Throws InvalidSpec when the features required by `mode` are missing or extra.
void validate_spec(const PromptSpec& spec);

std::string build_system_prompt(std::string_view topic, const PromptSpec& spec);

struct StyledResponse {
  std::string seed_id;
  PromptSpec spec;
  std::size_t sample_index = 1;
  std::string text;
  std::size_t word_count = 0;
  std::string backend_id;

  /// "{seed_id}/{spec key}/{sample_index}"
  std::string id() const;
};

struct GenerationOptions {
  double temperature = 0.7;
  std::size_t max_tokens = 512;
  std::uint64_t rng_seed = 0;
  std::size_t max_concurrency = 1;
};

/// Records in (seed, sample_index) order. When the backend fails, the
/// remaining records are kept and `complete` is false.
struct GenerationBatch {
  std::vector<StyledResponse> records;
  bool complete = true;
  std::string error;
};

/// Per-request seed derived from the run seed, seed id, spec and sample.
std::uint64_t request_seed(std::uint64_t run_seed, std::string_view seed_id, const PromptSpec& spec,
                           std::size_t sample_index);

GenerationBatch generate_samples(ChatBackend& backend, const DialogueSeed& seed, const PromptSpec& spec,
                                 std::size_t n_samples, const GenerationOptions& options);

/// generate_samples over many seeds sharing one spec, fanned out on
/// options.max_concurrency threads.
GenerationBatch generate_batch(ChatBackend& backend, const std::vector<DialogueSeed>& seeds,
                               const PromptSpec& spec, std::size_t n_samples, const GenerationOptions& options);

/// One Neutral sample (sample_index 1). Throws the backend error.
StyledResponse generate_neutral_reference(ChatBackend& backend, const DialogueSeed& seed,
                                          const GenerationOptions& options,
                                          PrefixStyle prefix = PrefixStyle::Conversation);

OrderedJson to_json(const PromptSpec& spec);
PromptSpec prompt_spec_from_json(const Json& j);
OrderedJson to_json(const StyledResponse& r);
StyledResponse styled_response_from_json(const Json& j);

}  // namespace stylefx
