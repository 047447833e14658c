#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "stylefx/genharness.hpp"
#include "stylefx/judge.hpp"
#include "stylefx/refmodel.hpp"
#include "stylefx/stats.hpp"

namespace stylefx {

struct TrainExample {
  std::string seed_id;
  std::string topic;
  std::string user_message;
  std::string styled_text;
  std::string neutral_text;
};

struct ContrastivePair {
  std::string pair_id;  // "{feature}/{seed_id}/{index}"
  std::string seed_id;
  std::string prompt_body;
  std::string positive_completion = "A";
  std::string negative_completion = "B";
};

struct ContrastiveSet {
  std::vector<ContrastivePair> pairs;
  std::size_t skipped = 0;  // examples whose styled and neutral texts matched
};

/// Topic line, choose-the-option instruction with the feature uppercased,
/// user message, Choice A and Choice B, then "Your decision:".
std::string contrastive_body(std::string_view topic, std::string_view feature, std::string_view user_message,
                             std::string_view choice_a, std::string_view choice_b);

/// Choice A is the styled text. Zero usable pairs raise InsufficientData.
ContrastiveSet build_contrastive_pairs(const std::vector<TrainExample>& examples, std::string_view feature);

/// Chat-encoded body followed by the answer letter and end-of-text, so the
/// letter sits at position -2.
Tokens encode_contrastive(std::string_view body, std::string_view completion);

struct SteeringVector {
  std::string feature;
  std::size_t layer = 0;
  std::vector<float> vector;
  std::size_t n_pairs = 0;
};

/// Mean of h+ - h- at `capture_pos` per layer. Differences are summed in pair
/// order in double precision, independent of the thread schedule.
/// Overlong sequences raise SequenceTooLong naming the pair.
std::vector<SteeringVector> extract_steering_vectors(const Checkpoint& model, const std::vector<ContrastivePair>& pairs,
                                                     const std::string& feature, const std::vector<std::size_t>& layers,
                                                     long capture_pos = -2, std::size_t max_concurrency = 1);

/// Maps layer indices of a `reference_depth`-layer model to an n_layers model
/// by lround(l * n / reference_depth), keeping the images distinct by
/// stepping collisions downward from the deepest layer. Returns (paper, mapped).
std::vector<std::pair<std::size_t, std::size_t>> map_candidate_layers(const std::vector<std::size_t>& paper_layers,
                                                                     std::size_t n_layers,
                                                                     std::size_t reference_depth = 32);

inline const std::vector<std::size_t> kPaperCandidateLayers{16, 20, 24};
inline constexpr std::size_t kPaperDefaultLayer = 20;

/// Image of the paper's default layer under map_candidate_layers.
std::size_t default_layer(std::size_t n_layers, std::size_t reference_depth = 32);

struct LayerSelection {
  std::string feature;
  std::vector<std::size_t> candidate_layers;
  std::map<std::size_t, WinRate> win_rates;
  std::size_t best_layer = 0;
  bool validated = true;  // false when chosen without validation
};

/// Argmax of the rates, ties to the lowest layer; all NoData raises SelectionFailed.
std::size_t pick_best_layer(const std::map<std::size_t, WinRate>& win_rates);

struct SelectionOptions {
  GenerationOptions generation;
  std::size_t n_samples = 1;
  double multiplier = 1.0;
  PrefixStyle prefix = PrefixStyle::HelpfulAssistant;
  JudgeOptions judge;
};

/// For each vector's layer: generate steered responses to the validation
/// seeds under a neutral prompt, judge them against the neutral references on
/// `feature`, then pick the best layer.
LayerSelection select_best_layer(const Checkpoint& model, const std::vector<SteeringVector>& vectors,
                                 const std::vector<DialogueSeed>& validation_seeds,
                                 const std::map<std::string, StyledResponse>& neutral_by_seed, ChatBackend& judge,
                                 const std::string& feature, const SelectionOptions& options);

/// Skip-validation mode: the default layer's vector, not validated.
LayerSelection default_layer_selection(const Checkpoint& model, const std::vector<SteeringVector>& vectors,
                                       const std::string& feature);

std::vector<float> scaled(const std::vector<float>& v, double multiplier);

struct SteerOptions {
  GenerationOptions generation;
  std::size_t n_samples = 1;
  PrefixStyle prefix = PrefixStyle::HelpfulAssistant;
  /// Prompted feature for mitigation runs; nullopt keeps the prompt neutral.
  std::optional<std::string> prompt_feature;
};

/// Generates with a baked checkpoint; NotBaked when bias_enabled is false.
/// The spec is SteeredSingle(prompt_feature) or Neutral, tagged with
/// steered_feature.
GenerationBatch steered_generate(const Checkpoint& baked, const std::vector<DialogueSeed>& seeds,
                                 const std::string& steered_feature, const SteerOptions& options);

OrderedJson to_json(const SteeringVector& v);
SteeringVector steering_vector_from_json(const Json& j);
void save_steering_vectors(const std::vector<SteeringVector>& vectors, const std::filesystem::path& path);
std::vector<SteeringVector> load_steering_vectors(const std::filesystem::path& path);

}  // namespace stylefx
