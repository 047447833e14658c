#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "stylefx/backend.hpp"

namespace stylefx {

/// Ground-truth style generator. Each feature g owns a disjoint marker
/// vocabulary. For a style mix w (one signed weight per feature, w_g in
/// [-1, 1]) a render has round(base_length * prod m_g^{w_g}) words, and each
/// word slot independently becomes a marker of g with probability
/// marker_density * (1 + w_g), filler otherwise.
struct SimStyleModel {
  std::size_t base_length = 80;
  double marker_density = 0.03;
  std::map<std::string, double> length_multiplier;
  std::map<std::string, std::vector<std::string>> marker_vocab;
  std::vector<std::string> filler;
  /// (main, side) -> influence of prompting `main` on `side`; the diagonal
  /// defaults to 1 when absent.
  std::map<std::pair<std::string, std::string>, double> contamination;

  double contamination_at(const std::string& main, const std::string& side) const;
  bool knows(std::string_view feature) const { return marker_vocab.contains(std::string(feature)); }
};

/// Throws InvalidConfig on overlapping vocabularies, a negative diagonal,
/// non-positive multipliers or an out-of-range density.
void validate_sim_model(const SimStyleModel& model);

SimStyleModel load_sim_model(const std::filesystem::path& path);

using StyleMix = std::map<std::string, double>;

/// Sum of contamination rows of the requested features, clamped to [-1, 1].
StyleMix style_mix_for(const std::vector<std::string>& requested, const SimStyleModel& model);

std::size_t sim_length(const StyleMix& mix, const SimStyleModel& model);
double sim_marker_probability(const StyleMix& mix, const std::string& feature, const SimStyleModel& model);

/// UnknownFeature when the mix names a feature without a vocabulary, and
/// InvalidSpec when a weight lies outside [-1, 1].
std::string sim_render(const StyleMix& mix, std::string_view topic, std::uint64_t rng_seed,
                       const SimStyleModel& model);

/// Number of words in `text` that belong to the feature's marker vocabulary.
std::size_t count_markers(std::string_view text, const std::string& feature, const SimStyleModel& model);

/// Features named by a "Please be X [and|but Y] in your response." clause.
std::vector<std::string> requested_features(std::string_view system_prompt);

/// Topic from "... conversation about {topic}." ; empty if absent.
std::string prompt_topic(std::string_view system_prompt);

/// Renders the style requested by the system prompt; pure in (request, model).
class SimChatBackend : public ChatBackend {
 public:
  explicit SimChatBackend(SimStyleModel model, std::string id = "sim");
  ChatResponse complete(const ChatRequest& request) override;
  std::string id() const override { return id_; }
  const SimStyleModel& model() const noexcept { return model_; }

 private:
  SimStyleModel model_;
  std::string id_;
};

/// Judge that reads the feature and both responses out of the judge prompt
/// and answers with the response of higher marker density. Ties answer "A".
/// Unknown features get a non-conforming reply.
class MarkerJudgeBackend : public ChatBackend {
 public:
  explicit MarkerJudgeBackend(SimStyleModel model, std::string id = "sim-marker-judge");
  ChatResponse complete(const ChatRequest& request) override;
  std::string id() const override { return id_; }

 private:
  SimStyleModel model_;
  std::string id_;
};

/// Always replies with the same text.
class ConstantBackend : public ChatBackend {
 public:
  explicit ConstantBackend(std::string reply, std::string id = "constant");
  ChatResponse complete(const ChatRequest& request) override;
  std::string id() const override { return id_; }

 private:
  std::string reply_;
  std::string id_;
};

}  // namespace stylefx
