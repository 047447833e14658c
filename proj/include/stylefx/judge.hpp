#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "stylefx/backend.hpp"
#include "stylefx/genharness.hpp"

namespace stylefx {

/// Evaluation-feature name used for the word-count comparison.
inline constexpr std::string_view kLengthFeature = "length";

enum class Letter { A, B, Unknown };
enum class PresentedOrder { CandidateFirst, ReferenceFirst };
enum class Verdict { CandidateWins, ReferenceWins, Unknown };

std::string_view to_string(PresentedOrder o) noexcept;
std::string_view to_string(Verdict v) noexcept;
PresentedOrder parse_presented_order(std::string_view s);
Verdict parse_verdict_name(std::string_view s);

struct ComparisonRecord {
  std::string eval_feature;
  std::string candidate_id;
  std::string reference_id;
  std::string seed_id;
  PromptSpec candidate_spec;
  PresentedOrder presented_order = PresentedOrder::CandidateFirst;
  std::string raw_verdict;
  Verdict verdict = Verdict::Unknown;
  std::string judge_backend_id;
  std::string failure;  // non-empty when the judge call failed
};

struct JudgePrompt {
  std::string system;
  std::string user;
};

JudgePrompt build_judge_prompt(std::string_view eval_feature, std::string_view response_a,
                               std::string_view response_b);

/// Tolerant mode: after trimming, the first alphabetic character must be A or
/// B (any case) and no other alphabetic character may follow. Strict mode
/// accepts only the trimmed strings "A" and "B". Never throws.
Letter parse_verdict(std::string_view raw, bool strict = false);

struct JudgeOptions {
  bool strict = false;
  double temperature = 0.0;
  std::size_t max_tokens = 8;
};

/// Presentation order comes from a fair coin on `rng_seed`. Backend failures
/// and empty responses yield Verdict::Unknown with `failure` set.
ComparisonRecord compare_pair(ChatBackend& judge, std::string_view eval_feature, const StyledResponse& candidate,
                              const StyledResponse& reference, std::uint64_t rng_seed,
                              const JudgeOptions& options = {});

/// CandidateWins iff the candidate has more words; equal counts are Unknown.
ComparisonRecord compare_length(const StyledResponse& candidate, const StyledResponse& reference);

/// Seed for one comparison, derived from the run seed and the pair identity.
std::uint64_t comparison_seed(std::uint64_t run_seed, std::string_view eval_feature, std::string_view candidate_id,
                              std::string_view reference_id);

/// Judges every candidate against its seed's reference on each feature, and
/// adds a length comparison when `include_length`. Output order is
/// candidate-major, feature-minor; schedule never changes it.
/// A candidate whose seed has no reference raises MissingReference.
std::vector<ComparisonRecord> judge_against_references(
    ChatBackend& judge, const std::vector<StyledResponse>& candidates,
    const std::map<std::string, StyledResponse>& references_by_seed, const std::vector<std::string>& features,
    bool include_length, std::uint64_t run_seed, std::size_t max_concurrency, const JudgeOptions& options = {});

OrderedJson to_json(const ComparisonRecord& r);
ComparisonRecord comparison_record_from_json(const Json& j);

}  // namespace stylefx
