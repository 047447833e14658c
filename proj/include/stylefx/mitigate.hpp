#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "stylefx/corpus.hpp"
#include "stylefx/genharness.hpp"
#include "stylefx/judge.hpp"
#include "stylefx/stats.hpp"

namespace stylefx {

enum class Method { OnlyMain, OnlySide, Prompting, PromptingReversed, Steering };

std::string_view to_string(Method m) noexcept;
Method parse_method(std::string_view s);  // accepts the CLI spellings too

/// The five shipped target pairs with the domains they were found in.
std::vector<SideEffectPair> default_pairs();

struct MitigationPlan {
  SideEffectPair pair;
  Method method = Method::Prompting;
  std::vector<std::string> test_ids;  // test split
  std::size_t n_samples = 5;
  Joiner joiner = Joiner::But;
  PrefixStyle prefix = PrefixStyle::HelpfulAssistant;
  std::optional<std::filesystem::path> baked_checkpoint;  // Steering only
};

/// InvalidSpec for Steering without a checkpoint or main == side.
void validate_plan(const MitigationPlan& plan);

/// Test-split seeds whose domain is in the pair's domains, in corpus order.
std::vector<DialogueSeed> plan_seeds(const MitigationPlan& plan, const std::vector<DialogueSeed>& corpus);

PromptSpec plan_prompt_spec(const MitigationPlan& plan);

/// Prompting / PromptingReversed only; n_samples per seed.
GenerationBatch prompt_intervention_generate(ChatBackend& backend, const MitigationPlan& plan,
                                             const std::vector<DialogueSeed>& corpus, const GenerationOptions& options);

struct MitigationReport {
  SideEffectPair pair;
  std::string slice;            // e.g. model name, or "pooled"
  std::string template_label;   // joiner used by the prompting rows
  std::vector<Method> methods;  // row order
  std::vector<std::string> eval_features;  // main, side, then any extras
  std::map<std::pair<Method, std::string>, MatrixCell> cells;

  /// NoData cell when absent, so every (method, feature) is defined.
  MatrixCell cell(Method m, const std::string& feature) const;
};

struct EvalOptions {
  std::vector<std::string> extra_features;  // e.g. the rest of the catalog
  bool include_length = false;
  double alpha = 0.05;
  std::uint64_t run_seed = 0;
  std::size_t max_concurrency = 1;
  JudgeOptions judge;
};

/// Judges each record against its seed's Neutral reference on the pair's
/// features and adds the rows for plan.method to `report`. Records outside
/// the test split raise InconsistentRecords; a missing reference raises
/// MissingReference. Returns the comparison records.
std::vector<ComparisonRecord> run_mitigation_eval(MitigationReport& report, const MitigationPlan& plan,
                                                  const std::vector<StyledResponse>& records,
                                                  const std::map<std::string, StyledResponse>& neutral_by_seed,
                                                  ChatBackend& judge, const EvalOptions& options);

/// OnlyMain / OnlySide rows re-aggregated from stored audit comparisons,
/// restricted to the test split and the pair's domains.
void add_audit_rows(MitigationReport& report, const std::vector<ComparisonRecord>& audit_records,
                    const std::set<std::string>& eligible_seed_ids, double alpha);

/// Adds one method's rows from judged records.
void add_rows(MitigationReport& report, Method method, const std::vector<ComparisonRecord>& records, double alpha);

MitigationReport new_report(const SideEffectPair& pair, std::string slice, const EvalOptions& options = {},
                            Joiner joiner = Joiner::But);

/// Reports from a raw-count CSV with columns
/// main, side, domains, model, method, eval_feature, wins, judged.
std::vector<MitigationReport> load_mitigation_counts(const std::filesystem::path& path, double alpha = 0.05);

/// Methods as columns, one row per (pair, eval feature); cells like "0.812*".
std::string report_table_csv(const std::vector<MitigationReport>& reports);
/// One row per cell with wins, judged, rate, p_value, significant.
std::string report_counts_csv(const std::vector<MitigationReport>& reports);

/// "%.3f" plus "*" when significant; "NoData" for empty cells.
std::string starred(const MatrixCell& cell);

}  // namespace stylefx
