#pragma once

#include <cstddef>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "stylefx/corpus.hpp"
#include "stylefx/feature_catalog.hpp"
#include "stylefx/judge.hpp"

namespace stylefx {

struct WinRate {
  std::size_t wins = 0;
  std::size_t judged = 0;             // Unknown excluded
  std::optional<double> rate;         // nullopt when judged == 0 (NoData)
};

/// All records must share eval_feature, else InconsistentRecords.
WinRate win_rate(std::span<const ComparisonRecord> records);

/// Exact two-sided binomial test. For p0 = 0.5 this is the doubled smaller
/// tail, capped at 1; other p0 use the minimum-likelihood rule.
double binom_two_sided_p(std::size_t k, std::size_t n, double p0 = 0.5);

struct MatrixCell {
  std::string main;
  std::string side;
  std::size_t wins = 0;
  std::size_t judged = 0;
  std::optional<double> rate;
  double p_value = 1.0;
  bool significant = false;

  bool no_data() const noexcept { return !rate.has_value(); }
};

MatrixCell make_cell(std::string main, std::string side, std::size_t wins, std::size_t judged, double alpha);

struct WinRateMatrix {
  std::vector<std::string> mains;
  std::vector<std::string> sides;  // mains followed by "length"
  std::vector<MatrixCell> cells;   // row-major, mains.size() x sides.size()
  double alpha = 0.05;
  std::string slice = "pooled";
  std::set<Domain> domains;

  const MatrixCell& at(std::size_t i, std::size_t j) const { return cells.at(i * sides.size() + j); }
  const MatrixCell& at(std::string_view main, std::string_view side) const;
};

/// Cells from audit records whose candidate was generated with a Single
/// prompt. (candidate main, eval feature) pairs with no judged record are
/// NoData; the grid is always complete.
WinRateMatrix build_win_matrix(std::span<const ComparisonRecord> records, const StyleCatalog& catalog,
                               double alpha = 0.05);

struct CountRow {
  std::string main;
  std::string side;
  std::size_t wins = 0;
  std::size_t judged = 0;
};

/// Matrix from pre-aggregated counts; missing cells are NoData.
WinRateMatrix matrix_from_counts(std::span<const CountRow> rows, const std::vector<std::string>& mains,
                                 double alpha = 0.05);

/// CSV with columns main, side, wins, judged (extra columns ignored).
std::vector<CountRow> load_count_rows(const std::filesystem::path& path);

enum class Polarity { Degradation, Enhancement };
std::string_view to_string(Polarity p) noexcept;

struct SideEffectPair {
  std::string main;
  std::string side;
  std::set<Domain> domains;
  Polarity polarity = Polarity::Degradation;
  double rate = 0.0;
  double p_value = 1.0;
};

/// Off-diagonal feature cells (Length excluded) with p <= alpha and
/// rate <= 0.5 - min_gap; with `include_enhancement` also rate >= 0.5 + min_gap.
/// Sorted by ascending rate, then catalog position.
std::vector<SideEffectPair> screen_side_effects(const WinRateMatrix& matrix, double alpha, double min_gap = 0.0,
                                                bool include_enhancement = false);

}  // namespace stylefx
