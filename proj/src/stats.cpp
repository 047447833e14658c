#include "stylefx/stats.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <tuple>

#include "stylefx/error.hpp"

namespace stylefx {

WinRate win_rate(std::span<const ComparisonRecord> records) {
  WinRate out;
  for (const auto& r : records) {
    if (r.eval_feature != records.front().eval_feature)
      throw Error(ErrorKind::InconsistentRecords,
                  "mixed eval features '" + records.front().eval_feature + "' and '" + r.eval_feature + "'");
    if (r.verdict == Verdict::Unknown) continue;
    ++out.judged;
    if (r.verdict == Verdict::CandidateWins) ++out.wins;
  }
  if (out.judged > 0) out.rate = static_cast<double>(out.wins) / static_cast<double>(out.judged);
  return out;
}

namespace {

// Exact for n <= 62: C(n, i) * (n - i) and the tail sums fit in 64 bits.
double fair_coin_p_exact(std::size_t k, std::size_t n) {
  const std::size_t m = std::min(k, n - k);
  std::uint64_t c = 1, tail = 0;
  for (std::size_t i = 0; i <= m; ++i) {
    tail += c;
    c = c * (n - i) / (i + 1);
  }
  const long double total = std::ldexp(1.0L, static_cast<int>(n));
  const long double p = 2.0L * static_cast<long double>(tail) / total;
  return static_cast<double>(std::min(p, 1.0L));
}

double log_pmf(std::size_t i, std::size_t n, double p0) {
  const double nn = static_cast<double>(n), ii = static_cast<double>(i);
  double lp = std::lgamma(nn + 1) - std::lgamma(ii + 1) - std::lgamma(nn - ii + 1);
  if (i > 0) lp += ii * std::log(p0);
  if (i < n) lp += (nn - ii) * std::log1p(-p0);
  return lp;
}

// Smaller tail summed outward from k with the pmf ratio recurrence, scaled
// by pmf(k); terms shrink monotonically so the loop stops on underflow.
double fair_coin_p_large(std::size_t k, std::size_t n) {
  const std::size_t m = std::min(k, n - k);
  if (2 * m == n) return 1.0;
  double sum = 1.0, term = 1.0;
  for (std::size_t i = m; i > 0; --i) {
    term *= static_cast<double>(i) / static_cast<double>(n - i + 1);
    sum += term;
    if (term < sum * 1e-17) break;
  }
  return std::min(1.0, 2.0 * std::exp(log_pmf(m, n, 0.5)) * sum);
}

double min_likelihood_p(std::size_t k, std::size_t n, double p0) {
  if (p0 <= 0.0) return k == 0 ? 1.0 : 0.0;
  if (p0 >= 1.0) return k == n ? 1.0 : 0.0;
  const double ref = log_pmf(k, n, p0);
  const double slack = 1e-7;
  double p = 0.0;
  for (std::size_t i = 0; i <= n; ++i) {
    const double lp = log_pmf(i, n, p0);
    if (lp <= ref + std::log1p(slack)) p += std::exp(lp);
  }
  return std::min(1.0, p);
}

}  // namespace

double binom_two_sided_p(std::size_t k, std::size_t n, double p0) {
  if (n == 0) throw Error(ErrorKind::EmptyInput, "binomial test with n = 0");
  if (k > n) throw Error(ErrorKind::InvalidSpec, "k > n in binomial test");
  if (!(p0 >= 0.0 && p0 <= 1.0)) throw Error(ErrorKind::InvalidSpec, "p0 outside [0, 1]");
  if (p0 == 0.5) return n <= 62 ? fair_coin_p_exact(k, n) : fair_coin_p_large(k, n);
  return min_likelihood_p(k, n, p0);
}

MatrixCell make_cell(std::string main, std::string side, std::size_t wins, std::size_t judged, double alpha) {
  if (wins > judged) throw Error(ErrorKind::InconsistentRecords, main + "/" + side + ": wins exceed judged");
  MatrixCell c;
  c.main = std::move(main);
  c.side = std::move(side);
  c.wins = wins;
  c.judged = judged;
  if (judged > 0) {
    c.rate = static_cast<double>(wins) / static_cast<double>(judged);
    c.p_value = binom_two_sided_p(wins, judged);
    c.significant = c.p_value <= alpha;
  }
  return c;
}

const MatrixCell& WinRateMatrix::at(std::string_view main, std::string_view side) const {
  auto i = std::find(mains.begin(), mains.end(), main);
  auto j = std::find(sides.begin(), sides.end(), side);
  if (i == mains.end() || j == sides.end())
    throw Error(ErrorKind::UnknownFeature, std::string(main) + "/" + std::string(side));
  return at(static_cast<std::size_t>(i - mains.begin()), static_cast<std::size_t>(j - sides.begin()));
}

namespace {

WinRateMatrix empty_matrix(const std::vector<std::string>& mains, double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw Error(ErrorKind::InvalidConfig, "alpha must lie in (0, 1)");
  WinRateMatrix m;
  m.mains = mains;
  m.sides = mains;
  m.sides.emplace_back(kLengthFeature);
  m.alpha = alpha;
  return m;
}

}  // namespace

WinRateMatrix build_win_matrix(std::span<const ComparisonRecord> records, const StyleCatalog& catalog, double alpha) {
  WinRateMatrix m = empty_matrix(catalog.features(), alpha);
  std::map<std::pair<std::string, std::string>, std::pair<std::size_t, std::size_t>> counts;
  for (const auto& r : records) {
    if (r.candidate_spec.mode != PromptMode::Single || !r.candidate_spec.main_feature) continue;
    auto& [wins, judged] = counts[{*r.candidate_spec.main_feature, r.eval_feature}];
    if (r.verdict == Verdict::Unknown) continue;
    ++judged;
    if (r.verdict == Verdict::CandidateWins) ++wins;
  }
  m.cells.reserve(m.mains.size() * m.sides.size());
  for (const auto& main : m.mains)
    for (const auto& side : m.sides) {
      auto it = counts.find({main, side});
      const auto [wins, judged] = it == counts.end() ? std::pair<std::size_t, std::size_t>{0, 0} : it->second;
      m.cells.push_back(make_cell(main, side, wins, judged, alpha));
    }
  return m;
}

WinRateMatrix matrix_from_counts(std::span<const CountRow> rows, const std::vector<std::string>& mains, double alpha) {
  WinRateMatrix m = empty_matrix(mains, alpha);
  std::map<std::pair<std::string, std::string>, const CountRow*> by_cell;
  for (const auto& r : rows) by_cell[{r.main, r.side}] = &r;
  for (const auto& main : m.mains)
    for (const auto& side : m.sides) {
      auto it = by_cell.find({main, side});
      if (it == by_cell.end()) m.cells.push_back(make_cell(main, side, 0, 0, alpha));
      else m.cells.push_back(make_cell(main, side, it->second->wins, it->second->judged, alpha));
    }
  return m;
}

std::vector<CountRow> load_count_rows(const std::filesystem::path& path) {
  std::vector<CountRow> out;
  for (const auto& row : read_csv(path)) {
    try {
      out.push_back({row.at("main"), row.at("side"), std::stoul(row.at("wins")), std::stoul(row.at("judged"))});
    } catch (const std::exception& e) {
      throw Error(ErrorKind::ParseError, path.filename().string() + ": " + e.what());
    }
  }
  return out;
}

std::string_view to_string(Polarity p) noexcept { return p == Polarity::Degradation ? "Degradation" : "Enhancement"; }

std::vector<SideEffectPair> screen_side_effects(const WinRateMatrix& matrix, double alpha, double min_gap,
                                                bool include_enhancement) {
  struct Hit {
    SideEffectPair pair;
    std::size_t i, j;
  };
  std::vector<Hit> hits;
  for (std::size_t i = 0; i < matrix.mains.size(); ++i)
    for (std::size_t j = 0; j < matrix.sides.size(); ++j) {
      const auto& c = matrix.at(i, j);
      if (c.side == kLengthFeature || c.main == c.side || c.no_data() || c.p_value > alpha) continue;
      std::optional<Polarity> pol;
      if (*c.rate <= 0.5 - min_gap) pol = Polarity::Degradation;
      else if (include_enhancement && *c.rate >= 0.5 + min_gap) pol = Polarity::Enhancement;
      if (!pol) continue;
      hits.push_back({{c.main, c.side, matrix.domains, *pol, *c.rate, c.p_value}, i, j});
    }
  std::sort(hits.begin(), hits.end(), [](const Hit& a, const Hit& b) {
    return std::tie(a.pair.rate, a.i, a.j) < std::tie(b.pair.rate, b.i, b.j);
  });
  std::vector<SideEffectPair> out;
  out.reserve(hits.size());
  for (auto& h : hits) out.push_back(std::move(h.pair));
  return out;
}

}  // namespace stylefx
