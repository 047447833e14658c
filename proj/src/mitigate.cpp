#include "stylefx/mitigate.hpp"

#include <algorithm>
#include <cstdio>
#include <tuple>

#include "stylefx/error.hpp"

namespace stylefx {

std::string_view to_string(Method m) noexcept {
  switch (m) {
    case Method::OnlyMain: return "OnlyMain";
    case Method::OnlySide: return "OnlySide";
    case Method::Prompting: return "Prompting";
    case Method::PromptingReversed: return "PromptingReversed";
    case Method::Steering: return "Steering";
  }
  return "?";
}

Method parse_method(std::string_view s) {
  if (s == "prompt") return Method::Prompting;
  if (s == "prompt-reversed") return Method::PromptingReversed;
  if (s == "steer") return Method::Steering;
  for (auto m : {Method::OnlyMain, Method::OnlySide, Method::Prompting, Method::PromptingReversed, Method::Steering})
    if (to_string(m) == s) return m;
  throw Error(ErrorKind::ParseError, "unknown mitigation method '" + std::string(s) + "'");
}

std::vector<SideEffectPair> default_pairs() {
  const std::set<Domain> both{Domain::Task, Domain::Daily}, daily{Domain::Daily};
  return {
      {"concise", "expert", both, Polarity::Degradation, 0.0, 1.0},
      {"efficient", "helpful", both, Polarity::Degradation, 0.0, 1.0},
      {"curious", "empathetic", daily, Polarity::Degradation, 0.0, 1.0},
      {"engaging", "impartial", daily, Polarity::Degradation, 0.0, 1.0},
      {"polite", "efficient", both, Polarity::Degradation, 0.0, 1.0},
  };
}

void validate_plan(const MitigationPlan& plan) {
  if (plan.pair.main == plan.pair.side) throw Error(ErrorKind::InvalidSpec, "main and side feature coincide");
  if (plan.method == Method::Steering && !plan.baked_checkpoint)
    throw Error(ErrorKind::InvalidSpec, "steering plan needs a baked checkpoint");
  if (plan.n_samples < 1) throw Error(ErrorKind::InvalidSpec, "n_samples must be >= 1");
}

std::vector<DialogueSeed> plan_seeds(const MitigationPlan& plan, const std::vector<DialogueSeed>& corpus) {
  const std::set<std::string> test(plan.test_ids.begin(), plan.test_ids.end());
  std::vector<DialogueSeed> out;
  for (const auto& s : corpus)
    if (test.contains(s.seed_id) && (plan.pair.domains.empty() || plan.pair.domains.contains(s.domain)))
      out.push_back(s);
  return out;
}

PromptSpec plan_prompt_spec(const MitigationPlan& plan) {
  switch (plan.method) {
    case Method::OnlyMain: return PromptSpec::single(plan.pair.main, plan.prefix);
    case Method::OnlySide: return PromptSpec::single(plan.pair.side, plan.prefix);
    case Method::Prompting:
    case Method::PromptingReversed:
      return PromptSpec::pair(plan.pair.main, plan.pair.side, plan.method == Method::PromptingReversed, plan.joiner,
                              plan.prefix);
    case Method::Steering: {
      PromptSpec s = PromptSpec::single(plan.pair.main, plan.prefix);
      s.mode = PromptMode::SteeredSingle;
      s.steered_feature = plan.pair.side;
      return s;
    }
  }
  throw Error(ErrorKind::InvalidSpec, "unknown method");
}

GenerationBatch prompt_intervention_generate(ChatBackend& backend, const MitigationPlan& plan,
                                             const std::vector<DialogueSeed>& corpus, const GenerationOptions& options) {
  validate_plan(plan);
  if (plan.method != Method::Prompting && plan.method != Method::PromptingReversed)
    throw Error(ErrorKind::InvalidSpec, "prompt intervention needs a Prompting method");
  return generate_batch(backend, plan_seeds(plan, corpus), plan_prompt_spec(plan), plan.n_samples, options);
}

MatrixCell MitigationReport::cell(Method m, const std::string& feature) const {
  auto it = cells.find({m, feature});
  if (it != cells.end()) return it->second;
  MatrixCell c;
  c.main = std::string(to_string(m));
  c.side = feature;
  return c;
}

MitigationReport new_report(const SideEffectPair& pair, std::string slice, const EvalOptions& options, Joiner joiner) {
  MitigationReport r;
  r.pair = pair;
  r.slice = std::move(slice);
  r.template_label = std::string(to_string(joiner));
  r.eval_features = {pair.main, pair.side};
  for (const auto& f : options.extra_features)
    if (std::find(r.eval_features.begin(), r.eval_features.end(), f) == r.eval_features.end())
      r.eval_features.push_back(f);
  if (options.include_length) r.eval_features.emplace_back(kLengthFeature);
  return r;
}

void add_rows(MitigationReport& report, Method method, const std::vector<ComparisonRecord>& records, double alpha) {
  if (std::find(report.methods.begin(), report.methods.end(), method) == report.methods.end())
    report.methods.push_back(method);
  std::map<std::string, std::pair<std::size_t, std::size_t>> counts;
  for (const auto& r : records) {
    auto& [wins, judged] = counts[r.eval_feature];
    if (r.verdict == Verdict::Unknown) continue;
    ++judged;
    wins += r.verdict == Verdict::CandidateWins;
  }
  for (const auto& f : report.eval_features) {
    const auto [wins, judged] = counts.contains(f) ? counts.at(f) : std::pair<std::size_t, std::size_t>{0, 0};
    report.cells[{method, f}] = make_cell(std::string(to_string(method)), f, wins, judged, alpha);
  }
}

std::vector<ComparisonRecord> run_mitigation_eval(MitigationReport& report, const MitigationPlan& plan,
                                                  const std::vector<StyledResponse>& records,
                                                  const std::map<std::string, StyledResponse>& neutral_by_seed,
                                                  ChatBackend& judge, const EvalOptions& options) {
  validate_plan(plan);
  const std::set<std::string> test(plan.test_ids.begin(), plan.test_ids.end());
  for (const auto& r : records)
    if (!test.contains(r.seed_id))
      throw Error(ErrorKind::InconsistentRecords, "record " + r.id() + " is outside the test split");
  std::vector<std::string> features;
  bool length = false;
  for (const auto& f : report.eval_features) {
    if (f == kLengthFeature) length = true;
    else features.push_back(f);
  }
  auto judged = judge_against_references(judge, records, neutral_by_seed, features, length, options.run_seed,
                                         options.max_concurrency, options.judge);
  add_rows(report, plan.method, judged, options.alpha);
  return judged;
}

void add_audit_rows(MitigationReport& report, const std::vector<ComparisonRecord>& audit_records,
                    const std::set<std::string>& eligible_seed_ids, double alpha) {
  for (auto [method, feature] : {std::pair{Method::OnlyMain, report.pair.main}, std::pair{Method::OnlySide, report.pair.side}}) {
    std::vector<ComparisonRecord> subset;
    for (const auto& r : audit_records)
      if (r.candidate_spec.mode == PromptMode::Single && r.candidate_spec.main_feature == feature &&
          eligible_seed_ids.contains(r.seed_id))
        subset.push_back(r);
    add_rows(report, method, subset, alpha);
  }
}

std::vector<MitigationReport> load_mitigation_counts(const std::filesystem::path& path, double alpha) {
  std::vector<MitigationReport> out;
  std::map<std::tuple<std::string, std::string, std::string>, std::size_t> index;
  for (const auto& row : read_csv(path)) {
    try {
      const auto key = std::make_tuple(row.at("main"), row.at("side"), row.at("model"));
      auto it = index.find(key);
      if (it == index.end()) {
        SideEffectPair pair{row.at("main"), row.at("side"), {}, Polarity::Degradation, 0.0, 1.0};
        std::string domains = row.at("domains");
        for (std::size_t start = 0; start <= domains.size();) {
          auto bar = domains.find('|', start);
          if (bar == std::string::npos) bar = domains.size();
          if (bar > start) pair.domains.insert(parse_domain(domains.substr(start, bar - start)));
          start = bar + 1;
        }
        out.push_back(new_report(pair, row.at("model")));
        it = index.emplace(key, out.size() - 1).first;
      }
      MitigationReport& rep = out[it->second];
      const Method m = parse_method(row.at("method"));
      const std::string& f = row.at("eval_feature");
      if (std::find(rep.methods.begin(), rep.methods.end(), m) == rep.methods.end()) rep.methods.push_back(m);
      if (std::find(rep.eval_features.begin(), rep.eval_features.end(), f) == rep.eval_features.end())
        rep.eval_features.push_back(f);
      rep.cells[{m, f}] = make_cell(std::string(to_string(m)), f, std::stoul(row.at("wins")),
                                    std::stoul(row.at("judged")), alpha);
    } catch (const std::out_of_range& e) {
      throw Error(ErrorKind::ParseError, path.filename().string() + ": missing column");
    } catch (const std::invalid_argument& e) {
      throw Error(ErrorKind::ParseError, path.filename().string() + ": bad count");
    }
  }
  return out;
}

std::string starred(const MatrixCell& cell) {
  if (cell.no_data()) return "NoData";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3f%s", *cell.rate, cell.significant ? "*" : "");
  return buf;
}

namespace {

std::string domains_label(const std::set<Domain>& domains) {
  std::string s;
  for (auto d : domains) s += (s.empty() ? "" : "|") + std::string(to_string(d));
  return s;
}

std::string row_role(const MitigationReport& r, const std::string& feature) {
  if (feature == r.pair.main) return "main";
  if (feature == r.pair.side) return "side";
  return "extra";
}

}  // namespace

std::string report_table_csv(const std::vector<MitigationReport>& reports) {
  std::vector<Method> columns;
  for (const auto& r : reports)
    for (auto m : r.methods)
      if (std::find(columns.begin(), columns.end(), m) == columns.end()) columns.push_back(m);
  std::sort(columns.begin(), columns.end());
  std::string out = "main,side,domains,slice,template,row,eval_feature";
  for (auto m : columns) out += "," + std::string(to_string(m));
  out += "\n";
  for (const auto& r : reports)
    for (const auto& f : r.eval_features) {
      out += r.pair.main + "," + r.pair.side + "," + domains_label(r.pair.domains) + "," + r.slice + "," +
             r.template_label + "," + row_role(r, f) + "," + f;
      for (auto m : columns) out += "," + starred(r.cell(m, f));
      out += "\n";
    }
  return out;
}

std::string report_counts_csv(const std::vector<MitigationReport>& reports) {
  std::string out = "main,side,domains,slice,template,method,eval_feature,wins,judged,rate,p_value,significant\n";
  char buf[64];
  for (const auto& r : reports)
    for (auto m : r.methods)
      for (const auto& f : r.eval_features) {
        const MatrixCell c = r.cell(m, f);
        out += r.pair.main + "," + r.pair.side + "," + domains_label(r.pair.domains) + "," + r.slice + "," +
               r.template_label + "," + std::string(to_string(m)) + "," + f + "," + std::to_string(c.wins) + "," +
               std::to_string(c.judged) + ",";
        if (c.no_data()) {
          out += "NoData,1,0\n";
          continue;
        }
        std::snprintf(buf, sizeof buf, "%.6f,%.6g,%d\n", *c.rate, c.p_value, c.significant ? 1 : 0);
        out += buf;
      }
  return out;
}

}  // namespace stylefx
