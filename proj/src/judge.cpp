#include "stylefx/judge.hpp"

#include <cctype>

#include "stylefx/concurrency.hpp"
#include "stylefx/error.hpp"
#include "stylefx/rng.hpp"

namespace stylefx {

std::string_view to_string(PresentedOrder o) noexcept {
  return o == PresentedOrder::CandidateFirst ? "CandidateFirst" : "ReferenceFirst";
}

std::string_view to_string(Verdict v) noexcept {
  switch (v) {
    case Verdict::CandidateWins: return "CandidateWins";
    case Verdict::ReferenceWins: return "ReferenceWins";
    case Verdict::Unknown: return "Unknown";
  }
  return "Unknown";
}

PresentedOrder parse_presented_order(std::string_view s) {
  if (s == "CandidateFirst") return PresentedOrder::CandidateFirst;
  if (s == "ReferenceFirst") return PresentedOrder::ReferenceFirst;
  throw Error(ErrorKind::ParseError, "unknown presented_order '" + std::string(s) + "'");
}

Verdict parse_verdict_name(std::string_view s) {
  for (auto v : {Verdict::CandidateWins, Verdict::ReferenceWins, Verdict::Unknown})
    if (to_string(v) == s) return v;
  throw Error(ErrorKind::ParseError, "unknown verdict '" + std::string(s) + "'");
}

JudgePrompt build_judge_prompt(std::string_view eval_feature, std::string_view response_a,
                               std::string_view response_b) {
  const std::string f(eval_feature);
  JudgePrompt p;
  p.system = "You are an expert evaluator of conversation quality.";
  p.user = "Compare the following two assistant responses and determine which one is more " + f + ".\n";
  p.user += "Response A:\n";
  p.user += response_a;
  p.user += "\nResponse B:\n";
  p.user += response_b;
  p.user += "\nYou must choose one. Which response is more " + f +
            "? Answer with ONLY \"A\" or \"B\" (no ties allowed).\nAnswer:";
  return p;
}

Letter parse_verdict(std::string_view raw, bool strict) {
  const std::string t = trim(raw);
  if (strict) return t == "A" ? Letter::A : t == "B" ? Letter::B : Letter::Unknown;
  Letter found = Letter::Unknown;
  bool seen_alpha = false;
  for (unsigned char c : t) {
    if (!std::isalpha(c)) continue;
    if (seen_alpha) return Letter::Unknown;
    seen_alpha = true;
    const char u = static_cast<char>(std::toupper(c));
    if (u == 'A') found = Letter::A;
    else if (u == 'B') found = Letter::B;
    else return Letter::Unknown;
  }
  return found;
}

ComparisonRecord compare_pair(ChatBackend& judge, std::string_view eval_feature, const StyledResponse& candidate,
                              const StyledResponse& reference, std::uint64_t rng_seed, const JudgeOptions& options) {
  ComparisonRecord rec;
  rec.eval_feature = eval_feature;
  rec.candidate_id = candidate.id();
  rec.reference_id = reference.id();
  rec.seed_id = candidate.seed_id;
  rec.candidate_spec = candidate.spec;
  Rng rng(rng_seed);
  rec.presented_order = rng.coin() ? PresentedOrder::ReferenceFirst : PresentedOrder::CandidateFirst;
  const bool cand_first = rec.presented_order == PresentedOrder::CandidateFirst;
  const auto prompt = build_judge_prompt(eval_feature, cand_first ? candidate.text : reference.text,
                                         cand_first ? reference.text : candidate.text);
  ChatRequest req;
  req.system_prompt = prompt.system;
  req.user_message = prompt.user;
  req.temperature = options.temperature;
  req.max_tokens = options.max_tokens;
  req.rng_seed = rng_seed;
  rec.judge_backend_id = judge.id();
  if (trim(candidate.text).empty() || trim(reference.text).empty()) {
    rec.failure = "empty response";
    return rec;
  }
  try {
    rec.raw_verdict = judge.complete(req).text;
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::BackendUnavailable && e.kind() != ErrorKind::ProtocolError) throw;
    rec.failure = e.what();
    rec.verdict = Verdict::Unknown;
    return rec;
  }
  switch (parse_verdict(rec.raw_verdict, options.strict)) {
    case Letter::A: rec.verdict = cand_first ? Verdict::CandidateWins : Verdict::ReferenceWins; break;
    case Letter::B: rec.verdict = cand_first ? Verdict::ReferenceWins : Verdict::CandidateWins; break;
    case Letter::Unknown: rec.verdict = Verdict::Unknown; break;
  }
  return rec;
}

ComparisonRecord compare_length(const StyledResponse& candidate, const StyledResponse& reference) {
  ComparisonRecord rec;
  rec.eval_feature = kLengthFeature;
  rec.candidate_id = candidate.id();
  rec.reference_id = reference.id();
  rec.seed_id = candidate.seed_id;
  rec.candidate_spec = candidate.spec;
  rec.raw_verdict = std::to_string(candidate.word_count) + " vs " + std::to_string(reference.word_count);
  rec.judge_backend_id = "word-count";
  if (candidate.word_count > reference.word_count) rec.verdict = Verdict::CandidateWins;
  else if (candidate.word_count < reference.word_count) rec.verdict = Verdict::ReferenceWins;
  else rec.verdict = Verdict::Unknown;
  return rec;
}

std::uint64_t comparison_seed(std::uint64_t run_seed, std::string_view eval_feature, std::string_view candidate_id,
                              std::string_view reference_id) {
  return hash_combine(hash_combine(run_seed, fnv1a64(eval_feature)),
                      hash_combine(fnv1a64(candidate_id), fnv1a64(reference_id)));
}

std::vector<ComparisonRecord> judge_against_references(
    ChatBackend& judge, const std::vector<StyledResponse>& candidates,
    const std::map<std::string, StyledResponse>& references_by_seed, const std::vector<std::string>& features,
    bool include_length, std::uint64_t run_seed, std::size_t max_concurrency, const JudgeOptions& options) {
  std::vector<const StyledResponse*> refs(candidates.size());
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    auto it = references_by_seed.find(candidates[i].seed_id);
    if (it == references_by_seed.end()) throw Error(ErrorKind::MissingReference, candidates[i].seed_id);
    refs[i] = &it->second;
  }
  const std::size_t per = features.size() + (include_length ? 1 : 0);
  std::vector<ComparisonRecord> out(candidates.size() * per);
  parallel_for(out.size(), max_concurrency, [&](std::size_t i) {
    const std::size_t c = i / per, f = i % per;
    if (f == features.size()) {
      out[i] = compare_length(candidates[c], *refs[c]);
      return;
    }
    const auto seed = comparison_seed(run_seed, features[f], candidates[c].id(), refs[c]->id());
    out[i] = compare_pair(judge, features[f], candidates[c], *refs[c], seed, options);
  });
  return out;
}

OrderedJson to_json(const ComparisonRecord& r) {
  OrderedJson j;
  j["eval_feature"] = r.eval_feature;
  j["candidate_id"] = r.candidate_id;
  j["reference_id"] = r.reference_id;
  j["seed_id"] = r.seed_id;
  j["candidate_spec"] = to_json(r.candidate_spec);
  j["presented_order"] = to_string(r.presented_order);
  j["raw_verdict"] = r.raw_verdict;
  j["verdict"] = to_string(r.verdict);
  j["judge_backend_id"] = r.judge_backend_id;
  if (!r.failure.empty()) j["failure"] = r.failure;
  return j;
}

ComparisonRecord comparison_record_from_json(const Json& j) {
  try {
    ComparisonRecord r;
    r.eval_feature = j.at("eval_feature").get<std::string>();
    r.candidate_id = j.at("candidate_id").get<std::string>();
    r.reference_id = j.at("reference_id").get<std::string>();
    r.seed_id = j.at("seed_id").get<std::string>();
    r.candidate_spec = prompt_spec_from_json(j.at("candidate_spec"));
    r.presented_order = parse_presented_order(j.at("presented_order").get<std::string>());
    r.raw_verdict = j.at("raw_verdict").get<std::string>();
    r.verdict = parse_verdict_name(j.at("verdict").get<std::string>());
    r.judge_backend_id = j.value("judge_backend_id", std::string{});
    r.failure = j.value("failure", std::string{});
    return r;
  } catch (const Json::exception& e) {
    throw Error(ErrorKind::ParseError, std::string("comparison record: ") + e.what());
  }
}

}  // namespace stylefx
