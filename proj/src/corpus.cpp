#include "stylefx/corpus.hpp"

#include <algorithm>
#include <set>

#include "stylefx/error.hpp"
#include "stylefx/io.hpp"
#include "stylefx/rng.hpp"

namespace stylefx {

std::string_view to_string(Domain d) noexcept { return d == Domain::Task ? "Task" : "Daily"; }

Domain parse_domain(std::string_view s) {
  if (s == "Task") return Domain::Task;
  if (s == "Daily") return Domain::Daily;
  throw Error(ErrorKind::ParseError, "unknown domain '" + std::string(s) + "'");
}

TopicSets load_topics(const std::filesystem::path& path) {
  TopicSets out;
  try {
    auto j = Json::parse(read_text_file(path));
    for (auto& [key, list] : j.items()) out[parse_domain(key)] = list.get<std::vector<std::string>>();
  } catch (const Json::exception& e) {
    throw Error(ErrorKind::ParseError, path.filename().string() + ": " + e.what());
  }
  return out;
}

std::vector<DialogueSeed> load_seeds(const std::filesystem::path& path, const TopicSets& topics) {
  std::vector<DialogueSeed> out;
  std::set<std::string> ids;
  std::size_t line = 0;
  for (const auto& rec : read_jsonl(path)) {
    ++line;
    const std::string where = path.filename().string() + " record " + std::to_string(line);
    DialogueSeed s;
    try {
      s.seed_id = rec.at("seed_id").get<std::string>();
      s.domain = parse_domain(rec.at("domain").get<std::string>());
      s.topic = rec.at("topic").get<std::string>();
      s.first_message = rec.at("first_message").get<std::string>();
    } catch (const Json::exception& e) {
      throw Error(ErrorKind::ParseError, where + ": " + e.what());
    } catch (const Error& e) {
      throw Error(ErrorKind::ParseError, where + ": " + e.what());
    }
    if (s.seed_id.empty()) throw Error(ErrorKind::ParseError, where + ": empty seed_id");
    if (trim(s.first_message).empty()) throw Error(ErrorKind::ParseError, where + ": empty first_message");
    if (!ids.insert(s.seed_id).second) throw Error(ErrorKind::ParseError, where + ": duplicate " + s.seed_id);
    if (!topics.empty()) {
      auto it = topics.find(s.domain);
      if (it == topics.end() || std::find(it->second.begin(), it->second.end(), s.topic) == it->second.end())
        throw Error(ErrorKind::UnknownTopic, where + ": " + std::string(to_string(s.domain)) + "/" + s.topic);
    }
    out.push_back(std::move(s));
  }
  return out;
}

CorpusSplit split_dataset(const std::vector<DialogueSeed>& seeds, SplitRatio ratio, std::uint64_t rng_seed) {
  if (seeds.empty()) throw Error(ErrorKind::EmptyInput, "empty corpus");
  const unsigned total = ratio[0] + ratio[1] + ratio[2];
  if (total == 0) throw Error(ErrorKind::InvalidConfig, "split ratio sums to zero");

  std::map<std::pair<Domain, std::string>, std::vector<std::string>> strata;
  for (const auto& s : seeds) strata[{s.domain, s.topic}].push_back(s.seed_id);

  CorpusSplit split;
  split.rng_seed = rng_seed;
  split.ratio = ratio;
  std::array<std::vector<std::string>*, 3> parts{&split.train, &split.validation, &split.test};
  for (auto& [key, ids] : strata) {
    std::sort(ids.begin(), ids.end());
    Rng rng(hash_combine(rng_seed, fnv1a64(key.second, fnv1a64(to_string(key.first)))));
    for (std::size_t i = ids.size(); i > 1; --i) std::swap(ids[i - 1], ids[rng.below(i)]);

    const std::size_t n = ids.size();
    std::array<std::size_t, 3> count{};
    for (int p = 0; p < 3; ++p) count[p] = n * ratio[p] / total;
    std::size_t left = n - (count[0] + count[1] + count[2]);
    for (int p = 0; left > 0; p = (p + 1) % 3)
      if (ratio[p] > 0) {
        ++count[p];
        --left;
      }
    std::size_t at = 0;
    for (int p = 0; p < 3; ++p)
      for (std::size_t c = 0; c < count[p]; ++c) parts[p]->push_back(ids[at++]);
  }
  for (auto* part : parts) std::sort(part->begin(), part->end());
  return split;
}

std::string split_to_json(const CorpusSplit& split) {
  OrderedJson j;
  j["rng_seed"] = split.rng_seed;
  j["ratio"] = split.ratio;
  j["train"] = split.train;
  j["validation"] = split.validation;
  j["test"] = split.test;
  return dump_json(j, 1) + "\n";
}

CorpusSplit split_from_json(std::string_view text) {
  try {
    auto j = Json::parse(text);
    CorpusSplit s;
    s.rng_seed = j.at("rng_seed").get<std::uint64_t>();
    s.ratio = j.at("ratio").get<SplitRatio>();
    s.train = j.at("train").get<std::vector<std::string>>();
    s.validation = j.at("validation").get<std::vector<std::string>>();
    s.test = j.at("test").get<std::vector<std::string>>();
    return s;
  } catch (const Json::exception& e) {
    throw Error(ErrorKind::ParseError, std::string("split file: ") + e.what());
  }
}

void save_split(const CorpusSplit& split, const std::filesystem::path& path) {
  write_text_file(path, split_to_json(split));
}

CorpusSplit load_split(const std::filesystem::path& path) { return split_from_json(read_text_file(path)); }

std::string split_hash(const CorpusSplit& split) { return hex64(fnv1a64(split_to_json(split))); }

std::vector<DialogueSeed> select_seeds(const std::vector<DialogueSeed>& seeds,
                                       const std::vector<std::string>& ids) {
  std::set<std::string> wanted(ids.begin(), ids.end());
  std::vector<DialogueSeed> out;
  for (const auto& s : seeds)
    if (wanted.contains(s.seed_id)) out.push_back(s);
  return out;
}

}  // namespace stylefx
