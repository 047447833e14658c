#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace stylefx {

enum class Domain { Task, Daily };

std::string_view to_string(Domain d) noexcept;
Domain parse_domain(std::string_view s);  // ParseError

struct DialogueSeed {
  std::string seed_id;
  Domain domain = Domain::Task;
  std::string topic;
  std::string first_message;
};

using TopicSets = std::map<Domain, std::vector<std::string>>;

/// {"Task": [...], "Daily": [...]}
TopicSets load_topics(const std::filesystem::path& path);

/// Seeds in file order. Malformed records raise ParseError with the line;
/// a (domain, topic) outside `topics` raises UnknownTopic. An empty topic set
/// disables the membership check.
std::vector<DialogueSeed> load_seeds(const std::filesystem::path& path, const TopicSets& topics = {});

using SplitRatio = std::array<unsigned, 3>;

struct CorpusSplit {
  std::uint64_t rng_seed = 0;
  SplitRatio ratio{3, 1, 1};
  std::vector<std::string> train;
  std::vector<std::string> validation;
  std::vector<std::string> test;
};

/// Stratified by (domain, topic). Each stratum of n seeds is shuffled, then
/// cut at floor(n*r_i/sum) per part; the leftover goes one each to train,
/// validation, test in that order. Id lists are sorted.
CorpusSplit split_dataset(const std::vector<DialogueSeed>& seeds, SplitRatio ratio,
                          std::uint64_t rng_seed);

std::string split_to_json(const CorpusSplit& split);
CorpusSplit split_from_json(std::string_view text);
void save_split(const CorpusSplit& split, const std::filesystem::path& path);
CorpusSplit load_split(const std::filesystem::path& path);

/// Hex digest of the serialized split, recorded in run manifests.
std::string split_hash(const CorpusSplit& split);

/// Seeds whose id is in `ids`, in corpus order.
std::vector<DialogueSeed> select_seeds(const std::vector<DialogueSeed>& seeds,
                                       const std::vector<std::string>& ids);

}  // namespace stylefx
