#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace stylefx {

/// One style feature as written in an agent prompt. Construct through
/// make_mention() so the surface form is trimmed and lowercased.
struct RawFeatureMention {
  std::string surface_form;
  std::string paper_id;
  std::string agent_id;
};

RawFeatureMention make_mention(std::string_view surface_form, std::string paper_id,
                               std::string agent_id);

/// A lemma after adjectivization. `frequency` counts distinct papers.
struct CandidateFeature {
  std::string lemma;
  std::size_t frequency = 0;
  std::vector<RawFeatureMention> mentions;
};

struct FeatureCluster {
  std::vector<CandidateFeature> members;  // sorted by lemma
  std::string canonical;                  // empty until canonicalize_catalog
};

using AdjectivizationTable = std::map<std::string, std::string>;
using EmbeddingMap = std::map<std::string, std::vector<double>>;

/// Canonical feature list with aliases and unit-norm embeddings.
class StyleCatalog {
 public:
  StyleCatalog() = default;

  /// Validates distinct names, alias targets and unit norms (1e-9).
  /// Embeddings may be empty; frequencies default to zero.
  StyleCatalog(std::vector<std::string> features, std::map<std::string, std::string> alias_map,
               EmbeddingMap embeddings = {}, std::map<std::string, std::size_t> frequencies = {});

  /// Catalog of bare names; each name is its own alias.
  static StyleCatalog from_names(std::vector<std::string> features);

  const std::vector<std::string>& features() const noexcept { return features_; }
  std::size_t size() const noexcept { return features_.size(); }
  bool contains(std::string_view feature) const;
  std::size_t index_of(std::string_view feature) const;  // UnknownFeature
  std::optional<std::string> canonical_of(std::string_view alias) const;
  std::vector<std::string> aliases_of(std::string_view feature) const;
  const std::map<std::string, std::string>& alias_map() const noexcept { return alias_map_; }
  const std::vector<double>* embedding(std::string_view feature) const;
  std::size_t frequency(std::string_view feature) const;

 private:
  std::vector<std::string> features_;
  std::map<std::string, std::string> alias_map_;
  EmbeddingMap embeddings_;
  std::map<std::string, std::size_t> frequencies_;
};

/// Maps each mention through the table (verbatim when absent), groups by
/// lemma and counts distinct paper ids. Sorted by frequency desc, then lemma.
std::vector<CandidateFeature> normalize_mentions(std::span<const RawFeatureMention> mentions,
                                                 const AdjectivizationTable& table);

std::vector<CandidateFeature> filter_by_frequency(std::span<const CandidateFeature> candidates,
                                                  std::size_t min_freq);

/// Average-linkage agglomerative clustering on cosine similarity. Two clusters
/// merge only while their mean pairwise similarity is strictly greater than
/// `sim_threshold`. Ties between equally close pairs go to the pair whose
/// smallest lemmas sort first, so the partition ignores input order.
std::vector<FeatureCluster> cluster_features(std::span<const CandidateFeature> candidates,
                                             const EmbeddingMap& embeddings, double sim_threshold);

/// Canonical member = highest frequency, ties to the lexicographically
/// smallest lemma. Catalog order: summed cluster frequency desc, then name.
StyleCatalog canonicalize_catalog(std::span<const FeatureCluster> clusters,
                                  const EmbeddingMap& embeddings = {});

std::vector<double> normalized(std::span<const double> v);
double dot(std::span<const double> a, std::span<const double> b);

std::vector<RawFeatureMention> load_mentions(const std::filesystem::path& path);
AdjectivizationTable load_adjectivization_table(const std::filesystem::path& path);

/// One JSON record per line: {canonical, aliases[], frequency, embedding[]}.
std::string catalog_to_jsonl(const StyleCatalog& catalog);
void save_catalog(const StyleCatalog& catalog, const std::filesystem::path& path);
StyleCatalog load_catalog(const std::filesystem::path& path);

}  // namespace stylefx
