#include "stylefx/feature_catalog.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>

#include "stylefx/error.hpp"
#include "stylefx/io.hpp"

namespace stylefx {

namespace {

constexpr double kUnitTolerance = 1e-9;

double norm(std::span<const double> v) { return std::sqrt(dot(v, v)); }

}  // namespace

RawFeatureMention make_mention(std::string_view surface_form, std::string paper_id,
                               std::string agent_id) {
  std::string form = to_lower(trim(surface_form));
  if (form.empty()) throw Error(ErrorKind::ParseError, "empty surface form (paper " + paper_id + ")");
  return {std::move(form), std::move(paper_id), std::move(agent_id)};
}

double dot(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw Error(ErrorKind::InvalidSpec, "dimension mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

std::vector<double> normalized(std::span<const double> v) {
  const double n = norm(v);
  if (!(n > 0.0) || !std::isfinite(n)) throw Error(ErrorKind::InvalidSpec, "cannot normalize a zero vector");
  std::vector<double> out(v.begin(), v.end());
  for (double& x : out) x /= n;
  return out;
}

// ---------------------------------------------------------------------------
// StyleCatalog

StyleCatalog::StyleCatalog(std::vector<std::string> features,
                           std::map<std::string, std::string> alias_map, EmbeddingMap embeddings,
                           std::map<std::string, std::size_t> frequencies)
    : features_(std::move(features)),
      alias_map_(std::move(alias_map)),
      embeddings_(std::move(embeddings)),
      frequencies_(std::move(frequencies)) {
  std::set<std::string> seen;
  for (const auto& f : features_) {
    if (f.empty()) throw Error(ErrorKind::InvalidSpec, "empty feature name");
    if (!seen.insert(f).second) throw Error(ErrorKind::InvalidSpec, "duplicate feature " + f);
    alias_map_.emplace(f, f);
  }
  for (const auto& [alias, canonical] : alias_map_) {
    if (!seen.contains(canonical))
      throw Error(ErrorKind::InvalidSpec, "alias " + alias + " maps to unknown feature " + canonical);
    if (seen.contains(alias) && alias != canonical)
      throw Error(ErrorKind::InvalidSpec, "feature " + alias + " aliased to " + canonical);
  }
  for (const auto& [name, vec] : embeddings_) {
    if (!seen.contains(name)) throw Error(ErrorKind::InvalidSpec, "embedding for unknown feature " + name);
    if (std::abs(norm(vec) - 1.0) > kUnitTolerance)
      throw Error(ErrorKind::InvalidSpec, "embedding for " + name + " is not unit norm");
  }
}

StyleCatalog StyleCatalog::from_names(std::vector<std::string> features) {
  return StyleCatalog(std::move(features), {});
}

bool StyleCatalog::contains(std::string_view feature) const {
  return std::find(features_.begin(), features_.end(), feature) != features_.end();
}

std::size_t StyleCatalog::index_of(std::string_view feature) const {
  auto it = std::find(features_.begin(), features_.end(), feature);
  if (it == features_.end()) throw Error(ErrorKind::UnknownFeature, std::string(feature));
  return static_cast<std::size_t>(it - features_.begin());
}

std::optional<std::string> StyleCatalog::canonical_of(std::string_view alias) const {
  auto it = alias_map_.find(std::string(alias));
  if (it == alias_map_.end()) return std::nullopt;
  return it->second;
}

std::vector<std::string> StyleCatalog::aliases_of(std::string_view feature) const {
  std::vector<std::string> out;
  for (const auto& [alias, canonical] : alias_map_)
    if (canonical == feature && alias != feature) out.push_back(alias);
  return out;
}

const std::vector<double>* StyleCatalog::embedding(std::string_view feature) const {
  auto it = embeddings_.find(std::string(feature));
  return it == embeddings_.end() ? nullptr : &it->second;
}

std::size_t StyleCatalog::frequency(std::string_view feature) const {
  auto it = frequencies_.find(std::string(feature));
  return it == frequencies_.end() ? 0 : it->second;
}

// ---------------------------------------------------------------------------
// Extraction pipeline

std::vector<CandidateFeature> normalize_mentions(std::span<const RawFeatureMention> mentions,
                                                 const AdjectivizationTable& table) {
  if (mentions.empty()) throw Error(ErrorKind::EmptyInput, "no feature mentions");
  std::map<std::string, CandidateFeature> by_lemma;
  std::map<std::string, std::set<std::string>> papers;
  for (const auto& m : mentions) {
    auto it = table.find(m.surface_form);
    const std::string& lemma = it == table.end() ? m.surface_form : it->second;
    auto& cand = by_lemma[lemma];
    cand.lemma = lemma;
    cand.mentions.push_back(m);
    papers[lemma].insert(m.paper_id);
  }
  std::vector<CandidateFeature> out;
  out.reserve(by_lemma.size());
  for (auto& [lemma, cand] : by_lemma) {
    cand.frequency = papers[lemma].size();
    out.push_back(std::move(cand));
  }
  std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
    return a.frequency > b.frequency;
  });
  return out;
}

std::vector<CandidateFeature> filter_by_frequency(std::span<const CandidateFeature> candidates,
                                                  std::size_t min_freq) {
  if (min_freq < 1) throw Error(ErrorKind::InvalidSpec, "min_freq must be >= 1");
  std::vector<CandidateFeature> out;
  for (const auto& c : candidates)
    if (c.frequency >= min_freq) out.push_back(c);
  return out;
}

std::vector<FeatureCluster> cluster_features(std::span<const CandidateFeature> candidates,
                                             const EmbeddingMap& embeddings, double sim_threshold) {
  // Canonical order by lemma makes every later step independent of input order.
  std::vector<const CandidateFeature*> sorted;
  sorted.reserve(candidates.size());
  for (const auto& c : candidates) sorted.push_back(&c);
  std::sort(sorted.begin(), sorted.end(),
            [](const auto* a, const auto* b) { return a->lemma < b->lemma; });

  const std::size_t n = sorted.size();
  std::vector<std::vector<double>> unit(n);
  for (std::size_t i = 0; i < n; ++i) {
    auto it = embeddings.find(sorted[i]->lemma);
    if (it == embeddings.end()) throw Error(ErrorKind::MissingEmbedding, sorted[i]->lemma);
    unit[i] = normalized(it->second);
  }
  std::vector<double> sim(n * n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) sim[i * n + j] = dot(unit[i], unit[j]);

  // each cluster is a sorted list of indices into `sorted`
  std::vector<std::vector<std::size_t>> clusters(n);
  for (std::size_t i = 0; i < n; ++i) clusters[i] = {i};

  auto linkage = [&](const std::vector<std::size_t>& a, const std::vector<std::size_t>& b) {
    double s = 0.0;
    for (std::size_t i : a)
      for (std::size_t j : b) s += sim[i * n + j];
    return s / static_cast<double>(a.size() * b.size());
  };

  while (clusters.size() > 1) {
    double best = -2.0;
    std::size_t bi = 0, bj = 0;
    for (std::size_t i = 0; i < clusters.size(); ++i)
      for (std::size_t j = i + 1; j < clusters.size(); ++j) {
        const double s = linkage(clusters[i], clusters[j]);
        if (s > best) {
          best = s;
          bi = i;
          bj = j;
        }
      }
    if (!(best > sim_threshold)) break;
    auto merged = clusters[bi];
    merged.insert(merged.end(), clusters[bj].begin(), clusters[bj].end());
    std::sort(merged.begin(), merged.end());
    clusters.erase(clusters.begin() + static_cast<std::ptrdiff_t>(bj));
    clusters[bi] = std::move(merged);
    std::sort(clusters.begin(), clusters.end(),
              [](const auto& a, const auto& b) { return a.front() < b.front(); });
  }

  std::vector<FeatureCluster> out;
  out.reserve(clusters.size());
  for (const auto& idx : clusters) {
    FeatureCluster fc;
    for (std::size_t i : idx) fc.members.push_back(*sorted[i]);
    out.push_back(std::move(fc));
  }
  return out;
}

StyleCatalog canonicalize_catalog(std::span<const FeatureCluster> clusters,
                                  const EmbeddingMap& embeddings) {
  if (clusters.empty()) throw Error(ErrorKind::EmptyInput, "no clusters");
  struct Entry {
    std::string canonical;
    std::size_t total = 0;
  };
  std::vector<Entry> entries;
  std::map<std::string, std::string> aliases;
  std::map<std::string, std::size_t> freqs;
  for (const auto& cl : clusters) {
    if (cl.members.empty()) throw Error(ErrorKind::InvalidSpec, "empty cluster");
    const CandidateFeature* best = &cl.members.front();
    std::size_t total = 0;
    for (const auto& m : cl.members) {
      total += m.frequency;
      if (m.frequency > best->frequency || (m.frequency == best->frequency && m.lemma < best->lemma))
        best = &m;
    }
    for (const auto& m : cl.members) aliases[m.lemma] = best->lemma;
    entries.push_back({best->lemma, total});
    freqs[best->lemma] = total;
  }
  std::stable_sort(entries.begin(), entries.end(), [](const Entry& a, const Entry& b) {
    return a.total != b.total ? a.total > b.total : a.canonical < b.canonical;
  });
  std::vector<std::string> names;
  EmbeddingMap emb;
  for (const auto& e : entries) {
    names.push_back(e.canonical);
    if (auto it = embeddings.find(e.canonical); it != embeddings.end())
      emb[e.canonical] = normalized(it->second);
  }
  return StyleCatalog(std::move(names), std::move(aliases), std::move(emb), std::move(freqs));
}

// ---------------------------------------------------------------------------
// Files

std::vector<RawFeatureMention> load_mentions(const std::filesystem::path& path) {
  std::vector<RawFeatureMention> out;
  std::size_t line = 0;
  for (const auto& rec : read_jsonl(path)) {
    ++line;
    try {
      out.push_back(make_mention(rec.at("surface_form").get<std::string>(),
                                 rec.at("paper_id").get<std::string>(),
                                 rec.value("agent_id", std::string{})));
    } catch (const Json::exception& e) {
      throw Error(ErrorKind::ParseError, "mention record " + std::to_string(line) + ": " + e.what());
    }
  }
  return out;
}

AdjectivizationTable load_adjectivization_table(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::IoError, "cannot open " + path.string());
  AdjectivizationTable table;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty() || trim(line).front() == '#') continue;
    auto tab = line.find('\t');
    auto cols = tab == std::string::npos ? split_whitespace(line)
                                         : std::vector<std::string>{line.substr(0, tab), line.substr(tab + 1)};
    if (cols.size() != 2)
      throw Error(ErrorKind::ParseError, path.filename().string() + " line " + std::to_string(line_no));
    table[to_lower(trim(cols[0]))] = to_lower(trim(cols[1]));
  }
  return table;
}

std::string catalog_to_jsonl(const StyleCatalog& catalog) {
  std::string out;
  for (const auto& f : catalog.features()) {
    OrderedJson rec;
    rec["canonical"] = f;
    rec["aliases"] = catalog.aliases_of(f);
    rec["frequency"] = catalog.frequency(f);
    const auto* e = catalog.embedding(f);
    rec["embedding"] = e ? *e : std::vector<double>{};
    out += dump_json(rec);
    out += '\n';
  }
  return out;
}

void save_catalog(const StyleCatalog& catalog, const std::filesystem::path& path) {
  write_text_file(path, catalog_to_jsonl(catalog));
}

StyleCatalog load_catalog(const std::filesystem::path& path) {
  std::vector<std::string> names;
  std::map<std::string, std::string> aliases;
  EmbeddingMap emb;
  std::map<std::string, std::size_t> freqs;
  for (const auto& rec : read_jsonl(path)) {
    try {
      auto name = rec.at("canonical").get<std::string>();
      for (const auto& a : rec.value("aliases", Json::array())) aliases[a.get<std::string>()] = name;
      auto e = rec.value("embedding", std::vector<double>{});
      if (!e.empty()) emb[name] = std::move(e);
      freqs[name] = rec.value("frequency", std::size_t{0});
      names.push_back(std::move(name));
    } catch (const Json::exception& ex) {
      throw Error(ErrorKind::ParseError, path.filename().string() + ": " + ex.what());
    }
  }
  if (names.empty()) throw Error(ErrorKind::EmptyInput, "empty catalog " + path.string());
  return StyleCatalog(std::move(names), std::move(aliases), std::move(emb), std::move(freqs));
}

}  // namespace stylefx
