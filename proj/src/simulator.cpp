#include "stylefx/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "stylefx/error.hpp"
#include "stylefx/io.hpp"
#include "stylefx/rng.hpp"

namespace stylefx {

double SimStyleModel::contamination_at(const std::string& main, const std::string& side) const {
  auto it = contamination.find({main, side});
  if (it != contamination.end()) return it->second;
  return main == side ? 1.0 : 0.0;
}

void validate_sim_model(const SimStyleModel& model) {
  if (model.base_length < 1) throw Error(ErrorKind::InvalidConfig, "base_length must be >= 1");
  // the mix can double the per-feature probability
  if (!(model.marker_density >= 0.0) || 2.0 * model.marker_density * static_cast<double>(model.marker_vocab.size()) > 1.0)
    throw Error(ErrorKind::InvalidConfig, "marker_density too large for the vocabulary count");
  std::set<std::string> seen;
  for (const auto& [f, words] : model.marker_vocab) {
    if (words.empty()) throw Error(ErrorKind::InvalidConfig, "empty marker vocabulary for " + f);
    for (const auto& w : words)
      if (!seen.insert(w).second) throw Error(ErrorKind::InvalidConfig, "marker '" + w + "' shared by two features");
  }
  for (const auto& w : model.filler)
    if (seen.contains(w)) throw Error(ErrorKind::InvalidConfig, "filler word '" + w + "' is a marker");
  for (const auto& [f, m] : model.length_multiplier)
    if (!(m > 0.0)) throw Error(ErrorKind::InvalidConfig, "length multiplier for " + f + " must be > 0");
  for (const auto& [key, v] : model.contamination) {
    if (!(v >= -1.0 && v <= 1.0)) throw Error(ErrorKind::InvalidConfig, "contamination outside [-1, 1]");
    if (key.first == key.second && v < 0.0) throw Error(ErrorKind::InvalidConfig, "negative diagonal for " + key.first);
  }
}

SimStyleModel load_sim_model(const std::filesystem::path& path) {
  SimStyleModel m;
  try {
    auto j = Json::parse(read_text_file(path));
    m.base_length = j.at("base_length").get<std::size_t>();
    m.marker_density = j.at("marker_density").get<double>();
    m.length_multiplier = j.value("length_multiplier", std::map<std::string, double>{});
    m.marker_vocab = j.at("marker_vocab").get<std::map<std::string, std::vector<std::string>>>();
    m.filler = j.value("filler", std::vector<std::string>{});
    for (const auto& e : j.value("contamination", Json::array()))
      m.contamination[{e.at("main").get<std::string>(), e.at("side").get<std::string>()}] = e.at("value").get<double>();
  } catch (const Json::exception& e) {
    throw Error(ErrorKind::ParseError, path.filename().string() + ": " + e.what());
  }
  validate_sim_model(m);
  return m;
}

StyleMix style_mix_for(const std::vector<std::string>& requested, const SimStyleModel& model) {
  StyleMix mix;
  for (const auto& f : requested) {
    if (!model.knows(f)) throw Error(ErrorKind::UnknownFeature, f);
    for (const auto& [g, vocab] : model.marker_vocab) mix[g] += model.contamination_at(f, g);
  }
  for (auto it = mix.begin(); it != mix.end();) {
    it->second = std::clamp(it->second, -1.0, 1.0);
    it = it->second == 0.0 ? mix.erase(it) : std::next(it);
  }
  return mix;
}

namespace {

void check_mix(const StyleMix& mix, const SimStyleModel& model) {
  for (const auto& [f, w] : mix) {
    if (!model.knows(f)) throw Error(ErrorKind::UnknownFeature, f);
    if (!(w >= -1.0 && w <= 1.0)) throw Error(ErrorKind::InvalidSpec, "style weight for " + f + " outside [-1, 1]");
  }
}

double weight(const StyleMix& mix, const std::string& f) {
  auto it = mix.find(f);
  return it == mix.end() ? 0.0 : it->second;
}

}  // namespace

std::size_t sim_length(const StyleMix& mix, const SimStyleModel& model) {
  check_mix(mix, model);
  double len = static_cast<double>(model.base_length);
  for (const auto& [f, w] : mix)
    if (auto it = model.length_multiplier.find(f); it != model.length_multiplier.end()) len *= std::pow(it->second, w);
  return std::max<std::size_t>(1, static_cast<std::size_t>(std::floor(len + 0.5)));
}

double sim_marker_probability(const StyleMix& mix, const std::string& feature, const SimStyleModel& model) {
  return model.marker_density * (1.0 + weight(mix, feature));
}

std::string sim_render(const StyleMix& mix, std::string_view topic, std::uint64_t rng_seed,
                       const SimStyleModel& model) {
  const std::size_t length = sim_length(mix, model);

  std::set<std::string> markers;
  for (const auto& [f, words] : model.marker_vocab) markers.insert(words.begin(), words.end());
  std::vector<std::string> filler;
  for (auto& w : split_whitespace(to_lower(topic)))
    if (!markers.contains(w)) filler.push_back(std::move(w));
  filler.insert(filler.end(), model.filler.begin(), model.filler.end());
  if (filler.empty()) filler.emplace_back("word");

  std::vector<std::pair<double, const std::vector<std::string>*>> cumulative;
  double acc = 0.0;
  for (const auto& [f, words] : model.marker_vocab) {
    acc += sim_marker_probability(mix, f, model);
    cumulative.emplace_back(acc, &words);
  }

  Rng rng(rng_seed);
  std::string out;
  for (std::size_t i = 0; i < length; ++i) {
    const double u = rng.uniform01();
    const std::vector<std::string>* vocab = &filler;
    for (const auto& [edge, words] : cumulative)
      if (u < edge) {
        vocab = words;
        break;
      }
    if (i > 0) out += ' ';
    out += (*vocab)[rng.below(vocab->size())];
  }
  return out;
}

std::size_t count_markers(std::string_view text, const std::string& feature, const SimStyleModel& model) {
  auto it = model.marker_vocab.find(feature);
  if (it == model.marker_vocab.end()) throw Error(ErrorKind::UnknownFeature, feature);
  const std::set<std::string> vocab(it->second.begin(), it->second.end());
  std::size_t n = 0;
  for (const auto& w : split_whitespace(text)) n += vocab.contains(w);
  return n;
}

std::vector<std::string> requested_features(std::string_view prompt) {
  constexpr std::string_view open = "Please be ", close = " in your response";
  auto b = prompt.find(open);
  if (b == std::string_view::npos) return {};
  b += open.size();
  auto e = prompt.find(close, b);
  if (e == std::string_view::npos) return {};
  std::string_view clause = prompt.substr(b, e - b);
  for (std::string_view sep : {" but ", " and "})
    if (auto s = clause.find(sep); s != std::string_view::npos)
      return {trim(clause.substr(0, s)), trim(clause.substr(s + sep.size()))};
  return {trim(clause)};
}

std::string prompt_topic(std::string_view prompt) {
  constexpr std::string_view open = "conversation about ";
  auto b = prompt.find(open);
  if (b == std::string_view::npos) return {};
  b += open.size();
  auto e = prompt.find(". Please be ", b);
  std::string_view topic = prompt.substr(b, e == std::string_view::npos ? std::string_view::npos : e - b);
  std::string t = trim(topic);
  if (!t.empty() && t.back() == '.') t.pop_back();
  return t;
}

SimChatBackend::SimChatBackend(SimStyleModel model, std::string id) : model_(std::move(model)), id_(std::move(id)) {
  validate_sim_model(model_);
}

ChatResponse SimChatBackend::complete(const ChatRequest& request) {
  validate_request(request);
  const auto mix = style_mix_for(requested_features(request.system_prompt), model_);
  const std::uint64_t seed = hash_combine(hash_combine(request.rng_seed, request.sample_index),
                                          hash_combine(fnv1a64(request.system_prompt), fnv1a64(request.user_message)));
  ChatResponse r;
  r.text = sim_render(mix, prompt_topic(request.system_prompt), seed, model_);
  r.backend_id = id_;
  r.word_count = word_count(r.text);
  return r;
}

MarkerJudgeBackend::MarkerJudgeBackend(SimStyleModel model, std::string id)
    : model_(std::move(model)), id_(std::move(id)) {
  validate_sim_model(model_);
}

ChatResponse MarkerJudgeBackend::complete(const ChatRequest& request) {
  const std::string& u = request.user_message;
  constexpr std::string_view feat_open = "which one is more ", a_open = "Response A:\n", b_open = "\nResponse B:\n",
                             b_close = "\nYou must choose one.";
  ChatResponse r;
  r.backend_id = id_;
  auto fb = u.find(feat_open);
  auto fe = fb == std::string::npos ? fb : u.find(".\n", fb);
  auto ab = u.find(a_open);
  auto bb = ab == std::string::npos ? ab : u.find(b_open, ab);
  auto be = bb == std::string::npos ? bb : u.rfind(b_close);
  if (fe == std::string::npos || be == std::string::npos || be < bb)
    throw Error(ErrorKind::ProtocolError, "marker judge cannot parse the judge prompt");
  const std::string feature = u.substr(fb + feat_open.size(), fe - fb - feat_open.size());
  if (!model_.knows(feature)) {
    r.text = "I cannot judge that.";
    r.word_count = word_count(r.text);
    return r;
  }
  const std::string_view a = std::string_view(u).substr(ab + a_open.size(), bb - ab - a_open.size());
  const std::string_view b = std::string_view(u).substr(bb + b_open.size(), be - bb - b_open.size());
  // density comparison without division: ma/la vs mb/lb
  const auto ma = count_markers(a, feature, model_), mb = count_markers(b, feature, model_);
  const auto la = std::max<std::size_t>(1, word_count(a)), lb = std::max<std::size_t>(1, word_count(b));
  r.text = ma * lb >= mb * la ? "A" : "B";
  r.word_count = 1;
  return r;
}

ConstantBackend::ConstantBackend(std::string reply, std::string id) : reply_(std::move(reply)), id_(std::move(id)) {}

ChatResponse ConstantBackend::complete(const ChatRequest&) {
  return {reply_, id_, word_count(reply_), 0.0};
}

}  // namespace stylefx
