#include "stylefx/refmodel.hpp"

#include <zlib.h>

#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <limits>

#include "stylefx/error.hpp"
#include "stylefx/io.hpp"
#include "stylefx/rng.hpp"

namespace stylefx {

void validate_config(const ModelConfig& c) {
  auto bad = [](const std::string& why) { throw Error(ErrorKind::InvalidConfig, why); };
  if (c.n_layers == 0 || c.d_model == 0 || c.n_heads == 0 || c.d_ff == 0 || c.max_seq == 0)
    bad("model dimensions must be positive");
  if (c.d_model % c.n_heads != 0)
    bad("d_model " + std::to_string(c.d_model) + " not divisible by n_heads " + std::to_string(c.n_heads));
  if (c.vocab_size < 256) bad("vocab_size " + std::to_string(c.vocab_size) + " cannot hold every byte");
}

const Tensor& Checkpoint::param(const std::string& name) const {
  auto it = weights.find(name);
  if (it == weights.end()) throw Error(ErrorKind::InvalidConfig, "missing parameter " + name);
  return it->second;
}

Tensor& Checkpoint::param(const std::string& name) {
  return const_cast<Tensor&>(std::as_const(*this).param(name));
}

namespace {

std::string lname(std::size_t l, const char* suffix) { return "layers." + std::to_string(l) + "." + suffix; }

Tensor uniform_tensor(std::vector<std::size_t> shape, float bound, std::uint64_t seed) {
  std::size_t n = 1;
  for (auto d : shape) n *= d;
  Tensor t{std::move(shape), std::vector<float>(n)};
  Rng rng(seed);
  for (float& x : t.data) x = static_cast<float>((2.0 * rng.uniform01() - 1.0) * bound);
  return t;
}

Tensor ones(std::size_t n) { return {{n}, std::vector<float>(n, 1.0f)}; }

}  // namespace

Checkpoint init_model(const ModelConfig& config) {
  validate_config(config);
  Checkpoint ck;
  ck.config = config;
  const std::size_t d = config.d_model, ff = config.d_ff;
  auto add = [&](const std::string& name, std::vector<std::size_t> shape, float bound) {
    ck.weights[name] = uniform_tensor(std::move(shape), bound, hash_combine(config.init_seed, fnv1a64(name)));
  };
  const float in_d = 1.0f / std::sqrt(static_cast<float>(d));
  const float in_ff = 1.0f / std::sqrt(static_cast<float>(ff));
  add("tok_embeddings.weight", {config.vocab_size, d}, 1.0f);
  add("pos_embeddings.weight", {config.max_seq, d}, 0.1f);
  for (std::size_t l = 0; l < config.n_layers; ++l) {
    ck.weights[lname(l, "attn_norm.weight")] = ones(d);
    for (const char* p : {"attn.wq.weight", "attn.wk.weight", "attn.wv.weight", "attn.wo.weight"})
      add(lname(l, p), {d, d}, in_d);
    ck.weights[lname(l, "mlp_norm.weight")] = ones(d);
    add(lname(l, "mlp.up_proj.weight"), {ff, d}, in_d);
    add(lname(l, "mlp.down_proj.weight"), {d, ff}, in_ff);
  }
  ck.weights["norm.weight"] = ones(d);
  add("lm_head.weight", {config.vocab_size, d}, in_d);
  return ck;
}

Intervention apply_layer_offset(const Checkpoint& ckpt, std::size_t layer, std::span<const float> offset) {
  if (layer >= ckpt.config.n_layers)
    throw Error(ErrorKind::InvalidLayer, "layer " + std::to_string(layer) + " of " + std::to_string(ckpt.config.n_layers));
  if (offset.size() != ckpt.config.d_model)
    throw Error(ErrorKind::InvalidSpec, "offset length " + std::to_string(offset.size()) + " != d_model");
  return {layer, std::vector<float>(offset.begin(), offset.end())};
}

Checkpoint bake_bias(const Checkpoint& ckpt, std::size_t layer, std::span<const float> offset) {
  auto iv = apply_layer_offset(ckpt, layer, offset);
  Checkpoint out = ckpt;
  out.layer_bias = LayerBias{iv.layer, std::move(iv.offset)};
  out.bias_enabled = true;
  return out;
}

namespace {

// Fixed-order dot product with eight interleaved partial sums; the order is
// part of the arithmetic mode, so it never depends on the input.
float dot8(const float* a, const float* b, std::size_t n) {
  float acc[8] = {};
  std::size_t j = 0;
  for (; j + 8 <= n; j += 8)
    for (std::size_t k = 0; k < 8; ++k) acc[k] += a[j + k] * b[j + k];
  for (; j < n; ++j) acc[j % 8] += a[j] * b[j];
  return ((acc[0] + acc[1]) + (acc[2] + acc[3])) + ((acc[4] + acc[5]) + (acc[6] + acc[7]));
}

// y = W x with W row-major [rows, cols]
void matvec(const Tensor& w, const float* x, float* y) {
  const std::size_t rows = w.shape[0], cols = w.shape[1];
  const float* p = w.data.data();
  for (std::size_t i = 0; i < rows; ++i, p += cols) y[i] = dot8(p, x, cols);
}

void rmsnorm(const float* x, const Tensor& w, float* y, std::size_t n) {
  float ss = 0.0f;
  for (std::size_t i = 0; i < n; ++i) ss += x[i] * x[i];
  const float scale = 1.0f / std::sqrt(ss / static_cast<float>(n) + 1e-5f);
  for (std::size_t i = 0; i < n; ++i) y[i] = x[i] * scale * w.data[i];
}

float gelu(float x) {
  constexpr float k = 0.7978845608028654f;  // sqrt(2/pi)
  return 0.5f * x * (1.0f + std::tanh(k * (x + 0.044715f * x * x * x)));
}

struct LayerRefs {
  const Tensor *attn_norm, *wq, *wk, *wv, *wo, *mlp_norm, *up, *down;
};

/// Incremental forward with a key/value cache. The full-sequence forward and
/// sampling both go through step(), so their arithmetic is identical.
class Session {
 public:
  Session(const Checkpoint& ck, std::span<const Intervention> interventions)
      : ck_(ck), cfg_(ck.config), interventions_(interventions) {
    validate_config(cfg_);
    for (const auto& iv : interventions_) apply_layer_offset(ck_, iv.layer, iv.offset);
    if (ck_.bias_enabled && ck_.layer_bias) apply_layer_offset(ck_, ck_.layer_bias->layer, ck_.layer_bias->offset);
    tok_ = &ck_.param("tok_embeddings.weight");
    pos_ = &ck_.param("pos_embeddings.weight");
    norm_ = &ck_.param("norm.weight");
    head_ = &ck_.param("lm_head.weight");
    for (std::size_t l = 0; l < cfg_.n_layers; ++l)
      layers_.push_back({&ck_.param(lname(l, "attn_norm.weight")), &ck_.param(lname(l, "attn.wq.weight")),
                         &ck_.param(lname(l, "attn.wk.weight")), &ck_.param(lname(l, "attn.wv.weight")),
                         &ck_.param(lname(l, "attn.wo.weight")), &ck_.param(lname(l, "mlp_norm.weight")),
                         &ck_.param(lname(l, "mlp.up_proj.weight")), &ck_.param(lname(l, "mlp.down_proj.weight"))});
    keys_.assign(cfg_.n_layers, {});
    values_.assign(cfg_.n_layers, {});
  }

  std::size_t position() const noexcept { return pos_index_; }

  /// Feeds one token; returns the residual stream after the last layer.
  /// When `per_layer` is non-null it receives the residual after each layer.
  std::vector<float> step(int token, std::vector<std::vector<float>>* per_layer = nullptr) {
    if (pos_index_ >= cfg_.max_seq) throw Error(ErrorKind::SequenceTooLong, "context exceeds max_seq");
    if (token < 0 || static_cast<std::size_t>(token) >= cfg_.vocab_size)
      throw Error(ErrorKind::InvalidSpec, "token id out of range");
    const std::size_t d = cfg_.d_model, hd = cfg_.head_dim(), t = pos_index_;
    std::vector<float> x(d), h(d), q(d), k(d), v(d), att(d), proj(d), up(cfg_.d_ff), mlp(d);
    const float* te = tok_->data.data() + static_cast<std::size_t>(token) * d;
    const float* pe = pos_->data.data() + t * d;
    for (std::size_t i = 0; i < d; ++i) x[i] = te[i] + pe[i];
    if (per_layer) per_layer->assign(cfg_.n_layers, {});

    const float inv_sqrt = 1.0f / std::sqrt(static_cast<float>(hd));
    std::vector<float> scores(t + 1);
    for (std::size_t l = 0; l < cfg_.n_layers; ++l) {
      const LayerRefs& L = layers_[l];
      rmsnorm(x.data(), *L.attn_norm, h.data(), d);
      matvec(*L.wq, h.data(), q.data());
      matvec(*L.wk, h.data(), k.data());
      matvec(*L.wv, h.data(), v.data());
      keys_[l].insert(keys_[l].end(), k.begin(), k.end());
      values_[l].insert(values_[l].end(), v.begin(), v.end());
      for (std::size_t head = 0; head < cfg_.n_heads; ++head) {
        const std::size_t off = head * hd;
        float mx = -std::numeric_limits<float>::infinity();
        for (std::size_t s = 0; s <= t; ++s) {
          const float* ks = keys_[l].data() + s * d + off;
          scores[s] = dot8(q.data() + off, ks, hd) * inv_sqrt;
          mx = std::max(mx, scores[s]);
        }
        float denom = 0.0f;
        for (std::size_t s = 0; s <= t; ++s) {
          scores[s] = std::exp(scores[s] - mx);
          denom += scores[s];
        }
        for (std::size_t i = 0; i < hd; ++i) att[off + i] = 0.0f;
        for (std::size_t s = 0; s <= t; ++s) {
          const float a = scores[s] / denom;
          const float* vs = values_[l].data() + s * d + off;
          for (std::size_t i = 0; i < hd; ++i) att[off + i] += a * vs[i];
        }
      }
      matvec(*L.wo, att.data(), proj.data());
      for (std::size_t i = 0; i < d; ++i) x[i] += proj[i];

      rmsnorm(x.data(), *L.mlp_norm, h.data(), d);
      matvec(*L.up, h.data(), up.data());
      for (float& u : up) u = gelu(u);
      matvec(*L.down, up.data(), mlp.data());
      if (ck_.bias_enabled && ck_.layer_bias && ck_.layer_bias->layer == l)
        for (std::size_t i = 0; i < d; ++i) mlp[i] += ck_.layer_bias->offset[i];
      for (const auto& iv : interventions_)
        if (iv.layer == l)
          for (std::size_t i = 0; i < d; ++i) mlp[i] += iv.offset[i];
      for (std::size_t i = 0; i < d; ++i) x[i] += mlp[i];
      if (per_layer) (*per_layer)[l] = x;
    }
    ++pos_index_;
    return x;
  }

  std::vector<float> logits(const std::vector<float>& x) const {
    std::vector<float> h(cfg_.d_model), out(cfg_.vocab_size);
    rmsnorm(x.data(), *norm_, h.data(), cfg_.d_model);
    matvec(*head_, h.data(), out.data());
    return out;
  }

 private:
  const Checkpoint& ck_;
  const ModelConfig& cfg_;
  std::span<const Intervention> interventions_;
  const Tensor *tok_, *pos_, *norm_, *head_;
  std::vector<LayerRefs> layers_;
  std::vector<std::vector<float>> keys_, values_;
  std::size_t pos_index_ = 0;
};

}  // namespace

ForwardResult forward_with_capture(const Checkpoint& ckpt, const Tokens& tokens, long capture_pos,
                                   const std::vector<std::size_t>& capture_layers,
                                   std::span<const Intervention> interventions) {
  if (tokens.empty()) throw Error(ErrorKind::EmptyInput, "empty token sequence");
  if (tokens.size() > ckpt.config.max_seq)
    throw Error(ErrorKind::SequenceTooLong, std::to_string(tokens.size()) + " tokens > max_seq " +
                                                std::to_string(ckpt.config.max_seq));
  const long n = static_cast<long>(tokens.size());
  const long idx = capture_pos < 0 ? n + capture_pos : capture_pos;
  if (idx < 0 || idx >= n)
    throw Error(ErrorKind::InvalidPosition, "position " + std::to_string(capture_pos) + " for " + std::to_string(n) + " tokens");
  for (auto l : capture_layers)
    if (l >= ckpt.config.n_layers) throw Error(ErrorKind::InvalidLayer, "capture layer " + std::to_string(l));

  Session s(ckpt, interventions);
  ForwardResult out;
  std::vector<float> x;
  std::vector<std::vector<float>> per_layer;
  for (long t = 0; t < n; ++t) {
    const bool capture = t == idx && !capture_layers.empty();
    x = s.step(tokens[static_cast<std::size_t>(t)], capture ? &per_layer : nullptr);
    if (capture)
      for (auto l : capture_layers) out.trace[l] = per_layer[l];
  }
  out.logits = s.logits(x);
  return out;
}

std::vector<std::vector<float>> forward_all_logits(const Checkpoint& ckpt, const Tokens& tokens,
                                                   std::span<const Intervention> interventions) {
  Session s(ckpt, interventions);
  std::vector<std::vector<float>> out;
  out.reserve(tokens.size());
  for (int tok : tokens) out.push_back(s.logits(s.step(tok)));
  return out;
}

Tokens sample_text(const Checkpoint& ckpt, const Tokens& prompt, std::size_t max_new, double temperature,
                   std::uint64_t rng_seed, std::span<const Intervention> interventions) {
  if (prompt.empty()) throw Error(ErrorKind::EmptyInput, "empty prompt");
  if (prompt.size() > ckpt.config.max_seq)
    throw Error(ErrorKind::SequenceTooLong, std::to_string(prompt.size()) + " prompt tokens > max_seq " +
                                                std::to_string(ckpt.config.max_seq));
  if (!(temperature >= 0.0)) throw Error(ErrorKind::InvalidSpec, "negative temperature");
  Tokens out;
  if (max_new == 0) return out;
  Session s(ckpt, interventions);
  std::vector<float> x;
  for (int tok : prompt) x = s.step(tok);
  Rng rng(rng_seed);
  while (out.size() < max_new) {
    const auto logits = s.logits(x);
    int next = 0;
    if (temperature == 0.0) {
      for (std::size_t i = 1; i < logits.size(); ++i)
        if (logits[i] > logits[static_cast<std::size_t>(next)]) next = static_cast<int>(i);
    } else {
      const double mx = *std::max_element(logits.begin(), logits.end());
      std::vector<double> p(logits.size());
      double total = 0.0;
      for (std::size_t i = 0; i < logits.size(); ++i) total += p[i] = std::exp((logits[i] - mx) / temperature);
      double u = rng.uniform01() * total;
      next = static_cast<int>(logits.size() - 1);
      for (std::size_t i = 0; i < p.size(); ++i) {
        if (u < p[i]) {
          next = static_cast<int>(i);
          break;
        }
        u -= p[i];
      }
    }
    if (next == kEndOfText) break;
    out.push_back(next);
    if (s.position() >= ckpt.config.max_seq) break;
    x = s.step(next);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Serialization

namespace {

constexpr std::string_view kMagic = "SFXCKPT1";

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_floats(std::string& out, const std::vector<float>& v) {
  for (float f : v) put_u32(out, std::bit_cast<std::uint32_t>(f));
}

class Reader {
 public:
  explicit Reader(std::string_view bytes) : b_(bytes) {}
  std::uint64_t uint(int width) {
    need(static_cast<std::size_t>(width));
    std::uint64_t v = 0;
    for (int i = 0; i < width; ++i) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(b_[at_ + i])) << (8 * i);
    at_ += static_cast<std::size_t>(width);
    return v;
  }
  std::string_view bytes(std::size_t n) {
    need(n);
    auto s = b_.substr(at_, n);
    at_ += n;
    return s;
  }
  std::vector<float> floats(std::size_t n) {
    need(n * 4);
    std::vector<float> v(n);
    for (auto& f : v) f = std::bit_cast<float>(static_cast<std::uint32_t>(uint(4)));
    return v;
  }
  bool done() const noexcept { return at_ == b_.size(); }

 private:
  void need(std::size_t n) const {
    if (b_.size() - at_ < n) throw Error(ErrorKind::ChecksumError, "checkpoint truncated");
  }
  std::string_view b_;
  std::size_t at_ = 0;
};

std::uint32_t crc(std::string_view bytes) {
  return static_cast<std::uint32_t>(
      crc32(0L, reinterpret_cast<const Bytef*>(bytes.data()), static_cast<uInt>(bytes.size())));
}

}  // namespace

std::string serialize_checkpoint(const Checkpoint& ck) {
  std::string out(kMagic);
  OrderedJson cfg;
  cfg["n_layers"] = ck.config.n_layers;
  cfg["d_model"] = ck.config.d_model;
  cfg["n_heads"] = ck.config.n_heads;
  cfg["d_ff"] = ck.config.d_ff;
  cfg["vocab_size"] = ck.config.vocab_size;
  cfg["max_seq"] = ck.config.max_seq;
  cfg["init_seed"] = ck.config.init_seed;
  const std::string cfg_text = dump_json(cfg);
  put_u32(out, static_cast<std::uint32_t>(cfg_text.size()));
  out += cfg_text;

  put_u32(out, static_cast<std::uint32_t>(ck.weights.size()));
  for (const auto& [name, t] : ck.weights) {
    put_u32(out, static_cast<std::uint32_t>(name.size()));
    out += name;
    put_u32(out, static_cast<std::uint32_t>(t.shape.size()));
    for (auto dim : t.shape) put_u64(out, dim);
    put_floats(out, t.data);
  }

  out.push_back(ck.layer_bias ? 1 : 0);
  out.push_back(ck.bias_enabled ? 1 : 0);
  if (ck.layer_bias) {
    put_u32(out, static_cast<std::uint32_t>(ck.layer_bias->layer));
    put_u32(out, static_cast<std::uint32_t>(ck.layer_bias->offset.size()));
    put_floats(out, ck.layer_bias->offset);
  }
  put_u32(out, crc(out));
  return out;
}

Checkpoint deserialize_checkpoint(std::string_view bytes) {
  if (bytes.size() < kMagic.size() + 4 || bytes.substr(0, kMagic.size()) != kMagic)
    throw Error(ErrorKind::ChecksumError, "not a checkpoint (bad magic or truncated)");
  const std::string_view body = bytes.substr(0, bytes.size() - 4);
  Reader tail(bytes.substr(bytes.size() - 4));
  if (crc(body) != tail.uint(4)) throw Error(ErrorKind::ChecksumError, "checkpoint checksum mismatch");

  Reader r(body.substr(kMagic.size()));
  Checkpoint ck;
  try {
    auto cfg = Json::parse(r.bytes(r.uint(4)));
    ck.config.n_layers = cfg.at("n_layers");
    ck.config.d_model = cfg.at("d_model");
    ck.config.n_heads = cfg.at("n_heads");
    ck.config.d_ff = cfg.at("d_ff");
    ck.config.vocab_size = cfg.at("vocab_size");
    ck.config.max_seq = cfg.at("max_seq");
    ck.config.init_seed = cfg.at("init_seed");
  } catch (const Json::exception& e) {
    throw Error(ErrorKind::ChecksumError, std::string("bad config block: ") + e.what());
  }
  validate_config(ck.config);
  const auto n_arrays = r.uint(4);
  for (std::uint64_t a = 0; a < n_arrays; ++a) {
    std::string name(r.bytes(r.uint(4)));
    Tensor t;
    const auto ndim = r.uint(4);
    std::size_t count = 1;
    for (std::uint64_t i = 0; i < ndim; ++i) {
      t.shape.push_back(r.uint(8));
      count *= t.shape.back();
    }
    t.data = r.floats(count);
    ck.weights.emplace(std::move(name), std::move(t));
  }
  const bool has_bias = r.uint(1) != 0;
  ck.bias_enabled = r.uint(1) != 0;
  if (has_bias) {
    LayerBias b;
    b.layer = r.uint(4);
    b.offset = r.floats(r.uint(4));
    ck.layer_bias = std::move(b);
  }
  if (!r.done()) throw Error(ErrorKind::ChecksumError, "trailing bytes in checkpoint");
  return ck;
}

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
  write_text_file(path, serialize_checkpoint(ckpt));
}

Checkpoint load_checkpoint(const std::filesystem::path& path) { return deserialize_checkpoint(read_text_file(path)); }

Checkpoint checkpoint_roundtrip(const Checkpoint& ckpt, const std::filesystem::path& path) {
  save_checkpoint(ckpt, path);
  return load_checkpoint(path);
}

std::string checkpoint_hash(const Checkpoint& ckpt) { return hex64(fnv1a64(serialize_checkpoint(ckpt))); }

// ---------------------------------------------------------------------------
// Byte-level text

Tokens encode_bytes(std::string_view text) {
  Tokens out;
  out.reserve(text.size());
  for (unsigned char c : text) out.push_back(c);
  return out;
}

Tokens encode_chat(std::string_view system, std::string_view user) {
  std::string s;
  if (!system.empty()) {
    s += "<|system|>\n";
    s += system;
    s += '\n';
  }
  s += "<|user|>\n";
  s += user;
  s += "\n<|assistant|>\n";
  return encode_bytes(s);
}

std::string decode_text(const Tokens& tokens) {
  std::string out;
  for (int t : tokens) {
    if (t == kEndOfText) break;
    const bool printable = (t >= 0x20 && t < 0x7f) || t == '\n' || t == '\t';
    out.push_back(printable ? static_cast<char>(t) : ' ');
  }
  return out;
}

RefModelBackend::RefModelBackend(Checkpoint ckpt, std::vector<Intervention> interventions, std::string id)
    : ckpt_(std::move(ckpt)), interventions_(std::move(interventions)), id_(std::move(id)) {
  validate_config(ckpt_.config);
  for (const auto& iv : interventions_) apply_layer_offset(ckpt_, iv.layer, iv.offset);
  if (id_.empty()) id_ = "refmodel:" + checkpoint_hash(ckpt_);
}

ChatResponse RefModelBackend::complete(const ChatRequest& request) {
  validate_request(request);
  const auto start = std::chrono::steady_clock::now();
  const Tokens prompt = encode_chat(request.system_prompt, request.user_message);
  const std::uint64_t seed = hash_combine(request.rng_seed, request.sample_index);
  const Tokens gen = sample_text(ckpt_, prompt, request.max_tokens, request.temperature, seed, interventions_);
  ChatResponse r;
  r.text = decode_text(gen);
  r.backend_id = id_;
  r.word_count = word_count(r.text);
  r.latency_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  return r;
}

}  // namespace stylefx
