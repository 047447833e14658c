#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "stylefx/backend.hpp"

namespace stylefx {

struct ModelConfig {
  std::size_t n_layers = 4;
  std::size_t d_model = 64;
  std::size_t n_heads = 4;
  std::size_t d_ff = 256;
  std::size_t vocab_size = 256;
  std::size_t max_seq = 512;
  std::uint64_t init_seed = 0;

  std::size_t head_dim() const noexcept { return d_model / n_heads; }
  bool operator==(const ModelConfig&) const = default;
};

void validate_config(const ModelConfig& config);  // InvalidConfig

struct Tensor {
  std::vector<std::size_t> shape;
  std::vector<float> data;
  bool operator==(const Tensor&) const = default;
};

struct LayerBias {
  std::size_t layer = 0;
  std::vector<float> offset;
  bool operator==(const LayerBias&) const = default;
};

/// Pre-norm decoder: learned token and position embeddings, per layer
/// x += Attn(RMSNorm(x)); x += Down(GELU(Up(RMSNorm(x)))) [+ bias], then a
/// final RMSNorm and output head. Parameter names follow the
/// "layers.{l}.mlp.down_proj.weight" convention.
struct Checkpoint {
  ModelConfig config;
  std::map<std::string, Tensor> weights;
  std::optional<LayerBias> layer_bias;
  bool bias_enabled = false;

  const Tensor& param(const std::string& name) const;
  Tensor& param(const std::string& name);
  bool operator==(const Checkpoint&) const = default;
};

/// Deterministic scaled-uniform initialization; each parameter draws from its
/// own stream keyed by (init_seed, name).
Checkpoint init_model(const ModelConfig& config);

/// Additive offset on one layer's MLP down-projection output, every position.
struct Intervention {
  std::size_t layer = 0;
  std::vector<float> offset;
};

/// Validates layer (InvalidLayer) and length (InvalidSpec).
Intervention apply_layer_offset(const Checkpoint& ckpt, std::size_t layer, std::span<const float> offset);

/// Copy of `ckpt` with the offset installed as a down-projection bias.
Checkpoint bake_bias(const Checkpoint& ckpt, std::size_t layer, std::span<const float> offset);

using Tokens = std::vector<int>;

struct ForwardResult {
  std::vector<float> logits;                   // final position
  std::map<std::size_t, std::vector<float>> trace;  // layer -> residual after that layer
};

/// capture_pos < 0 counts from the end (-1 is the last token).
/// Out-of-range positions raise InvalidPosition, bad layers InvalidLayer,
/// inputs longer than max_seq SequenceTooLong.
ForwardResult forward_with_capture(const Checkpoint& ckpt, const Tokens& tokens, long capture_pos,
                                   const std::vector<std::size_t>& capture_layers,
                                   std::span<const Intervention> interventions = {});

/// Logits at every position; used for causality checks.
std::vector<std::vector<float>> forward_all_logits(const Checkpoint& ckpt, const Tokens& tokens,
                                                   std::span<const Intervention> interventions = {});

/// Temperature 0 is greedy with ties to the lowest token id. Generation stops
/// at end-of-text (not included) or when the context reaches max_seq.
Tokens sample_text(const Checkpoint& ckpt, const Tokens& prompt, std::size_t max_new, double temperature,
                   std::uint64_t rng_seed, std::span<const Intervention> interventions = {});

/// Self-describing binary container with a trailing CRC-32. Any mismatch or
/// truncation raises ChecksumError.
void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);
std::string serialize_checkpoint(const Checkpoint& ckpt);
Checkpoint deserialize_checkpoint(std::string_view bytes);
Checkpoint checkpoint_roundtrip(const Checkpoint& ckpt, const std::filesystem::path& path);

/// Hex fingerprint of the serialized checkpoint.
std::string checkpoint_hash(const Checkpoint& ckpt);

inline constexpr int kEndOfText = 0x04;

Tokens encode_bytes(std::string_view text);
/// "<|system|>\n{system}\n<|user|>\n{user}\n<|assistant|>\n" as bytes; the
/// system block is omitted when empty.
Tokens encode_chat(std::string_view system, std::string_view user);
/// Bytes up to end-of-text; non-printable bytes become spaces.
std::string decode_text(const Tokens& tokens);

/// Chat backend over a (possibly baked) checkpoint.
class RefModelBackend : public ChatBackend {
 public:
  explicit RefModelBackend(Checkpoint ckpt, std::vector<Intervention> interventions = {}, std::string id = {});
  ChatResponse complete(const ChatRequest& request) override;
  std::string id() const override { return id_; }
  const Checkpoint& checkpoint() const noexcept { return ckpt_; }

 private:
  Checkpoint ckpt_;
  std::vector<Intervention> interventions_;
  std::string id_;
};

}  // namespace stylefx
