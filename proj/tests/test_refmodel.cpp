#include <cmath>
#include <filesystem>

#include "doctest.h"
#include "stylefx/error.hpp"
#include "stylefx/io.hpp"
#include "stylefx/refmodel.hpp"

using namespace stylefx;

namespace {

ModelConfig small() {
  ModelConfig c;
  c.n_layers = 2;
  c.d_model = 32;
  c.n_heads = 2;
  c.d_ff = 64;
  c.max_seq = 64;
  c.init_seed = 3;
  return c;
}

std::vector<float> ramp(std::size_t n, float scale) {
  std::vector<float> v(n);
  for (std::size_t i = 0; i < n; ++i) v[i] = scale * std::sin(static_cast<float>(i) + 1.0f);
  return v;
}

float max_abs_diff(const std::vector<float>& a, const std::vector<float>& b) {
  float m = 0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

}  // namespace

TEST_SUITE("refmodel") {
  TEST_CASE("config validation") {
    auto c = small();
    c.n_heads = 3;
    CHECK_THROWS_AS(validate_config(c), Error);
    c = small();
    c.vocab_size = 100;
    CHECK_THROWS_AS(validate_config(c), Error);
  }

  TEST_CASE("init is deterministic per seed") {
    CHECK(init_model(small()) == init_model(small()));
    auto c = small();
    c.init_seed = 4;
    CHECK_FALSE(init_model(small()) == init_model(c));
  }

  TEST_CASE("forward is causal") {
    auto m = init_model(small());
    Tokens t = encode_bytes("hello world");
    auto full = forward_all_logits(m, t);
    Tokens prefix(t.begin(), t.begin() + 5);
    auto part = forward_all_logits(m, prefix);
    for (std::size_t p = 0; p < 5; ++p) CHECK(max_abs_diff(full[p], part[p]) < 1e-5f);
    auto changed = t;
    changed.back() = 'X';
    auto alt = forward_all_logits(m, changed);
    for (std::size_t p = 0; p + 1 < t.size(); ++p) CHECK(max_abs_diff(full[p], alt[p]) < 1e-5f);
  }

  TEST_CASE("capture positions, layers and length limits") {
    auto m = init_model(small());
    Tokens t = encode_bytes("abc");
    auto r = forward_with_capture(m, t, -1, {0, 1});
    CHECK(r.trace.size() == 2);
    CHECK(r.trace.at(1).size() == 32);
    CHECK(forward_with_capture(m, t, 2, {1}).trace.at(1) == r.trace.at(1));
    auto err = [&](auto fn, ErrorKind k) {
      try {
        fn();
        FAIL("expected error");
      } catch (const Error& e) {
        CHECK(e.kind() == k);
      }
    };
    err([&] { forward_with_capture(m, t, -4, {0}); }, ErrorKind::InvalidPosition);
    err([&] { forward_with_capture(m, t, 3, {0}); }, ErrorKind::InvalidPosition);
    err([&] { forward_with_capture(m, t, -1, {2}); }, ErrorKind::InvalidLayer);
    err([&] { forward_with_capture(m, Tokens(65, 'a'), -1, {0}); }, ErrorKind::SequenceTooLong);
  }

  TEST_CASE("a zero offset changes nothing; a nonzero one changes downstream layers only") {
    auto m = init_model(small());
    Tokens t = encode_bytes("steer me");
    auto base = forward_with_capture(m, t, -1, {0, 1});
    auto zero = apply_layer_offset(m, 1, std::vector<float>(32, 0.0f));
    CHECK(forward_with_capture(m, t, -1, {0, 1}, std::span(&zero, 1)).logits == base.logits);
    auto iv = apply_layer_offset(m, 1, ramp(32, 0.5f));
    auto hooked = forward_with_capture(m, t, -1, {0, 1}, std::span(&iv, 1));
    CHECK(hooked.trace.at(0) == base.trace.at(0));
    CHECK(max_abs_diff(hooked.trace.at(1), base.trace.at(1)) > 0.1f);
    CHECK_THROWS_AS(apply_layer_offset(m, 2, ramp(32, 1)), Error);
    CHECK_THROWS_AS(apply_layer_offset(m, 0, ramp(31, 1)), Error);
  }

  TEST_CASE("baked bias matches the runtime hook") {
    auto m = init_model(small());
    auto v = ramp(32, 0.7f);
    auto baked = bake_bias(m, 1, v);
    CHECK(baked.bias_enabled);
    auto iv = apply_layer_offset(m, 1, v);
    for (const char* s : {"hi", "a longer prompt with more bytes"}) {
      Tokens t = encode_bytes(s);
      CHECK(max_abs_diff(forward_with_capture(baked, t, -1, {}).logits,
                         forward_with_capture(m, t, -1, {}, std::span(&iv, 1)).logits) <= 1e-4f);
    }
  }

  TEST_CASE("sampling: greedy is deterministic, seeds reproduce, max_new bounds") {
    auto m = init_model(small());
    Tokens p = encode_chat("", "hello");
    CHECK(sample_text(m, p, 10, 0.0, 1) == sample_text(m, p, 10, 0.0, 2));
    CHECK(sample_text(m, p, 10, 1.0, 7) == sample_text(m, p, 10, 1.0, 7));
    CHECK(sample_text(m, p, 10, 1.0, 7).size() <= 10);
    CHECK(sample_text(m, p, 0, 1.0, 7).empty());
    // The last token may be drawn from a full context but is never fed back.
    CHECK(sample_text(m, Tokens(60, 'a'), 100, 1.0, 1).size() <= 5);
  }

  TEST_CASE("checkpoint round trip and corruption") {
    auto m = bake_bias(init_model(small()), 0, ramp(32, 0.2f));
    auto path = std::filesystem::temp_directory_path() / "stylefx_ckpt_test.bin";
    auto back = checkpoint_roundtrip(m, path);
    CHECK(back == m);
    CHECK(checkpoint_hash(back) == checkpoint_hash(m));
    auto bytes = serialize_checkpoint(m);
    auto expect_checksum = [](std::string_view b) {
      try {
        deserialize_checkpoint(b);
        FAIL("expected ChecksumError");
      } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::ChecksumError);
      }
    };
    auto flipped = bytes;
    flipped[bytes.size() / 2] ^= 0x10;
    expect_checksum(flipped);
    expect_checksum(std::string_view(bytes).substr(0, bytes.size() - 7));
    expect_checksum(bytes + "x");
    expect_checksum("NOTACKPT");
    write_text_file(path, flipped);
    CHECK_THROWS_AS(load_checkpoint(path), Error);
    std::filesystem::remove(path);
  }

  TEST_CASE("chat encoding and decoding") {
    auto t = encode_chat("sys", "hi");
    CHECK(decode_text(t) == "<|system|>\nsys\n<|user|>\nhi\n<|assistant|>\n");
    CHECK(decode_text(encode_chat("", "hi")).find("system") == std::string::npos);
    Tokens with_eot = encode_bytes("ok");
    with_eot.push_back(kEndOfText);
    with_eot.push_back('z');
    CHECK(decode_text(with_eot) == "ok");
  }

  TEST_CASE("backend is reproducible and reports the checkpoint") {
    RefModelBackend b(init_model(small()));
    ChatRequest r{"", "hello", 1.0, 12, 1, 5};
    CHECK(b.complete(r).text == b.complete(r).text);
    CHECK(b.id().rfind("refmodel:", 0) == 0);
  }
}
