#pragma once

// Oracles and fixtures shared by the unit tests and the acceptance binary.
// Nothing here calls into the library code under test except to build inputs.

#include <cmath>
#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

#include "stylefx/refmodel.hpp"
#include "stylefx/rng.hpp"
#include "stylefx/simulator.hpp"

namespace stylefx::testing {

inline std::filesystem::path data_dir() { return STYLEFX_TEST_DATA_DIR; }

/// Two-sided p for Binomial(n, 1/2) by direct pmf summation over Pascal's
/// triangle in long double: sum of pmf(i) over i with pmf(i) <= pmf(k).
inline double brute_binom_p(std::size_t k, std::size_t n) {
  std::vector<long double> row{1.0L};
  for (std::size_t r = 1; r <= n; ++r) {
    std::vector<long double> next(r + 1, 1.0L);
    for (std::size_t i = 1; i < r; ++i) next[i] = row[i - 1] + row[i];
    row = std::move(next);
  }
  const long double scale = std::pow(2.0L, static_cast<long double>(n));
  const long double ref = row[k];
  long double p = 0.0L;
  for (std::size_t i = 0; i <= n; ++i)
    if (row[i] <= ref * (1.0L + 1e-12L)) p += row[i] / scale;
  return static_cast<double>(std::min(p, 1.0L));
}

/// Smallest and largest k with P(X <= k) and P(X >= k) both above 2.5% for
/// Binomial(n, 1/2); the central 95% band, by summation.
inline std::pair<std::size_t, std::size_t> binom_central_band(std::size_t n) {
  std::vector<long double> pmf(n + 1);
  long double logc = 0.0L;
  for (std::size_t i = 0; i <= n; ++i) {
    if (i > 0) logc += std::log(static_cast<long double>(n - i + 1)) - std::log(static_cast<long double>(i));
    pmf[i] = std::exp(logc - static_cast<long double>(n) * std::log(2.0L));
  }
  std::size_t lo = 0, hi = n;
  long double acc = 0.0L;
  for (std::size_t i = 0; i <= n; ++i) {
    acc += pmf[i];
    if (acc > 0.025L) {
      lo = i;
      break;
    }
  }
  acc = 0.0L;
  for (std::size_t i = n + 1; i-- > 0;) {
    acc += pmf[i];
    if (acc > 0.025L) {
      hi = i;
      break;
    }
  }
  return {lo, hi};
}

inline std::vector<double> binomial_pmf(std::size_t n, double p) {
  std::vector<double> out(n + 1);
  for (std::size_t i = 0; i <= n; ++i) {
    const double lc = std::lgamma(n + 1.0) - std::lgamma(i + 1.0) - std::lgamma(n - i + 1.0);
    out[i] = std::exp(lc + (i ? i * std::log(p) : 0.0) + (n - i ? (n - i) * std::log1p(-p) : 0.0));
  }
  return out;
}

/// Expected judged win rate of a candidate render against a neutral render
/// for one side feature under the simulator's marker model: marker counts
/// are Binomial(length, p); the judge prefers the higher density and a tie
/// is decided by presentation order, which is a fair coin. Computed by the
/// double sum over both counts.
inline double expected_marker_rate(std::size_t len_c, double p_c, std::size_t len_r, double p_r) {
  const auto pc = binomial_pmf(len_c, p_c);
  const auto pr = binomial_pmf(len_r, p_r);
  double win = 0.0, tie = 0.0;
  for (std::size_t a = 0; a <= len_c; ++a)
    for (std::size_t b = 0; b <= len_r; ++b) {
      const double w = pc[a] * pr[b];
      if (a * len_r > b * len_c) win += w;
      else if (a * len_r == b * len_c) tie += w;
    }
  return win + 0.5 * tie;
}

/// Independent recomputation of a requested feature's mix weight from the
/// raw contamination entries.
inline double oracle_weight(const SimStyleModel& m, const std::string& main, const std::string& side) {
  auto it = m.contamination.find({main, side});
  double w = it != m.contamination.end() ? it->second : (main == side ? 1.0 : 0.0);
  return std::max(-1.0, std::min(1.0, w));
}

inline std::size_t oracle_length(const SimStyleModel& m, const std::string& main) {
  double len = static_cast<double>(m.base_length);
  for (const auto& [g, mult] : m.length_multiplier) len *= std::pow(mult, oracle_weight(m, main, g));
  return static_cast<std::size_t>(std::max(1.0, std::floor(len + 0.5)));
}

struct PlantedModel {
  Checkpoint ckpt;
  std::vector<float> direction;  // unit, zero mean
};

/// Reference model whose A/B decision is read off a planted direction v*:
/// the 'A' and 'B' embeddings differ by 2*alpha*v*, the output head scores A
/// and B by +/-beta*v*, and the newline that precedes the decision carries
/// -delta*v* so the unsteered decision is B. Attention and MLP outputs are
/// damped so the direction survives through the layers.
inline PlantedModel make_planted_model(std::uint64_t seed, float alpha = 3.0f, float delta = 2.0f,
                                       float beta = 3.0f, float damping = 0.25f) {
  ModelConfig cfg;
  cfg.max_seq = 1024;
  cfg.init_seed = seed;
  PlantedModel pm{init_model(cfg), std::vector<float>(cfg.d_model)};
  Rng rng(seed ^ 0x5eedULL);
  double mean = 0.0;
  for (auto& x : pm.direction) mean += x = static_cast<float>(rng.uniform01() * 2.0 - 1.0);
  mean /= static_cast<double>(cfg.d_model);
  double norm = 0.0;
  for (auto& x : pm.direction) norm += (x = static_cast<float>(x - mean)) * x;
  for (auto& x : pm.direction) x = static_cast<float>(x / std::sqrt(norm));

  const std::size_t d = cfg.d_model;
  auto& emb = pm.ckpt.param("tok_embeddings.weight").data;
  auto& head = pm.ckpt.param("lm_head.weight").data;
  const std::size_t a = 'A', b = 'B', nl = '\n';
  for (std::size_t i = 0; i < d; ++i) {
    emb[b * d + i] = emb[a * d + i];
    emb[a * d + i] += alpha * pm.direction[i];
    emb[b * d + i] -= alpha * pm.direction[i];
    emb[nl * d + i] -= delta * pm.direction[i];
    head[a * d + i] = beta * pm.direction[i];
    head[b * d + i] = -beta * pm.direction[i];
  }
  for (std::size_t l = 0; l < cfg.n_layers; ++l)
    for (const char* p : {"attn.wo.weight", "mlp.down_proj.weight"})
      for (auto& w : pm.ckpt.param("layers." + std::to_string(l) + "." + p).data) w *= damping;
  return pm;
}

inline double cosine(const std::vector<float>& x, const std::vector<float>& y) {
  double xy = 0, xx = 0, yy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    xy += double(x[i]) * y[i];
    xx += double(x[i]) * x[i];
    yy += double(y[i]) * y[i];
  }
  return xy / std::sqrt(xx * yy);
}

}  // namespace stylefx::testing
