#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "stylefx/stats.hpp"

namespace stylefx {

/// Header "main,<sides...>" ending in "length"; one row per main in catalog
/// order; cells "rate|p|sig" with rate "%.3f", p "%.4g", sig 0/1, and
/// "NoData|1|0" for empty cells.
std::string matrix_csv(const WinRateMatrix& matrix);
void export_matrix_csv(const WinRateMatrix& matrix, const std::filesystem::path& path);

/// One line per cell: main, side, wins, judged.
std::string matrix_counts_csv(const WinRateMatrix& matrix);

struct Rgb {
  std::uint8_t r = 0, g = 0, b = 0;
  bool operator==(const Rgb&) const = default;
};

/// Diverging map fixed at 0 (blue), 0.5 (white), 1 (red); clamped outside.
Rgb diverging_color(double rate);
inline constexpr Rgb kNoDataColor{200, 200, 200};

/// Standalone SVG heatmap: colored cells with rate labels, "*" on
/// significant cells, gray NoData cells, feature names on both axes.
std::string heatmap_svg(const WinRateMatrix& matrix, const std::string& title = {});
void render_heatmap_svg(const WinRateMatrix& matrix, const std::filesystem::path& path, const std::string& title = {});

}  // namespace stylefx
