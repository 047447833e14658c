#include "stylefx/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "stylefx/io.hpp"

namespace stylefx {

namespace {

std::string format_cell(const MatrixCell& c) {
  if (c.no_data()) return "NoData|1|0";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.3f|%.4g|%d", *c.rate, c.p_value, c.significant ? 1 : 0);
  return buf;
}

std::string xml_escape(std::string_view s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string hex_color(Rgb c) {
  char buf[8];
  std::snprintf(buf, sizeof buf, "#%02x%02x%02x", c.r, c.g, c.b);
  return buf;
}

}  // namespace

std::string matrix_csv(const WinRateMatrix& m) {
  std::string out = "main";
  for (const auto& s : m.sides) out += "," + s;
  out += "\n";
  for (std::size_t i = 0; i < m.mains.size(); ++i) {
    out += m.mains[i];
    for (std::size_t j = 0; j < m.sides.size(); ++j) out += "," + format_cell(m.at(i, j));
    out += "\n";
  }
  return out;
}

void export_matrix_csv(const WinRateMatrix& matrix, const std::filesystem::path& path) {
  write_text_file(path, matrix_csv(matrix));
}

std::string matrix_counts_csv(const WinRateMatrix& m) {
  std::string out = "main,side,wins,judged\n";
  for (const auto& c : m.cells) out += c.main + "," + c.side + "," + std::to_string(c.wins) + "," + std::to_string(c.judged) + "\n";
  return out;
}

Rgb diverging_color(double rate) {
  constexpr Rgb blue{33, 102, 172}, white{255, 255, 255}, red{178, 24, 43};
  const double t = std::clamp(std::isfinite(rate) ? rate : 0.5, 0.0, 1.0);
  const Rgb& end = t < 0.5 ? blue : red;
  const double w = std::abs(t - 0.5) * 2.0;  // 0 at the midpoint, 1 at either end
  auto mix = [w](std::uint8_t a, std::uint8_t b) {
    return static_cast<std::uint8_t>(std::lround(a + (b - a) * w));
  };
  return {mix(white.r, end.r), mix(white.g, end.g), mix(white.b, end.b)};
}

std::string heatmap_svg(const WinRateMatrix& m, const std::string& title) {
  constexpr int cell = 48, left = 110, top = 110, legend_h = 16;
  const int width = left + cell * static_cast<int>(m.sides.size()) + 20;
  const int height = top + cell * static_cast<int>(m.mains.size()) + legend_h + 50;
  std::string s;
  char buf[512];
  std::snprintf(buf, sizeof buf,
                "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
                "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"%d\" height=\"%d\" viewBox=\"0 0 %d %d\" "
                "font-family=\"Helvetica, Arial, sans-serif\">\n",
                width, height, width, height);
  s += buf;
  s += "<rect width=\"100%\" height=\"100%\" fill=\"#ffffff\"/>\n";
  if (!title.empty()) {
    std::snprintf(buf, sizeof buf, "<text x=\"%d\" y=\"24\" font-size=\"16\" text-anchor=\"middle\">", width / 2);
    s += buf + xml_escape(title) + "</text>\n";
  }
  for (std::size_t j = 0; j < m.sides.size(); ++j) {
    const int x = left + cell * static_cast<int>(j) + cell / 2;
    std::snprintf(buf, sizeof buf, "<text x=\"%d\" y=\"%d\" font-size=\"11\" transform=\"rotate(-45 %d %d)\">", x,
                  top - 6, x, top - 6);
    s += buf + xml_escape(m.sides[j]) + "</text>\n";
  }
  for (std::size_t i = 0; i < m.mains.size(); ++i) {
    const int y = top + cell * static_cast<int>(i);
    std::snprintf(buf, sizeof buf, "<text x=\"%d\" y=\"%d\" font-size=\"11\" text-anchor=\"end\">", left - 6,
                  y + cell / 2 + 4);
    s += buf + xml_escape(m.mains[i]) + "</text>\n";
    for (std::size_t j = 0; j < m.sides.size(); ++j) {
      const auto& c = m.at(i, j);
      const int x = left + cell * static_cast<int>(j);
      const Rgb fill = c.no_data() ? kNoDataColor : diverging_color(*c.rate);
      std::snprintf(buf, sizeof buf,
                    "<rect x=\"%d\" y=\"%d\" width=\"%d\" height=\"%d\" fill=\"%s\" stroke=\"#ffffff\"/>\n", x, y,
                    cell, cell, hex_color(fill).c_str());
      s += buf;
      std::string label = "n/a";
      if (!c.no_data()) {
        std::snprintf(buf, sizeof buf, "%.2f%s", *c.rate, c.significant ? "*" : "");
        label = buf;
      }
      std::snprintf(buf, sizeof buf, "<text x=\"%d\" y=\"%d\" font-size=\"11\" text-anchor=\"middle\">%s</text>\n",
                    x + cell / 2, y + cell / 2 + 4, label.c_str());
      s += buf;
    }
  }
  // color bar from 0 to 1
  const int bar_y = top + cell * static_cast<int>(m.mains.size()) + 20;
  const int bar_w = cell * static_cast<int>(m.sides.size());
  constexpr int steps = 50;
  for (int k = 0; k < steps; ++k) {
    const double rate = (k + 0.5) / steps;
    std::snprintf(buf, sizeof buf, "<rect x=\"%.2f\" y=\"%d\" width=\"%.2f\" height=\"%d\" fill=\"%s\"/>\n",
                  left + bar_w * static_cast<double>(k) / steps, bar_y, bar_w / static_cast<double>(steps) + 0.5,
                  legend_h, hex_color(diverging_color(rate)).c_str());
    s += buf;
  }
  for (double v : {0.0, 0.5, 1.0}) {
    std::snprintf(buf, sizeof buf, "<text x=\"%.1f\" y=\"%d\" font-size=\"10\" text-anchor=\"middle\">%.1f</text>\n",
                  left + bar_w * v, bar_y + legend_h + 12, v);
    s += buf;
  }
  s += "</svg>\n";
  return s;
}

void render_heatmap_svg(const WinRateMatrix& matrix, const std::filesystem::path& path, const std::string& title) {
  write_text_file(path, heatmap_svg(matrix, title));
}

}  // namespace stylefx
