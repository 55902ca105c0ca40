#include "weaksup/io.hpp"
#include "weaksup/sweep.hpp"

#include <algorithm>
#include <cmath>

namespace weaksup {

namespace {

constexpr double kWidth = 720.0;
constexpr double kHeight = 480.0;
constexpr double kLeft = 80.0;
constexpr double kRight = 30.0;
constexpr double kTop = 40.0;
constexpr double kBottom = 60.0;

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};

std::string esc(const std::string& text) {
  std::string out;
  for (char c : text) {
    switch (c) {
      case '<':
        out += "&lt;";
        break;
      case '>':
        out += "&gt;";
        break;
      case '&':
        out += "&amp;";
        break;
      default:
        out += c;
    }
  }
  return out;
}

}  // namespace

std::string render_loglog_svg(const std::vector<PlotSeries>& series, const std::string& title,
                              const std::string& x_label, const std::string& y_label) {
  // Only strictly positive values can live on log axes.
  double x_min = 0.0, x_max = 0.0, y_min = 0.0, y_max = 0.0;
  bool any = false;
  for (const auto& s : series) {
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (s.x[i] <= 0.0 || s.mean[i] <= 0.0) continue;
      const double lo = s.lo[i] > 0.0 ? s.lo[i] : s.mean[i];
      const double hi = s.hi[i] > 0.0 ? s.hi[i] : s.mean[i];
      if (!any) {
        x_min = x_max = s.x[i];
        y_min = lo;
        y_max = hi;
        any = true;
      } else {
        x_min = std::min(x_min, s.x[i]);
        x_max = std::max(x_max, s.x[i]);
        y_min = std::min(y_min, lo);
        y_max = std::max(y_max, hi);
      }
    }
  }
  if (!any) {
    x_min = 1.0;
    x_max = 10.0;
    y_min = 0.01;
    y_max = 1.0;
  }
  if (x_max <= x_min) x_max = x_min * 10.0;
  if (y_max <= y_min) y_max = y_min * 10.0;
  const double lx0 = std::log10(x_min), lx1 = std::log10(x_max);
  const double ly0 = std::log10(y_min) - 0.05, ly1 = std::log10(y_max) + 0.05;

  auto px = [&](double x) {
    return kLeft + (std::log10(x) - lx0) / (lx1 - lx0) * (kWidth - kLeft - kRight);
  };
  auto py = [&](double y) {
    return kHeight - kBottom -
           (std::log10(y) - ly0) / (ly1 - ly0) * (kHeight - kTop - kBottom);
  };

  std::string svg;
  svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + fmt_fixed(kWidth, 0) +
         "\" height=\"" + fmt_fixed(kHeight, 0) + "\" viewBox=\"0 0 " + fmt_fixed(kWidth, 0) +
         " " + fmt_fixed(kHeight, 0) + "\">\n";
  svg += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  svg += "<text x=\"" + fmt_fixed(kWidth / 2, 1) +
         "\" y=\"22\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"16\">" +
         esc(title) + "</text>\n";

  // Frame.
  svg += "<rect x=\"" + fmt_fixed(kLeft, 1) + "\" y=\"" + fmt_fixed(kTop, 1) + "\" width=\"" +
         fmt_fixed(kWidth - kLeft - kRight, 1) + "\" height=\"" +
         fmt_fixed(kHeight - kTop - kBottom, 1) + "\" fill=\"none\" stroke=\"#333333\"/>\n";

  // Decade ticks.
  for (int e = static_cast<int>(std::ceil(lx0)); e <= static_cast<int>(std::floor(lx1)); ++e) {
    const double x = std::pow(10.0, e);
    svg += "<line x1=\"" + fmt_fixed(px(x), 1) + "\" y1=\"" + fmt_fixed(kTop, 1) + "\" x2=\"" +
           fmt_fixed(px(x), 1) + "\" y2=\"" + fmt_fixed(kHeight - kBottom, 1) +
           "\" stroke=\"#dddddd\"/>\n";
    svg += "<text x=\"" + fmt_fixed(px(x), 1) + "\" y=\"" + fmt_fixed(kHeight - kBottom + 18, 1) +
           "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">1e" +
           std::to_string(e) + "</text>\n";
  }
  for (int e = static_cast<int>(std::ceil(ly0)); e <= static_cast<int>(std::floor(ly1)); ++e) {
    const double y = std::pow(10.0, e);
    svg += "<line x1=\"" + fmt_fixed(kLeft, 1) + "\" y1=\"" + fmt_fixed(py(y), 1) + "\" x2=\"" +
           fmt_fixed(kWidth - kRight, 1) + "\" y2=\"" + fmt_fixed(py(y), 1) +
           "\" stroke=\"#dddddd\"/>\n";
    svg += "<text x=\"" + fmt_fixed(kLeft - 8, 1) + "\" y=\"" + fmt_fixed(py(y) + 4, 1) +
           "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">1e" +
           std::to_string(e) + "</text>\n";
  }
  svg += "<text x=\"" + fmt_fixed((kLeft + kWidth - kRight) / 2, 1) + "\" y=\"" +
         fmt_fixed(kHeight - 16, 1) +
         "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\">" + esc(x_label) +
         "</text>\n";
  svg += "<text x=\"20\" y=\"" + fmt_fixed((kTop + kHeight - kBottom) / 2, 1) +
         "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\" transform=\"rotate(-90 20 " +
         fmt_fixed((kTop + kHeight - kBottom) / 2, 1) + ")\">" + esc(y_label) + "</text>\n";

  // Seed band (min/max) then mean line per series.
  for (std::size_t si = 0; si < series.size(); ++si) {
    const auto& s = series[si];
    const char* color = kPalette[si % (sizeof(kPalette) / sizeof(kPalette[0]))];
    std::string band, line;
    std::vector<std::string> back;
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (s.x[i] <= 0.0 || s.mean[i] <= 0.0) continue;
      const double lo = s.lo[i] > 0.0 ? s.lo[i] : s.mean[i];
      const double hi = s.hi[i] > 0.0 ? s.hi[i] : s.mean[i];
      band += (band.empty() ? "" : " ") + fmt_fixed(px(s.x[i]), 2) + "," + fmt_fixed(py(hi), 2);
      back.push_back(fmt_fixed(px(s.x[i]), 2) + "," + fmt_fixed(py(lo), 2));
      line += (line.empty() ? "" : " ") + fmt_fixed(px(s.x[i]), 2) + "," +
              fmt_fixed(py(s.mean[i]), 2);
    }
    for (auto it = back.rbegin(); it != back.rend(); ++it) band += " " + *it;
    if (!band.empty()) {
      svg += std::string("<polygon points=\"") + band + "\" fill=\"" + color +
             "\" fill-opacity=\"0.15\" stroke=\"none\"/>\n";
    }
    if (!line.empty()) {
      svg += std::string("<polyline points=\"") + line + "\" fill=\"none\" stroke=\"" + color +
             "\" stroke-width=\"2\"/>\n";
    }
  }

  // Legend.
  double ly = kTop + 14.0;
  for (std::size_t si = 0; si < series.size(); ++si) {
    const char* color = kPalette[si % (sizeof(kPalette) / sizeof(kPalette[0]))];
    const double lx = kWidth - kRight - 150.0;
    svg += "<line x1=\"" + fmt_fixed(lx, 1) + "\" y1=\"" + fmt_fixed(ly - 4, 1) + "\" x2=\"" +
           fmt_fixed(lx + 24, 1) + "\" y2=\"" + fmt_fixed(ly - 4, 1) + "\" stroke=\"" + color +
           "\" stroke-width=\"2\"/>\n";
    svg += "<text x=\"" + fmt_fixed(lx + 30, 1) + "\" y=\"" + fmt_fixed(ly, 1) +
           "\" font-family=\"sans-serif\" font-size=\"12\">" + esc(series[si].label) +
           "</text>\n";
    ly += 16.0;
  }
  svg += "</svg>\n";
  return svg;
}

}  // namespace weaksup
