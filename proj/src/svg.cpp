// Copyright 2026 The freqbias Authors
// SPDX-License-Identifier: Apache-2.0
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "freqbias/svg.hpp"

#include <algorithm>
#include <cstdio>
#include <sstream>

namespace freqbias::svg {
namespace {

constexpr double kPanel = 360.0;
constexpr double kMargin = 30.0;
const char* const kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd"};

std::string escape(const std::string& text) {
  std::string out;
  for (char c : text) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      default: out += c;
    }
  }
  return out;
}

// "--" is not allowed inside XML comments.
std::string comment_safe(const std::string& text) {
  std::string out = text;
  for (std::size_t p = out.find("--"); p != std::string::npos; p = out.find("--", p)) {
    out.replace(p, 2, "- -");
  }
  return out;
}

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

}  // namespace

std::string scatter(std::span<const ScatterPanel> panels, const std::string& comment) {
  std::ostringstream out;
  const double width = static_cast<double>(panels.size()) * (kPanel + kMargin) + kMargin;
  const double height = kPanel + 2 * kMargin;
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << num(width) << "\" height=\""
      << num(height) << "\">\n";
  if (!comment.empty()) out << "<!-- " << comment_safe(comment) << " -->\n";
  for (std::size_t p = 0; p < panels.size(); ++p) {
    const auto& panel = panels[p];
    const double x0 = kMargin + static_cast<double>(p) * (kPanel + kMargin);
    const double y0 = kMargin;
    double xmin = 0, xmax = 1, ymin = 0, ymax = 1;
    if (!panel.xs.empty()) {
      const auto [xl, xh] = std::minmax_element(panel.xs.begin(), panel.xs.end());
      const auto [yl, yh] = std::minmax_element(panel.ys.begin(), panel.ys.end());
      xmin = *xl; xmax = *xh; ymin = *yl; ymax = *yh;
    }
    const double sx = xmax > xmin ? kPanel / (xmax - xmin) : 1.0;
    const double sy = ymax > ymin ? kPanel / (ymax - ymin) : 1.0;
    out << "<g>\n<rect x=\"" << num(x0) << "\" y=\"" << num(y0) << "\" width=\"" << num(kPanel)
        << "\" height=\"" << num(kPanel) << "\" fill=\"none\" stroke=\"#444\"/>\n";
    out << "<text x=\"" << num(x0) << "\" y=\"" << num(y0 - 8) << "\" font-size=\"14\">"
        << escape(panel.title) << "</text>\n";
    const std::size_t n = std::min(panel.xs.size(), panel.ys.size());
    for (std::size_t i = 0; i < n; ++i) {
      const double cx = x0 + (panel.xs[i] - xmin) * sx;
      const double cy = y0 + kPanel - (panel.ys[i] - ymin) * sy;
      out << "<circle cx=\"" << num(cx) << "\" cy=\"" << num(cy) << "\" r=\"1\" fill=\""
          << kColors[p % 4] << "\"/>\n";
    }
    out << "</g>\n";
  }
  out << "</svg>\n";
  return out.str();
}

std::string histogram(std::span<const HistogramSeries> series, double lo, double hi,
                      std::size_t bins, const std::string& comment) {
  std::ostringstream out;
  const double width = kPanel + 2 * kMargin;
  const double height = kPanel + 2 * kMargin + 20.0 * static_cast<double>(series.size());
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << num(width) << "\" height=\""
      << num(height) << "\">\n";
  if (!comment.empty()) out << "<!-- " << comment_safe(comment) << " -->\n";
  std::vector<std::vector<std::size_t>> counts(series.size(), std::vector<std::size_t>(bins, 0));
  std::size_t peak = 1;
  for (std::size_t s = 0; s < series.size(); ++s) {
    for (double v : series[s].values) {
      const double t = hi > lo ? (v - lo) / (hi - lo) : 0.0;
      auto b = static_cast<std::size_t>(std::clamp(t, 0.0, 1.0) * static_cast<double>(bins));
      if (b == bins) b = bins - 1;
      peak = std::max(peak, ++counts[s][b]);
    }
  }
  const double bw = kPanel / static_cast<double>(bins);
  out << "<rect x=\"" << num(kMargin) << "\" y=\"" << num(kMargin) << "\" width=\""
      << num(kPanel) << "\" height=\"" << num(kPanel)
      << "\" fill=\"none\" stroke=\"#444\"/>\n";
  for (std::size_t s = 0; s < series.size(); ++s) {
    for (std::size_t b = 0; b < bins; ++b) {
      const double h = kPanel * static_cast<double>(counts[s][b]) / static_cast<double>(peak);
      out << "<rect x=\"" << num(kMargin + static_cast<double>(b) * bw) << "\" y=\""
          << num(kMargin + kPanel - h) << "\" width=\"" << num(bw) << "\" height=\"" << num(h)
          << "\" fill=\"" << kColors[s % 4] << "\" fill-opacity=\"0.45\"/>\n";
    }
    out << "<text x=\"" << num(kMargin) << "\" y=\""
        << num(2 * kMargin + kPanel + 20.0 * static_cast<double>(s)) << "\" font-size=\"13\" fill=\""
        << kColors[s % 4] << "\">" << escape(series[s].name) << "</text>\n";
  }
  out << "</svg>\n";
  return out.str();
}

}  // namespace freqbias::svg
