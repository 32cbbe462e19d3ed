#include "cmtf/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

namespace cmtf::svg {

namespace {

double quantile(const std::vector<double>& sorted, double p) {
  const double pos = p * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (pos - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      default: out += c;
    }
  }
  return out;
}

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};

constexpr double kWidth = 760, kPanelHeight = 300;
constexpr double kLeft = 70, kRight = 130, kTop = 34, kBottom = 40;

struct Axis {
  double lo, hi;
  bool log;
  double map(double v, double y0, double y1) const {
    const double t = log ? (std::log10(v) - lo) / (hi - lo) : (v - lo) / (hi - lo);
    return y1 - t * (y1 - y0);
  }
};

Axis make_axis(const BoxPanel& panel, const std::vector<std::vector<BoxStats>>& stats) {
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (const auto& row : stats)
    for (const auto& b : row) {
      if (b.count == 0) continue;
      lo = std::min(lo, b.whisker_lo);
      hi = std::max(hi, b.whisker_hi);
    }
  if (panel.reference_line) {
    lo = std::min(lo, *panel.reference_line);
    hi = std::max(hi, *panel.reference_line);
  }
  if (!std::isfinite(lo)) lo = 0, hi = 1;
  if (panel.log_y) {
    lo = std::floor(std::log10(std::max(lo, 1e-300)));
    hi = std::ceil(std::log10(std::max(hi, 1e-300)));
    if (hi <= lo) hi = lo + 1;
    return {lo, hi, true};
  }
  if (hi <= lo) hi = lo + 1;
  const double pad = 0.05 * (hi - lo);
  return {lo - pad, hi + pad, false};
}

}  // namespace

BoxStats box_stats(std::vector<double> values) {
  values.erase(std::remove_if(values.begin(), values.end(), [](double v) { return !std::isfinite(v); }),
               values.end());
  BoxStats b;
  b.count = static_cast<int>(values.size());
  if (values.empty()) return b;
  std::sort(values.begin(), values.end());
  b.q1 = quantile(values, 0.25);
  b.median = quantile(values, 0.5);
  b.q3 = quantile(values, 0.75);
  const double iqr = b.q3 - b.q1;
  const double lo_fence = b.q1 - 1.5 * iqr, hi_fence = b.q3 + 1.5 * iqr;
  b.whisker_lo = *std::find_if(values.begin(), values.end(), [&](double v) { return v >= lo_fence; });
  b.whisker_hi = *std::find_if(values.rbegin(), values.rend(), [&](double v) { return v <= hi_fence; });
  return b;
}

std::string render_boxplots(const std::vector<BoxPanel>& panels) {
  std::ostringstream os;
  const double height = kPanelHeight * static_cast<double>(panels.size());
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << height
     << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";

  for (std::size_t p = 0; p < panels.size(); ++p) {
    const auto& panel = panels[p];
    std::vector<std::vector<BoxStats>> stats;
    for (const auto& s : panel.series) {
      std::vector<BoxStats> row;
      for (const auto& g : s.groups) row.push_back(box_stats(g));
      stats.push_back(std::move(row));
    }
    const Axis axis = make_axis(panel, stats);
    const double y0 = kPanelHeight * static_cast<double>(p) + kTop;
    const double y1 = kPanelHeight * static_cast<double>(p + 1) - kBottom;
    const double x0 = kLeft, x1 = kWidth - kRight;

    os << "<text x=\"" << num((x0 + x1) / 2) << "\" y=\"" << num(y0 - 12)
       << "\" text-anchor=\"middle\" font-size=\"13\">" << escape(panel.title) << "</text>\n";
    os << "<text transform=\"translate(" << num(18) << "," << num((y0 + y1) / 2)
       << ") rotate(-90)\" text-anchor=\"middle\">" << escape(panel.y_label) << "</text>\n";
    os << "<rect x=\"" << num(x0) << "\" y=\"" << num(y0) << "\" width=\"" << num(x1 - x0) << "\" height=\""
       << num(y1 - y0) << "\" fill=\"none\" stroke=\"black\"/>\n";

    // y ticks
    if (axis.log) {
      for (int e = static_cast<int>(axis.lo); e <= static_cast<int>(axis.hi); ++e) {
        const double y = axis.map(std::pow(10.0, e), y0, y1);
        os << "<line x1=\"" << num(x0 - 4) << "\" y1=\"" << num(y) << "\" x2=\"" << num(x1) << "\" y2=\"" << num(y)
           << "\" stroke=\"#ddd\"/>\n";
        os << "<text x=\"" << num(x0 - 6) << "\" y=\"" << num(y + 4) << "\" text-anchor=\"end\">1e" << e
           << "</text>\n";
      }
    } else {
      for (int t = 0; t <= 4; ++t) {
        const double v = axis.lo + (axis.hi - axis.lo) * t / 4.0;
        const double y = axis.map(v, y0, y1);
        os << "<line x1=\"" << num(x0 - 4) << "\" y1=\"" << num(y) << "\" x2=\"" << num(x1) << "\" y2=\"" << num(y)
           << "\" stroke=\"#ddd\"/>\n";
        char buf[32];
        std::snprintf(buf, sizeof(buf), "%.3g", v);
        os << "<text x=\"" << num(x0 - 6) << "\" y=\"" << num(y + 4) << "\" text-anchor=\"end\">" << buf
           << "</text>\n";
      }
    }

    if (panel.reference_line) {
      const double y = axis.map(*panel.reference_line, y0, y1);
      os << "<line x1=\"" << num(x0) << "\" y1=\"" << num(y) << "\" x2=\"" << num(x1) << "\" y2=\"" << num(y)
         << "\" stroke=\"black\" stroke-dasharray=\"5,4\"/>\n";
    }

    const std::size_t ncat = std::max<std::size_t>(panel.categories.size(), 1);
    const double slot = (x1 - x0) / static_cast<double>(ncat);
    const double nser = static_cast<double>(std::max<std::size_t>(panel.series.size(), 1));
    const double box_w = 0.8 * slot / nser;
    for (std::size_t c = 0; c < panel.categories.size(); ++c) {
      const double cx = x0 + slot * (static_cast<double>(c) + 0.5);
      os << "<text x=\"" << num(cx) << "\" y=\"" << num(y1 + 16) << "\" text-anchor=\"middle\">"
         << escape(panel.categories[c]) << "</text>\n";
      for (std::size_t s = 0; s < panel.series.size(); ++s) {
        if (c >= stats[s].size()) continue;
        const BoxStats& b = stats[s][c];
        if (b.count == 0) continue;
        if (axis.log && b.whisker_lo <= 0) continue;
        const char* color = kPalette[s % std::size(kPalette)];
        const double left = cx - 0.4 * slot + box_w * static_cast<double>(s) + 0.1 * box_w;
        const double w = 0.8 * box_w, mid = left + w / 2;
        const double yq1 = axis.map(b.q1, y0, y1), yq3 = axis.map(b.q3, y0, y1);
        const double ymed = axis.map(b.median, y0, y1);
        const double ylo = axis.map(b.whisker_lo, y0, y1), yhi = axis.map(b.whisker_hi, y0, y1);
        os << "<line x1=\"" << num(mid) << "\" y1=\"" << num(ylo) << "\" x2=\"" << num(mid) << "\" y2=\""
           << num(yhi) << "\" stroke=\"" << color << "\"/>\n";
        os << "<rect x=\"" << num(left) << "\" y=\"" << num(yq3) << "\" width=\"" << num(w) << "\" height=\""
           << num(std::max(yq1 - yq3, 0.5)) << "\" fill=\"white\" stroke=\"" << color << "\"/>\n";
        os << "<line x1=\"" << num(left) << "\" y1=\"" << num(ymed) << "\" x2=\"" << num(left + w) << "\" y2=\""
           << num(ymed) << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n";
      }
    }

    for (std::size_t s = 0; s < panel.series.size(); ++s) {
      const double ly = y0 + 14 + 16 * static_cast<double>(s);
      os << "<rect x=\"" << num(x1 + 12) << "\" y=\"" << num(ly - 9) << "\" width=\"10\" height=\"10\" fill=\""
         << kPalette[s % std::size(kPalette)] << "\"/>\n";
      os << "<text x=\"" << num(x1 + 28) << "\" y=\"" << num(ly) << "\">" << escape(panel.series[s].label)
         << "</text>\n";
    }
  }
  os << "</svg>\n";
  return os.str();
}

}  // namespace cmtf::svg
