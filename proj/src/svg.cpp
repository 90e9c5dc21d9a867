#include "dreval/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

namespace dreval::svg {

namespace {

constexpr const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string escape(const std::string& s) {
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

std::string text(double x, double y, const std::string& s, const std::string& extra = "") {
  return "<text x=\"" + num(x) + "\" y=\"" + num(y) + "\" font-family=\"sans-serif\" font-size=\"12\"" + extra +
         ">" + escape(s) + "</text>\n";
}

struct Range {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  void add(double v) {
    if (!std::isfinite(v)) return;
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  void finish() {
    if (!std::isfinite(lo)) lo = 0.0, hi = 1.0;
    if (hi - lo < 1e-12) lo -= 0.5, hi += 0.5;
    const double pad = 0.05 * (hi - lo);
    lo -= pad;
    hi += pad;
  }
};

// RGB blend: -1 blue, 0 white, +1 red.
std::string diverging(double v) {
  v = std::clamp(std::isfinite(v) ? v : 0.0, -1.0, 1.0);
  const auto ch = [](double t) { return static_cast<int>(std::lround(255.0 * t)); };
  int r, g, b;
  if (v >= 0) {
    r = 255, g = ch(1.0 - v), b = ch(1.0 - v);
  } else {
    r = ch(1.0 + v), g = ch(1.0 + v), b = 255;
  }
  char buf[16];
  std::snprintf(buf, sizeof buf, "#%02x%02x%02x", r, g, b);
  return buf;
}

}  // namespace

std::string render(const LineChart& chart) {
  const double width = 640, height = 420, left = 70, right = 170, top = 40, bottom = 55;
  const double pw = width - left - right, ph = height - top - bottom;

  Range xr, yr;
  for (const auto& s : chart.series) {
    for (double v : s.x) xr.add(v);
    for (double v : s.y) yr.add(v);
    for (double v : s.low) yr.add(v);
    for (double v : s.high) yr.add(v);
  }
  if (chart.marker_x) xr.add(*chart.marker_x);
  xr.finish();
  yr.finish();
  const auto px = [&](double x) { return left + (x - xr.lo) / (xr.hi - xr.lo) * pw; };
  const auto py = [&](double y) { return top + ph - (y - yr.lo) / (yr.hi - yr.lo) * ph; };

  std::string out = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + num(width) + "\" height=\"" +
                    num(height) + "\" viewBox=\"0 0 " + num(width) + " " + num(height) + "\">\n";
  out += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out += text(left, 22, chart.title, " font-weight=\"bold\"");
  out += "<rect x=\"" + num(left) + "\" y=\"" + num(top) + "\" width=\"" + num(pw) + "\" height=\"" + num(ph) +
         "\" fill=\"none\" stroke=\"#444\"/>\n";

  for (int t = 0; t <= 4; ++t) {
    const double yv = yr.lo + (yr.hi - yr.lo) * t / 4.0;
    out += "<line x1=\"" + num(left - 4) + "\" y1=\"" + num(py(yv)) + "\" x2=\"" + num(left) + "\" y2=\"" +
           num(py(yv)) + "\" stroke=\"#444\"/>\n";
    out += text(left - 8, py(yv) + 4, num(yv), " text-anchor=\"end\"");
  }
  std::vector<double> xticks;
  for (const auto& s : chart.series) xticks.insert(xticks.end(), s.x.begin(), s.x.end());
  std::sort(xticks.begin(), xticks.end());
  xticks.erase(std::unique(xticks.begin(), xticks.end()), xticks.end());
  for (double xv : xticks) {
    out += "<line x1=\"" + num(px(xv)) + "\" y1=\"" + num(top + ph) + "\" x2=\"" + num(px(xv)) + "\" y2=\"" +
           num(top + ph + 4) + "\" stroke=\"#444\"/>\n";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%g", xv);
    out += text(px(xv), top + ph + 18, buf, " text-anchor=\"middle\"");
  }
  out += text(left + pw / 2, height - 12, chart.x_label, " text-anchor=\"middle\"");
  out += "<text x=\"18\" y=\"" + num(top + ph / 2) + "\" font-family=\"sans-serif\" font-size=\"12\"" +
         " text-anchor=\"middle\" transform=\"rotate(-90 18 " + num(top + ph / 2) + ")\">" + escape(chart.y_label) +
         "</text>\n";

  if (chart.marker_x)
    out += "<line x1=\"" + num(px(*chart.marker_x)) + "\" y1=\"" + num(top) + "\" x2=\"" + num(px(*chart.marker_x)) +
           "\" y2=\"" + num(top + ph) + "\" stroke=\"#888\" stroke-dasharray=\"4 3\"/>\n";

  for (std::size_t s = 0; s < chart.series.size(); ++s) {
    const auto& series = chart.series[s];
    const std::string colour = kPalette[s % std::size(kPalette)];
    if (!series.low.empty() && series.low.size() == series.x.size() && series.high.size() == series.x.size()) {
      std::string pts;
      for (std::size_t i = 0; i < series.x.size(); ++i) pts += num(px(series.x[i])) + "," + num(py(series.high[i])) + " ";
      for (std::size_t i = series.x.size(); i-- > 0;) pts += num(px(series.x[i])) + "," + num(py(series.low[i])) + " ";
      out += "<polygon points=\"" + pts + "\" fill=\"" + colour + "\" fill-opacity=\"0.18\" stroke=\"none\"/>\n";
    }
    std::string pts;
    for (std::size_t i = 0; i < series.x.size(); ++i) pts += num(px(series.x[i])) + "," + num(py(series.y[i])) + " ";
    out += "<polyline points=\"" + pts + "\" fill=\"none\" stroke=\"" + colour + "\" stroke-width=\"2\"/>\n";
    for (std::size_t i = 0; i < series.x.size(); ++i)
      out += "<circle cx=\"" + num(px(series.x[i])) + "\" cy=\"" + num(py(series.y[i])) + "\" r=\"3\" fill=\"" +
             colour + "\"/>\n";
    const double ly = top + 14 + 18.0 * double(s);
    out += "<line x1=\"" + num(left + pw + 14) + "\" y1=\"" + num(ly - 4) + "\" x2=\"" + num(left + pw + 34) +
           "\" y2=\"" + num(ly - 4) + "\" stroke=\"" + colour + "\" stroke-width=\"2\"/>\n";
    out += text(left + pw + 40, ly, series.label);
  }
  out += "</svg>\n";
  return out;
}

std::string heatmap(const std::string& title, const std::vector<std::string>& labels, const MatrixXd& values) {
  require(values.rows() == values.cols() && static_cast<std::size_t>(values.rows()) == labels.size(),
          "heatmap: labels must match a square matrix");
  const double cell = 24, left = 190, top = 190;
  const double n = static_cast<double>(labels.size());
  const double width = left + cell * n + 20, height = top + cell * n + 20;

  std::string out = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + num(width) + "\" height=\"" +
                    num(height) + "\" viewBox=\"0 0 " + num(width) + " " + num(height) + "\">\n";
  out += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out += text(10, 22, title, " font-weight=\"bold\"");
  for (Index i = 0; i < values.rows(); ++i) {
    const double y = top + cell * double(i);
    out += text(left - 6, y + cell * 0.65, labels[static_cast<std::size_t>(i)], " text-anchor=\"end\"");
    const double x = left + cell * double(i) + cell * 0.65;
    out += "<text x=\"" + num(x) + "\" y=\"" + num(top - 6) + "\" font-family=\"sans-serif\" font-size=\"12\"" +
           " transform=\"rotate(-60 " + num(x) + " " + num(top - 6) + ")\">" +
           escape(labels[static_cast<std::size_t>(i)]) + "</text>\n";
    for (Index j = 0; j < values.cols(); ++j) {
      out += "<rect x=\"" + num(left + cell * double(j)) + "\" y=\"" + num(y) + "\" width=\"" + num(cell) +
             "\" height=\"" + num(cell) + "\" fill=\"" + diverging(values(i, j)) + "\" stroke=\"#fff\"><title>" +
             escape(labels[static_cast<std::size_t>(i)]) + " / " + escape(labels[static_cast<std::size_t>(j)]) +
             ": " + num(values(i, j)) + "</title></rect>\n";
    }
  }
  out += "</svg>\n";
  return out;
}

}  // namespace dreval::svg
