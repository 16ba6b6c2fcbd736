#include "monolab/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>

namespace monolab::svg {

namespace {

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                          "#ff7f0e", "#8c564b"};

std::string pick_color(const std::string& requested, size_t index) {
  if (!requested.empty()) return requested;
  return kPalette[index % (sizeof(kPalette) / sizeof(kPalette[0]))];
}

std::string fmt(double v, int precision = 2) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", precision, v);
  return buf;
}

std::string escape(const std::string& text) {
  std::string out;
  out.reserve(text.size());
  for (char c : text) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      default: out += c;
    }
  }
  return out;
}

void require_finite(double v) {
  if (!std::isfinite(v)) throw std::invalid_argument("svg: non-finite value");
}

std::string document_open(double width, double height) {
  return "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + fmt(width, 0) +
         "\" height=\"" + fmt(height, 0) + "\" viewBox=\"0 0 " + fmt(width, 0) +
         " " + fmt(height, 0) + "\">\n" +
         "<rect width=\"100%\" height=\"100%\" fill=\"#ffffff\"/>\n";
}

std::string text_at(double x, double y, const std::string& content,
                    const std::string& extra = "") {
  return "<text x=\"" + fmt(x) + "\" y=\"" + fmt(y) +
         "\" font-family=\"sans-serif\" font-size=\"12\"" +
         (extra.empty() ? "" : " " + extra) + ">" + escape(content) + "</text>\n";
}

// Blue-white-red ramp over t in [-1, 1].
std::string diverging_color(double t) {
  t = std::clamp(t, -1.0, 1.0);
  int r, g, b;
  if (t >= 0.0) {
    r = static_cast<int>(std::lround(255.0 + t * (178.0 - 255.0)));
    g = static_cast<int>(std::lround(255.0 + t * (24.0 - 255.0)));
    b = static_cast<int>(std::lround(255.0 + t * (43.0 - 255.0)));
  } else {
    r = static_cast<int>(std::lround(255.0 - t * (33.0 - 255.0)));
    g = static_cast<int>(std::lround(255.0 - t * (102.0 - 255.0)));
    b = static_cast<int>(std::lround(255.0 - t * (172.0 - 255.0)));
  }
  char buf[32];
  std::snprintf(buf, sizeof(buf), "rgb(%d,%d,%d)", r, g, b);
  return buf;
}

struct Range {
  double lo, hi;
  double span() const { return hi - lo; }
};

Range padded_range(double lo, double hi) {
  if (lo == hi) {
    lo -= 0.5;
    hi += 0.5;
  }
  const double pad = 0.05 * (hi - lo);
  return {lo - pad, hi + pad};
}

// Frame, five ticks per axis, and the axis captions shared by both charts.
std::string axes(double left, double top, double width, double height,
                 const Range& xr, const Range& yr, const std::string& x_label,
                 const std::string& y_label) {
  std::string out;
  out += "<rect x=\"" + fmt(left) + "\" y=\"" + fmt(top) + "\" width=\"" +
         fmt(width) + "\" height=\"" + fmt(height) +
         "\" fill=\"none\" stroke=\"#333333\"/>\n";
  for (int i = 0; i <= 4; ++i) {
    const double f = i / 4.0;
    const double xv = xr.lo + f * xr.span();
    const double yv = yr.lo + f * yr.span();
    const double px = left + f * width;
    const double py = top + height - f * height;
    out += "<line x1=\"" + fmt(px) + "\" y1=\"" + fmt(top + height) + "\" x2=\"" +
           fmt(px) + "\" y2=\"" + fmt(top + height + 4) +
           "\" stroke=\"#333333\"/>\n";
    out += text_at(px - 12, top + height + 18, fmt(xv, 3));
    out += "<line x1=\"" + fmt(left - 4) + "\" y1=\"" + fmt(py) + "\" x2=\"" +
           fmt(left) + "\" y2=\"" + fmt(py) + "\" stroke=\"#333333\"/>\n";
    out += text_at(left - 46, py + 4, fmt(yv, 3));
  }
  out += text_at(left + width / 2 - 20, top + height + 36, x_label);
  out += text_at(12, top - 8, y_label);
  return out;
}

}  // namespace

std::string heatmap(const Eigen::MatrixXd& values, const std::string& title) {
  if (values.size() == 0) throw std::invalid_argument("svg: empty heatmap");
  for (Eigen::Index i = 0; i < values.size(); ++i) require_finite(values(i));

  const double vmax = std::max(values.cwiseAbs().maxCoeff(), 1e-12);
  const double cell = std::min(24.0, 480.0 / static_cast<double>(values.cols()));
  const double left = 20.0;
  const double top = 40.0;
  const double grid_w = cell * static_cast<double>(values.cols());
  const double grid_h = cell * static_cast<double>(values.rows());

  std::string out = document_open(grid_w + 40.0, grid_h + 80.0);
  out += text_at(left, 24.0, title, "font-size=\"14\"");
  for (Eigen::Index r = 0; r < values.rows(); ++r) {
    for (Eigen::Index c = 0; c < values.cols(); ++c) {
      out += "<rect x=\"" + fmt(left + cell * static_cast<double>(c)) + "\" y=\"" +
             fmt(top + cell * static_cast<double>(r)) + "\" width=\"" + fmt(cell) +
             "\" height=\"" + fmt(cell) + "\" fill=\"" +
             diverging_color(values(r, c) / vmax) + "\"/>\n";
    }
  }
  out += text_at(left, top + grid_h + 20.0,
                 "range [" + fmt(values.minCoeff(), 3) + ", " +
                     fmt(values.maxCoeff(), 3) + "]");
  out += "</svg>\n";
  return out;
}

std::string line_chart(const std::vector<LineSeries>& series, const std::string& title,
                       const std::string& x_label, const std::string& y_label) {
  if (series.empty()) throw std::invalid_argument("svg: no line series");
  double xlo = 0.0, xhi = 0.0, ylo = 0.0, yhi = 0.0;
  bool first = true;
  for (const LineSeries& s : series) {
    if (s.x.empty() || s.x.size() != s.y.size())
      throw std::invalid_argument("svg: bad line series");
    for (size_t i = 0; i < s.x.size(); ++i) {
      require_finite(s.x[i]);
      require_finite(s.y[i]);
      if (first) {
        xlo = xhi = s.x[i];
        ylo = yhi = s.y[i];
        first = false;
      }
      xlo = std::min(xlo, s.x[i]);
      xhi = std::max(xhi, s.x[i]);
      ylo = std::min(ylo, s.y[i]);
      yhi = std::max(yhi, s.y[i]);
    }
  }
  const Range xr = padded_range(xlo, xhi);
  const Range yr = padded_range(ylo, yhi);

  const double left = 64.0, top = 44.0, width = 460.0, height = 300.0;
  std::string out = document_open(left + width + 40.0, top + height + 60.0);
  out += text_at(left, 24.0, title, "font-size=\"14\"");
  out += axes(left, top, width, height, xr, yr, x_label, y_label);
  for (size_t si = 0; si < series.size(); ++si) {
    const LineSeries& s = series[si];
    const std::string color = pick_color(s.color, si);
    std::string points;
    for (size_t i = 0; i < s.x.size(); ++i) {
      const double px = left + (s.x[i] - xr.lo) / xr.span() * width;
      const double py = top + height - (s.y[i] - yr.lo) / yr.span() * height;
      points += fmt(px) + "," + fmt(py) + " ";
    }
    out += "<polyline fill=\"none\" stroke=\"" + color +
           "\" stroke-width=\"1.5\" points=\"" + points + "\"/>\n";
    out += "<rect x=\"" + fmt(left + width - 130.0) + "\" y=\"" +
           fmt(top + 8.0 + 16.0 * static_cast<double>(si)) +
           "\" width=\"10\" height=\"10\" fill=\"" + color + "\"/>\n";
    out += text_at(left + width - 114.0, top + 17.0 + 16.0 * static_cast<double>(si),
                   s.label);
  }
  out += "</svg>\n";
  return out;
}

std::string bar_chart(const std::vector<BarSeries>& series,
                      const std::vector<std::string>& group_labels,
                      const std::string& title, const std::string& y_label) {
  if (series.empty() || group_labels.empty())
    throw std::invalid_argument("svg: empty bar chart");
  double ylo = 0.0, yhi = 0.0;
  for (const BarSeries& s : series) {
    if (s.values.size() != group_labels.size())
      throw std::invalid_argument("svg: bar series/group size mismatch");
    for (double v : s.values) {
      require_finite(v);
      ylo = std::min(ylo, v);
      yhi = std::max(yhi, v);
    }
  }
  const Range yr = padded_range(ylo, yhi);

  const double left = 64.0, top = 44.0, width = 460.0, height = 300.0;
  const size_t groups = group_labels.size();
  const double group_w = width / static_cast<double>(groups);
  const double bar_w = 0.8 * group_w / static_cast<double>(series.size());
  const double baseline = top + height - (0.0 - yr.lo) / yr.span() * height;

  std::string out = document_open(left + width + 40.0, top + height + 60.0);
  out += text_at(left, 24.0, title, "font-size=\"14\"");
  out += axes(left, top, width, height, {0.0, static_cast<double>(groups)}, yr, "",
              y_label);
  for (size_t si = 0; si < series.size(); ++si) {
    const std::string color = pick_color(series[si].color, si);
    for (size_t g = 0; g < groups; ++g) {
      const double v = series[si].values[g];
      const double px = left + group_w * (static_cast<double>(g) + 0.1) +
                        bar_w * static_cast<double>(si);
      const double py = top + height - (v - yr.lo) / yr.span() * height;
      out += "<rect x=\"" + fmt(px) + "\" y=\"" + fmt(std::min(py, baseline)) +
             "\" width=\"" + fmt(bar_w) + "\" height=\"" +
             fmt(std::abs(baseline - py)) + "\" fill=\"" + color + "\"/>\n";
    }
    out += "<rect x=\"" + fmt(left + width - 130.0) + "\" y=\"" +
           fmt(top + 8.0 + 16.0 * static_cast<double>(si)) +
           "\" width=\"10\" height=\"10\" fill=\"" + color + "\"/>\n";
    out += text_at(left + width - 114.0, top + 17.0 + 16.0 * static_cast<double>(si),
                   series[si].label);
  }
  for (size_t g = 0; g < groups; ++g)
    out += text_at(left + group_w * (static_cast<double>(g) + 0.25),
                   top + height + 18.0, group_labels[g]);
  out += "</svg>\n";
  return out;
}

}  // namespace monolab::svg
