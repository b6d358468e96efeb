#include "featurescope/plots.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

namespace featurescope {

namespace {

std::string num(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  std::string s = buf;
  if (s == "-0.00") s = "0.00";
  return s;
}

std::string escape(const std::string& text) {
  std::string out;
  for (char c : text) {
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

struct Range {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  void add(double v) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  // Degenerate or empty ranges get a unit span so the mapping stays finite.
  void settle() {
    if (!(lo <= hi)) {
      lo = 0.0;
      hi = 1.0;
    }
    if (hi - lo < 1e-12) {
      lo -= 0.5;
      hi += 0.5;
    }
  }
};

// Maps data coordinates into a pixel box, y growing upwards.
struct Frame {
  double x0, y0, w, h;
  Range xr, yr;
  double px(double x) const { return x0 + (x - xr.lo) / (xr.hi - xr.lo) * w; }
  double py(double y) const { return y0 + h - (y - yr.lo) / (yr.hi - yr.lo) * h; }
};

std::string open_svg(double width, double height, const std::string& title) {
  return "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + num(width) + "\" height=\"" + num(height) +
         "\" viewBox=\"0 0 " + num(width) + " " + num(height) + "\">\n<title>" + escape(title) +
         "</title>\n<rect x=\"0\" y=\"0\" width=\"" + num(width) + "\" height=\"" + num(height) +
         "\" fill=\"#ffffff\"/>\n";
}

std::string text(double x, double y, const std::string& s, const char* anchor = "middle", int size = 12) {
  return "<text x=\"" + num(x) + "\" y=\"" + num(y) + "\" font-family=\"sans-serif\" font-size=\"" +
         std::to_string(size) + "\" text-anchor=\"" + anchor + "\">" + escape(s) + "</text>\n";
}

std::string axes(const Frame& f, const std::string& xlabel, const std::string& ylabel) {
  std::string s = "<g class=\"axes\" stroke=\"#333333\" fill=\"none\">\n";
  s += "<line x1=\"" + num(f.x0) + "\" y1=\"" + num(f.y0 + f.h) + "\" x2=\"" + num(f.x0 + f.w) + "\" y2=\"" +
       num(f.y0 + f.h) + "\"/>\n";
  s += "<line x1=\"" + num(f.x0) + "\" y1=\"" + num(f.y0) + "\" x2=\"" + num(f.x0) + "\" y2=\"" + num(f.y0 + f.h) +
       "\"/>\n</g>\n";
  s += text(f.x0 + f.w / 2, f.y0 + f.h + 36, xlabel);
  s += text(f.x0 - 44, f.y0 + f.h / 2, ylabel);
  s += text(f.x0, f.y0 + f.h + 16, num(f.xr.lo), "start", 10);
  s += text(f.x0 + f.w, f.y0 + f.h + 16, num(f.xr.hi), "end", 10);
  s += text(f.x0 - 4, f.y0 + f.h, num(f.yr.lo), "end", 10);
  s += text(f.x0 - 4, f.y0 + 10, num(f.yr.hi), "end", 10);
  return s;
}

std::string polyline(const std::vector<std::pair<double, double>>& pts, const std::string& color,
                     const std::string& cls) {
  std::string s = "<polyline class=\"" + cls + "\" fill=\"none\" stroke=\"" + color + "\" stroke-width=\"2\" points=\"";
  for (std::size_t i = 0; i < pts.size(); ++i) {
    if (i) s += ' ';
    s += num(pts[i].first) + "," + num(pts[i].second);
  }
  return s + "\"/>\n";
}

std::string circle(double x, double y, double r, const std::string& color, const std::string& cls) {
  return "<circle class=\"" + cls + "\" cx=\"" + num(x) + "\" cy=\"" + num(y) + "\" r=\"" + num(r) + "\" fill=\"" +
         color + "\"/>\n";
}

}  // namespace

const std::string& palette_color(std::size_t class_index) {
  static const std::vector<std::string> colors = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
                                                  "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};
  return colors[class_index % colors.size()];
}

std::string rsa_curve_svg(const std::vector<RsaCurve>& curves) {
  Frame f{70, 30, 520, 300, {}, {}};
  for (const auto& c : curves) {
    for (const auto& l : c.layers) {
      f.xr.add(l.layer);
      if (l.score) f.yr.add(l.score->value);
    }
  }
  f.yr.add(1.0);
  f.xr.settle();
  f.yr.settle();
  std::string s = open_svg(760, 400, "RSA score by layer");
  s += axes(f, "layer", "RSA");
  for (std::size_t i = 0; i < curves.size(); ++i) {
    const auto& c = curves[i];
    std::vector<std::pair<double, double>> pts;
    for (const auto& l : c.layers) {
      if (l.score) pts.emplace_back(f.px(l.layer), f.py(l.score->value));
    }
    s += polyline(pts, palette_color(i), "rsa");
    const std::string name = c.run_a + "@" + c.checkpoint_a + " vs " + c.run_b + "@" + c.checkpoint_b;
    s += "<rect x=\"600\" y=\"" + num(40 + 18.0 * static_cast<double>(i)) + "\" width=\"10\" height=\"10\" fill=\"" +
         palette_color(i) + "\"/>\n";
    s += text(614, 49 + 18.0 * static_cast<double>(i), name, "start", 10);
  }
  return s + "</svg>\n";
}

std::string dynamics_grid_svg(const DynamicsGrid& grid, std::size_t max_points) {
  const double panel = 90.0, gap = 8.0, left = 60.0, top = 40.0;
  const double width = left + static_cast<double>(grid.checkpoints.size()) * (panel + gap) + 20;
  const double height = top + static_cast<double>(grid.layers.size()) * (panel + gap) + 20;
  std::string s = open_svg(width, height, "Feature dynamics " + grid.run_id + " (" + grid.split + ")");
  for (std::size_t ci = 0; ci < grid.checkpoints.size(); ++ci) {
    s += text(left + static_cast<double>(ci) * (panel + gap) + panel / 2, top - 10, grid.checkpoints[ci], "middle", 10);
  }
  for (std::size_t li = 0; li < grid.layers.size(); ++li) {
    const double y0 = top + static_cast<double>(li) * (panel + gap);
    s += text(left - 8, y0 + panel / 2, "L" + std::to_string(grid.layers[li]), "end", 10);
    for (std::size_t ci = 0; ci < grid.checkpoints.size(); ++ci) {
      const double x0 = left + static_cast<double>(ci) * (panel + gap);
      const auto& cell = grid.cell(li, ci);
      s += "<g class=\"panel\">\n<rect x=\"" + num(x0) + "\" y=\"" + num(y0) + "\" width=\"" + num(panel) +
           "\" height=\"" + num(panel) + "\" fill=\"none\" stroke=\"#cccccc\"/>\n";
      if (cell.projection) {
        const Matrix& p = cell.projection->points;
        Frame f{x0 + 4, y0 + 4, panel - 8, panel - 8, {}, {}};
        for (Eigen::Index r = 0; r < p.rows(); ++r) {
          f.xr.add(p(r, 0));
          f.yr.add(p(r, 1));
        }
        f.xr.settle();
        f.yr.settle();
        const auto n = static_cast<std::size_t>(p.rows());
        const std::size_t stride = std::max<std::size_t>(1, (n + max_points - 1) / max_points);
        for (std::size_t r = 0; r < n; r += stride) {
          const auto ri = static_cast<Eigen::Index>(r);
          s += circle(f.px(p(ri, 0)), f.py(p(ri, 1)), 1.2, palette_color(cell.projection->labels.class_index(r)), "point");
        }
        s += text(x0 + panel - 3, y0 + panel - 4, num(*cell.score), "end", 8);
      } else {
        s += text(x0 + panel / 2, y0 + panel / 2, "failed", "middle", 9);
      }
      s += "</g>\n";
    }
  }
  return s + "</svg>\n";
}

std::string variance_svg(const VarianceProfile& v, std::size_t components) {
  const std::size_t n = std::min(components, v.ratios.size());
  Frame f{70, 30, 520, 300, {}, {}};
  f.xr = {0.0, static_cast<double>(std::max<std::size_t>(n, 1))};
  f.yr = {0.0, 1.0};
  std::string s = open_svg(640, 400, "Explained variance (top-2 share " + num(v.top2_share) + ")");
  s += axes(f, "component", "variance share");
  const double bw = f.w / static_cast<double>(std::max<std::size_t>(n, 1));
  std::vector<std::pair<double, double>> cum;
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double top = f.py(v.ratios[i]);
    s += "<rect class=\"bar\" x=\"" + num(f.px(static_cast<double>(i)) + 1) + "\" y=\"" + num(top) + "\" width=\"" +
         num(bw - 2) + "\" height=\"" + num(f.y0 + f.h - top) + "\" fill=\"" + palette_color(0) + "\"/>\n";
    acc += v.ratios[i];
    cum.emplace_back(f.px(static_cast<double>(i) + 0.5), f.py(acc));
  }
  s += polyline(cum, palette_color(3), "cumulative");
  return s + "</svg>\n";
}

std::string pc_probe_svg(const std::vector<PcProbePoint>& curve) {
  Frame f{70, 30, 520, 300, {}, {}};
  for (const auto& p : curve) f.xr.add(std::log2(static_cast<double>(p.k)));
  f.xr.settle();
  f.yr = {0.0, 1.0};
  std::string s = open_svg(640, 400, "Probe macro-F1 on the bottom-k principal subspace");
  s += axes(f, "log2 k", "macro-F1");
  std::vector<std::pair<double, double>> pts;
  for (const auto& p : curve) pts.emplace_back(f.px(std::log2(static_cast<double>(p.k))), f.py(p.metrics.macro_f1));
  s += polyline(pts, palette_color(0), "pcprobe");
  for (const auto& [x, y] : pts) s += circle(x, y, 3, palette_color(0), "vertex");
  return s + "</svg>\n";
}

std::string outlier_svg(const OutlierAnalysis& a) {
  Frame f{70, 30, 520, 400, {}, {}};
  for (Eigen::Index r = 0; r < a.points.rows(); ++r) {
    f.xr.add(a.points(r, 0));
    f.yr.add(a.points(r, 1));
  }
  for (const auto& rect : a.outliers.rectangles_used) {
    f.xr.add(rect.x_lo);
    f.xr.add(rect.x_hi);
    f.yr.add(rect.y_lo);
    f.yr.add(rect.y_hi);
  }
  f.xr.settle();
  f.yr.settle();
  std::string s = open_svg(760, 500, "Outliers " + a.run_id + " L" + std::to_string(a.layer) + " " + a.checkpoint);
  s += axes(f, "PC1", "PC2");
  std::vector<bool> is_outlier(static_cast<std::size_t>(a.points.rows()), false);
  for (std::size_t i : a.outliers.sample_indices) is_outlier[i] = true;
  for (Eigen::Index r = 0; r < a.points.rows(); ++r) {
    if (is_outlier[static_cast<std::size_t>(r)]) continue;
    s += circle(f.px(a.points(r, 0)), f.py(a.points(r, 1)), 1.5,
                palette_color(a.labels.class_index(static_cast<std::size_t>(r))), "point");
  }
  for (const auto& rect : a.outliers.rectangles_used) {
    const double x = f.px(rect.x_lo), y = f.py(rect.y_hi);
    s += "<rect class=\"cluster\" x=\"" + num(x) + "\" y=\"" + num(y) + "\" width=\"" + num(f.px(rect.x_hi) - x) +
         "\" height=\"" + num(f.py(rect.y_lo) - y) + "\" fill=\"none\" stroke=\"#d62728\" stroke-width=\"1.5\"/>\n";
  }
  for (std::size_t i : a.outliers.sample_indices) {
    const auto r = static_cast<Eigen::Index>(i);
    s += "<circle class=\"outlier\" cx=\"" + num(f.px(a.points(r, 0))) + "\" cy=\"" + num(f.py(a.points(r, 1))) +
         "\" r=\"4.00\" fill=\"none\" stroke=\"#000000\" stroke-width=\"1.5\"/>\n";
  }
  const auto& classes = a.labels.class_set();
  for (std::size_t c = 0; c < classes.size(); ++c) {
    s += "<rect x=\"600\" y=\"" + num(40 + 18.0 * static_cast<double>(c)) + "\" width=\"10\" height=\"10\" fill=\"" +
         palette_color(c) + "\"/>\n";
    s += text(614, 49 + 18.0 * static_cast<double>(c), classes[c], "start", 10);
  }
  return s + "</svg>\n";
}

}  // namespace featurescope
