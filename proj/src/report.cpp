#include "molcomm/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace molcomm {

namespace {

std::string num(double v) {
  if (std::isnan(v)) return "nan";
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

std::string fixed(double v, int digits = 2) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

}  // namespace

std::string to_csv(const ResultTable& table) {
  std::string out = kCsvHeader;
  out += '\n';
  for (const auto& r : table) {
    out += r.scheme + ',' + std::to_string(r.mem_depth) + ',' + num(r.rate) + ',' + num(r.tau) + ',' +
           num(r.tau_norm) + ',' + std::to_string(r.bits) + ',' + std::to_string(r.errors) + ',' + num(r.ber) + ',' +
           num(r.mean_stop_0) + ',' + num(r.mean_stop_1) + ',' + num(r.truncation_rate) + ',' +
           std::to_string(r.seed) + '\n';
  }
  return out;
}

std::string to_svg(const ResultTable& table, PlotAxis axis) {
  if (table.empty()) throw std::invalid_argument("to_svg: empty result table");
  constexpr double width = 640, height = 420, left = 70, right = 170, top = 20, bottom = 50;
  const double plot_w = width - left - right;
  const double plot_h = height - top - bottom;

  auto x_of = [axis](const ResultRow& r) { return axis == PlotAxis::rate ? r.rate : r.tau_norm; };
  // Zero-error points sit at half an error over the packet.
  auto ber_of = [](const ResultRow& r) { return r.ber > 0.0 ? r.ber : 0.5 / double(std::max<std::int64_t>(r.bits, 1)); };

  double xmin = x_of(table.front()), xmax = xmin, ymin = ber_of(table.front());
  for (const auto& r : table) {
    xmin = std::min(xmin, x_of(r));
    xmax = std::max(xmax, x_of(r));
    ymin = std::min(ymin, ber_of(r));
  }
  if (xmax == xmin) xmax = xmin + 1.0;
  const double decade_lo = std::floor(std::log10(ymin));
  const double decade_hi = 0.0;
  auto px = [&](double x) { return left + (x - xmin) / (xmax - xmin) * plot_w; };
  auto py = [&](double ber) { return top + (decade_hi - std::log10(ber)) / (decade_hi - decade_lo) * plot_h; };

  std::map<std::pair<std::string, int>, std::vector<std::pair<double, double>>> series;
  for (const auto& r : table) series[{r.scheme, r.mem_depth}].emplace_back(x_of(r), ber_of(r));

  static const char* palette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2"};
  std::string s;
  s += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + fixed(width, 0) + "\" height=\"" + fixed(height, 0) +
       "\" font-family=\"sans-serif\" font-size=\"11\">\n";
  s += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  s += "<rect x=\"" + fixed(left) + "\" y=\"" + fixed(top) + "\" width=\"" + fixed(plot_w) + "\" height=\"" +
       fixed(plot_h) + "\" fill=\"none\" stroke=\"black\"/>\n";
  for (double d = decade_lo; d <= decade_hi; d += 1.0) {
    const double y = py(std::pow(10.0, d));
    s += "<line x1=\"" + fixed(left) + "\" y1=\"" + fixed(y) + "\" x2=\"" + fixed(left + plot_w) + "\" y2=\"" +
         fixed(y) + "\" stroke=\"#dddddd\"/>\n";
    s += "<text x=\"" + fixed(left - 6) + "\" y=\"" + fixed(y + 4) + "\" text-anchor=\"end\">1e" + fixed(d, 0) +
         "</text>\n";
  }
  for (int i = 0; i <= 4; ++i) {
    const double x = xmin + (xmax - xmin) * i / 4.0;
    s += "<text x=\"" + fixed(px(x)) + "\" y=\"" + fixed(top + plot_h + 16) + "\" text-anchor=\"middle\">" +
         num(std::round(x * 1e4) / 1e4) + "</text>\n";
  }
  s += "<text x=\"" + fixed(left + plot_w / 2) + "\" y=\"" + fixed(height - 10) + "\" text-anchor=\"middle\">" +
       (axis == PlotAxis::rate ? "R (bps)" : "tau * R") + "</text>\n";
  s += "<text x=\"16\" y=\"" + fixed(top + plot_h / 2) + "\" transform=\"rotate(-90 16 " + fixed(top + plot_h / 2) +
       ")\" text-anchor=\"middle\">BER</text>\n";

  std::size_t colour = 0;
  double legend_y = top + 10;
  for (auto& [key, points] : series) {
    std::sort(points.begin(), points.end());
    const char* c = palette[colour++ % (sizeof palette / sizeof *palette)];
    s += "<polyline fill=\"none\" stroke=\"" + std::string(c) + "\" stroke-width=\"1.5\" points=\"";
    for (std::size_t i = 0; i < points.size(); ++i) {
      if (i) s += ' ';
      s += fixed(px(points[i].first)) + ',' + fixed(py(points[i].second));
    }
    s += "\"/>\n";
    for (const auto& p : points)
      s += "<circle cx=\"" + fixed(px(p.first)) + "\" cy=\"" + fixed(py(p.second)) + "\" r=\"2.5\" fill=\"" + c +
           "\"/>\n";
    const double lx = left + plot_w + 12;
    s += "<line x1=\"" + fixed(lx) + "\" y1=\"" + fixed(legend_y) + "\" x2=\"" + fixed(lx + 20) + "\" y2=\"" +
         fixed(legend_y) + "\" stroke=\"" + c + "\" stroke-width=\"1.5\"/>\n";
    s += "<text x=\"" + fixed(lx + 26) + "\" y=\"" + fixed(legend_y + 4) + "\">" + key.first +
         " B=" + std::to_string(key.second) + "</text>\n";
    legend_y += 16;
  }
  s += "</svg>\n";
  return s;
}

void emit_outputs(const ResultTable& table, const std::filesystem::path& csv_path,
                  const std::filesystem::path& svg_path, PlotAxis axis) {
  if (table.empty()) throw std::invalid_argument("emit_outputs: empty result table");
  const std::string svg = to_svg(table, axis);
  write_file(csv_path, to_csv(table));
  write_file(svg_path, svg);
}

}  // namespace molcomm
