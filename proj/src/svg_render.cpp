// CSV + SVG artifact writers for the analysis products. The SVGs are plain
// static renderings: step lines for rank curves, a color grid with grey
// absent cells for heatmaps, a scatter with a dashed frontier for Pareto
// plots, and a labeled scatter for clusterings.

#include <cmath>
#include <cstdio>
#include <fstream>
#include <string>

#include "duqbench/analysis.hpp"
#include "duqbench/errors.hpp"
#include "duqbench/seeding.hpp"

namespace duqbench {

namespace {

constexpr int kW = 720;
constexpr int kH = 480;
constexpr int kMarginL = 64;
constexpr int kMarginR = 160;
constexpr int kMarginT = 28;
constexpr int kMarginB = 48;

std::string f2(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream os(path);
  if (!os) throw Error("cannot write " + path);
  return os;
}

const char* kPalette[] = {"#4477aa", "#ee6677", "#228833", "#ccbb44",
                          "#66ccee", "#aa3377", "#bbbbbb", "#000000",
                          "#e69f00", "#56b4e9", "#009e73", "#d55e00"};
constexpr int kPaletteSize = 12;

void svg_header(std::ofstream& os, const std::string& title) {
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kW
     << "\" height=\"" << kH << "\" viewBox=\"0 0 " << kW << " " << kH
     << "\">\n"
     << "<rect width=\"" << kW << "\" height=\"" << kH
     << "\" fill=\"white\"/>\n"
     << "<text x=\"" << kMarginL << "\" y=\"18\" font-family=\"sans-serif\" "
        "font-size=\"13\" font-weight=\"bold\">" << title << "</text>\n";
}

void svg_axes(std::ofstream& os, const std::string& xlabel,
              const std::string& ylabel) {
  const int x0 = kMarginL, x1 = kW - kMarginR;
  const int y0 = kH - kMarginB, y1 = kMarginT;
  os << "<line x1=\"" << x0 << "\" y1=\"" << y0 << "\" x2=\"" << x1
     << "\" y2=\"" << y0 << "\" stroke=\"black\"/>\n"
     << "<line x1=\"" << x0 << "\" y1=\"" << y0 << "\" x2=\"" << x0
     << "\" y2=\"" << y1 << "\" stroke=\"black\"/>\n"
     << "<text x=\"" << (x0 + x1) / 2 << "\" y=\"" << kH - 12
     << "\" font-family=\"sans-serif\" font-size=\"12\" "
        "text-anchor=\"middle\">" << xlabel << "</text>\n"
     << "<text x=\"16\" y=\"" << (y0 + y1) / 2
     << "\" font-family=\"sans-serif\" font-size=\"12\" "
        "text-anchor=\"middle\" transform=\"rotate(-90 16 "
     << (y0 + y1) / 2 << ")\">" << ylabel << "</text>\n";
}

}  // namespace

void write_rank_artifacts(const std::vector<RankCurve>& curves,
                          const std::string& basename) {
  {
    auto os = open_out(basename + ".csv");
    os << "method,r,proportion,auc\n";
    for (const auto& c : curves) {
      for (std::size_t r = 0; r < c.proportions.size(); ++r) {
        os << c.method << "," << (r + 1) << ","
           << format_double(c.proportions[r]) << "," << format_double(c.auc)
           << "\n";
      }
    }
  }
  auto os = open_out(basename + ".svg");
  svg_header(os, "Cumulative rank plot (proportion of scenarios at least top r by CRPS)");
  svg_axes(os, "rank r", "proportion");
  const int K = curves.empty() ? 1 : static_cast<int>(curves[0].proportions.size());
  const double x0 = kMarginL, x1 = kW - kMarginR;
  const double y0 = kH - kMarginB, y1 = kMarginT;
  auto px = [&](double r) { return x0 + (r - 1.0) / std::max(1, K - 1) * (x1 - x0); };
  auto py = [&](double p) { return y0 - p * (y0 - y1); };
  for (std::size_t ci = 0; ci < curves.size(); ++ci) {
    const auto& c = curves[ci];
    const char* color = kPalette[ci % kPaletteSize];
    std::string pts;
    double prev = 0.0;
    for (int r = 1; r <= K; ++r) {
      const double p = c.proportions[r - 1];
      if (r > 1) pts += f2(px(r)) + "," + f2(py(prev)) + " ";  // step line
      pts += f2(px(r)) + "," + f2(py(p)) + " ";
      prev = p;
    }
    os << "<polyline fill=\"none\" stroke=\"" << color
       << "\" stroke-width=\"1.6\" points=\"" << pts << "\"/>\n";
    const double ly = kMarginT + 14.0 * (ci + 1);
    os << "<line x1=\"" << kW - kMarginR + 8 << "\" y1=\"" << ly - 4
       << "\" x2=\"" << kW - kMarginR + 28 << "\" y2=\"" << ly - 4
       << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n"
       << "<text x=\"" << kW - kMarginR + 32 << "\" y=\"" << ly
       << "\" font-family=\"sans-serif\" font-size=\"10\">" << c.method
       << " (auc " << f2(c.auc) << ")</text>\n";
  }
  os << "</svg>\n";
}

void write_heatmap_artifacts(const HeatmapMatrix& hm,
                             const std::string& basename) {
  {
    auto os = open_out(basename + ".csv");
    os << "fname,method,crps_raw,crps_display,absent\n";
    for (std::size_t i = 0; i < hm.functions.size(); ++i) {
      for (std::size_t j = 0; j < hm.methods.size(); ++j) {
        const double raw = hm.raw(i, j);
        const bool absent = !std::isfinite(raw);
        os << hm.functions[i] << "," << hm.methods[j] << ","
           << (absent ? "NA" : format_double(raw)) << ","
           << (absent ? "NA" : format_double(hm.display(i, j))) << ","
           << (absent ? 1 : 0) << "\n";
      }
    }
  }
  auto os = open_out(basename + ".svg");
  svg_header(os, "Median CRPS heatmap (display clamped to [" +
                     format_double(hm.floor_value) + ", " +
                     format_double(hm.ceil_value) + "])");
  const int F = static_cast<int>(hm.functions.size());
  const int K = static_cast<int>(hm.methods.size());
  if (F == 0 || K == 0) {
    os << "</svg>\n";
    return;
  }
  const double gx = 150.0, gy = kMarginT + 10.0;
  const double cw = std::min(40.0, (kW - gx - 20.0) / K);
  const double ch = std::min(24.0, (kH - gy - 90.0) / F);
  const double lo = std::log10(hm.floor_value), hi = std::log10(hm.ceil_value);
  for (int i = 0; i < F; ++i) {
    for (int j = 0; j < K; ++j) {
      std::string fill = "#cccccc";  // absent
      const double v = hm.display(i, j);
      if (std::isfinite(v)) {
        double u = (std::log10(v) - lo) / (hi - lo);
        u = std::min(1.0, std::max(0.0, u));
        const int rch = static_cast<int>(255 * u + 60 * (1 - u));
        const int g = static_cast<int>(235 * (1 - u) + 40 * u);
        const int b = static_cast<int>(120 * (1 - u) + 40 * u);
        char buf[16];
        std::snprintf(buf, sizeof(buf), "#%02x%02x%02x", rch, g, b);
        fill = buf;
      }
      os << "<rect x=\"" << f2(gx + j * cw) << "\" y=\"" << f2(gy + i * ch)
         << "\" width=\"" << f2(cw - 1) << "\" height=\"" << f2(ch - 1)
         << "\" fill=\"" << fill << "\"/>\n";
    }
    os << "<text x=\"" << f2(gx - 4) << "\" y=\"" << f2(gy + i * ch + ch / 2 + 3)
       << "\" font-family=\"sans-serif\" font-size=\"9\" "
          "text-anchor=\"end\">" << hm.functions[i] << "</text>\n";
  }
  for (int j = 0; j < K; ++j) {
    const double tx = gx + j * cw + cw / 2;
    const double ty = gy + F * ch + 8;
    os << "<text x=\"" << f2(tx) << "\" y=\"" << f2(ty)
       << "\" font-family=\"sans-serif\" font-size=\"9\" "
          "text-anchor=\"end\" transform=\"rotate(-55 " << f2(tx) << " "
       << f2(ty) << ")\">" << hm.methods[j] << "</text>\n";
  }
  os << "</svg>\n";
}

void write_pareto_artifacts(const std::vector<ParetoPoint>& points,
                            const std::string& basename) {
  {
    auto os = open_out(basename + ".csv");
    os << "method,avg_rel_crps,avg_rel_runtime,dominated\n";
    for (const auto& p : points) {
      os << p.method << "," << format_double(p.avg_rel_crps) << ","
         << format_double(p.avg_rel_runtime) << "," << (p.dominated ? 1 : 0)
         << "\n";
    }
  }
  auto os = open_out(basename + ".svg");
  svg_header(os, "Pareto frontier: average relative CRPS vs relative runtime");
  svg_axes(os, "relative runtime (log scale)", "average relative CRPS");
  if (points.empty()) {
    os << "</svg>\n";
    return;
  }
  double xlo = 1e300, xhi = -1e300, ylo = 1e300, yhi = -1e300;
  for (const auto& p : points) {
    xlo = std::min(xlo, p.avg_rel_runtime);
    xhi = std::max(xhi, p.avg_rel_runtime);
    ylo = std::min(ylo, p.avg_rel_crps);
    yhi = std::max(yhi, p.avg_rel_crps);
  }
  xlo = std::log10(std::max(xlo, 1e-12));
  xhi = std::log10(std::max(xhi, 1e-12)) + 0.05;
  yhi += 0.05 * (yhi - ylo + 1.0);
  const double x0 = kMarginL, x1 = kW - kMarginR;
  const double y0 = kH - kMarginB, y1 = kMarginT;
  auto px = [&](double v) {
    const double u = (std::log10(v) - xlo) / std::max(1e-12, xhi - xlo);
    return x0 + u * (x1 - x0);
  };
  auto py = [&](double v) {
    const double u = (v - ylo) / std::max(1e-12, yhi - ylo);
    return y0 - u * (y0 - y1);
  };
  // dashed line through the frontier members (already sorted by runtime)
  std::string frontier_pts;
  for (const auto& p : points) {
    if (!p.dominated) {
      frontier_pts += f2(px(p.avg_rel_runtime)) + "," +
                      f2(py(p.avg_rel_crps)) + " ";
    }
  }
  os << "<polyline fill=\"none\" stroke=\"#888888\" stroke-width=\"1\" "
        "stroke-dasharray=\"5,4\" points=\"" << frontier_pts << "\"/>\n";
  int ci = 0;
  for (const auto& p : points) {
    const double cx = px(p.avg_rel_runtime), cy = py(p.avg_rel_crps);
    const char* color = kPalette[ci++ % kPaletteSize];
    if (p.dominated) {
      os << "<circle cx=\"" << f2(cx) << "\" cy=\"" << f2(cy)
         << "\" r=\"4\" fill=\"" << color << "\"/>\n";
    } else {
      os << "<polygon points=\"" << f2(cx) << "," << f2(cy - 5) << " "
         << f2(cx - 5) << "," << f2(cy + 4) << " " << f2(cx + 5) << ","
         << f2(cy + 4) << "\" fill=\"" << color << "\"/>\n";
    }
    os << "<text x=\"" << f2(cx + 6) << "\" y=\"" << f2(cy - 5)
       << "\" font-family=\"sans-serif\" font-size=\"9\">" << p.method
       << "</text>\n";
  }
  os << "</svg>\n";
}

void write_cluster_artifacts(const ClusterResult& cr,
                             const std::string& basename) {
  {
    auto os = open_out(basename + ".csv");
    os << "item,x,y,cluster\n";
    for (std::size_t i = 0; i < cr.items.size(); ++i) {
      os << cr.items[i] << "," << format_double(cr.coords(i, 0)) << ","
         << format_double(cr.coords(i, 1)) << "," << cr.labels[i] << "\n";
    }
  }
  auto os = open_out(basename + ".svg");
  svg_header(os, "Rank-based performance clustering (MDS embedding, DBSCAN labels)");
  svg_axes(os, "MDS 1", "MDS 2");
  if (cr.items.empty()) {
    os << "</svg>\n";
    return;
  }
  double xlo = cr.coords.col(0).minCoeff(), xhi = cr.coords.col(0).maxCoeff();
  double ylo = cr.coords.col(1).minCoeff(), yhi = cr.coords.col(1).maxCoeff();
  const double padx = 0.1 * (xhi - xlo + 1e-9);
  const double pady = 0.1 * (yhi - ylo + 1e-9);
  xlo -= padx; xhi += padx; ylo -= pady; yhi += pady;
  const double x0 = kMarginL, x1 = kW - kMarginR;
  const double y0 = kH - kMarginB, y1 = kMarginT;
  auto px = [&](double v) { return x0 + (v - xlo) / (xhi - xlo) * (x1 - x0); };
  auto py = [&](double v) { return y0 - (v - ylo) / (yhi - ylo) * (y0 - y1); };
  for (std::size_t i = 0; i < cr.items.size(); ++i) {
    const int lbl = cr.labels[i];
    const char* color = lbl < 0 ? "#999999" : kPalette[lbl % kPaletteSize];
    os << "<circle cx=\"" << f2(px(cr.coords(i, 0))) << "\" cy=\""
       << f2(py(cr.coords(i, 1))) << "\" r=\"4\" fill=\"" << color
       << "\"/>\n"
       << "<text x=\"" << f2(px(cr.coords(i, 0)) + 6) << "\" y=\""
       << f2(py(cr.coords(i, 1)) - 4)
       << "\" font-family=\"sans-serif\" font-size=\"9\">" << cr.items[i]
       << "</text>\n";
  }
  os << "</svg>\n";
}

}  // namespace duqbench
