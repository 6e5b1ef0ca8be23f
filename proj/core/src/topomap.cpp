#include "rsvp/topomap.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

#include "rsvp/errors.hpp"

namespace rsvp {

const ChannelLayout& standard_layout() {
  // 10-20 positions projected to the unit disc, nose up (+y).
  static const ChannelLayout layout = {
      {"Fp1", {-0.31, 0.95}}, {"Fp2", {0.31, 0.95}},   {"F7", {-0.81, 0.59}},
      {"F3", {-0.40, 0.52}},  {"Fz", {0.00, 0.50}},    {"F4", {0.40, 0.52}},
      {"F8", {0.81, 0.59}},   {"FC5", {-0.66, 0.27}},  {"FC1", {-0.22, 0.26}},
      {"FC2", {0.22, 0.26}},  {"FC6", {0.66, 0.27}},   {"T7", {-1.00, 0.00}},
      {"C3", {-0.50, 0.00}},  {"Cz", {0.00, 0.00}},    {"C4", {0.50, 0.00}},
      {"T8", {1.00, 0.00}},   {"TP9", {-0.95, -0.33}}, {"CP5", {-0.66, -0.27}},
      {"CP1", {-0.22, -0.26}},{"CP2", {0.22, -0.26}},  {"CP6", {0.66, -0.27}},
      {"TP10", {0.95, -0.33}},{"P7", {-0.81, -0.59}},  {"P3", {-0.40, -0.52}},
      {"Pz", {0.00, -0.50}},  {"P4", {0.40, -0.52}},   {"P8", {0.81, -0.59}},
      {"PO9", {-0.51, -0.86}},{"O1", {-0.31, -0.95}},  {"Oz", {0.00, -1.00}},
      {"O2", {0.31, -0.95}},  {"PO10", {0.51, -0.86}},
      // Periocular electrodes, drawn just outside the head circle.
      {"HEOG", {-1.15, 0.90}}, {"VEOG", {1.15, 0.90}},
  };
  return layout;
}

bool layout_position(const ChannelLayout& layout, const std::string& channel,
                     std::array<double, 2>& out) {
  for (const auto& [name, pos] : layout) {
    if (name == channel) {
      out = pos;
      return true;
    }
  }
  return false;
}

Eigen::MatrixXd topomap_grid(const Eigen::VectorXd& pattern,
                             const std::vector<std::string>& channels,
                             const ChannelLayout& layout, int resolution) {
  if (pattern.size() != static_cast<Eigen::Index>(channels.size())) {
    throw ParamError("topomap_grid: pattern and channel counts differ");
  }
  if (resolution < 2) throw ParamError("topomap_grid: resolution must be at least 2");

  std::vector<std::array<double, 2>> pos(channels.size());
  std::string missing;
  for (std::size_t i = 0; i < channels.size(); ++i) {
    if (!layout_position(layout, channels[i], pos[i])) {
      if (!missing.empty()) missing += ", ";
      missing += channels[i];
    }
  }
  if (!missing.empty()) {
    throw ParamError("topomap_grid: no layout position for: " + missing);
  }

  const double nan = std::numeric_limits<double>::quiet_NaN();
  Eigen::MatrixXd grid(resolution, resolution);

  for (int r = 0; r < resolution; ++r) {
    // Row 0 is the top of the head (+y).
    const double y = 1.0 - 2.0 * (r + 0.5) / resolution;
    for (int c = 0; c < resolution; ++c) {
      const double x = -1.0 + 2.0 * (c + 0.5) / resolution;
      if (x * x + y * y > 1.0) {
        grid(r, c) = nan;
        continue;
      }
      // Inverse-distance-squared interpolation.
      double wsum = 0.0, vsum = 0.0;
      bool exact = false;
      for (std::size_t i = 0; i < pos.size(); ++i) {
        const double d2 = (x - pos[i][0]) * (x - pos[i][0]) + (y - pos[i][1]) * (y - pos[i][1]);
        if (d2 < 1e-12) {
          grid(r, c) = pattern[static_cast<Eigen::Index>(i)];
          exact = true;
          break;
        }
        const double w = 1.0 / d2;
        wsum += w;
        vsum += w * pattern[static_cast<Eigen::Index>(i)];
      }
      if (!exact) grid(r, c) = vsum / wsum;
    }
  }
  return grid;
}

namespace {

void diverging_color(double t, int& red, int& green, int& blue) {
  // t in [-1, 1]: blue -> white -> red.
  t = std::clamp(t, -1.0, 1.0);
  if (t < 0.0) {
    red = static_cast<int>(std::lround(255.0 * (1.0 + t)));
    green = red;
    blue = 255;
  } else {
    red = 255;
    green = static_cast<int>(std::lround(255.0 * (1.0 - t)));
    blue = green;
  }
}

}  // namespace

std::string topomap_svg(const Eigen::VectorXd& pattern,
                        const std::vector<std::string>& channels,
                        const ChannelLayout& layout, int resolution) {
  const Eigen::MatrixXd grid = topomap_grid(pattern, channels, layout, resolution);
  const double peak = pattern.size() > 0 ? pattern.cwiseAbs().maxCoeff() : 0.0;

  const int size = 400;
  const double cell = static_cast<double>(size) / resolution;

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << size << "\" height=\""
      << size << "\" viewBox=\"0 0 " << size << ' ' << size << "\">\n";
  char buf[160];
  for (int r = 0; r < grid.rows(); ++r) {
    for (int c = 0; c < grid.cols(); ++c) {
      if (std::isnan(grid(r, c))) continue;
      int red, green, blue;
      diverging_color(peak > 0.0 ? grid(r, c) / peak : 0.0, red, green, blue);
      std::snprintf(buf, sizeof(buf),
                    "<rect x=\"%.2f\" y=\"%.2f\" width=\"%.2f\" height=\"%.2f\" "
                    "fill=\"rgb(%d,%d,%d)\"/>\n",
                    c * cell, r * cell, cell + 0.5, cell + 0.5, red, green, blue);
      svg << buf;
    }
  }
  // Head outline and electrode dots.
  std::snprintf(buf, sizeof(buf),
                "<circle cx=\"%d\" cy=\"%d\" r=\"%.1f\" fill=\"none\" stroke=\"black\" "
                "stroke-width=\"2\"/>\n",
                size / 2, size / 2, size / 2.0 - 1.0);
  svg << buf;
  for (const auto& ch : channels) {
    std::array<double, 2> p{};
    layout_position(layout, ch, p);
    const double px = (p[0] + 1.0) / 2.0 * size;
    const double py = (1.0 - p[1]) / 2.0 * size;
    std::snprintf(buf, sizeof(buf),
                  "<circle cx=\"%.1f\" cy=\"%.1f\" r=\"2.5\" fill=\"black\"/>\n", px, py);
    svg << buf;
  }
  svg << "</svg>\n";
  return svg.str();
}

void emit_topomap(const std::string& path, const Eigen::VectorXd& pattern,
                  const std::vector<std::string>& channels, const ChannelLayout& layout,
                  int resolution) {
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw Error("emit_topomap: cannot open '" + path + "'");
  f << topomap_svg(pattern, channels, layout, resolution);
  if (!f) throw Error("emit_topomap: write to '" + path + "' failed");
}

}  // namespace rsvp
