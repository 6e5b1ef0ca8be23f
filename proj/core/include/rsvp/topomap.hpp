#pragma once

#include <Eigen/Dense>
#include <array>
#include <string>
#include <utility>
#include <vector>

namespace rsvp {

/// 2-D scalp positions (unit head disc, nose up) keyed by channel name.
using ChannelLayout = std::vector<std::pair<std::string, std::array<double, 2>>>;

/// Built-in 10-20 layout covering the 32 standard cap electrodes plus the
/// HEOG/VEOG sites used for artifact rejection.
const ChannelLayout& standard_layout();

/// Position lookup; returns false when the channel is not in the layout.
bool layout_position(const ChannelLayout& layout, const std::string& channel,
                     std::array<double, 2>& out);

/// Interpolates a per-channel pattern onto a resolution x resolution grid over
/// the unit disc (inverse-distance weighting). Cells outside the head circle
/// are NaN. Throws ParamError listing any channel without a layout position.
Eigen::MatrixXd topomap_grid(const Eigen::VectorXd& pattern,
                             const std::vector<std::string>& channels,
                             const ChannelLayout& layout, int resolution);

/// Renders the interpolated map as an SVG document with a diverging color
/// scale centered at zero (blue negative, white zero, red positive).
std::string topomap_svg(const Eigen::VectorXd& pattern,
                        const std::vector<std::string>& channels,
                        const ChannelLayout& layout, int resolution = 48);

/// topomap_svg written to a file.
void emit_topomap(const std::string& path, const Eigen::VectorXd& pattern,
                  const std::vector<std::string>& channels,
                  const ChannelLayout& layout, int resolution = 48);

}  // namespace rsvp
