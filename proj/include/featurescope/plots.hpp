#pragma once

#include <string>
#include <vector>

#include "featurescope/dynamics.hpp"
#include "featurescope/outliers.hpp"
#include "featurescope/rsa.hpp"
#include "featurescope/sparsity.hpp"

namespace featurescope {

// Self-contained SVG documents. Coordinates are printed with two decimals, so
// identical inputs give identical bytes. Class colors follow class_set order
// through a fixed ten-color palette.

const std::string& palette_color(std::size_t class_index);

/// One polyline per curve with one vertex per scored layer.
std::string rsa_curve_svg(const std::vector<RsaCurve>& curves);

/// Layers as rows, checkpoints as columns; at most `max_points` points per
/// panel, taken at an even stride.
std::string dynamics_grid_svg(const DynamicsGrid& grid, std::size_t max_points = 400);

/// Bars for the first `components` ratios and a cumulative-share polyline.
std::string variance_svg(const VarianceProfile& v, std::size_t components = 20);

/// Macro-F1 against k on a log2 axis.
std::string pc_probe_svg(const std::vector<PcProbePoint>& curve);

/// Scatter of the projection: class="point" circles, class="outlier" circles
/// for outliers and one class="cluster" rect per selected rectangle.
std::string outlier_svg(const OutlierAnalysis& a);

}  // namespace featurescope
