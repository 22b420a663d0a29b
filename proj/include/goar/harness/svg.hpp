#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "goar/curve.hpp"

namespace goar::harness {

enum class PlotMetric {
    automatic,  // cumulative misclassification for goar curves, accuracy otherwise
    accuracy,
    cumulative_misclassified,
};

struct SvgOptions {
    std::string title;
    PlotMetric metric = PlotMetric::automatic;
};

// Standalone SVG line chart: one polyline per curve, level on x, a fraction in
// [0, 1] on y, legend keyed by method. Throws std::invalid_argument on an
// empty curve list or a curve without points.
std::string render_svg(const std::vector<DegradationCurve>& curves, const SvgOptions& options = {});

void emit_svg_plot(const std::vector<DegradationCurve>& curves, const std::filesystem::path& path,
                   const SvgOptions& options = {});

}  // namespace goar::harness
