#include "goar/harness/svg.hpp"

#include <algorithm>
#include <cstdio>
#include <set>
#include <stdexcept>

#include "goar/harness/report.hpp"

namespace goar::harness {

namespace {

constexpr double kWidth = 760, kHeight = 440;
constexpr double kLeft = 64, kRight = 210, kTop = 44, kBottom = 56;

const char* const kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd",
                                "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

std::string tick(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3g", v);
    return buf;
}

std::string escape(const std::string& text) {
    std::string out;
    for (char ch : text) {
        switch (ch) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            case '\'': out += "&apos;"; break;
            default: out += ch;
        }
    }
    return out;
}

bool uses_cumulative(const DegradationCurve& c, PlotMetric metric) {
    if (metric == PlotMetric::automatic) return c.strategy.rfind("goar", 0) == 0;
    return metric == PlotMetric::cumulative_misclassified;
}

}  // namespace

std::string render_svg(const std::vector<DegradationCurve>& curves, const SvgOptions& options) {
    if (curves.empty()) throw std::invalid_argument("render_svg: no curves to plot");
    double x_min = curves.front().points.empty() ? 0.0 : curves.front().points.front().level, x_max = x_min;
    std::set<std::string> strategies;
    std::set<bool> metrics;
    for (const auto& c : curves) {
        if (c.points.empty()) throw std::invalid_argument("render_svg: curve '" + c.method + "' has no points");
        for (const auto& p : c.points) {
            x_min = std::min(x_min, p.level);
            x_max = std::max(x_max, p.level);
        }
        strategies.insert(c.strategy);
        metrics.insert(uses_cumulative(c, options.metric));
    }
    if (x_max == x_min) {
        x_min -= 0.5;
        x_max += 0.5;
    }
    const double plot_w = kWidth - kLeft - kRight, plot_h = kHeight - kTop - kBottom;
    auto sx = [&](double x) { return kLeft + (x - x_min) / (x_max - x_min) * plot_w; };
    auto sy = [&](double y) { return kTop + (1.0 - std::clamp(y, 0.0, 1.0)) * plot_h; };

    const std::string y_label = metrics.size() > 1 ? "accuracy / cumulative misclassified"
                                : *metrics.begin() ? "cumulative misclassified"
                                                   : "accuracy";
    std::string title = options.title;
    if (title.empty()) {
        for (const auto& s : strategies) title += (title.empty() ? "" : ", ") + s;
    }

    std::string svg;
    svg += "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
    svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + num(kWidth) + "\" height=\"" + num(kHeight) +
           "\" viewBox=\"0 0 " + num(kWidth) + " " + num(kHeight) + "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    svg += "<rect x=\"0\" y=\"0\" width=\"" + num(kWidth) + "\" height=\"" + num(kHeight) + "\" fill=\"white\"/>\n";
    svg += "<text x=\"" + num(kLeft + plot_w / 2) + "\" y=\"24\" text-anchor=\"middle\" font-size=\"14\">" + escape(title) +
           "</text>\n";

    // Axes, grid and ticks.
    svg += "<g stroke=\"#333\" stroke-width=\"1\">\n";
    svg += "<line x1=\"" + num(kLeft) + "\" y1=\"" + num(kTop + plot_h) + "\" x2=\"" + num(kLeft + plot_w) + "\" y2=\"" +
           num(kTop + plot_h) + "\"/>\n";
    svg += "<line x1=\"" + num(kLeft) + "\" y1=\"" + num(kTop) + "\" x2=\"" + num(kLeft) + "\" y2=\"" + num(kTop + plot_h) +
           "\"/>\n</g>\n";
    svg += "<g fill=\"#333\">\n";
    for (int i = 0; i <= 4; ++i) {
        const double y = i / 4.0;
        svg += "<line x1=\"" + num(kLeft) + "\" y1=\"" + num(sy(y)) + "\" x2=\"" + num(kLeft + plot_w) + "\" y2=\"" +
               num(sy(y)) + "\" stroke=\"#ddd\"/>\n";
        svg += "<text x=\"" + num(kLeft - 6) + "\" y=\"" + num(sy(y) + 4) + "\" text-anchor=\"end\">" + tick(y) + "</text>\n";
        const double x = x_min + (x_max - x_min) * i / 4.0;
        svg += "<text x=\"" + num(sx(x)) + "\" y=\"" + num(kTop + plot_h + 18) + "\" text-anchor=\"middle\">" + tick(x) +
               "</text>\n";
    }
    svg += "<text x=\"" + num(kLeft + plot_w / 2) + "\" y=\"" + num(kHeight - 14) + "\" text-anchor=\"middle\">level</text>\n";
    svg += "<text x=\"16\" y=\"" + num(kTop + plot_h / 2) + "\" text-anchor=\"middle\" transform=\"rotate(-90 16 " +
           num(kTop + plot_h / 2) + ")\">" + escape(y_label) + "</text>\n</g>\n";

    // Curves and legend.
    const bool qualify = strategies.size() > 1;
    for (std::size_t i = 0; i < curves.size(); ++i) {
        const auto& c = curves[i];
        const std::string color = kPalette[i % std::size(kPalette)];
        const bool cum = uses_cumulative(c, options.metric);
        std::string pts;
        for (const auto& p : c.points)
            pts += (pts.empty() ? "" : " ") + num(sx(p.level)) + "," + num(sy(cum ? p.cumulative_misclassified : p.accuracy));
        svg += "<polyline fill=\"none\" stroke=\"" + color + "\" stroke-width=\"2\" points=\"" + pts + "\"/>\n";
        const double ly = kTop + 8 + 18.0 * static_cast<double>(i);
        const double lx = kLeft + plot_w + 16;
        svg += "<line x1=\"" + num(lx) + "\" y1=\"" + num(ly) + "\" x2=\"" + num(lx + 20) + "\" y2=\"" + num(ly) +
               "\" stroke=\"" + color + "\" stroke-width=\"2\"/>\n";
        svg += "<text x=\"" + num(lx + 26) + "\" y=\"" + num(ly + 4) + "\">" +
               escape(qualify ? c.strategy + "/" + c.method : c.method) + "</text>\n";
    }
    svg += "</svg>\n";
    return svg;
}

void emit_svg_plot(const std::vector<DegradationCurve>& curves, const std::filesystem::path& path,
                   const SvgOptions& options) {
    write_text_file(path, render_svg(curves, options));
}

}  // namespace goar::harness
