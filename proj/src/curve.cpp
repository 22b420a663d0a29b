#include "goar/curve.hpp"

#include <algorithm>
#include <stdexcept>

namespace goar {

void DegradationCurve::validate() const {
    if (points.empty()) throw std::invalid_argument("curve '" + strategy + "/" + method + "' has no points");
    if (points.front().level != 0.0)
        throw std::invalid_argument("curve '" + strategy + "/" + method + "' does not start at the clean baseline");
    for (std::size_t j = 1; j < points.size(); ++j)
        if (points[j].cumulative_misclassified < points[j - 1].cumulative_misclassified)
            throw std::invalid_argument("curve '" + strategy + "/" + method + "' cumulative series decreases");
}

std::vector<double> cumulative_from_predictions(const std::vector<std::vector<bool>>& correct) {
    std::vector<double> out;
    if (correct.empty()) return out;
    const std::size_t n = correct.front().size();
    if (n == 0) throw std::invalid_argument("cumulative_from_predictions: no samples");
    std::vector<bool> lost(n, false);
    std::size_t lost_count = 0;
    for (const auto& level : correct) {
        if (level.size() != n) throw std::invalid_argument("cumulative_from_predictions: ragged prediction matrix");
        for (std::size_t i = 0; i < n; ++i)
            if (!level[i] && !lost[i]) {
                lost[i] = true;
                ++lost_count;
            }
        out.push_back(static_cast<double>(lost_count) / static_cast<double>(n));
    }
    return out;
}

DegradationCurve curve_from_predictions(std::string strategy, std::string method,
                                        const std::vector<double>& levels,
                                        const std::vector<std::vector<bool>>& correct) {
    if (levels.size() != correct.size()) throw std::invalid_argument("curve_from_predictions: level count mismatch");
    const auto cumulative = cumulative_from_predictions(correct);
    DegradationCurve curve{std::move(strategy), std::move(method), {}, {}};
    for (std::size_t j = 0; j < levels.size(); ++j) {
        const auto& c = correct[j];
        const double acc = static_cast<double>(std::count(c.begin(), c.end(), true)) / static_cast<double>(c.size());
        curve.points.push_back({levels[j], acc, cumulative[j]});
    }
    return curve;
}

}  // namespace goar
