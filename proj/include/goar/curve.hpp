#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace goar {

struct CurvePoint {
    double level = 0.0;  // perturbation strength (GOAR) or removed fraction k (pixel strategies)
    double accuracy = 0.0;
    double cumulative_misclassified = 0.0;
};

struct DegradationCurve {
    std::string strategy;
    std::string method;
    std::vector<CurvePoint> points;  // points.front() is the clean baseline
    std::vector<std::uint64_t> seeds;

    void validate() const;
};

// correct[j][i] tells whether test sample i is classified correctly at level j.
// out[j] = fraction of samples misclassified at some level <= j.
std::vector<double> cumulative_from_predictions(const std::vector<std::vector<bool>>& correct);

// Assembles a curve from per-level correctness vectors.
DegradationCurve curve_from_predictions(std::string strategy, std::string method,
                                        const std::vector<double>& levels,
                                        const std::vector<std::vector<bool>>& correct);

}  // namespace goar
