#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "goar/harness/config.hpp"

namespace goar::harness {

// e = dx with irrelevant coordinates (|dx_i| <= eps) zeroed, and e' = e with
// its two largest-magnitude coordinates swapped (omitted when fewer than two
// coordinates are relevant).
std::vector<std::vector<double>> default_pitfall_features(const std::vector<double>& dx, double eps = 1e-2);

// ROAR on make_pitfall data, one coordinate removed per step, ranked by
// magnitude.
ExperimentConfig pitfall_preset(const std::vector<double>& dx, std::uint64_t seed,
                                std::optional<std::uint64_t> rotation_seed = std::nullopt);

// 64-d two-class GMM, noise blends of the logistic ground-truth direction,
// GOAR and ROAR curves.
ExperimentConfig blend_preset(const std::vector<double>& lambdas, std::uint64_t seed);

// 20-d GMM with linearly growing mean magnitudes; Grad, IxG, SG, IG and Random
// against logistic ground truth under GOAR, ROAR and Eval-X.
ExperimentConfig openxai_preset(std::uint64_t seed);

// Grad and Random under GOAR with and without manifold projection.
ExperimentConfig ablation_preset(std::uint64_t seed);

}  // namespace goar::harness
