#pragma once

#include <cstdint>
#include <map>
#include <string>

#include "goar/common.hpp"
#include "goar/data.hpp"
#include "goar/nn.hpp"

namespace goar {

// One feature vector per dataset sample (row i belongs to sample i).
struct Attribution {
    Matrix vectors;
    std::string method;
    std::map<std::string, double> params;

    Index size() const { return vectors.rows(); }
    void validate_against(const Dataset& data) const;
};

struct NoiseBlend {
    double lambda = 1.0;
    std::uint64_t seed = 0;
};

// All gradient methods differentiate the logit of the sample's true class.
Attribution attr_grad(const ModelParams& model, const Dataset& data);
Attribution attr_grad_x_input(const ModelParams& model, const Dataset& data);
Attribution attr_smoothgrad(const ModelParams& model, const Dataset& data, std::size_t n_samples,
                            double noise_std, std::uint64_t seed);
// Right-endpoint Riemann sum along the straight path from `baseline`.
Attribution attr_integrated_gradients(const ModelParams& model, const Dataset& data, const Vector& baseline,
                                      std::size_t n_steps);
Attribution attr_random(const Dataset& data, std::uint64_t seed);

// lambda * v/|v| + (1 - lambda) * w with w uniform on the unit sphere (one
// fresh w per sample). The result is not re-normalized.
Attribution blend_with_noise(const Attribution& attr, const NoiseBlend& blend);

enum class GroundTruthMode {
    coefficient_times_input,  // (w_y - mean_{c != y} w_c) * x
    coefficient,              // (w_y - mean_{c != y} w_c)
};

Attribution ground_truth_from_linear(const LinearModel& lm, const Dataset& data,
                                     GroundTruthMode mode = GroundTruthMode::coefficient_times_input);

// Rows scaled to unit length. Throws on a zero row.
Matrix normalize_rows(const Matrix& vectors);

}  // namespace goar
