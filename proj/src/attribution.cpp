#include "goar/attribution.hpp"

#include <stdexcept>
#include <string>

#include "goar/rng.hpp"

namespace goar {

void Attribution::validate_against(const Dataset& data) const {
    if (vectors.rows() != data.size() || vectors.cols() != data.dim())
        throw std::invalid_argument("attribution '" + method + "' has shape " + std::to_string(vectors.rows()) +
                                    "x" + std::to_string(vectors.cols()) + ", dataset is " +
                                    std::to_string(data.size()) + "x" + std::to_string(data.dim()));
    if (!vectors.allFinite()) throw std::invalid_argument("attribution '" + method + "' has non-finite entries");
}

Attribution attr_grad(const ModelParams& model, const Dataset& data) {
    return {input_gradients(model, data.features, data.labels), "grad", {}};
}

Attribution attr_grad_x_input(const ModelParams& model, const Dataset& data) {
    Matrix g = input_gradients(model, data.features, data.labels);
    return {g.cwiseProduct(data.features), "ixg", {}};
}

Attribution attr_smoothgrad(const ModelParams& model, const Dataset& data, std::size_t n_samples,
                            double noise_std, std::uint64_t seed) {
    if (n_samples < 1) throw std::invalid_argument("attr_smoothgrad: n_samples must be >= 1");
    if (!(noise_std >= 0.0)) throw std::invalid_argument("attr_smoothgrad: noise_std must be >= 0");
    if (noise_std == 0.0) {
        // Every sample is x itself; skip the averaging so the result is exact.
        Attribution out{input_gradients(model, data.features, data.labels), "smoothgrad", {}};
        out.params["n_samples"] = static_cast<double>(n_samples);
        out.params["noise_std"] = 0.0;
        return out;
    }
    Matrix sum = Matrix::Zero(data.size(), data.dim());
    Rng rng(seed);
    for (std::size_t s = 0; s < n_samples; ++s) {
        Matrix noisy = data.features;
        for (Index i = 0; i < noisy.rows(); ++i)
            noisy.row(i) += noise_std * standard_normal(rng, data.dim()).transpose();
        sum += input_gradients(model, noisy, data.labels);
    }
    Attribution out{sum / static_cast<double>(n_samples), "smoothgrad", {}};
    out.params["n_samples"] = static_cast<double>(n_samples);
    out.params["noise_std"] = noise_std;
    return out;
}

Attribution attr_integrated_gradients(const ModelParams& model, const Dataset& data, const Vector& baseline,
                                      std::size_t n_steps) {
    if (n_steps < 1) throw std::invalid_argument("attr_integrated_gradients: n_steps must be >= 1");
    if (baseline.size() != data.dim())
        throw std::invalid_argument("attr_integrated_gradients: baseline dimension " +
                                    std::to_string(baseline.size()) + " != data dimension " +
                                    std::to_string(data.dim()));
    const Matrix delta = data.features.rowwise() - baseline.transpose();
    Matrix sum = Matrix::Zero(data.size(), data.dim());
    for (std::size_t s = 1; s <= n_steps; ++s) {
        const double alpha = static_cast<double>(s) / static_cast<double>(n_steps);
        Matrix point = (alpha * delta).rowwise() + baseline.transpose();
        sum += input_gradients(model, point, data.labels);
    }
    Attribution out{delta.cwiseProduct(sum) / static_cast<double>(n_steps), "ig", {}};
    out.params["n_steps"] = static_cast<double>(n_steps);
    return out;
}

Attribution attr_random(const Dataset& data, std::uint64_t seed) {
    Rng rng(seed);
    Matrix v(data.size(), data.dim());
    for (Index i = 0; i < v.rows(); ++i) v.row(i) = unit_sphere(rng, data.dim()).transpose();
    return {std::move(v), "random", {}};
}

Matrix normalize_rows(const Matrix& vectors) {
    Matrix out = vectors;
    for (Index i = 0; i < out.rows(); ++i) {
        const double norm = out.row(i).norm();
        if (!(norm > 0.0)) throw std::invalid_argument("feature vector of sample " + std::to_string(i) + " has zero length");
        out.row(i) /= norm;
    }
    return out;
}

Attribution blend_with_noise(const Attribution& attr, const NoiseBlend& blend) {
    if (!(blend.lambda >= 0.0 && blend.lambda <= 1.0))
        throw std::invalid_argument("blend_with_noise: lambda must be in [0, 1]");
    Rng rng(blend.seed);
    Matrix out(attr.vectors.rows(), attr.vectors.cols());
    for (Index i = 0; i < out.rows(); ++i) {
        const Vector w = unit_sphere(rng, out.cols());
        if (blend.lambda > 0.0) {
            const double norm = attr.vectors.row(i).norm();
            if (!(norm > 0.0))
                throw std::invalid_argument("blend_with_noise: zero-length feature for sample " + std::to_string(i));
            out.row(i) = blend.lambda * attr.vectors.row(i) / norm + (1.0 - blend.lambda) * w.transpose();
        } else {
            out.row(i) = w.transpose();
        }
    }
    Attribution result{std::move(out), attr.method, attr.params};
    result.params["lambda"] = blend.lambda;
    return result;
}

Attribution ground_truth_from_linear(const LinearModel& lm, const Dataset& data, GroundTruthMode mode) {
    if (lm.weights.cols() != data.dim())
        throw std::invalid_argument("ground_truth_from_linear: model dimension mismatch");
    const Index c = lm.weights.rows();
    if (c < 2) throw std::invalid_argument("ground_truth_from_linear: need at least 2 classes");
    // Contrast of each class against the mean of the others; for two classes
    // this is w_y - w_{1-y}.
    Matrix contrast(c, lm.weights.cols());
    const Vector total = lm.weights.colwise().sum().transpose();
    for (Index k = 0; k < c; ++k)
        contrast.row(k) = lm.weights.row(k) - (total.transpose() - lm.weights.row(k)) / static_cast<double>(c - 1);

    Matrix v(data.size(), data.dim());
    for (Index i = 0; i < v.rows(); ++i) {
        const int y = data.labels[static_cast<std::size_t>(i)];
        if (y >= c) throw std::invalid_argument("ground_truth_from_linear: label out of model range");
        v.row(i) = contrast.row(y);
        if (mode == GroundTruthMode::coefficient_times_input) v.row(i) = v.row(i).cwiseProduct(data.features.row(i));
    }
    return {std::move(v), mode == GroundTruthMode::coefficient ? "ground_truth_w" : "ground_truth_wx", {}};
}

}  // namespace goar
