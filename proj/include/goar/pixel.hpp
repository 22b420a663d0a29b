#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "goar/attribution.hpp"
#include "goar/common.hpp"
#include "goar/curve.hpp"
#include "goar/data.hpp"
#include "goar/nn.hpp"
#include "goar/rng.hpp"

namespace goar {

// 1 = erase.
struct PixelMask {
    std::vector<std::uint8_t> bits;

    Index size() const { return static_cast<Index>(bits.size()); }
    Index count() const;
};

// Fractions of coordinates removed at each level; strictly ascending in (0, 1].
struct PixelGrid {
    std::vector<double> perturb_fractions;
    void validate() const;
};

struct GridShape {
    Index height = 0;
    Index width = 0;
};

enum class PixelStrategy { roar, evalx, road };

const char* to_string(PixelStrategy strategy);

// round(k*d) ones at the highest-ranked coordinates; ties go to the lowest index.
PixelMask top_k_mask(const Vector& v, double k, RankBy rank_by = RankBy::value);

// (1 - mask) * x
Vector roar_impute(const Vector& x, const PixelMask& mask);

// Masked cells take the solution of the discrete Laplace equation on the
// 4-neighbour grid (unmasked cells are Dirichlet data), plus N(0, noise_std^2)
// noise. A fully masked grid falls back to mean(x) + noise.
Vector road_impute(const Vector& x, const PixelMask& mask, GridShape shape, double noise_std, Rng& rng);

// MLP trained with every minibatch input coordinate zeroed with probability
// mask_prob.
ModelParams evalx_train_proxy(const Dataset& train_set, const TrainConfig& cfg, double mask_prob = 0.5);

struct PixelOptions {
    RankBy rank_by = RankBy::value;
    std::optional<GridShape> grid_shape;  // required for road
    double road_noise_std = 0.01;
    double evalx_mask_prob = 0.5;
    std::uint64_t seed = 0;  // imputation noise
};

// Per-sample masks from `attr` at fraction k, imputed per `strategy` (evalx
// uses zero imputation).
Dataset apply_pixel_removal(PixelStrategy strategy, const Dataset& data, const Attribution& attr, double k,
                            const PixelOptions& options, std::uint64_t noise_seed);

// Level 0 is the clean accuracy. roar/road retrain a freshly initialized model
// (same seed) per level on the imputed training set; evalx scores the imputed
// test set with one proxy model.
DegradationCurve run_pixel_strategy(PixelStrategy strategy, const Dataset& train_set, const Attribution& train_attr,
                                    const Dataset& test_set, const Attribution& test_attr, const PixelGrid& grid,
                                    const TrainConfig& cfg, const PixelOptions& options);

}  // namespace goar
