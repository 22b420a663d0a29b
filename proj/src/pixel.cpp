#include "goar/pixel.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include "goar/parallel.hpp"

namespace goar {

Index PixelMask::count() const {
    return static_cast<Index>(std::count(bits.begin(), bits.end(), std::uint8_t{1}));
}

void PixelGrid::validate() const {
    if (perturb_fractions.empty()) throw std::invalid_argument("PixelGrid: no fractions");
    for (std::size_t j = 0; j < perturb_fractions.size(); ++j) {
        const double k = perturb_fractions[j];
        if (!(k > 0.0 && k <= 1.0)) throw std::invalid_argument("PixelGrid: fraction " + std::to_string(k) + " outside (0, 1]");
        if (j > 0 && !(k > perturb_fractions[j - 1])) throw std::invalid_argument("PixelGrid: fractions must be strictly ascending");
    }
}

const char* to_string(PixelStrategy strategy) {
    switch (strategy) {
        case PixelStrategy::roar: return "roar";
        case PixelStrategy::evalx: return "evalx";
        case PixelStrategy::road: return "road";
    }
    return "?";
}

PixelMask top_k_mask(const Vector& v, double k, RankBy rank_by) {
    if (!(k > 0.0 && k <= 1.0)) throw std::invalid_argument("top_k_mask: k must be in (0, 1]");
    const Index d = v.size();
    const auto count = static_cast<Index>(std::llround(k * static_cast<double>(d)));
    std::vector<Index> order(static_cast<std::size_t>(d));
    std::iota(order.begin(), order.end(), Index{0});
    auto score = [&](Index i) { return rank_by == RankBy::magnitude ? std::abs(v[i]) : v[i]; };
    std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) { return score(a) > score(b); });
    PixelMask mask{std::vector<std::uint8_t>(static_cast<std::size_t>(d), 0)};
    for (Index r = 0; r < count; ++r) mask.bits[static_cast<std::size_t>(order[static_cast<std::size_t>(r)])] = 1;
    return mask;
}

Vector roar_impute(const Vector& x, const PixelMask& mask) {
    if (mask.size() != x.size()) throw std::invalid_argument("roar_impute: mask length mismatch");
    Vector out = x;
    for (Index i = 0; i < x.size(); ++i)
        if (mask.bits[static_cast<std::size_t>(i)]) out[i] = 0.0;
    return out;
}

Vector road_impute(const Vector& x, const PixelMask& mask, GridShape shape, double noise_std, Rng& rng) {
    if (shape.height < 1 || shape.width < 1 || shape.height * shape.width != x.size())
        throw std::invalid_argument("road_impute: grid " + std::to_string(shape.height) + "x" +
                                    std::to_string(shape.width) + " does not match length " + std::to_string(x.size()));
    if (mask.size() != x.size()) throw std::invalid_argument("road_impute: mask length mismatch");
    if (!(noise_std >= 0.0)) throw std::invalid_argument("road_impute: noise_std must be >= 0");

    const Index d = x.size();
    std::vector<Index> unknown(static_cast<std::size_t>(d), -1);
    Index n_unknown = 0;
    for (Index i = 0; i < d; ++i)
        if (mask.bits[static_cast<std::size_t>(i)]) unknown[static_cast<std::size_t>(i)] = n_unknown++;
    Vector out = x;
    if (n_unknown == 0) return out;

    std::normal_distribution<double> noise(0.0, 1.0);
    if (n_unknown == d) {
        const double mean = x.mean();
        for (Index i = 0; i < d; ++i) out[i] = mean + (noise_std > 0.0 ? noise_std * noise(rng) : 0.0);
        return out;
    }

    // deg(i) u_i - sum_{masked j ~ i} u_j = sum_{unmasked j ~ i} x_j
    std::vector<Eigen::Triplet<double>> entries;
    Vector rhs = Vector::Zero(n_unknown);
    for (Index r = 0; r < shape.height; ++r) {
        for (Index c = 0; c < shape.width; ++c) {
            const Index i = r * shape.width + c;
            const Index row = unknown[static_cast<std::size_t>(i)];
            if (row < 0) continue;
            const Index neighbours[4][2] = {{r - 1, c}, {r + 1, c}, {r, c - 1}, {r, c + 1}};
            double degree = 0.0;
            for (const auto& nb : neighbours) {
                if (nb[0] < 0 || nb[0] >= shape.height || nb[1] < 0 || nb[1] >= shape.width) continue;
                const Index j = nb[0] * shape.width + nb[1];
                degree += 1.0;
                const Index col = unknown[static_cast<std::size_t>(j)];
                if (col >= 0) entries.emplace_back(row, col, -1.0);
                else rhs[row] += x[j];
            }
            entries.emplace_back(row, row, degree);
        }
    }
    Eigen::SparseMatrix<double> system(n_unknown, n_unknown);
    system.setFromTriplets(entries.begin(), entries.end());
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> solver(system);
    if (solver.info() != Eigen::Success) throw std::runtime_error("road_impute: Laplace system factorization failed");
    const Vector solution = solver.solve(rhs);

    for (Index i = 0; i < d; ++i) {
        const Index u = unknown[static_cast<std::size_t>(i)];
        if (u < 0) continue;
        out[i] = solution[u] + (noise_std > 0.0 ? noise_std * noise(rng) : 0.0);
    }
    return out;
}

ModelParams evalx_train_proxy(const Dataset& train_set, const TrainConfig& cfg, double mask_prob) {
    cfg.validate();
    train_set.validate();
    const auto parts = split(train_set, cfg.validation_fraction, derive_seed(cfg.seed, 0x7a1d));
    return train_with_input_masking(init_classifier(train_set.dim(), train_set.n_classes, cfg), parts.train,
                                    parts.test, cfg, mask_prob);
}

Dataset apply_pixel_removal(PixelStrategy strategy, const Dataset& data, const Attribution& attr, double k,
                            const PixelOptions& options, std::uint64_t noise_seed) {
    attr.validate_against(data);
    if (strategy == PixelStrategy::road && !options.grid_shape)
        throw std::invalid_argument("road requires a grid shape");
    Dataset out = data;
    Rng rng(noise_seed);
    for (Index i = 0; i < data.size(); ++i) {
        const PixelMask mask = top_k_mask(attr.vectors.row(i).transpose(), k, options.rank_by);
        const Vector x = data.sample(i);
        out.features.row(i) = (strategy == PixelStrategy::road
                                   ? road_impute(x, mask, *options.grid_shape, options.road_noise_std, rng)
                                   : roar_impute(x, mask))
                                  .transpose();
    }
    return out;
}

DegradationCurve run_pixel_strategy(PixelStrategy strategy, const Dataset& train_set, const Attribution& train_attr,
                                    const Dataset& test_set, const Attribution& test_attr, const PixelGrid& grid,
                                    const TrainConfig& cfg, const PixelOptions& options) {
    grid.validate();
    train_attr.validate_against(train_set);
    test_attr.validate_against(test_set);
    if (strategy == PixelStrategy::road && !options.grid_shape)
        throw std::invalid_argument("road requires a grid shape");

    std::vector<double> levels{0.0};
    levels.insert(levels.end(), grid.perturb_fractions.begin(), grid.perturb_fractions.end());
    std::vector<std::vector<bool>> correct(levels.size());

    if (strategy == PixelStrategy::evalx) {
        const ModelParams proxy = evalx_train_proxy(train_set, cfg, options.evalx_mask_prob);
        correct[0] = correct_predictions(proxy, test_set);
        parallel_for(grid.perturb_fractions.size(), [&](std::size_t j) {
            const Dataset masked = apply_pixel_removal(strategy, test_set, test_attr, levels[j + 1], options, 0);
            correct[j + 1] = correct_predictions(proxy, masked);
        });
    } else {
        parallel_for(levels.size(), [&](std::size_t j) {
            if (j == 0) {
                correct[0] = correct_predictions(fit_classifier(train_set, cfg), test_set);
                return;
            }
            const auto level_seed = derive_seed(options.seed, j);
            const Dataset train_mod = apply_pixel_removal(strategy, train_set, train_attr, levels[j], options,
                                                          derive_seed(level_seed, 1));
            const Dataset test_mod = apply_pixel_removal(strategy, test_set, test_attr, levels[j], options,
                                                         derive_seed(level_seed, 2));
            correct[j] = correct_predictions(fit_classifier(train_mod, cfg), test_mod);
        });
    }

    auto curve = curve_from_predictions(to_string(strategy), train_attr.method, levels, correct);
    curve.seeds = {cfg.seed, options.seed};
    return curve;
}

}  // namespace goar
