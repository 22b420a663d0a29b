#include "goar/harness/presets.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace goar::harness {

std::vector<std::vector<double>> default_pitfall_features(const std::vector<double>& dx, double eps) {
    std::vector<double> e = dx;
    for (double& x : e)
        if (std::abs(x) <= eps) x = 0.0;
    std::vector<std::size_t> order(e.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return std::abs(e[a]) > std::abs(e[b]); });
    if (order.size() < 2 || e[order[1]] == 0.0) return {e};
    std::vector<double> swapped = e;
    std::swap(swapped[order[0]], swapped[order[1]]);
    return {e, swapped};
}

ExperimentConfig pitfall_preset(const std::vector<double>& dx, std::uint64_t seed, std::optional<std::uint64_t> rotation_seed) {
    ExperimentConfig c;
    c.name = "pitfall";
    c.kind = ExperimentKind::pitfall;
    c.seed = seed;
    c.dataset.type = DatasetType::pitfall;
    c.dataset.dx = dx;
    c.dataset.cluster_std = 0.05;
    c.dataset.samples_per_class = 200;
    c.dataset.rotation_seed = rotation_seed;
    c.methods.features = default_pitfall_features(dx, c.dataset.eps);
    c.strategies.list = {"roar"};
    c.strategies.rank_by = RankBy::magnitude;
    validate(c);
    return c;
}

ExperimentConfig blend_preset(const std::vector<double>& lambdas, std::uint64_t seed) {
    ExperimentConfig c;
    c.name = "blend_study";
    c.kind = ExperimentKind::blend_study;
    c.seed = seed;
    c.dataset.dim = 64;
    c.dataset.samples_per_class = 300;
    c.methods.lambdas = lambdas;
    c.methods.blend_base = BlendBase::ground_truth;
    c.strategies.list = {"goar", "roar"};
    c.strategies.goar_strengths = parse_grid("0.05:2.5:0.05");
    c.strategies.goar_unit_features = false;
    c.strategies.pixel_fractions = parse_grid("0.1:1:0.1");
    validate(c);
    return c;
}

ExperimentConfig openxai_preset(std::uint64_t seed) {
    ExperimentConfig c;
    c.name = "openxai_synthetic";
    c.kind = ExperimentKind::openxai_corr;
    c.seed = seed;
    c.dataset.dim = 20;
    c.dataset.mean_scale = 0.5;
    c.dataset.mean_profile = "linear";
    c.dataset.samples_per_class = 200;
    c.methods.list = {"grad", "grad_x_input", "smoothgrad", "integrated_gradients", "random"};
    c.strategies.list = {"goar", "roar", "evalx"};
    c.strategies.goar_strengths = parse_grid("0.2:2:0.2");
    c.strategies.pixel_fractions = parse_grid("0.1:1:0.1");
    validate(c);
    return c;
}

ExperimentConfig ablation_preset(std::uint64_t seed) {
    ExperimentConfig c;
    c.name = "projection_ablation";
    c.kind = ExperimentKind::custom_curve;
    c.seed = seed;
    c.dataset.dim = 64;
    c.dataset.samples_per_class = 300;
    c.methods.list = {"grad", "random"};
    c.strategies.list = {"goar", "goar_noproj"};
    c.strategies.goar_strengths = parse_grid("0.05:2.5:0.05");
    validate(c);
    return c;
}

}  // namespace goar::harness
