#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "goar/attribution.hpp"
#include "goar/common.hpp"
#include "goar/data.hpp"

namespace goar {

struct DiffusionSchedule {
    int T = 0;
    std::vector<double> betas;            // beta_t, t = 0..T-1
    std::vector<double> alphas_cumprod;   // prod_{s<=t} (1 - beta_s)
    std::vector<int> inference_timesteps; // descending, evenly strided, ends at 0

    double alpha_bar(int t) const { return alphas_cumprod.at(static_cast<std::size_t>(t)); }
};

// Linear beta ramp; inference timesteps {(steps-1)*s, ..., s, 0} with s = T/steps.
DiffusionSchedule make_schedule(int T = 1000, double beta_start = 1e-4, double beta_end = 0.02,
                                int inference_steps = 25);

// sqrt(1 - abar_t) / sqrt(abar_t)
double noise_signal_ratio(const DiffusionSchedule& schedule, int t);

// argmin_t |NSR(t) - strength * data_std / (0.5 * sqrt(dim))|, lowest t on
// ties. data_std is the input-to-pixel scale of the data (the std of an
// image normalization transform); with a CanonicalMap it is transform_std().
int strength_to_timestep(double strength, const DiffusionSchedule& schedule, Index dim, double data_std);

// Largest inference timestep <= t (the smallest one if t is below the grid).
int snap_to_inference_grid(const DiffusionSchedule& schedule, int t);

struct GmmPrior {
    std::vector<Vector> means;
    double cov_scale = 0.3;
    std::vector<double> weights;

    Index dim() const { return means.empty() ? 0 : means.front().size(); }
    void validate() const;
    static GmmPrior from_spec(const GmmSpec& spec);
    // One component per class: class means, class frequencies as weights and
    // the pooled within-class per-coordinate variance.
    static GmmPrior fit_classes(const Dataset& data);
};

double gmm_log_density(const GmmPrior& prior, const Vector& x);

// E[eps | x_t] for x_t = sqrt(abar) x0 + sqrt(1 - abar) eps with x0 drawn
// from the mixture: sqrt(1-abar) (x_t - sqrt(abar) m(x_t)) / (abar sigma^2 + 1 - abar),
// m = responsibility-weighted component mean.
Vector gmm_eps_predictor(const GmmPrior& prior, const Vector& x_t, int t, const DiffusionSchedule& schedule);

using EpsPredictor = std::function<Vector(const Vector& x_t, int t)>;

// Deterministic (eta = 0) DDIM over the inference timesteps 0 < t <= t_start
// (t_start snapped down to the grid); returns the last x0 estimate, or x_t
// itself when no step applies.
Vector ddim_denoise(const Vector& x_t, int t_start, const DiffusionSchedule& schedule, const EpsPredictor& eps);

struct ProjectionConfig {
    double extra_noise_fraction = 0.16;
    int inference_steps = 25;
    std::uint64_t seed = 0;
    bool project = true;  // false: plain shift x - strength * v
    // true: every feature is scaled to unit length before shifting.
    // false: the shift is strength * v with v's own length (zero rows do not move).
    bool unit_features = true;

    void validate() const;
};

// Isotropic affine map into the denoiser's pixel-like space:
// canonical = (x - center) * scale.
struct CanonicalMap {
    Vector center;
    double scale = 1.0;

    Vector to_canonical(const Vector& x) const { return (x - center) * scale; }
    Vector from_canonical(const Vector& c) const { return c / scale + center; }
    GmmPrior map_prior(const GmmPrior& prior) const;
    // Pixel units per input unit, with pixels spanning [0, 1] and canonical
    // values spanning [-1, 1].
    double transform_std() const { return 0.5 * scale; }

    static CanonicalMap identity(Index dim);
    // Centers on the sample mean and scales the mean per-coordinate standard
    // deviation to 0.5.
    static CanonicalMap from_dataset(const Dataset& data);
};

// x' = x - strength*v, then (unless cfg.project is false) noise to level
// t2 = snap(t1 + extra_noise_fraction*T) and DDIM back to 0 under the prior.
// `noise`, when given, replaces the seeded standard-normal draw (canonical
// space).
Vector project_to_manifold(const Vector& x, const Vector& v, double strength, const ProjectionConfig& cfg,
                           const GmmPrior& prior, const DiffusionSchedule& schedule, const CanonicalMap& map,
                           const Vector* noise = nullptr);

// Applies project_to_manifold to every sample with a per-sample seed derived
// from (cfg.seed, index). See ProjectionConfig::unit_features for how the
// attribution length enters the shift.
Dataset perturb_dataset(const Dataset& data, const Attribution& attr, double strength, const ProjectionConfig& cfg,
                        const GmmPrior& prior, const DiffusionSchedule& schedule, const CanonicalMap& map);

}  // namespace goar
