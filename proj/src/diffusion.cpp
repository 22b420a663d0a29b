#include "goar/diffusion.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "goar/parallel.hpp"
#include "goar/rng.hpp"

namespace goar {

DiffusionSchedule make_schedule(int T, double beta_start, double beta_end, int inference_steps) {
    if (T < 2) throw std::invalid_argument("make_schedule: T must be >= 2");
    if (!(beta_start > 0.0 && beta_end >= beta_start && beta_end < 1.0))
        throw std::invalid_argument("make_schedule: need 0 < beta_start <= beta_end < 1");
    if (inference_steps < 1 || inference_steps > T)
        throw std::invalid_argument("make_schedule: inference_steps must be in [1, T]");
    DiffusionSchedule s;
    s.T = T;
    double prod = 1.0;
    for (int t = 0; t < T; ++t) {
        const double beta = beta_start + (beta_end - beta_start) * t / static_cast<double>(T - 1);
        prod *= 1.0 - beta;
        s.betas.push_back(beta);
        s.alphas_cumprod.push_back(prod);
    }
    const int stride = T / inference_steps;
    for (int i = inference_steps - 1; i >= 0; --i) s.inference_timesteps.push_back(i * stride);
    return s;
}

double noise_signal_ratio(const DiffusionSchedule& schedule, int t) {
    const double abar = schedule.alpha_bar(t);
    return std::sqrt(1.0 - abar) / std::sqrt(abar);
}

int strength_to_timestep(double strength, const DiffusionSchedule& schedule, Index dim, double data_std) {
    if (!(strength >= 0.0)) throw std::invalid_argument("strength_to_timestep: strength must be >= 0");
    if (dim < 1) throw std::invalid_argument("strength_to_timestep: dim must be >= 1");
    const double target = strength * data_std / 0.5 / std::sqrt(static_cast<double>(dim));
    int best = 0;
    double best_gap = std::numeric_limits<double>::infinity();
    for (int t = 0; t < schedule.T; ++t) {
        const double gap = std::abs(noise_signal_ratio(schedule, t) - target);
        if (gap < best_gap) {
            best_gap = gap;
            best = t;
        }
    }
    return best;
}

int snap_to_inference_grid(const DiffusionSchedule& schedule, int t) {
    for (int step : schedule.inference_timesteps)
        if (step <= t) return step;
    return schedule.inference_timesteps.back();
}

void GmmPrior::validate() const {
    if (means.empty()) throw std::invalid_argument("GmmPrior: no components");
    for (const auto& m : means)
        if (m.size() != means.front().size() || m.size() < 1)
            throw std::invalid_argument("GmmPrior: inconsistent component dimensions");
    if (!(cov_scale > 0.0)) throw std::invalid_argument("GmmPrior: cov_scale must be > 0");
    if (weights.size() != means.size()) throw std::invalid_argument("GmmPrior: need one weight per component");
    double total = 0.0;
    for (double w : weights) {
        if (w < 0.0) throw std::invalid_argument("GmmPrior: negative weight");
        total += w;
    }
    if (std::abs(total - 1.0) > 1e-12) throw std::invalid_argument("GmmPrior: weights must sum to 1");
}

GmmPrior GmmPrior::from_spec(const GmmSpec& spec) {
    spec.validate();
    return {spec.means, spec.cov_scale, spec.weights};
}

GmmPrior GmmPrior::fit_classes(const Dataset& data) {
    data.validate();
    const auto K = static_cast<std::size_t>(data.n_classes);
    std::vector<Vector> sums(K, Vector::Zero(data.dim()));
    std::vector<double> counts(K, 0.0);
    for (Index i = 0; i < data.size(); ++i) {
        const auto c = static_cast<std::size_t>(data.labels[static_cast<std::size_t>(i)]);
        sums[c] += data.features.row(i).transpose();
        counts[c] += 1.0;
    }
    GmmPrior prior;
    for (std::size_t c = 0; c < K; ++c) {
        if (counts[c] == 0.0) throw std::invalid_argument("GmmPrior::fit_classes: class " + std::to_string(c) + " has no samples");
        prior.means.push_back(sums[c] / counts[c]);
        prior.weights.push_back(counts[c] / static_cast<double>(data.size()));
    }
    double ss = 0.0;
    for (Index i = 0; i < data.size(); ++i)
        ss += (data.features.row(i).transpose() - prior.means[static_cast<std::size_t>(data.labels[static_cast<std::size_t>(i)])])
                  .squaredNorm();
    const double dof = static_cast<double>(data.size() - static_cast<Index>(K)) * static_cast<double>(data.dim());
    if (!(dof > 0.0)) throw std::invalid_argument("GmmPrior::fit_classes: need more samples than classes");
    prior.cov_scale = std::max(ss / dof, 1e-12);
    return prior;
}

namespace {

// Log-responsibilities of N(scale*mu_k, var I) components at x, normalized.
Vector responsibilities(const GmmPrior& prior, const Vector& x, double mean_scale, double var) {
    const Index K = static_cast<Index>(prior.means.size());
    Vector logits(K);
    for (Index k = 0; k < K; ++k) {
        const double w = prior.weights[static_cast<std::size_t>(k)];
        logits[k] = w > 0.0 ? std::log(w) - (x - mean_scale * prior.means[static_cast<std::size_t>(k)]).squaredNorm() / (2.0 * var)
                            : -std::numeric_limits<double>::infinity();
    }
    const double max = logits.maxCoeff();
    Vector r = (logits.array() - max).exp().matrix();
    return r / r.sum();
}

}  // namespace

double gmm_log_density(const GmmPrior& prior, const Vector& x) {
    prior.validate();
    const double var = prior.cov_scale;
    const double d = static_cast<double>(x.size());
    double max = -std::numeric_limits<double>::infinity();
    std::vector<double> terms;
    for (std::size_t k = 0; k < prior.means.size(); ++k) {
        if (prior.weights[k] <= 0.0) continue;
        terms.push_back(std::log(prior.weights[k]) - (x - prior.means[k]).squaredNorm() / (2.0 * var));
        max = std::max(max, terms.back());
    }
    double sum = 0.0;
    for (double term : terms) sum += std::exp(term - max);
    return max + std::log(sum) - 0.5 * d * std::log(2.0 * M_PI * var);
}

Vector gmm_eps_predictor(const GmmPrior& prior, const Vector& x_t, int t, const DiffusionSchedule& schedule) {
    if (x_t.size() != prior.dim()) throw std::invalid_argument("gmm_eps_predictor: dimension mismatch");
    if (!x_t.allFinite()) throw std::invalid_argument("gmm_eps_predictor: non-finite input at t=" + std::to_string(t));
    if (t < 0 || t >= schedule.T) throw std::invalid_argument("gmm_eps_predictor: timestep out of range");
    const double abar = schedule.alpha_bar(t);
    const double sqrt_abar = std::sqrt(abar);
    const double var = abar * prior.cov_scale + 1.0 - abar;

    Vector mean;
    if (prior.means.size() == 1) {
        mean = prior.means.front();
    } else {
        const Vector r = responsibilities(prior, x_t, sqrt_abar, var);
        mean = Vector::Zero(x_t.size());
        for (std::size_t k = 0; k < prior.means.size(); ++k) mean += r[static_cast<Index>(k)] * prior.means[k];
    }
    return std::sqrt(1.0 - abar) * (x_t - sqrt_abar * mean) / var;
}

Vector ddim_denoise(const Vector& x_t, int t_start, const DiffusionSchedule& schedule, const EpsPredictor& eps) {
    if (t_start < 0 || t_start >= schedule.T) throw std::invalid_argument("ddim_denoise: t_start out of range");
    const int start = snap_to_inference_grid(schedule, t_start);
    std::vector<int> steps;
    for (int t : schedule.inference_timesteps)
        if (t > 0 && t <= start) steps.push_back(t);
    if (steps.empty()) return x_t;

    Vector x = x_t;
    Vector x0;
    for (std::size_t s = 0; s < steps.size(); ++s) {
        const int t = steps[s];
        const double abar = schedule.alpha_bar(t);
        const Vector e = eps(x, t);
        x0 = (x - std::sqrt(1.0 - abar) * e) / std::sqrt(abar);
        if (!x0.allFinite()) throw std::runtime_error("ddim_denoise: non-finite estimate at t=" + std::to_string(t));
        if (s + 1 < steps.size()) {
            const double abar_next = schedule.alpha_bar(steps[s + 1]);
            x = std::sqrt(abar_next) * x0 + std::sqrt(1.0 - abar_next) * e;
        }
    }
    return x0;
}

void ProjectionConfig::validate() const {
    if (!(extra_noise_fraction >= 0.0 && extra_noise_fraction < 1.0))
        throw std::invalid_argument("ProjectionConfig: extra_noise_fraction must be in [0, 1)");
    if (inference_steps < 1) throw std::invalid_argument("ProjectionConfig: inference_steps must be >= 1");
}

GmmPrior CanonicalMap::map_prior(const GmmPrior& prior) const {
    GmmPrior out = prior;
    for (auto& m : out.means) m = to_canonical(m);
    out.cov_scale = prior.cov_scale * scale * scale;
    return out;
}

CanonicalMap CanonicalMap::identity(Index dim) {
    return {Vector::Zero(dim), 1.0};
}

CanonicalMap CanonicalMap::from_dataset(const Dataset& data) {
    data.validate();
    const Vector center = data.features.colwise().mean().transpose();
    double mean_std = 0.0;
    for (Index j = 0; j < data.dim(); ++j)
        mean_std += std::sqrt((data.features.col(j).array() - center[j]).square().mean());
    mean_std /= static_cast<double>(data.dim());
    if (!(mean_std > 0.0)) throw std::invalid_argument("CanonicalMap: data has zero spread");
    return {center, 0.5 / mean_std};
}

namespace {

Vector project_canonical(const Vector& x, const Vector& v, double strength, const ProjectionConfig& cfg,
                         const GmmPrior& canonical_prior, const DiffusionSchedule& schedule, const CanonicalMap& map,
                         const Vector& noise) {
    const Vector shifted = x - strength * v;
    if (!cfg.project) return shifted;

    const Index d = x.size();
    const int t1 = strength_to_timestep(strength, schedule, d, map.transform_std());
    const int extra = static_cast<int>(std::lround(cfg.extra_noise_fraction * schedule.T));
    const int t2 = snap_to_inference_grid(schedule, std::min(t1 + extra, schedule.T - 1));
    if (t2 == 0) return shifted;

    const double noise_gain = std::max(0.0, noise_signal_ratio(schedule, t2) - noise_signal_ratio(schedule, t1));
    const Vector x_t = std::sqrt(schedule.alpha_bar(t2)) * (map.to_canonical(shifted) + noise_gain * noise);
    const Vector x0 = ddim_denoise(x_t, t2, schedule, [&](const Vector& xt, int t) {
        return gmm_eps_predictor(canonical_prior, xt, t, schedule);
    });
    return map.from_canonical(x0);
}

void check_projection_inputs(const Vector& x, const ProjectionConfig& cfg, const GmmPrior& prior,
                             const DiffusionSchedule& schedule, const CanonicalMap& map, double strength) {
    cfg.validate();
    prior.validate();
    if (!(strength >= 0.0)) throw std::invalid_argument("project_to_manifold: strength must be >= 0");
    if (prior.dim() != x.size() || map.center.size() != x.size())
        throw std::invalid_argument("project_to_manifold: dimension mismatch between data, prior and map");
    if (static_cast<int>(schedule.inference_timesteps.size()) != cfg.inference_steps)
        throw std::invalid_argument("project_to_manifold: schedule has " +
                                    std::to_string(schedule.inference_timesteps.size()) +
                                    " inference steps, config expects " + std::to_string(cfg.inference_steps));
}

}  // namespace

Vector project_to_manifold(const Vector& x, const Vector& v, double strength, const ProjectionConfig& cfg,
                           const GmmPrior& prior, const DiffusionSchedule& schedule, const CanonicalMap& map,
                           const Vector* noise) {
    check_projection_inputs(x, cfg, prior, schedule, map, strength);
    if (v.size() != x.size()) throw std::invalid_argument("project_to_manifold: feature dimension mismatch");
    if (std::abs(v.norm() - 1.0) > 1e-6) throw std::invalid_argument("project_to_manifold: feature vector is not unit length");
    Vector g;
    if (noise) {
        if (noise->size() != x.size()) throw std::invalid_argument("project_to_manifold: noise dimension mismatch");
        g = *noise;
    } else {
        Rng rng(cfg.seed);
        g = standard_normal(rng, x.size());
    }
    return project_canonical(x, v, strength, cfg, map.map_prior(prior), schedule, map, g);
}

Dataset perturb_dataset(const Dataset& data, const Attribution& attr, double strength, const ProjectionConfig& cfg,
                        const GmmPrior& prior, const DiffusionSchedule& schedule, const CanonicalMap& map) {
    attr.validate_against(data);
    if (data.size() > 0) check_projection_inputs(data.sample(0), cfg, prior, schedule, map, strength);
    if (strength == 0.0 && (!cfg.project || cfg.extra_noise_fraction == 0.0)) return data;

    Matrix directions = Matrix::Zero(data.size(), data.dim());
    Vector strengths = Vector::Constant(data.size(), strength);
    if (strength > 0.0) {
        if (cfg.unit_features) {
            directions = normalize_rows(attr.vectors);
        } else {
            for (Index i = 0; i < data.size(); ++i) {
                const double norm = attr.vectors.row(i).norm();
                if (norm > 0.0) directions.row(i) = attr.vectors.row(i) / norm;
                strengths[i] = strength * norm;
            }
        }
    }
    const GmmPrior canonical_prior = map.map_prior(prior);
    Dataset out = data;
    parallel_for(static_cast<std::size_t>(data.size()), [&](std::size_t idx) {
        const auto i = static_cast<Index>(idx);
        Rng rng(derive_seed(cfg.seed, idx));
        const Vector g = standard_normal(rng, data.dim());
        out.features.row(i) = project_canonical(data.sample(i), directions.row(i).transpose(), strengths[i], cfg,
                                                canonical_prior, schedule, map, g)
                                  .transpose();
    });
    return out;
}

}  // namespace goar
