#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "goar/data.hpp"
#include "goar/diffusion.hpp"
#include "goar/rng.hpp"
#include "test_util.hpp"

using namespace goar;

namespace {

GmmPrior two_component(Index d, double var) {
    return {{Vector::Ones(d), -Vector::Ones(d)}, var, {0.5, 0.5}};
}

}  // namespace

TEST_CASE("make_schedule") {
    const DiffusionSchedule s = make_schedule();
    CHECK(s.T == 1000);
    CHECK(s.alpha_bar(0) == doctest::Approx(0.9999).epsilon(1e-14));
    double log_prod = 0.0;
    for (int t = 0; t < 1000; ++t) log_prod += std::log1p(-(1e-4 + (0.02 - 1e-4) * t / 999.0));
    CHECK(s.alpha_bar(999) == doctest::Approx(std::exp(log_prod)).epsilon(1e-10));
    CHECK(s.alpha_bar(999) > 0.0);
    CHECK(s.alpha_bar(999) < 0.01);
    for (int t = 1; t < 1000; ++t) CHECK(s.alpha_bar(t) < s.alpha_bar(t - 1));
    REQUIRE(s.inference_timesteps.size() == 25);
    CHECK(s.inference_timesteps.front() == 960);
    CHECK(s.inference_timesteps.back() == 0);
    for (std::size_t i = 1; i < 25; ++i) CHECK(s.inference_timesteps[i - 1] - s.inference_timesteps[i] == 40);

    CHECK_THROWS_AS(make_schedule(1), std::invalid_argument);
    CHECK_THROWS_AS(make_schedule(100, 0.0, 0.02), std::invalid_argument);
    CHECK_THROWS_AS(make_schedule(100, 1e-4, 0.02, 0), std::invalid_argument);
}

TEST_CASE("noise_signal_ratio") {
    const DiffusionSchedule s = make_schedule();
    for (int t = 1; t < s.T; ++t) CHECK(noise_signal_ratio(s, t) > noise_signal_ratio(s, t - 1));
    DiffusionSchedule manual = s;
    manual.alphas_cumprod[0] = 1.0;
    manual.alphas_cumprod[1] = 0.5;
    CHECK(noise_signal_ratio(manual, 0) == 0.0);
    CHECK(noise_signal_ratio(manual, 1) == doctest::Approx(1.0));
}

TEST_CASE("strength_to_timestep") {
    const DiffusionSchedule s = make_schedule();
    CHECK(strength_to_timestep(0.0, s, 64, 0.25) == 0);
    CHECK(strength_to_timestep(1e9, s, 64, 0.25) == s.T - 1);

    // Target NSR 1 <=> abar 0.5; locate the crossing by bisection on the table.
    int lo = 0, hi = s.T - 1;
    while (hi - lo > 1) {
        const int mid = (lo + hi) / 2;
        (s.alpha_bar(mid) > 0.5 ? lo : hi) = mid;
    }
    const double strength = 0.5 * std::sqrt(64.0) / 0.25;
    const int t = strength_to_timestep(strength, s, 64, 0.25);
    CHECK(std::abs(t - lo) <= 1);
    CHECK(std::abs(s.alpha_bar(t) - 0.5) < 0.01);

    int previous = 0;
    for (double x = 0.0; x < 200.0; x += 0.37) {
        const int now = strength_to_timestep(x, s, 16, 0.3);
        CHECK(now >= previous);
        previous = now;
    }
    CHECK_THROWS_AS(strength_to_timestep(-1.0, s, 4, 0.5), std::invalid_argument);
}

TEST_CASE("snap_to_inference_grid") {
    const DiffusionSchedule s = make_schedule();
    CHECK(snap_to_inference_grid(s, 999) == 960);
    CHECK(snap_to_inference_grid(s, 960) == 960);
    CHECK(snap_to_inference_grid(s, 959) == 920);
    CHECK(snap_to_inference_grid(s, 39) == 0);
    CHECK(snap_to_inference_grid(s, 0) == 0);
}

TEST_CASE("gmm_eps_predictor") {
    const DiffusionSchedule s = make_schedule();
    SUBCASE("single Gaussian closed form") {
        Rng rng(1);
        const Vector mu = standard_normal(rng, 5);
        const GmmPrior prior{{mu}, 0.3, {1.0}};
        for (int t : {0, 100, 500, 999}) {
            const Vector x = standard_normal(rng, 5);
            const double a = s.alpha_bar(t);
            const Vector expected = std::sqrt(1 - a) * (x - std::sqrt(a) * mu) / (a * 0.3 + 1 - a);
            CHECK((gmm_eps_predictor(prior, x, t, s) - expected).cwiseAbs().maxCoeff() < 1e-12);
        }
    }
    SUBCASE("symmetric mixture at the origin") {
        for (int t : {0, 10, 300, 999}) CHECK(gmm_eps_predictor(two_component(7, 0.3), Vector::Zero(7), t, s).isZero(1e-15));
    }
    SUBCASE("far from all components stays finite") {
        const Vector x = Vector::Constant(64, 1e3);
        CHECK(gmm_eps_predictor(two_component(64, 0.3), x, 5, s).allFinite());
    }
    SUBCASE("Monte-Carlo posterior oracle") {
        Rng rng(2);
        const std::vector<GmmPrior> priors{
            {{(Vector(2) << 0.5, -0.2).finished()}, 0.3, {1.0}},
            {{(Vector(2) << 1.0, 1.0).finished(), (Vector(2) << -1.0, -1.0).finished()}, 0.3, {0.3, 0.7}}};
        for (const auto& prior : priors) {
            for (int t : {50, 200, 400, 600, 900}) {
                const double a = s.alpha_bar(t);
                const Vector x0 = prior.means.back() + std::sqrt(0.3) * standard_normal(rng, 2);
                const Vector x_t = std::sqrt(a) * x0 + std::sqrt(1 - a) * standard_normal(rng, 2);
                const auto oracle = test::monte_carlo_eps(prior.means, prior.cov_scale, prior.weights, x_t, a, 100000,
                                                          derive_seed(7, static_cast<std::uint64_t>(t)));
                const Vector got = gmm_eps_predictor(prior, x_t, t, s);
                for (Index j = 0; j < 2; ++j) CHECK(std::abs(got[j] - oracle.mean[j]) <= 3.0 * oracle.standard_error[j]);
            }
        }
    }
    SUBCASE("errors") {
        CHECK_THROWS_AS(gmm_eps_predictor(two_component(3, 0.3), Vector::Zero(4), 0, s), std::invalid_argument);
        Vector bad = Vector::Zero(3);
        bad[1] = std::nan("");
        CHECK_THROWS_AS(gmm_eps_predictor(two_component(3, 0.3), bad, 0, s), std::invalid_argument);
    }
}

TEST_CASE("ddim_denoise") {
    const DiffusionSchedule s = make_schedule();
    Rng rng(3);
    const Vector mu = standard_normal(rng, 4);
    const GmmPrior prior{{mu}, 0.3, {1.0}};
    const EpsPredictor eps = [&](const Vector& x, int t) { return gmm_eps_predictor(prior, x, t, s); };

    const Vector x = standard_normal(rng, 4);
    CHECK(ddim_denoise(x, 0, s, eps) == x);

    for (int t : {40, 400, 960}) CHECK((ddim_denoise(std::sqrt(s.alpha_bar(t)) * mu, t, s, eps) - mu).cwiseAbs().maxCoeff() < 1e-8);

    // With the true noise as predictor a single step inverts the forward map.
    const Vector x0 = standard_normal(rng, 4), noise = standard_normal(rng, 4);
    const double a = s.alpha_bar(40);
    const Vector x_t = std::sqrt(a) * x0 + std::sqrt(1 - a) * noise;
    const EpsPredictor oracle = [&](const Vector&, int) { return noise; };
    CHECK((ddim_denoise(x_t, 40, s, oracle) - x0).cwiseAbs().maxCoeff() < 1e-8);
    CHECK((ddim_denoise(x_t, 79, s, oracle) - x0).cwiseAbs().maxCoeff() < 1e-8);

    // Contraction toward the mean.
    const Vector start = std::sqrt(s.alpha_bar(600)) * mu + standard_normal(rng, 4);
    const Vector out = ddim_denoise(start, 600, s, eps);
    CHECK((out - mu).norm() < (start / std::sqrt(s.alpha_bar(600)) - mu).norm());

    CHECK(ddim_denoise(start, 600, s, eps) == out);
    CHECK_THROWS_AS(ddim_denoise(x, -1, s, eps), std::invalid_argument);
    CHECK_THROWS_AS(ddim_denoise(x, 1000, s, eps), std::invalid_argument);
    const EpsPredictor broken = [](const Vector& v, int) { return Vector::Constant(v.size(), std::nan("")); };
    CHECK_THROWS_AS(ddim_denoise(x, 400, s, broken), std::runtime_error);
}

TEST_CASE("project_to_manifold") {
    const DiffusionSchedule s = make_schedule();
    const Index d = 16;
    const GmmPrior prior = two_component(d, 0.3);
    const CanonicalMap map{Vector::Zero(d), 0.5};
    Rng rng(4);

    SUBCASE("identity at zero strength without extra noise") {
        ProjectionConfig cfg;
        cfg.extra_noise_fraction = 0.0;
        const Vector x = standard_normal(rng, d);
        const Vector v = unit_sphere(rng, d);
        CHECK(project_to_manifold(x, v, 0.0, cfg, prior, s, map) == x);
    }

    SUBCASE("small shifts keep the between-component position") {
        // The extra noise resamples the position inside a component; the
        // coordinate along the axis joining the components is what survives.
        ProjectionConfig cfg;
        const Vector axis = Vector::Ones(d).normalized();
        for (int i = 0; i < 100; ++i) {
            cfg.seed = static_cast<std::uint64_t>(i);
            const Vector x = prior.means[static_cast<std::size_t>(i % 2)] + std::sqrt(0.3) * standard_normal(rng, d);
            const Vector v = unit_sphere(rng, d);
            const Vector out = project_to_manifold(x, v, 0.1, cfg, prior, s, map);
            CHECK(std::abs(axis.dot(out - (x - 0.1 * v))) < 0.2 * (prior.means[0] - prior.means[1]).norm());
            CHECK((out.dot(axis) > 0) == (x.dot(axis) > 0));
        }
    }

    SUBCASE("rotation equivariance") {
        ProjectionConfig cfg;
        const Matrix r = random_rotation(d, 5);
        GmmPrior rotated = prior;
        for (auto& m : rotated.means) m = r * m;
        const CanonicalMap shifted_map{standard_normal(rng, d), 0.7};
        const CanonicalMap rotated_map{r * shifted_map.center, 0.7};
        for (int i = 0; i < 50; ++i) {
            const Vector x = standard_normal(rng, d) + prior.means[static_cast<std::size_t>(i % 2)];
            const Vector v = unit_sphere(rng, d);
            const Vector g = standard_normal(rng, d);
            const Vector rg = r * g;
            const double strength = 0.5 * (i % 7);
            const Vector a = project_to_manifold(x, v, strength, cfg, prior, s, shifted_map, &g);
            const Vector b = project_to_manifold(r * x, r * v, strength, cfg, rotated, s, rotated_map, &rg);
            CHECK((r * a - b).cwiseAbs().maxCoeff() < 1e-8);
        }
    }

    SUBCASE("projection raises prior density of shifted points") {
        ProjectionConfig cfg;
        const double strength = 4.0 * std::sqrt(0.3);
        int improved = 0;
        for (int i = 0; i < 200; ++i) {
            cfg.seed = 1000 + static_cast<std::uint64_t>(i);
            const Vector x = prior.means[static_cast<std::size_t>(i % 2)] + std::sqrt(0.3) * standard_normal(rng, d);
            const Vector v = unit_sphere(rng, d);
            const Vector out = project_to_manifold(x, v, strength, cfg, prior, s, map);
            if (gmm_log_density(prior, out) > gmm_log_density(prior, x - strength * v)) ++improved;
        }
        CHECK(improved >= 180);
    }

    SUBCASE("without projection it is the plain shift") {
        ProjectionConfig cfg;
        cfg.project = false;
        const Vector x = standard_normal(rng, d);
        const Vector v = unit_sphere(rng, d);
        CHECK(project_to_manifold(x, v, 2.5, cfg, prior, s, map) == x - 2.5 * v);
    }

    SUBCASE("errors") {
        ProjectionConfig cfg;
        const Vector x = standard_normal(rng, d);
        CHECK_THROWS_AS(project_to_manifold(x, 2.0 * unit_sphere(rng, d), 1.0, cfg, prior, s, map), std::invalid_argument);
        CHECK_THROWS_AS(project_to_manifold(x, unit_sphere(rng, d), -1.0, cfg, prior, s, map), std::invalid_argument);
        cfg.inference_steps = 10;
        CHECK_THROWS_AS(project_to_manifold(x, unit_sphere(rng, d), 1.0, cfg, prior, s, map), std::invalid_argument);
        cfg = {};
        cfg.extra_noise_fraction = 1.0;
        CHECK_THROWS_AS(project_to_manifold(x, unit_sphere(rng, d), 1.0, cfg, prior, s, map), std::invalid_argument);
    }
}

TEST_CASE("CanonicalMap") {
    const Dataset data = make_gmm(symmetric_gmm_spec(3, 1.0, 0.3, 200), 6);
    const CanonicalMap map = CanonicalMap::from_dataset(data);
    Matrix canon(data.size(), 3);
    for (Index i = 0; i < data.size(); ++i) canon.row(i) = map.to_canonical(data.sample(i)).transpose();
    CHECK(canon.colwise().mean().cwiseAbs().maxCoeff() < 1e-12);
    double mean_std = 0.0;
    for (Index j = 0; j < 3; ++j) mean_std += std::sqrt(canon.col(j).array().square().mean());
    CHECK(mean_std / 3.0 == doctest::Approx(0.5).epsilon(1e-12));
    const Vector x = data.sample(7);
    CHECK((map.from_canonical(map.to_canonical(x)) - x).cwiseAbs().maxCoeff() < 1e-12);
    const GmmPrior mapped = map.map_prior(GmmPrior::from_spec(symmetric_gmm_spec(3, 1.0, 0.3, 1)));
    CHECK(mapped.cov_scale == doctest::Approx(0.3 * map.scale * map.scale));
    CHECK((mapped.means[0] - map.to_canonical(Vector::Ones(3))).norm() < 1e-12);

    Dataset flat = data;
    flat.features.setConstant(2.0);
    CHECK_THROWS_AS(CanonicalMap::from_dataset(flat), std::invalid_argument);
}

TEST_CASE("perturb_dataset") {
    const DiffusionSchedule s = make_schedule();
    const auto spec = symmetric_gmm_spec(8, 1.0, 0.3, 20);
    const Dataset data = make_gmm(spec, 8);
    const GmmPrior prior = GmmPrior::from_spec(spec);
    const CanonicalMap map = CanonicalMap::from_dataset(data);
    const Attribution attr = attr_random(data, 9);

    ProjectionConfig cfg;
    cfg.extra_noise_fraction = 0.0;
    CHECK(perturb_dataset(data, attr, 0.0, cfg, prior, s, map).features == data.features);

    cfg = {};
    cfg.seed = 10;
    const Dataset a = perturb_dataset(data, attr, 3.0, cfg, prior, s, map);
    CHECK(a.labels == data.labels);
    CHECK(a.features.rows() == data.size());
    CHECK(a.features == perturb_dataset(data, attr, 3.0, cfg, prior, s, map).features);
    cfg.seed = 11;
    CHECK(a.features != perturb_dataset(data, attr, 3.0, cfg, prior, s, map).features);

    // Each row matches a direct projection with the same per-sample noise.
    cfg.seed = 10;
    for (Index i : {0, 5, 39}) {
        Rng rng(derive_seed(10, static_cast<std::uint64_t>(i)));
        const Vector g = standard_normal(rng, 8);
        const Vector direct = project_to_manifold(data.sample(i), attr.vectors.row(i).transpose(), 3.0, cfg, prior, s, map, &g);
        CHECK((a.sample(i) - direct).cwiseAbs().maxCoeff() < 1e-12);
    }

    SUBCASE("feature length") {
        Attribution doubled = attr;
        doubled.vectors *= 2.0;
        ProjectionConfig plain;
        plain.project = false;
        CHECK((perturb_dataset(data, doubled, 1.5, plain, prior, s, map).features -
               (data.features - 1.5 * attr.vectors))
                  .cwiseAbs()
                  .maxCoeff() < 1e-12);
        plain.unit_features = false;
        CHECK((perturb_dataset(data, doubled, 1.5, plain, prior, s, map).features -
               (data.features - 3.0 * attr.vectors))
                  .cwiseAbs()
                  .maxCoeff() < 1e-12);
    }
}

TEST_CASE("GmmPrior::fit_classes") {
    // Hand-computable: class 0 = {(0,0),(2,0)}, class 1 = {(0,4)}.
    Dataset tiny{(Matrix(3, 2) << 0, 0, 2, 0, 0, 4).finished(), {0, 0, 1}, 2, "tiny"};
    const GmmPrior p = GmmPrior::fit_classes(tiny);
    CHECK(p.means[0].isApprox((Vector(2) << 1, 0).finished()));
    CHECK(p.means[1].isApprox((Vector(2) << 0, 4).finished()));
    CHECK(p.weights[0] == doctest::Approx(2.0 / 3.0));
    // Residual sum of squares 2 over (3 - 2) * 2 degrees of freedom.
    CHECK(p.cov_scale == doctest::Approx(1.0));

    const auto spec = symmetric_gmm_spec(16, 1.0, 0.3, 2000);
    const GmmPrior fitted = GmmPrior::fit_classes(make_gmm(spec, 3));
    CHECK(fitted.cov_scale == doctest::Approx(0.3).epsilon(0.03));
    for (std::size_t c = 0; c < 2; ++c) CHECK((fitted.means[c] - spec.means[c]).cwiseAbs().maxCoeff() < 4 * std::sqrt(0.3 / 2000));

    Dataset missing{(Matrix(2, 2) << 0, 0, 1, 1).finished(), {0, 0}, 2, "m"};
    CHECK_THROWS_AS(GmmPrior::fit_classes(missing), std::invalid_argument);
}
