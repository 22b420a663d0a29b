// Acceptance suite: one PASS/FAIL line per criterion. Arguments select a
// subset of criteria by number; with none, all run. Exit status is nonzero if
// any selected criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <string>

#include "goar/attribution.hpp"
#include "goar/curve.hpp"
#include "goar/data.hpp"
#include "goar/diffusion.hpp"
#include "goar/evaluation.hpp"
#include "goar/harness/presets.hpp"
#include "goar/harness/runner.hpp"
#include "goar/rng.hpp"
#include "test_util.hpp"

using namespace goar;
namespace h = goar::harness;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(double x, int digits = 4) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*g", digits, x);
    return buf;
}

const DegradationCurve& find_curve(const h::ExperimentResult& r, const std::string& strategy, const std::string& method) {
    for (const auto& c : r.curves)
        if (c.strategy == strategy && c.method == method) return c;
    throw std::runtime_error("missing curve " + strategy + "/" + method);
}

double drop_of(const h::ExperimentResult& r, const std::string& strategy, const std::string& method) {
    for (const auto& d : r.drops)
        if (d.strategy == strategy && d.method == method) return d.score;
    throw std::runtime_error("missing drop score " + strategy + "/" + method);
}

// Normalized trapezoid area under the accuracy series.
double accuracy_auc(const DegradationCurve& c) {
    double area = 0.0;
    for (std::size_t j = 1; j < c.points.size(); ++j)
        area += 0.5 * (c.points[j].accuracy + c.points[j - 1].accuracy) * (c.points[j].level - c.points[j - 1].level);
    return area / (c.points.back().level - c.points.front().level);
}

// Index of the first grid level with accuracy below `chance`, or -1.
int first_level_below(const DegradationCurve& c, double chance) {
    for (std::size_t j = 0; j < c.points.size(); ++j)
        if (c.points[j].accuracy < chance) return static_cast<int>(j);
    return -1;
}

Outcome pitfall_identity() {
    const auto r = h::run_experiment(h::pitfall_preset({1, 2, 0.01}, 1));
    const auto& a = find_curve(r, "roar", "e(1,2,0)");
    const auto& b = find_curve(r, "roar", "e(2,1,0)");
    double max_gap = 0.0;
    bool below_only_after_two = true, reaches_below = false;
    for (std::size_t j = 0; j < a.points.size(); ++j) {
        max_gap = std::max(max_gap, std::abs(a.points[j].accuracy - b.points[j].accuracy));
        const auto removed = std::lround(a.points[j].level * 3.0);
        for (const auto* c : {&a, &b}) {
            const bool below = c->points[j].accuracy < 0.6;
            if (below && removed < 2) below_only_after_two = false;
            if (below) reaches_below = true;
        }
    }
    std::ostringstream s;
    s << "max |acc(e)-acc(e')| = " << fmt(max_gap) << "; acc(e) by removed coords:";
    for (const auto& p : a.points) s << " " << fmt(p.accuracy, 3);
    return {a.points.size() == 4 && max_gap <= 0.02 && below_only_after_two && reaches_below, s.str()};
}

Outcome pitfall_coordinates() {
    std::vector<double> dx(8, 0.0);
    dx[0] = 1.0;
    const auto r = h::run_experiment(h::pitfall_preset(dx, 1, 5));
    const auto& axis = find_curve(r, "roar", "e(1,0,0,0,0,0,0,0)");
    const auto& rotated = find_curve(r, "roar", "rotated e(1,0,0,0,0,0,0,0)");
    const int k_axis = first_level_below(axis, 0.6), k_rot = first_level_below(rotated, 0.6);
    std::ostringstream s;
    s << "chance (<0.6) after " << k_axis << " removed (axis-aligned) vs " << k_rot << " (rotated)";
    return {k_axis == 1 && k_rot >= 6 && k_rot - k_axis >= 4, s.str()};
}

Outcome blend_ordering() {
    const std::vector<double> lambdas{0, 0.25, 0.5, 0.75, 1};
    const auto r = h::run_experiment(h::blend_preset(lambdas, 1));
    std::vector<double> goar, roar;
    for (double l : lambdas) {
        const std::string m = "lambda=" + h::format_double(l);
        goar.push_back(drop_of(r, "goar", m));
        roar.push_back(accuracy_auc(find_curve(r, "roar", m)));
    }
    double min_margin = 1e9, roar_gap = 0.0;
    for (std::size_t i = 0; i + 1 < goar.size(); ++i) min_margin = std::min(min_margin, goar[i + 1] - goar[i]);
    for (double x : roar)
        for (double y : roar) roar_gap = std::max(roar_gap, std::abs(x - y));
    std::ostringstream s;
    s << "GOAR AUC";
    for (double g : goar) s << " " << fmt(g, 3);
    s << " (min margin " << fmt(min_margin, 3) << "); ROAR AUC max gap " << fmt(roar_gap, 3);
    return {min_margin >= 0.03 && roar_gap < 0.05, s.str()};
}

Outcome openxai_signs() {
    const auto r = h::run_experiment(h::openxai_preset(1));
    const auto& t = *r.correlations;
    auto get = [&](const char* b, const char* m) { return t.at(b, m).r; };
    const auto goar_ra = get("goar", "RA"), goar_sra = get("goar", "SRA");
    const auto roar_ra = get("roar", "RA"), roar_sra = get("roar", "SRA");
    const bool defined = goar_ra && goar_sra && roar_ra && roar_sra;
    std::ostringstream s;
    if (!defined) return {false, "a correlation is undefined"};
    s << "GOAR r(RA) " << fmt(*goar_ra, 3) << " r(SRA) " << fmt(*goar_sra, 3) << "; ROAR r(RA) " << fmt(*roar_ra, 3)
      << " r(SRA) " << fmt(*roar_sra, 3);
    const bool pass = *goar_ra > 0.5 && *roar_ra < 0.2 && *goar_sra > 0.0 && *roar_ra < 0.0 && *roar_sra < 0.0;
    return {pass, s.str()};
}

Outcome projection_ablation() {
    const auto r = h::run_experiment(h::ablation_preset(1));
    const double np_grad = drop_of(r, "goar_noproj", "grad"), np_rand = drop_of(r, "goar_noproj", "random");
    const double p_grad = drop_of(r, "goar", "grad"), p_rand = drop_of(r, "goar", "random");
    std::ostringstream s;
    s << "no projection: Grad " << fmt(np_grad, 3) << " vs Random " << fmt(np_rand, 3) << "; projection: Grad "
      << fmt(p_grad, 3) << " vs Random " << fmt(p_rand, 3);
    return {np_grad <= np_rand + 0.05 && p_grad >= p_rand + 0.1, s.str()};
}

Outcome denoiser_oracle() {
    const DiffusionSchedule schedule = make_schedule();
    const Index d = 2;
    Rng rng(2);
    const std::vector<GmmPrior> priors{
        {{(Vector(d) << 0.5, -0.2).finished()}, 0.3, {1.0}},
        {{(Vector(d) << 1.0, 1.0).finished(), (Vector(d) << -1.0, -1.0).finished()}, 0.3, {0.3, 0.7}},
    };
    double worst = 0.0, sum_sq = 0.0;
    int checked = 0;
    for (const auto& prior : priors) {
        for (int t : {50, 200, 400, 600, 900}) {
            const double abar = schedule.alpha_bar(t);
            const Vector x0 = prior.means.back() + std::sqrt(prior.cov_scale) * standard_normal(rng, d);
            const Vector x_t = std::sqrt(abar) * x0 + std::sqrt(1 - abar) * standard_normal(rng, d);
            const Vector got = gmm_eps_predictor(prior, x_t, t, schedule);
            const auto mc = test::monte_carlo_eps(prior.means, prior.cov_scale, prior.weights, x_t, abar, 100000,
                                                  derive_seed(7, static_cast<std::uint64_t>(t)));
            for (Index j = 0; j < d; ++j) {
                const double z = (got[j] - mc.mean[j]) / mc.standard_error[j];
                worst = std::max(worst, std::abs(z));
                sum_sq += z * z;
                ++checked;
            }
        }
    }
    return {worst <= 3.0, std::to_string(checked) + " coordinates, worst deviation " + fmt(worst, 3) + " SE, rms " +
                              fmt(std::sqrt(sum_sq / checked), 3) + " SE"};
}

Outcome rotation_equivariance() {
    const DiffusionSchedule schedule = make_schedule();
    const Index d = 16;
    const GmmSpec spec = symmetric_gmm_spec(d, 1.0, 0.3, 10);
    const GmmPrior prior = GmmPrior::from_spec(spec);
    const Matrix r = random_rotation(d, 71);
    GmmPrior rotated = prior;
    for (auto& m : rotated.means) m = r * m;
    Rng rng(72);
    const CanonicalMap map{0.3 * standard_normal(rng, d), 0.6};
    const CanonicalMap rotated_map{r * map.center, map.scale};
    ProjectionConfig cfg;
    double worst = 0.0;
    for (int i = 0; i < 50; ++i) {
        const Vector x = prior.means[static_cast<std::size_t>(i % 2)] + std::sqrt(0.3) * standard_normal(rng, d);
        const Vector v = unit_sphere(rng, d);
        const Vector g = standard_normal(rng, d);
        const Vector rg = r * g;
        const double strength = 0.4 * (i % 10);
        const Vector a = project_to_manifold(x, v, strength, cfg, prior, schedule, map, &g);
        const Vector b = project_to_manifold(r * x, r * v, strength, cfg, rotated, schedule, rotated_map, &rg);
        worst = std::max(worst, (r * a - b).cwiseAbs().maxCoeff());
    }
    return {worst < 1e-6, "50 samples, max |R P(x) - P(Rx)| = " + fmt(worst, 3)};
}

Outcome numerical_hygiene() {
    std::vector<std::string> failures;
    Rng rng(81);

    // Input gradients against central differences.
    double worst_fd = 0.0;
    int redraws = 0;
    for (int pair = 0; pair < 100; ++pair) {
        const Index d = 2 + pair % 9;
        const auto model = test::random_model({static_cast<std::size_t>(d), 12, 8, 3}, 500 + static_cast<std::uint64_t>(pair));
        Vector x = standard_normal(rng, d);
        // Central differences are exact only where the ReLU pattern is constant.
        while (!test::stencil_is_smooth(model, x, 1e-5)) {
            x = standard_normal(rng, d);
            ++redraws;
        }
        const Index k = pair % 3;
        const Vector fd = test::central_difference(model, x, k, 1e-5);
        const Vector g = input_gradient(model, x, k);
        worst_fd = std::max(worst_fd, (g - fd).norm() / std::max(fd.norm(), 1e-12));
    }
    if (!(worst_fd < 1e-4)) failures.push_back("FD rel-err " + fmt(worst_fd));

    // IG completeness on a trained network.
    const Dataset data = make_gmm(symmetric_gmm_spec(16, 0.5, 0.3, 150), 82);
    TrainConfig cfg;
    cfg.seed = 83;
    cfg.hidden_layers = {64, 64};
    const ModelParams net = fit_classifier(data, cfg);
    const Dataset probe = subset(data, {0, 1, 2, 3, 4, 150, 151, 152, 153, 154, 40, 190, 77, 230, 299});
    const Vector baseline = Vector::Zero(16);
    const Attribution ig = attr_integrated_gradients(net, probe, baseline, 256);
    double worst_ig = 0.0;
    for (Index i = 0; i < probe.size(); ++i) {
        const int y = probe.labels[static_cast<std::size_t>(i)];
        const double delta = test::naive_forward(net, probe.sample(i))[y] - test::naive_forward(net, baseline)[y];
        worst_ig = std::max(worst_ig, std::abs(ig.vectors.row(i).sum() - delta) / std::abs(delta));
    }
    if (!(worst_ig <= 0.01)) failures.push_back("IG completeness " + fmt(worst_ig));

    // SmoothGrad without noise is the gradient, bit for bit.
    const bool sg_exact = attr_smoothgrad(net, probe, 16, 0.0, 84).vectors == attr_grad(net, probe).vectors;
    if (!sg_exact) failures.push_back("SmoothGrad(0) differs from Grad");

    // Cumulative curves.
    int bad_cumulative = 0;
    std::uniform_int_distribution<int> size(1, 20);
    for (int trial = 0; trial < 1000; ++trial) {
        const int levels = size(rng), n = size(rng);
        std::bernoulli_distribution coin(std::uniform_real_distribution<double>(0.0, 1.0)(rng));
        std::vector<std::vector<bool>> correct(static_cast<std::size_t>(levels), std::vector<bool>(static_cast<std::size_t>(n)));
        for (auto& row : correct)
            for (std::size_t i = 0; i < row.size(); ++i) row[i] = coin(rng);
        const auto cum = cumulative_from_predictions(correct);
        for (std::size_t j = 0; j < cum.size(); ++j) {
            const double wrong = static_cast<double>(std::count(correct[j].begin(), correct[j].end(), false)) / n;
            if ((j > 0 && cum[j] < cum[j - 1]) || cum[j] > 1.0 || cum[j] < wrong) ++bad_cumulative;
        }
    }
    if (bad_cumulative) failures.push_back(std::to_string(bad_cumulative) + " cumulative violations");

    // Agreement inclusion chain.
    int bad_chain = 0;
    for (int trial = 0; trial < 1000; ++trial) {
        const Index d = 2 + trial % 30;
        const Vector a = standard_normal(rng, d);
        const Vector b = trial % 2 ? standard_normal(rng, d) : Vector(a + 0.5 * standard_normal(rng, d));
        const auto s = topk_agreement(a, b, 1 + trial % d);
        if (!(s.sra <= s.ra && s.ra <= s.fa && s.sra <= s.sa)) ++bad_chain;
    }
    if (bad_chain) failures.push_back(std::to_string(bad_chain) + " inclusion-chain violations");

    std::ostringstream s;
    s << "FD rel-err " << fmt(worst_fd, 3) << " (" << redraws << " kink redraws), IG completeness err " << fmt(worst_ig, 3)
      << ", SG(0)==Grad " << (sg_exact ? "yes" : "no") << ", cumulative violations " << bad_cumulative
      << ", chain violations " << bad_chain;
    return {failures.empty(), s.str()};
}

struct Criterion {
    int id;
    const char* name;
    double limit_seconds;  // 0: no limit
    std::function<Outcome()> run;
};

}  // namespace

int main(int argc, char** argv) {
    const std::vector<Criterion> criteria{
        {1, "pitfall-2 identity", 60, pitfall_identity},
        {2, "pitfall-1 coordinate dependence", 120, pitfall_coordinates},
        {3, "noise-blend ordering", 900, blend_ordering},
        {4, "ground-truth correlation signs", 1200, openxai_signs},
        {5, "projection ablation", 900, projection_ablation},
        {6, "denoiser vs Monte-Carlo oracle", 120, denoiser_oracle},
        {7, "rotation equivariance", 0, rotation_equivariance},
        {8, "numerical hygiene", 0, numerical_hygiene},
    };
    std::set<int> selected;
    for (int i = 1; i < argc; ++i) selected.insert(std::atoi(argv[i]));

    int failed = 0;
    for (const auto& c : criteria) {
        if (!selected.empty() && !selected.count(c.id)) continue;
        const auto start = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        const bool in_time = c.limit_seconds == 0 || secs < c.limit_seconds;
        const bool pass = o.pass && in_time;
        if (!pass) ++failed;
        std::printf("%s criterion %d (%s): %s [%.1fs%s]\n", pass ? "PASS" : "FAIL", c.id, c.name, o.detail.c_str(), secs,
                    in_time ? "" : ", over the time limit");
        std::fflush(stdout);
    }
    return failed == 0 ? 0 : 1;
}
