#include "goar/harness/runner.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <map>
#include <tuple>

#include <json.hpp>

#include "goar/attribution.hpp"
#include "goar/data.hpp"
#include "goar/diffusion.hpp"
#include "goar/harness/svg.hpp"
#include "goar/parallel.hpp"
#include "goar/pixel.hpp"
#include "goar/rng.hpp"

namespace goar::harness {

namespace {

// Stream ids for derive_seed(config.seed, ...).
enum Stream : std::uint64_t { data_stream = 1, split_stream, train_stream, projection_stream, pixel_stream,
                              attribution_stream, blend_stream, bootstrap_stream };

// One train/test representation of the data with its own denoiser prior.
struct Variant {
    TrainTestSplit parts;
    GmmPrior prior;
    CanonicalMap map;
};

struct Entry {
    std::string label;
    std::size_t variant = 0;
    Attribution train;
    Attribution test;
};

GmmSpec gmm_spec(const DatasetConfig& d) {
    Vector profile(d.dim);
    for (Index i = 0; i < d.dim; ++i)
        profile[i] = d.mean_profile == "linear" ? static_cast<double>(i + 1) / static_cast<double>(d.dim) : 1.0;
    GmmSpec spec;
    spec.means = {-d.mean_scale * profile, d.mean_scale * profile};
    spec.cov_scale = d.cov_scale;
    spec.weights = {0.5, 0.5};
    spec.samples_per_class = d.samples_per_class;
    return spec;
}

Vector to_vector(const std::vector<double>& v) {
    return Eigen::Map<const Vector>(v.data(), static_cast<Index>(v.size()));
}

Attribution constant_attribution(const Dataset& data, const Vector& v, const std::string& label) {
    Attribution a{Matrix(data.size(), data.dim()), label, {}};
    for (Index i = 0; i < data.size(); ++i) a.vectors.row(i) = v.transpose();
    return a;
}

std::string vector_label(const std::vector<double>& v) {
    std::string out = "e(";
    for (std::size_t i = 0; i < v.size(); ++i) out += (i ? "," : "") + format_double(v[i]);
    return out + ")";
}

Variant make_variant(TrainTestSplit parts, const std::optional<GmmSpec>& spec) {
    GmmPrior prior = spec ? GmmPrior::from_spec(*spec) : GmmPrior::fit_classes(parts.train);
    CanonicalMap map = CanonicalMap::from_dataset(parts.train);
    return {std::move(parts), std::move(prior), std::move(map)};
}

PixelGrid pixel_grid(const StrategiesConfig& s, Index dim) {
    if (!s.pixel_fractions.empty()) return {s.pixel_fractions};
    PixelGrid grid;
    for (Index i = 1; i <= dim; ++i) grid.perturb_fractions.push_back(static_cast<double>(i) / static_cast<double>(dim));
    return grid;
}

Attribution method_attribution(const std::string& name, const ModelParams& model, const Dataset& data,
                               const MethodsConfig& m, const LinearModel* logistic, GroundTruthMode gt_mode,
                               std::uint64_t seed) {
    if (name == "grad") return attr_grad(model, data);
    if (name == "grad_x_input") return attr_grad_x_input(model, data);
    if (name == "smoothgrad") return attr_smoothgrad(model, data, m.smoothgrad_samples, m.smoothgrad_noise, seed);
    if (name == "integrated_gradients")
        return attr_integrated_gradients(model, data, Vector::Zero(data.dim()), m.ig_steps);
    if (name == "random") return attr_random(data, seed);
    if (name == "ground_truth") return ground_truth_from_linear(*logistic, data, gt_mode);
    throw std::invalid_argument("unknown method '" + name + "'");
}

nlohmann::json base_manifest(const ExperimentConfig& config, double wall_seconds) {
    nlohmann::json j;
    j["tool"] = "goar";
    j["version"] = kToolVersion;
    j["experiment"] = config.name;
    j["kind"] = to_string(config.kind);
    j["config"] = to_text(config);
    j["wall_clock_seconds"] = wall_seconds;
    j["environment"] = {
        {"workers", worker_count()},
        {"compiler", __VERSION__},
        {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                      std::to_string(EIGEN_MINOR_VERSION)},
        {"note", "results are bit-identical for the same config, seed and binary on one platform; "
                 "the worker count does not change any number"},
    };
    j["drop_scalarization"] =
        "normalized trapezoid area over the level grid: cumulative misclassification for goar strategies, "
        "clean accuracy minus accuracy for pixel strategies";
    j["goar_strength_units"] =
        "relative; input-space strength = level * strength_unit, strength_unit = mean per-coordinate std * sqrt(dim)";
    return j;
}

}  // namespace

ExperimentResult run_experiment(const ExperimentConfig& config) {
    validate(config);
    ExperimentResult result;
    const auto seed_of = [&](const std::string& name, Stream s) {
        const auto value = derive_seed(config.seed, s);
        result.seeds.emplace_back(name, value);
        return value;
    };
    const auto data_seed = seed_of("data", data_stream);
    const auto split_seed = seed_of("split", split_stream);
    TrainConfig training = config.training;
    training.seed = seed_of("training", train_stream);
    const auto projection_seed = seed_of("projection", projection_stream);
    const auto pixel_seed = seed_of("pixel", pixel_stream);
    const auto attribution_seed = seed_of("attribution", attribution_stream);
    const auto blend_seed = seed_of("blend", blend_stream);
    const auto bootstrap_seed = seed_of("bootstrap", bootstrap_stream);

    const auto& dc = config.dataset;
    Dataset data;
    std::optional<GmmSpec> spec;
    switch (dc.type) {
        case DatasetType::gmm:
            spec = gmm_spec(dc);
            data = make_gmm(*spec, data_seed);
            break;
        case DatasetType::pitfall:
            data = make_pitfall({to_vector(dc.dx), dc.eps, dc.cluster_std, dc.samples_per_class}, data_seed);
            break;
        case DatasetType::csv:
            data = load_csv(dc.path, dc.label_column, dc.feature_columns).data;
            break;
    }
    if (config.metrics.top_k && *config.metrics.top_k > data.dim())
        throw std::invalid_argument("metrics.top_k exceeds the data dimension");
    if (config.strategies.road_grid && config.strategies.road_grid->height * config.strategies.road_grid->width != data.dim())
        throw std::invalid_argument("strategies.road_grid does not match the data dimension");

    std::vector<Variant> variants;
    variants.reserve(2);  // base, rotated; references into it stay valid
    variants.push_back(make_variant(split(data, dc.test_fraction, split_seed), spec));
    const Variant& base = variants.front();
    const Dataset& train_set = base.parts.train;
    const Dataset& test_set = base.parts.test;

    const ModelParams clean = fit_classifier(train_set, training);
    result.clean_accuracy = accuracy(clean, test_set);

    const bool needs_logistic =
        config.kind == ExperimentKind::openxai_corr ||
        (config.kind == ExperimentKind::blend_study && config.methods.blend_base == BlendBase::ground_truth) ||
        std::count(config.methods.list.begin(), config.methods.list.end(), "ground_truth") > 0;
    std::optional<LinearModel> logistic;
    if (needs_logistic) {
        TrainConfig lc = training;
        lc.l2 = config.ground_truth.l2;
        logistic = fit_logistic(train_set, lc);
    }
    const GroundTruthMode gt_mode = config.ground_truth.mode;

    std::vector<Entry> entries;
    switch (config.kind) {
        case ExperimentKind::pitfall: {
            for (const auto& f : config.methods.features) {
                const std::string label = vector_label(f);
                entries.push_back({label, 0, constant_attribution(train_set, to_vector(f), label),
                                   constant_attribution(test_set, to_vector(f), label)});
            }
            if (dc.rotation_seed) {
                const Matrix rotation = random_rotation(data.dim(), *dc.rotation_seed);
                variants.push_back(make_variant({rotate_dataset(train_set, rotation), rotate_dataset(test_set, rotation)},
                                                std::nullopt));
                const auto& rotated = variants.back().parts;
                for (const auto& f : config.methods.features) {
                    const std::string label = "rotated " + vector_label(f);
                    const Vector rf = rotation * to_vector(f);
                    entries.push_back({label, 1, constant_attribution(rotated.train, rf, label),
                                       constant_attribution(rotated.test, rf, label)});
                }
            }
            break;
        }
        case ExperimentKind::blend_study: {
            const bool from_gradient = config.methods.blend_base == BlendBase::gradient;
            const Attribution base_train = from_gradient ? attr_grad(clean, train_set)
                                                         : ground_truth_from_linear(*logistic, train_set, gt_mode);
            const Attribution base_test = from_gradient ? attr_grad(clean, test_set)
                                                        : ground_truth_from_linear(*logistic, test_set, gt_mode);
            // The same noise directions are reused for every lambda.
            for (double lambda : config.methods.lambdas) {
                const std::string label = "lambda=" + format_double(lambda);
                Attribution tr = blend_with_noise(base_train, {lambda, derive_seed(blend_seed, 0)});
                Attribution te = blend_with_noise(base_test, {lambda, derive_seed(blend_seed, 1)});
                tr.method = te.method = label;
                entries.push_back({label, 0, std::move(tr), std::move(te)});
            }
            break;
        }
        case ExperimentKind::openxai_corr:
        case ExperimentKind::custom_curve: {
            for (std::size_t i = 0; i < config.methods.list.size(); ++i) {
                const auto& name = config.methods.list[i];
                const LinearModel* lm = logistic ? &*logistic : nullptr;
                entries.push_back({name, 0,
                                   method_attribution(name, clean, train_set, config.methods, lm, gt_mode,
                                                      derive_seed(attribution_seed, 2 * i)),
                                   method_attribution(name, clean, test_set, config.methods, lm, gt_mode,
                                                      derive_seed(attribution_seed, 2 * i + 1))});
                entries.back().train.method = entries.back().test.method = name;
            }
            break;
        }
    }

    const DiffusionSchedule schedule = make_schedule();
    result.strength_unit = 0.5 / base.map.scale * std::sqrt(static_cast<double>(data.dim()));
    PixelOptions pixel;
    pixel.rank_by = config.strategies.rank_by;
    pixel.grid_shape = config.strategies.road_grid;
    pixel.road_noise_std = config.strategies.road_noise;
    pixel.evalx_mask_prob = config.strategies.evalx_mask_prob;
    pixel.seed = pixel_seed;
    const PixelGrid grid = pixel_grid(config.strategies, data.dim());

    for (const auto& strategy : config.strategies.list) {
        for (const auto& entry : entries) {
            const Variant& v = variants[entry.variant];
            DegradationCurve curve;
            if (strategy == "goar" || strategy == "goar_noproj") {
                const double unit = 0.5 / v.map.scale * std::sqrt(static_cast<double>(data.dim()));
                std::vector<double> strengths;
                for (double s : config.strategies.goar_strengths) strengths.push_back(s * unit);
                ProjectionConfig projection;
                projection.seed = projection_seed;
                projection.project = strategy == "goar";
                projection.unit_features = config.strategies.unit_features(config.kind);
                projection.extra_noise_fraction = config.strategies.goar_extra_noise;
                curve = run_goar(v.parts.train, entry.train, v.parts.test, entry.test, strengths, training, projection,
                                 v.prior, schedule, v.map);
                for (auto& p : curve.points) p.level /= unit;
            } else {
                const PixelStrategy ps = strategy == "roar"    ? PixelStrategy::roar
                                         : strategy == "evalx" ? PixelStrategy::evalx
                                                               : PixelStrategy::road;
                curve = run_pixel_strategy(ps, v.parts.train, entry.train, v.parts.test, entry.test, grid, training, pixel);
            }
            curve.strategy = strategy;
            curve.method = entry.label;
            result.curves.push_back(std::move(curve));
        }
    }
    std::stable_sort(result.curves.begin(), result.curves.end(), [](const auto& a, const auto& b) {
        return std::tie(a.strategy, a.method) < std::tie(b.strategy, b.method);
    });
    for (const auto& c : result.curves) {
        const DropMeasure measure = default_drop_measure(c);
        result.drops.push_back({c.strategy, c.method, performance_drop_score(c, measure), measure});
    }

    if (config.kind == ExperimentKind::openxai_corr) {
        const Attribution gt_test = ground_truth_from_linear(*logistic, test_set, gt_mode);
        const Index k = config.metrics.top_k.value_or(default_top_k(data.dim()));
        std::vector<AgreementScores> scores;
        for (const auto& entry : entries) {
            scores.push_back(agreement_scores(entry.test, gt_test, k, config.strategies.rank_by));
            result.agreements.push_back({entry.label, scores.back()});
        }
        std::vector<BenchmarkDrops> drops;
        for (const auto& strategy : config.strategies.list) {
            BenchmarkDrops b{strategy, {}};
            for (const auto& entry : entries)
                for (const auto& d : result.drops)
                    if (d.strategy == strategy && d.method == entry.label) b.drops.push_back(d.score);
            drops.push_back(std::move(b));
        }
        result.correlations = correlation_table(drops, scores, config.metrics.bootstrap, bootstrap_seed);
        std::sort(result.agreements.begin(), result.agreements.end(),
                  [](const auto& a, const auto& b) { return a.method < b.method; });
        result.notes.push_back("ground truth: multinomial logistic regression on the training split (" +
                               std::string(gt_mode == GroundTruthMode::coefficient ? "coefficient" : "coefficient_times_input") +
                               " contrast); agreement averaged over the test split; bootstrap resamples methods");
    }
    if (config.kind == ExperimentKind::blend_study)
        result.notes.push_back(std::string("blend base: ") + to_string(config.methods.blend_base) +
                               "; one noise direction per sample shared by all lambdas");
    return result;
}

void write_report(const ExperimentConfig& config, const ExperimentResult& result, const std::filesystem::path& dir,
                  double wall_seconds) {
    std::filesystem::create_directories(dir);
    std::vector<std::string> files{"curves.csv", "scores.csv", "agreement.csv", "correlations.csv"};
    write_text_file(dir / "curves.csv", curves_csv(result.curves));
    write_text_file(dir / "scores.csv", scores_csv(result.drops));
    write_text_file(dir / "agreement.csv", agreement_csv(result.agreements));
    write_text_file(dir / "correlations.csv", correlations_csv(result.correlations.value_or(CorrelationTable{})));

    std::map<std::string, std::vector<DegradationCurve>> families;
    for (const auto& c : result.curves) families[c.strategy].push_back(c);
    for (const auto& [strategy, curves] : families) {
        const std::string name = "curves_" + strategy + ".svg";
        emit_svg_plot(curves, dir / name, {config.name + ": " + strategy, PlotMetric::automatic});
        files.push_back(name);
    }

    nlohmann::json j = base_manifest(config, wall_seconds);
    j["status"] = "complete";
    j["clean_accuracy"] = result.clean_accuracy;
    j["strength_unit"] = result.strength_unit;
    nlohmann::json seeds = nlohmann::json::object();
    seeds["experiment"] = config.seed;
    for (const auto& [name, value] : result.seeds) seeds[name] = value;
    j["seeds"] = seeds;
    j["notes"] = result.notes;
    files.push_back("manifest.json");
    j["files"] = files;
    write_text_file(dir / "manifest.json", j.dump(2) + "\n");
}

void write_failure_manifest(const ExperimentConfig& config, const std::string& error, const std::filesystem::path& dir,
                            double wall_seconds) {
    std::filesystem::create_directories(dir);
    nlohmann::json j = base_manifest(config, wall_seconds);
    j["status"] = "failed";
    j["error"] = error;
    j["note"] = "partial run: files other than manifest.json in this directory may be missing or stale";
    write_text_file(dir / "manifest.json", j.dump(2) + "\n");
}

ExperimentResult run_and_report(const ExperimentConfig& config, const std::filesystem::path& dir) {
    const auto start = std::chrono::steady_clock::now();
    auto elapsed = [&] { return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count(); };
    try {
        ExperimentResult result = run_experiment(config);
        write_report(config, result, dir, elapsed());
        return result;
    } catch (const std::exception& ex) {
        try {
            write_failure_manifest(config, ex.what(), dir, elapsed());
        } catch (...) {
            // The original error matters more than a failed manifest write.
        }
        throw;
    }
}

}  // namespace goar::harness
