// Command-line front end for the experiment harness.
//
// Exit codes: 0 success, 1 configuration or usage error, 2 runtime error.

#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "goar/harness/config.hpp"
#include "goar/harness/presets.hpp"
#include "goar/harness/runner.hpp"
#include "goar/harness/svg.hpp"

namespace h = goar::harness;

namespace {

constexpr int kConfigError = 1;
constexpr int kRuntimeError = 2;

std::vector<double> parse_numbers(const std::string& text, const std::string& what) {
    try {
        return h::parse_grid(text);
    } catch (const std::exception& ex) {
        throw h::ConfigError(what, 0, ex.what());
    }
}

int execute(const h::ExperimentConfig& config, const std::string& out, bool dry_run) {
    if (dry_run) {
        std::cout << h::to_text(config);
        return 0;
    }
    const auto result = h::run_and_report(config, out);
    std::cout << "wrote " << result.curves.size() << " curves to " << out << "\n";
    for (const auto& d : result.drops)
        std::cout << "  " << d.strategy << " " << d.method << " drop=" << h::format_double(d.score) << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Geometric remove-and-retrain experiments (set GOAR_WORKERS to bound the worker pool)"};
    app.require_subcommand(1);
    bool dry_run = false;
    app.add_flag("--dry-run", dry_run, "Print the resolved config instead of running it");

    std::string config_path, out;
    auto* run = app.add_subcommand("run", "Run an experiment described by a config file");
    run->add_option("config", config_path, "Config file")->required();
    run->add_option("--out", out, "Output directory (default: results/<experiment name>)");

    std::string dx_text;
    std::uint64_t seed = 1;
    std::optional<std::uint64_t> rotation_seed;
    std::string features_text;
    auto* pitfall = app.add_subcommand("pitfall", "ROAR on two feature vectors of the same pitfall data");
    pitfall->add_option("--dx", dx_text, "Class-1 offset, comma separated")->required();
    pitfall->add_option("--out", out, "Output directory")->required();
    pitfall->add_option("--seed", seed, "Experiment seed");
    pitfall->add_option("--rotation-seed", rotation_seed, "Also run on a copy rotated by this seeded rotation");
    pitfall->add_option("--features", features_text, "Feature vectors separated by ';' (default: e and e')");

    std::string lambdas_text = "0,0.25,0.5,0.75,1";
    std::string base = "ground_truth";
    auto* blend = app.add_subcommand("blend", "GOAR and ROAR on noise blends of a reference feature");
    blend->add_option("--lambdas", lambdas_text, "Blend weights of the reference feature");
    blend->add_option("--out", out, "Output directory")->required();
    blend->add_option("--seed", seed, "Experiment seed");
    blend->add_option("--base", base, "Reference feature")->check(CLI::IsMember({"ground_truth", "gradient"}));

    auto* openxai = app.add_subcommand("openxai", "Correlation of benchmark drops with ground-truth agreement");
    openxai->add_option("--out", out, "Output directory")->required();
    openxai->add_option("--seed", seed, "Experiment seed");

    auto* ablation = app.add_subcommand("ablation", "GOAR with and without manifold projection");
    ablation->add_option("--out", out, "Output directory")->required();
    ablation->add_option("--seed", seed, "Experiment seed");

    std::string curves_path, metric = "auto", strategy, title;
    auto* plot = app.add_subcommand("plot", "Render curves.csv as an SVG line chart");
    plot->add_option("curves", curves_path, "curves.csv written by a run")->required();
    plot->add_option("--out", out, "SVG file")->required();
    plot->add_option("--metric", metric, "Series to plot")->check(CLI::IsMember({"auto", "accuracy", "cumulative"}));
    plot->add_option("--strategy", strategy, "Only curves of this strategy");
    plot->add_option("--title", title, "Chart title");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kConfigError;
    }

    h::ExperimentConfig config;
    try {
        if (*run) {
            config = h::parse_config(config_path);
            if (out.empty()) out = "results/" + config.name;
        } else if (*pitfall) {
            config = h::pitfall_preset(parse_numbers(dx_text, "--dx"), seed, rotation_seed);
            if (!features_text.empty()) {
                config.methods.features.clear();
                std::size_t start = 0;
                while (start <= features_text.size()) {
                    const auto end = std::min(features_text.find(';', start), features_text.size());
                    config.methods.features.push_back(parse_numbers(features_text.substr(start, end - start), "--features"));
                    start = end + 1;
                }
                h::validate(config);
            }
        } else if (*blend) {
            config = h::blend_preset(parse_numbers(lambdas_text, "--lambdas"), seed);
            config.methods.blend_base = base == "gradient" ? h::BlendBase::gradient : h::BlendBase::ground_truth;
        } else if (*openxai) {
            config = h::openxai_preset(seed);
        } else if (*ablation) {
            config = h::ablation_preset(seed);
        }
    } catch (const h::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kConfigError;
    } catch (const std::exception& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kConfigError;
    }

    try {
        if (*plot) {
            auto curves = h::read_curves_csv(curves_path);
            if (!strategy.empty())
                std::erase_if(curves, [&](const goar::DegradationCurve& c) { return c.strategy != strategy; });
            if (curves.empty()) {
                std::cerr << "config error: no curves to plot\n";
                return kConfigError;
            }
            const auto m = metric == "accuracy"     ? h::PlotMetric::accuracy
                           : metric == "cumulative" ? h::PlotMetric::cumulative_misclassified
                                                    : h::PlotMetric::automatic;
            h::emit_svg_plot(curves, out, {title, m});
            return 0;
        }
        return execute(config, out, dry_run);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kRuntimeError;
    }
}
