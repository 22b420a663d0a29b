#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "goar/common.hpp"
#include "goar/nn.hpp"
#include "goar/pixel.hpp"

namespace goar::harness {

// Raised for anything wrong with a config file; line is 0 when the problem is
// not tied to a single line (a missing key, for instance).
class ConfigError : public std::runtime_error {
public:
    ConfigError(const std::string& source, int line, const std::string& message);
    int line() const { return line_; }

private:
    int line_;
};

enum class ExperimentKind { pitfall, blend_study, openxai_corr, custom_curve };
enum class DatasetType { gmm, pitfall, csv };
enum class BlendBase { gradient, ground_truth };

const char* to_string(ExperimentKind kind);
const char* to_string(DatasetType type);
const char* to_string(BlendBase base);

struct DatasetConfig {
    DatasetType type = DatasetType::gmm;
    double test_fraction = 0.2;
    std::size_t samples_per_class = 300;

    // gmm: two classes with means -+mean_scale*p, p_i = 1 (constant) or
    // (i+1)/dim (linear).
    Index dim = 64;
    double mean_scale = 1.0;
    std::string mean_profile = "constant";
    double cov_scale = 0.3;

    // pitfall
    std::vector<double> dx;
    double cluster_std = 0.05;
    double eps = 1e-2;
    // When set, every curve is repeated on a copy of the data rotated by this
    // seeded rotation, with the feature vectors rotated alongside.
    std::optional<std::uint64_t> rotation_seed;

    // csv
    std::string path;
    std::string label_column;
    std::vector<std::string> feature_columns;
};

struct MethodsConfig {
    std::vector<std::string> list;  // grad, grad_x_input, smoothgrad, integrated_gradients, random, ground_truth
    std::size_t smoothgrad_samples = 32;
    double smoothgrad_noise = 0.5;
    std::size_t ig_steps = 64;
    std::vector<std::vector<double>> features;  // pitfall: constant feature vectors
    std::vector<double> lambdas;                // blend_study
    BlendBase blend_base = BlendBase::ground_truth;
};

struct GroundTruthConfig {
    GroundTruthMode mode = GroundTruthMode::coefficient;
    double l2 = 1e-2;
};

struct StrategiesConfig {
    std::vector<std::string> list;  // goar, goar_noproj, roar, evalx, road
    std::vector<double> goar_strengths;  // relative units, see README
    std::optional<bool> goar_unit_features;  // unset: false for blend_study, true otherwise
    double goar_extra_noise = 0.16;
    std::vector<double> pixel_fractions;  // empty: one coordinate per step
    RankBy rank_by = RankBy::value;
    std::optional<GridShape> road_grid;
    double road_noise = 0.01;
    double evalx_mask_prob = 0.5;

    bool unit_features(ExperimentKind kind) const {
        return goar_unit_features.value_or(kind != ExperimentKind::blend_study);
    }
};

struct MetricsConfig {
    std::optional<Index> top_k;  // unset: 25% of the dimension
    std::size_t bootstrap = 1000;
};

struct ExperimentConfig {
    std::string name = "experiment";
    ExperimentKind kind = ExperimentKind::custom_curve;
    std::uint64_t seed = 0;
    DatasetConfig dataset;
    TrainConfig training;  // training.seed is derived from `seed` at run time
    MethodsConfig methods;
    GroundTruthConfig ground_truth;
    StrategiesConfig strategies;
    MetricsConfig metrics;
};

// Parses the plain-text format documented in the README. `source` names the
// input in error messages.
ExperimentConfig parse_config_text(const std::string& text, const std::string& source = "<config>");
ExperimentConfig parse_config(const std::filesystem::path& path);

// Canonical text form; parse_config_text(to_text(c)) reproduces c.
std::string to_text(const ExperimentConfig& config);

// Cross-field checks shared by the parser and programmatic construction.
void validate(const ExperimentConfig& config);

// "a:b:s" expands to a, a+s, ... <= b (computed as a + i*s); otherwise a
// comma-separated list.
std::vector<double> parse_grid(const std::string& text);

// Shortest decimal text that reads back to the same double.
std::string format_double(double value);

}  // namespace goar::harness
