#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "goar/common.hpp"

namespace goar {

// Labeled vectors, one sample per row of `features`.
struct Dataset {
    Matrix features;          // n x d
    std::vector<int> labels;  // n entries in [0, n_classes)
    int n_classes = 0;
    std::string name;

    Index size() const { return features.rows(); }
    Index dim() const { return features.cols(); }
    Vector sample(Index i) const { return features.row(i).transpose(); }

    // Throws std::invalid_argument if the invariants do not hold.
    void validate() const;
};

struct GmmSpec {
    std::vector<Vector> means;  // one mean per class
    double cov_scale = 0.3;     // isotropic variance sigma^2
    std::vector<double> weights;
    std::size_t samples_per_class = 0;

    Index dim() const { return means.empty() ? 0 : means.front().size(); }
    void validate() const;
};

// Two clusters: class 0 around the origin, class 1 around dx.
struct PitfallSpec {
    Vector dx;
    double eps = 1e-2;  // coordinates with |dx_i| <= eps are irrelevant
    double cluster_std = 0.0;
    std::size_t samples_per_class = 1;

    void validate() const;
    // Number of coordinates with |dx_i| > eps.
    Index relevant_coordinates() const;
};

Dataset make_gmm(const GmmSpec& spec, std::uint64_t seed);

// Two-class GMM with means +-scale*(1,...,1), equal weights.
GmmSpec symmetric_gmm_spec(Index dim, double mean_scale, double cov_scale,
                           std::size_t samples_per_class);

Dataset make_pitfall(const PitfallSpec& spec, std::uint64_t seed);

// Haar-distributed rotation (orthogonal, det = +1).
Matrix random_rotation(Index dim, std::uint64_t seed);

Dataset rotate_dataset(const Dataset& dataset, const Matrix& rotation);

struct CsvDataset {
    Dataset data;
    std::vector<std::string> class_names;  // index = label
    std::vector<std::string> feature_names;
    std::vector<double> feature_means;     // before standardization
    std::vector<double> feature_stds;      // floored at sqrt(1e-12)
};

// Splits one CSV record; double quotes group fields and "" is a literal quote.
std::vector<std::string> split_csv_line(const std::string& line);

// Header row required. Labels are mapped to 0..c-1 in order of first
// appearance; features are standardized per column.
CsvDataset load_csv(const std::filesystem::path& path, const std::string& label_column,
                    const std::vector<std::string>& feature_columns);

struct TrainTestSplit {
    Dataset train;
    Dataset test;
};

// Stratified, seeded split. Both parts keep the original sample order.
TrainTestSplit split(const Dataset& dataset, double test_fraction, std::uint64_t seed);

// Rows `indices` of `dataset`, in the given order.
Dataset subset(const Dataset& dataset, const std::vector<Index>& indices);

// Row-wise concatenation of datasets with identical dim / class count.
Dataset concat(const Dataset& a, const Dataset& b);

}  // namespace goar
