#include "goar/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "goar/rng.hpp"

namespace goar {

void Dataset::validate() const {
    if (features.rows() < 1) throw std::invalid_argument("dataset '" + name + "' is empty");
    if (static_cast<Index>(labels.size()) != features.rows())
        throw std::invalid_argument("dataset '" + name + "': label count does not match sample count");
    if (n_classes < 1) throw std::invalid_argument("dataset '" + name + "': n_classes must be >= 1");
    for (int y : labels)
        if (y < 0 || y >= n_classes)
            throw std::invalid_argument("dataset '" + name + "': label " + std::to_string(y) +
                                        " outside [0, " + std::to_string(n_classes) + ")");
    if (!features.allFinite()) throw std::invalid_argument("dataset '" + name + "' has non-finite entries");
}

void GmmSpec::validate() const {
    if (means.empty()) throw std::invalid_argument("GmmSpec: no class means");
    const Index d = means.front().size();
    if (d < 1) throw std::invalid_argument("GmmSpec: zero-dimensional means");
    for (const auto& m : means)
        if (m.size() != d) throw std::invalid_argument("GmmSpec: means have different lengths");
    if (!(cov_scale > 0.0)) throw std::invalid_argument("GmmSpec: cov_scale must be > 0");
    if (weights.size() != means.size()) throw std::invalid_argument("GmmSpec: need one weight per mean");
    double total = 0.0;
    for (double w : weights) {
        if (w < 0.0) throw std::invalid_argument("GmmSpec: negative weight");
        total += w;
    }
    if (std::abs(total - 1.0) > 1e-12) throw std::invalid_argument("GmmSpec: weights must sum to 1");
}

void PitfallSpec::validate() const {
    if (dx.size() < 1 || !(dx.norm() > 0.0)) throw std::invalid_argument("PitfallSpec: dx must be non-zero");
    if (!(eps > 0.0)) throw std::invalid_argument("PitfallSpec: eps must be > 0");
    if (!(cluster_std >= 0.0)) throw std::invalid_argument("PitfallSpec: cluster_std must be >= 0");
    if (samples_per_class < 1) throw std::invalid_argument("PitfallSpec: samples_per_class must be >= 1");
}

Index PitfallSpec::relevant_coordinates() const {
    return (dx.array().abs() > eps).count();
}

Dataset make_gmm(const GmmSpec& spec, std::uint64_t seed) {
    spec.validate();
    if (spec.samples_per_class < 1) throw std::invalid_argument("GmmSpec: samples_per_class must be >= 1");
    const Index d = spec.dim();
    const Index per_class = static_cast<Index>(spec.samples_per_class);
    const int c = static_cast<int>(spec.means.size());
    const double sigma = std::sqrt(spec.cov_scale);

    Rng rng(seed);
    Dataset out;
    out.features.resize(per_class * c, d);
    out.labels.resize(static_cast<std::size_t>(per_class * c));
    out.n_classes = c;
    out.name = "gmm";
    for (int k = 0; k < c; ++k) {
        for (Index j = 0; j < per_class; ++j) {
            const Index row = k * per_class + j;
            out.features.row(row) = (spec.means[k] + sigma * standard_normal(rng, d)).transpose();
            out.labels[static_cast<std::size_t>(row)] = k;
        }
    }
    return out;
}

GmmSpec symmetric_gmm_spec(Index dim, double mean_scale, double cov_scale,
                           std::size_t samples_per_class) {
    GmmSpec spec;
    spec.means = {Vector::Constant(dim, mean_scale), Vector::Constant(dim, -mean_scale)};
    spec.cov_scale = cov_scale;
    spec.weights = {0.5, 0.5};
    spec.samples_per_class = samples_per_class;
    return spec;
}

Dataset make_pitfall(const PitfallSpec& spec, std::uint64_t seed) {
    spec.validate();
    const Index d = spec.dx.size();
    const Index per_class = static_cast<Index>(spec.samples_per_class);
    Rng rng(seed);
    Dataset out;
    out.features.resize(2 * per_class, d);
    out.labels.resize(static_cast<std::size_t>(2 * per_class));
    out.n_classes = 2;
    out.name = "pitfall";
    for (int k = 0; k < 2; ++k) {
        const Vector center = k == 0 ? Vector::Zero(d) : Vector(spec.dx);
        for (Index j = 0; j < per_class; ++j) {
            const Index row = k * per_class + j;
            Vector x = center;
            if (spec.cluster_std > 0.0) x += spec.cluster_std * standard_normal(rng, d);
            out.features.row(row) = x.transpose();
            out.labels[static_cast<std::size_t>(row)] = k;
        }
    }
    return out;
}

Matrix random_rotation(Index dim, std::uint64_t seed) {
    if (dim < 1) throw std::invalid_argument("random_rotation: dim must be >= 1");
    Rng rng(seed);
    Matrix a(dim, dim);
    std::normal_distribution<double> normal(0.0, 1.0);
    for (Index j = 0; j < dim; ++j)
        for (Index i = 0; i < dim; ++i) a(i, j) = normal(rng);

    Eigen::HouseholderQR<Matrix> qr(a);
    Matrix q = qr.householderQ() * Matrix::Identity(dim, dim);
    const Matrix r = qr.matrixQR().triangularView<Eigen::Upper>();
    for (Index j = 0; j < dim; ++j)
        if (r(j, j) < 0.0) q.col(j) = -q.col(j);
    if (q.determinant() < 0.0) q.col(0) = -q.col(0);
    return q;
}

Dataset rotate_dataset(const Dataset& dataset, const Matrix& rotation) {
    if (rotation.rows() != rotation.cols())
        throw std::invalid_argument("rotate_dataset: rotation must be square");
    if (rotation.cols() != dataset.dim())
        throw std::invalid_argument("rotate_dataset: rotation size " + std::to_string(rotation.cols()) +
                                    " does not match dataset dim " + std::to_string(dataset.dim()));
    Dataset out = dataset;
    out.features = dataset.features * rotation.transpose();
    out.name = dataset.name + "-rotated";
    return out;
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string field;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char ch = line[i];
        if (quoted) {
            if (ch == '"' && i + 1 < line.size() && line[i + 1] == '"') {
                field += '"';
                ++i;
            } else if (ch == '"') {
                quoted = false;
            } else {
                field += ch;
            }
        } else if (ch == '"') {
            quoted = true;
        } else if (ch == ',') {
            fields.push_back(std::move(field));
            field.clear();
        } else if (ch != '\r') {
            field += ch;
        }
    }
    fields.push_back(std::move(field));
    return fields;
}

namespace {

std::string trim(const std::string& s) {
    const auto first = s.find_first_not_of(" \t");
    if (first == std::string::npos) return {};
    const auto last = s.find_last_not_of(" \t");
    return s.substr(first, last - first + 1);
}

}  // namespace

CsvDataset load_csv(const std::filesystem::path& path, const std::string& label_column,
                    const std::vector<std::string>& feature_columns) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("load_csv: cannot open '" + path.string() + "'");
    if (feature_columns.empty()) throw std::invalid_argument("load_csv: no feature columns requested");

    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("load_csv: '" + path.string() + "' has no header row");
    if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
    std::vector<std::string> header = split_csv_line(line);
    for (auto& h : header) h = trim(h);

    auto column_of = [&](const std::string& name) -> std::size_t {
        const auto it = std::find(header.begin(), header.end(), name);
        if (it == header.end()) throw std::runtime_error("load_csv: missing column '" + name + "'");
        return static_cast<std::size_t>(it - header.begin());
    };
    const std::size_t label_idx = column_of(label_column);
    std::vector<std::size_t> feature_idx;
    for (const auto& name : feature_columns) feature_idx.push_back(column_of(name));

    std::vector<std::vector<double>> rows;
    std::vector<int> labels;
    std::map<std::string, int> label_ids;
    std::vector<std::string> class_names;
    std::size_t row_number = 1;
    while (std::getline(in, line)) {
        ++row_number;
        if (trim(line).empty()) continue;
        const auto fields = split_csv_line(line);
        if (fields.size() != header.size())
            throw std::runtime_error("load_csv: row " + std::to_string(row_number) + " has " +
                                     std::to_string(fields.size()) + " fields, header has " +
                                     std::to_string(header.size()));
        std::vector<double> values;
        for (std::size_t j = 0; j < feature_idx.size(); ++j) {
            const std::string cell = trim(fields[feature_idx[j]]);
            double value = 0.0;
            const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), value);
            if (cell.empty() || ec != std::errc() || ptr != cell.data() + cell.size() || !std::isfinite(value))
                throw std::runtime_error("load_csv: non-numeric value '" + cell + "' at row " +
                                         std::to_string(row_number) + ", column '" + feature_columns[j] + "'");
            values.push_back(value);
        }
        const std::string label = trim(fields[label_idx]);
        auto [it, inserted] = label_ids.emplace(label, static_cast<int>(class_names.size()));
        if (inserted) class_names.push_back(label);
        labels.push_back(it->second);
        rows.push_back(std::move(values));
    }
    if (rows.empty()) throw std::runtime_error("load_csv: '" + path.string() + "' has no data rows");
    if (class_names.size() < 2)
        throw std::runtime_error("load_csv: '" + path.string() + "' contains a single class");

    const Index n = static_cast<Index>(rows.size());
    const Index d = static_cast<Index>(feature_idx.size());
    CsvDataset out;
    out.data.features.resize(n, d);
    for (Index i = 0; i < n; ++i)
        for (Index j = 0; j < d; ++j) out.data.features(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
    for (Index j = 0; j < d; ++j) {
        auto col = out.data.features.col(j);
        const double mean = col.mean();
        const double var = std::max((col.array() - mean).square().mean(), 1e-12);
        const double sd = std::sqrt(var);
        col = (col.array() - mean) / sd;
        out.feature_means.push_back(mean);
        out.feature_stds.push_back(sd);
    }
    out.data.labels = std::move(labels);
    out.data.n_classes = static_cast<int>(class_names.size());
    out.data.name = path.stem().string();
    out.class_names = std::move(class_names);
    out.feature_names = feature_columns;
    return out;
}

Dataset subset(const Dataset& dataset, const std::vector<Index>& indices) {
    Dataset out;
    out.features.resize(static_cast<Index>(indices.size()), dataset.dim());
    out.labels.reserve(indices.size());
    for (std::size_t r = 0; r < indices.size(); ++r) {
        out.features.row(static_cast<Index>(r)) = dataset.features.row(indices[r]);
        out.labels.push_back(dataset.labels[static_cast<std::size_t>(indices[r])]);
    }
    out.n_classes = dataset.n_classes;
    out.name = dataset.name;
    return out;
}

Dataset concat(const Dataset& a, const Dataset& b) {
    if (a.dim() != b.dim() || a.n_classes != b.n_classes)
        throw std::invalid_argument("concat: datasets are incompatible");
    Dataset out;
    out.features.resize(a.size() + b.size(), a.dim());
    out.features << a.features, b.features;
    out.labels = a.labels;
    out.labels.insert(out.labels.end(), b.labels.begin(), b.labels.end());
    out.n_classes = a.n_classes;
    out.name = a.name;
    return out;
}

TrainTestSplit split(const Dataset& dataset, double test_fraction, std::uint64_t seed) {
    if (!(test_fraction > 0.0 && test_fraction < 1.0))
        throw std::invalid_argument("split: test_fraction must be in (0, 1)");
    const Index n = dataset.size();
    if (n < 2) throw std::invalid_argument("split: need at least 2 samples");

    std::vector<std::vector<Index>> by_class(static_cast<std::size_t>(dataset.n_classes));
    for (Index i = 0; i < n; ++i) by_class[static_cast<std::size_t>(dataset.labels[static_cast<std::size_t>(i)])].push_back(i);

    const Index n_test = std::clamp<Index>(std::llround(test_fraction * static_cast<double>(n)), 1, n - 1);

    // Largest-remainder allocation of the test quota across classes.
    std::vector<Index> quota(by_class.size());
    std::vector<std::pair<double, std::size_t>> remainders;
    Index assigned = 0;
    for (std::size_t k = 0; k < by_class.size(); ++k) {
        const double exact = test_fraction * static_cast<double>(by_class[k].size());
        quota[k] = static_cast<Index>(std::floor(exact));
        assigned += quota[k];
        remainders.emplace_back(exact - std::floor(exact), k);
    }
    std::stable_sort(remainders.begin(), remainders.end(),
                     [](const auto& a, const auto& b) { return a.first > b.first; });
    for (std::size_t r = 0; assigned < n_test && r < remainders.size(); ++r) {
        const std::size_t k = remainders[r].second;
        if (quota[k] < static_cast<Index>(by_class[k].size())) {
            ++quota[k];
            ++assigned;
        }
    }

    Rng rng(seed);
    std::vector<bool> is_test(static_cast<std::size_t>(n), false);
    for (std::size_t k = 0; k < by_class.size(); ++k) {
        auto members = by_class[k];
        std::shuffle(members.begin(), members.end(), rng);
        for (Index j = 0; j < quota[k]; ++j) is_test[static_cast<std::size_t>(members[static_cast<std::size_t>(j)])] = true;
    }
    std::vector<Index> train_idx, test_idx;
    for (Index i = 0; i < n; ++i) (is_test[static_cast<std::size_t>(i)] ? test_idx : train_idx).push_back(i);
    return {subset(dataset, train_idx), subset(dataset, test_idx)};
}

}  // namespace goar
