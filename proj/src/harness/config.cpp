#include "goar/harness/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace goar::harness {

ConfigError::ConfigError(const std::string& source, int line, const std::string& message)
    : std::runtime_error(line > 0 ? source + ":" + std::to_string(line) + ": " + message : source + ": " + message),
      line_(line) {}

const char* to_string(ExperimentKind kind) {
    switch (kind) {
        case ExperimentKind::pitfall: return "pitfall";
        case ExperimentKind::blend_study: return "blend_study";
        case ExperimentKind::openxai_corr: return "openxai_corr";
        case ExperimentKind::custom_curve: return "custom_curve";
    }
    return "?";
}

const char* to_string(DatasetType type) {
    switch (type) {
        case DatasetType::gmm: return "gmm";
        case DatasetType::pitfall: return "pitfall";
        case DatasetType::csv: return "csv";
    }
    return "?";
}

const char* to_string(BlendBase base) {
    return base == BlendBase::gradient ? "gradient" : "ground_truth";
}

std::string format_double(double value) {
    if (std::isnan(value)) return "nan";
    if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, value);
    return std::string(buf, res.ptr);
}

namespace {

const std::vector<std::string> kMethods{"grad", "grad_x_input", "smoothgrad", "integrated_gradients", "random",
                                        "ground_truth"};
const std::vector<std::string> kStrategies{"goar", "goar_noproj", "roar", "evalx", "road"};

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split_trimmed(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string item;
    std::istringstream in(s);
    while (std::getline(in, item, sep)) out.push_back(trim(item));
    if (!s.empty() && s.back() == sep) out.push_back("");
    return out;
}

std::string join(const std::vector<std::string>& items, const std::string& sep) {
    std::string out;
    for (std::size_t i = 0; i < items.size(); ++i) out += (i ? sep : "") + items[i];
    return out;
}

std::string join_doubles(const std::vector<double>& values) {
    std::vector<std::string> parts;
    for (double v : values) parts.push_back(format_double(v));
    return join(parts, ", ");
}

double to_double(const std::string& text) {
    double value = 0.0;
    const auto t = trim(text);
    const auto res = std::from_chars(t.data(), t.data() + t.size(), value);
    if (t.empty() || res.ec != std::errc() || res.ptr != t.data() + t.size() || !std::isfinite(value))
        throw std::invalid_argument("expected a number, got '" + t + "'");
    return value;
}

std::uint64_t to_uint(const std::string& text) {
    std::uint64_t value = 0;
    const auto t = trim(text);
    const auto res = std::from_chars(t.data(), t.data() + t.size(), value);
    if (t.empty() || res.ec != std::errc() || res.ptr != t.data() + t.size())
        throw std::invalid_argument("expected a non-negative integer, got '" + t + "'");
    return value;
}

bool to_bool(const std::string& text) {
    const auto t = trim(text);
    if (t == "true" || t == "yes" || t == "1") return true;
    if (t == "false" || t == "no" || t == "0") return false;
    throw std::invalid_argument("expected true or false, got '" + t + "'");
}

std::vector<double> to_doubles(const std::string& text) {
    std::vector<double> out;
    for (const auto& item : split_trimmed(text, ',')) out.push_back(to_double(item));
    return out;
}

std::vector<std::string> to_names(const std::string& text) {
    std::vector<std::string> out;
    for (const auto& item : split_trimmed(text, ','))
        if (!item.empty()) out.push_back(item);
    return out;
}

struct Entry {
    std::string value;
    int line = 0;
};

using Section = std::map<std::string, Entry>;

const std::map<std::string, std::set<std::string>>& known_keys() {
    static const std::map<std::string, std::set<std::string>> keys{
        {"experiment", {"kind", "seed", "name"}},
        {"dataset",
         {"type", "test_fraction", "samples_per_class", "dim", "mean_scale", "mean_profile", "cov_scale", "dx",
          "cluster_std", "eps", "rotation_seed", "path", "label_column", "feature_columns"}},
        {"training",
         {"hidden_layers", "learning_rate", "batch_size", "max_epochs", "patience", "optimizer",
          "validation_fraction"}},
        {"methods", {"list", "smoothgrad_samples", "smoothgrad_noise", "ig_steps", "features", "lambdas", "blend_base"}},
        {"ground_truth", {"mode", "l2"}},
        {"strategies",
         {"list", "goar_strengths", "goar_unit_features", "goar_extra_noise", "pixel_fractions", "rank_by", "road_grid",
          "road_noise", "evalx_mask_prob"}},
        {"metrics", {"top_k", "bootstrap"}},
    };
    return keys;
}

// Keys of [dataset] that belong to one dataset type only.
const std::map<std::string, DatasetType>& type_specific_keys() {
    static const std::map<std::string, DatasetType> keys{
        {"dim", DatasetType::gmm},          {"mean_scale", DatasetType::gmm},    {"mean_profile", DatasetType::gmm},
        {"cov_scale", DatasetType::gmm},    {"dx", DatasetType::pitfall},        {"cluster_std", DatasetType::pitfall},
        {"eps", DatasetType::pitfall},      {"path", DatasetType::csv},          {"label_column", DatasetType::csv},
        {"feature_columns", DatasetType::csv},
    };
    return keys;
}

class Reader {
public:
    Reader(std::map<std::string, Section> sections, std::string source)
        : sections_(std::move(sections)), source_(std::move(source)) {}

    // Calls fn(value) for a present key, converting conversion errors into
    // ConfigErrors at the key's line.
    template <class Fn>
    bool with(const std::string& section, const std::string& key, Fn&& fn) const {
        const auto s = sections_.find(section);
        if (s == sections_.end()) return false;
        const auto e = s->second.find(key);
        if (e == s->second.end()) return false;
        try {
            fn(e->second.value);
        } catch (const ConfigError&) {
            throw;
        } catch (const std::exception& ex) {
            throw ConfigError(source_, e->second.line, section + "." + key + ": " + ex.what());
        }
        return true;
    }

    int line_of(const std::string& section, const std::string& key) const {
        const auto s = sections_.find(section);
        if (s == sections_.end()) return 0;
        const auto e = s->second.find(key);
        return e == s->second.end() ? 0 : e->second.line;
    }

    bool has(const std::string& section, const std::string& key) const { return line_of(section, key) > 0; }

    [[noreturn]] void fail(const std::string& section, const std::string& key, const std::string& message) const {
        throw ConfigError(source_, line_of(section, key), message);
    }

    const std::map<std::string, Section>& sections() const { return sections_; }
    const std::string& source() const { return source_; }

private:
    std::map<std::string, Section> sections_;
    std::string source_;
};

std::map<std::string, Section> tokenize(const std::string& text, const std::string& source) {
    std::map<std::string, Section> sections;
    std::string current;
    std::istringstream in(text);
    std::string raw;
    int line_no = 0;
    while (std::getline(in, raw)) {
        ++line_no;
        std::string line = raw;
        // "#" starts a comment at the line start or after whitespace.
        for (std::size_t i = 0; i < line.size(); ++i) {
            if (line[i] == '#' && (i == 0 || line[i - 1] == ' ' || line[i - 1] == '\t')) {
                line.resize(i);
                break;
            }
        }
        line = trim(line);
        if (line.empty() || line.front() == ';') continue;
        if (line.front() == '[') {
            if (line.back() != ']') throw ConfigError(source, line_no, "malformed section header '" + line + "'");
            current = trim(line.substr(1, line.size() - 2));
            if (!known_keys().count(current)) throw ConfigError(source, line_no, "unknown section [" + current + "]");
            if (sections.count(current)) throw ConfigError(source, line_no, "section [" + current + "] appears twice");
            sections[current];
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw ConfigError(source, line_no, "expected 'key = value', got '" + line + "'");
        if (current.empty()) throw ConfigError(source, line_no, "key outside of any section");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (!known_keys().at(current).count(key))
            throw ConfigError(source, line_no, "unknown key '" + key + "' in section [" + current + "]");
        if (sections[current].count(key)) throw ConfigError(source, line_no, "duplicate key '" + key + "'");
        sections[current][key] = {value, line_no};
    }
    return sections;
}

template <class Enum>
Enum pick(const std::string& value, const std::vector<std::pair<std::string, Enum>>& options, const std::string& what) {
    for (const auto& [name, e] : options)
        if (name == value) return e;
    std::vector<std::string> names;
    for (const auto& o : options) names.push_back(o.first);
    throw std::invalid_argument("unknown " + what + " '" + value + "' (expected one of: " + join(names, ", ") + ")");
}

void check_names(const std::vector<std::string>& names, const std::vector<std::string>& known, const std::string& what) {
    std::set<std::string> seen;
    for (const auto& n : names) {
        if (std::find(known.begin(), known.end(), n) == known.end())
            throw std::invalid_argument("unknown " + what + " '" + n + "' (expected one of: " + join(known, ", ") + ")");
        if (!seen.insert(n).second) throw std::invalid_argument(what + " '" + n + "' listed twice");
    }
}

bool ascending_in(const std::vector<double>& v, double lo, bool lo_open, double hi) {
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (lo_open ? !(v[i] > lo) : !(v[i] >= lo)) return false;
        if (v[i] > hi) return false;
        if (i > 0 && !(v[i] > v[i - 1])) return false;
    }
    return true;
}

Index data_dim(const DatasetConfig& d) {
    switch (d.type) {
        case DatasetType::gmm: return d.dim;
        case DatasetType::pitfall: return static_cast<Index>(d.dx.size());
        case DatasetType::csv: return static_cast<Index>(d.feature_columns.size());
    }
    return 0;
}

// Runs `check` and reports a failure against the line of section.key.
template <class Fn>
void checked(const Reader* reader, const std::string& section, const std::string& key, Fn&& check) {
    try {
        check();
    } catch (const std::invalid_argument& ex) {
        if (reader) reader->fail(section, key, ex.what());
        throw ConfigError("<config>", 0, ex.what());
    }
}

void validate_impl(const ExperimentConfig& c, const Reader* r) {
    const auto& d = c.dataset;
    const Index dim = data_dim(d);
    checked(r, "dataset", "test_fraction", [&] {
        if (!(d.test_fraction > 0.0 && d.test_fraction < 1.0))
            throw std::invalid_argument("dataset.test_fraction must be in (0, 1)");
    });
    checked(r, "dataset", "samples_per_class", [&] {
        if (d.type != DatasetType::csv && d.samples_per_class < 2)
            throw std::invalid_argument("dataset.samples_per_class must be >= 2");
    });
    switch (d.type) {
        case DatasetType::gmm:
            checked(r, "dataset", "dim", [&] {
                if (d.dim < 1) throw std::invalid_argument("dataset.dim must be >= 1");
            });
            checked(r, "dataset", "mean_profile", [&] {
                if (d.mean_profile != "constant" && d.mean_profile != "linear")
                    throw std::invalid_argument("dataset.mean_profile must be constant or linear");
            });
            checked(r, "dataset", "cov_scale", [&] {
                if (!(d.cov_scale > 0.0)) throw std::invalid_argument("dataset.cov_scale must be > 0");
            });
            break;
        case DatasetType::pitfall:
            checked(r, "dataset", "dx", [&] {
                if (d.dx.empty()) throw std::invalid_argument("dataset.dx is required for pitfall data");
            });
            checked(r, "dataset", "cluster_std", [&] {
                if (!(d.cluster_std >= 0.0)) throw std::invalid_argument("dataset.cluster_std must be >= 0");
            });
            break;
        case DatasetType::csv:
            checked(r, "dataset", "path", [&] {
                if (d.path.empty()) throw std::invalid_argument("dataset.path is required for csv data");
                if (d.label_column.empty()) throw std::invalid_argument("dataset.label_column is required for csv data");
                if (d.feature_columns.empty())
                    throw std::invalid_argument("dataset.feature_columns is required for csv data");
            });
            break;
    }
    checked(r, "dataset", "rotation_seed", [&] {
        if (d.rotation_seed && c.kind != ExperimentKind::pitfall)
            throw std::invalid_argument("dataset.rotation_seed only applies to pitfall experiments");
    });

    checked(r, "training", "hidden_layers", [&] { c.training.validate(); });

    const auto& m = c.methods;
    checked(r, "methods", "list", [&] {
        check_names(m.list, kMethods, "method");
        if (c.kind == ExperimentKind::openxai_corr && m.list.size() < 3)
            throw std::invalid_argument("openxai_corr needs at least 3 methods");
        if (c.kind == ExperimentKind::custom_curve && m.list.empty())
            throw std::invalid_argument("custom_curve needs at least one method");
        if ((c.kind == ExperimentKind::pitfall || c.kind == ExperimentKind::blend_study) && !m.list.empty())
            throw std::invalid_argument(std::string("methods.list does not apply to ") + to_string(c.kind) +
                                        " experiments");
    });
    checked(r, "methods", "smoothgrad_samples", [&] {
        if (m.smoothgrad_samples < 1) throw std::invalid_argument("methods.smoothgrad_samples must be >= 1");
    });
    checked(r, "methods", "smoothgrad_noise", [&] {
        if (!(m.smoothgrad_noise >= 0.0)) throw std::invalid_argument("methods.smoothgrad_noise must be >= 0");
    });
    checked(r, "methods", "ig_steps", [&] {
        if (m.ig_steps < 1) throw std::invalid_argument("methods.ig_steps must be >= 1");
    });
    checked(r, "methods", "features", [&] {
        if (c.kind == ExperimentKind::pitfall) {
            if (m.features.empty()) throw std::invalid_argument("pitfall experiments need methods.features");
            for (const auto& f : m.features)
                if (static_cast<Index>(f.size()) != dim)
                    throw std::invalid_argument("every feature vector needs " + std::to_string(dim) + " entries");
        } else if (!m.features.empty()) {
            throw std::invalid_argument("methods.features only applies to pitfall experiments");
        }
    });
    checked(r, "methods", "lambdas", [&] {
        if (c.kind == ExperimentKind::blend_study) {
            if (m.lambdas.empty()) throw std::invalid_argument("blend_study needs methods.lambdas");
            for (double l : m.lambdas)
                if (!(l >= 0.0 && l <= 1.0)) throw std::invalid_argument("every lambda must be in [0, 1]");
            std::set<double> unique(m.lambdas.begin(), m.lambdas.end());
            if (unique.size() != m.lambdas.size()) throw std::invalid_argument("methods.lambdas has duplicates");
        } else if (!m.lambdas.empty()) {
            throw std::invalid_argument("methods.lambdas only applies to blend_study experiments");
        }
    });
    checked(r, "experiment", "kind", [&] {
        if (c.kind == ExperimentKind::pitfall && d.type != DatasetType::pitfall)
            throw std::invalid_argument("pitfall experiments need dataset.type = pitfall");
    });
    checked(r, "ground_truth", "l2", [&] {
        if (!(c.ground_truth.l2 >= 0.0)) throw std::invalid_argument("ground_truth.l2 must be >= 0");
    });

    const auto& s = c.strategies;
    checked(r, "strategies", "list", [&] {
        if (s.list.empty()) throw std::invalid_argument("strategies.list is required");
        check_names(s.list, kStrategies, "strategy");
    });
    const bool has_goar = std::count(s.list.begin(), s.list.end(), "goar") + std::count(s.list.begin(), s.list.end(), "goar_noproj") > 0;
    checked(r, "strategies", "goar_strengths", [&] {
        if (has_goar && s.goar_strengths.empty()) throw std::invalid_argument("strategies.goar_strengths is required for goar");
        if (!ascending_in(s.goar_strengths, 0.0, false, 1e300))
            throw std::invalid_argument("strategies.goar_strengths must be ascending and >= 0");
    });
    checked(r, "strategies", "goar_extra_noise", [&] {
        if (!(s.goar_extra_noise >= 0.0 && s.goar_extra_noise < 1.0))
            throw std::invalid_argument("strategies.goar_extra_noise must be in [0, 1)");
    });
    checked(r, "strategies", "pixel_fractions", [&] {
        if (!ascending_in(s.pixel_fractions, 0.0, true, 1.0))
            throw std::invalid_argument("strategies.pixel_fractions must be ascending in (0, 1]");
    });
    checked(r, "strategies", "road_grid", [&] {
        if (std::count(s.list.begin(), s.list.end(), "road")) {
            if (!s.road_grid) throw std::invalid_argument("road needs strategies.road_grid");
            if (d.type != DatasetType::csv && s.road_grid->height * s.road_grid->width != dim)
                throw std::invalid_argument("strategies.road_grid must cover the " + std::to_string(dim) + " features");
        }
    });
    checked(r, "strategies", "road_noise", [&] {
        if (!(s.road_noise >= 0.0)) throw std::invalid_argument("strategies.road_noise must be >= 0");
    });
    checked(r, "strategies", "evalx_mask_prob", [&] {
        if (!(s.evalx_mask_prob >= 0.0 && s.evalx_mask_prob < 1.0))
            throw std::invalid_argument("strategies.evalx_mask_prob must be in [0, 1)");
    });
    checked(r, "metrics", "top_k", [&] {
        if (c.metrics.top_k && (*c.metrics.top_k < 1 || (d.type != DatasetType::csv && *c.metrics.top_k > dim)))
            throw std::invalid_argument("metrics.top_k must be in [1, " + std::to_string(dim) + "]");
    });
}

GridShape parse_shape(const std::string& text) {
    const auto x = text.find('x');
    if (x == std::string::npos) throw std::invalid_argument("expected HxW, got '" + text + "'");
    return {static_cast<Index>(to_uint(text.substr(0, x))), static_cast<Index>(to_uint(text.substr(x + 1)))};
}

}  // namespace

std::vector<double> parse_grid(const std::string& text) {
    const auto parts = split_trimmed(text, ':');
    if (parts.size() == 1) return to_doubles(text);
    if (parts.size() != 3) throw std::invalid_argument("expected start:stop:step, got '" + text + "'");
    const double start = to_double(parts[0]), stop = to_double(parts[1]), step = to_double(parts[2]);
    if (!(step > 0.0) || stop < start) throw std::invalid_argument("grid '" + text + "' is empty or has a non-positive step");
    const auto n = static_cast<std::size_t>(std::floor((stop - start) / step + 1e-9));
    std::vector<double> out;
    // Snap to 12 significant digits so 0.1:1:0.1 yields 0.3 rather than 0.30000000000000004.
    for (std::size_t i = 0; i <= n; ++i) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.12g", start + static_cast<double>(i) * step);
        out.push_back(std::strtod(buf, nullptr));
    }
    return out;
}

void validate(const ExperimentConfig& config) {
    validate_impl(config, nullptr);
}

ExperimentConfig parse_config_text(const std::string& text, const std::string& source) {
    const Reader r(tokenize(text, source), source);
    ExperimentConfig c;

    if (!r.with("experiment", "kind", [&](const std::string& v) {
            c.kind = pick<ExperimentKind>(v, {{"pitfall", ExperimentKind::pitfall},
                                              {"blend_study", ExperimentKind::blend_study},
                                              {"openxai_corr", ExperimentKind::openxai_corr},
                                              {"custom_curve", ExperimentKind::custom_curve}},
                                          "experiment kind");
        }))
        throw ConfigError(source, 0, "missing required key experiment.kind");
    if (!r.with("experiment", "seed", [&](const std::string& v) { c.seed = to_uint(v); }))
        throw ConfigError(source, 0, "missing required key experiment.seed");
    r.with("experiment", "name", [&](const std::string& v) {
        if (v.empty()) throw std::invalid_argument("name must not be empty");
        c.name = v;
    });

    auto& d = c.dataset;
    if (!r.with("dataset", "type", [&](const std::string& v) {
            d.type = pick<DatasetType>(v, {{"gmm", DatasetType::gmm}, {"pitfall", DatasetType::pitfall}, {"csv", DatasetType::csv}},
                                       "dataset type");
        }))
        throw ConfigError(source, 0, "missing required key dataset.type");
    for (const auto& [key, type] : type_specific_keys())
        if (r.has("dataset", key) && type != d.type)
            r.fail("dataset", key, "key '" + key + "' does not apply to dataset type " + to_string(d.type));
    if (d.type == DatasetType::pitfall) d.samples_per_class = 200;
    r.with("dataset", "test_fraction", [&](const std::string& v) { d.test_fraction = to_double(v); });
    r.with("dataset", "samples_per_class", [&](const std::string& v) { d.samples_per_class = to_uint(v); });
    r.with("dataset", "dim", [&](const std::string& v) { d.dim = static_cast<Index>(to_uint(v)); });
    r.with("dataset", "mean_scale", [&](const std::string& v) { d.mean_scale = to_double(v); });
    r.with("dataset", "mean_profile", [&](const std::string& v) { d.mean_profile = v; });
    r.with("dataset", "cov_scale", [&](const std::string& v) { d.cov_scale = to_double(v); });
    r.with("dataset", "dx", [&](const std::string& v) { d.dx = to_doubles(v); });
    r.with("dataset", "cluster_std", [&](const std::string& v) { d.cluster_std = to_double(v); });
    r.with("dataset", "eps", [&](const std::string& v) { d.eps = to_double(v); });
    r.with("dataset", "rotation_seed", [&](const std::string& v) { d.rotation_seed = to_uint(v); });
    r.with("dataset", "path", [&](const std::string& v) { d.path = v; });
    r.with("dataset", "label_column", [&](const std::string& v) { d.label_column = v; });
    r.with("dataset", "feature_columns", [&](const std::string& v) { d.feature_columns = to_names(v); });

    auto& t = c.training;
    r.with("training", "hidden_layers", [&](const std::string& v) {
        t.hidden_layers.clear();
        for (const auto& item : split_trimmed(v, ',')) t.hidden_layers.push_back(to_uint(item));
    });
    r.with("training", "learning_rate", [&](const std::string& v) { t.learning_rate = to_double(v); });
    r.with("training", "batch_size", [&](const std::string& v) { t.batch_size = to_uint(v); });
    r.with("training", "max_epochs", [&](const std::string& v) { t.max_epochs = to_uint(v); });
    r.with("training", "patience", [&](const std::string& v) { t.early_stop_patience = to_uint(v); });
    r.with("training", "validation_fraction", [&](const std::string& v) { t.validation_fraction = to_double(v); });
    r.with("training", "optimizer", [&](const std::string& v) {
        t.optimizer = pick<Optimizer>(v, {{"adam", Optimizer::adam}, {"sgd", Optimizer::sgd}}, "optimizer");
    });

    auto& m = c.methods;
    r.with("methods", "list", [&](const std::string& v) { m.list = to_names(v); });
    r.with("methods", "smoothgrad_samples", [&](const std::string& v) { m.smoothgrad_samples = to_uint(v); });
    r.with("methods", "smoothgrad_noise", [&](const std::string& v) { m.smoothgrad_noise = to_double(v); });
    r.with("methods", "ig_steps", [&](const std::string& v) { m.ig_steps = to_uint(v); });
    r.with("methods", "features", [&](const std::string& v) {
        for (const auto& f : split_trimmed(v, ';')) m.features.push_back(to_doubles(f));
    });
    r.with("methods", "lambdas", [&](const std::string& v) { m.lambdas = to_doubles(v); });
    r.with("methods", "blend_base", [&](const std::string& v) {
        m.blend_base = pick<BlendBase>(v, {{"gradient", BlendBase::gradient}, {"ground_truth", BlendBase::ground_truth}},
                                       "blend base");
    });

    r.with("ground_truth", "mode", [&](const std::string& v) {
        c.ground_truth.mode = pick<GroundTruthMode>(
            v, {{"coefficient", GroundTruthMode::coefficient}, {"coefficient_times_input", GroundTruthMode::coefficient_times_input}},
            "ground-truth mode");
    });
    r.with("ground_truth", "l2", [&](const std::string& v) { c.ground_truth.l2 = to_double(v); });

    auto& s = c.strategies;
    r.with("strategies", "list", [&](const std::string& v) { s.list = to_names(v); });
    r.with("strategies", "goar_strengths", [&](const std::string& v) { s.goar_strengths = parse_grid(v); });
    r.with("strategies", "goar_unit_features", [&](const std::string& v) { s.goar_unit_features = to_bool(v); });
    r.with("strategies", "goar_extra_noise", [&](const std::string& v) { s.goar_extra_noise = to_double(v); });
    r.with("strategies", "pixel_fractions", [&](const std::string& v) { s.pixel_fractions = parse_grid(v); });
    r.with("strategies", "rank_by", [&](const std::string& v) {
        s.rank_by = pick<RankBy>(v, {{"value", RankBy::value}, {"magnitude", RankBy::magnitude}}, "ranking");
    });
    r.with("strategies", "road_grid", [&](const std::string& v) { s.road_grid = parse_shape(v); });
    r.with("strategies", "road_noise", [&](const std::string& v) { s.road_noise = to_double(v); });
    r.with("strategies", "evalx_mask_prob", [&](const std::string& v) { s.evalx_mask_prob = to_double(v); });

    r.with("metrics", "top_k", [&](const std::string& v) { c.metrics.top_k = static_cast<Index>(to_uint(v)); });
    r.with("metrics", "bootstrap", [&](const std::string& v) { c.metrics.bootstrap = to_uint(v); });

    validate_impl(c, &r);
    return c;
}

ExperimentConfig parse_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError(path.string(), 0, "cannot open config file");
    std::ostringstream text;
    text << in.rdbuf();
    return parse_config_text(text.str(), path.string());
}

std::string to_text(const ExperimentConfig& c) {
    std::ostringstream out;
    out << "[experiment]\nname = " << c.name << "\nkind = " << to_string(c.kind) << "\nseed = " << c.seed << "\n";

    const auto& d = c.dataset;
    out << "\n[dataset]\ntype = " << to_string(d.type) << "\ntest_fraction = " << format_double(d.test_fraction) << "\n";
    if (d.type != DatasetType::csv) out << "samples_per_class = " << d.samples_per_class << "\n";
    switch (d.type) {
        case DatasetType::gmm:
            out << "dim = " << d.dim << "\nmean_scale = " << format_double(d.mean_scale) << "\nmean_profile = " << d.mean_profile
                << "\ncov_scale = " << format_double(d.cov_scale) << "\n";
            break;
        case DatasetType::pitfall:
            out << "dx = " << join_doubles(d.dx) << "\ncluster_std = " << format_double(d.cluster_std)
                << "\neps = " << format_double(d.eps) << "\n";
            if (d.rotation_seed) out << "rotation_seed = " << *d.rotation_seed << "\n";
            break;
        case DatasetType::csv:
            out << "path = " << d.path << "\nlabel_column = " << d.label_column
                << "\nfeature_columns = " << join(d.feature_columns, ", ") << "\n";
            break;
    }

    const auto& t = c.training;
    std::vector<std::string> layers;
    for (auto h : t.hidden_layers) layers.push_back(std::to_string(h));
    out << "\n[training]\nhidden_layers = " << join(layers, ", ") << "\nlearning_rate = " << format_double(t.learning_rate)
        << "\nbatch_size = " << t.batch_size << "\nmax_epochs = " << t.max_epochs << "\npatience = " << t.early_stop_patience
        << "\nvalidation_fraction = " << format_double(t.validation_fraction)
        << "\noptimizer = " << (t.optimizer == Optimizer::adam ? "adam" : "sgd") << "\n";

    const auto& m = c.methods;
    out << "\n[methods]\n";
    if (!m.list.empty()) out << "list = " << join(m.list, ", ") << "\n";
    out << "smoothgrad_samples = " << m.smoothgrad_samples << "\nsmoothgrad_noise = " << format_double(m.smoothgrad_noise)
        << "\nig_steps = " << m.ig_steps << "\n";
    if (!m.features.empty()) {
        std::vector<std::string> fs;
        for (const auto& f : m.features) fs.push_back(join_doubles(f));
        out << "features = " << join(fs, "; ") << "\n";
    }
    if (!m.lambdas.empty()) out << "lambdas = " << join_doubles(m.lambdas) << "\n";
    out << "blend_base = " << to_string(m.blend_base) << "\n";

    out << "\n[ground_truth]\nmode = "
        << (c.ground_truth.mode == GroundTruthMode::coefficient ? "coefficient" : "coefficient_times_input")
        << "\nl2 = " << format_double(c.ground_truth.l2) << "\n";

    const auto& s = c.strategies;
    out << "\n[strategies]\nlist = " << join(s.list, ", ") << "\n";
    if (!s.goar_strengths.empty()) out << "goar_strengths = " << join_doubles(s.goar_strengths) << "\n";
    if (s.goar_unit_features) out << "goar_unit_features = " << (*s.goar_unit_features ? "true" : "false") << "\n";
    out << "goar_extra_noise = " << format_double(s.goar_extra_noise) << "\n";
    if (!s.pixel_fractions.empty()) out << "pixel_fractions = " << join_doubles(s.pixel_fractions) << "\n";
    out << "rank_by = " << (s.rank_by == RankBy::value ? "value" : "magnitude") << "\n";
    if (s.road_grid) out << "road_grid = " << s.road_grid->height << "x" << s.road_grid->width << "\n";
    out << "road_noise = " << format_double(s.road_noise) << "\nevalx_mask_prob = " << format_double(s.evalx_mask_prob) << "\n";

    out << "\n[metrics]\n";
    if (c.metrics.top_k) out << "top_k = " << *c.metrics.top_k << "\n";
    out << "bootstrap = " << c.metrics.bootstrap << "\n";
    return out.str();
}

}  // namespace goar::harness
