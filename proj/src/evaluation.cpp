#include "goar/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "goar/parallel.hpp"
#include "goar/rng.hpp"

namespace goar {

DegradationCurve run_goar(const Dataset& train_set, const Attribution& train_attr, const Dataset& test_set,
                          const Attribution& test_attr, const std::vector<double>& strengths,
                          const TrainConfig& cfg, const ProjectionConfig& projection, const GmmPrior& prior,
                          const DiffusionSchedule& schedule, const CanonicalMap& map) {
    train_attr.validate_against(train_set);
    test_attr.validate_against(test_set);
    std::vector<double> levels = strengths;
    if (levels.empty() || levels.front() != 0.0) levels.insert(levels.begin(), 0.0);
    for (std::size_t j = 1; j < levels.size(); ++j)
        if (!(levels[j] > levels[j - 1])) throw std::invalid_argument("run_goar: strengths must be ascending and >= 0");

    std::vector<std::vector<bool>> correct(levels.size());
    parallel_for(levels.size(), [&](std::size_t j) {
        if (j == 0) {
            correct[0] = correct_predictions(fit_classifier(train_set, cfg), test_set);
            return;
        }
        ProjectionConfig train_proj = projection;
        ProjectionConfig test_proj = projection;
        train_proj.seed = derive_seed(projection.seed, 2 * j);
        test_proj.seed = derive_seed(projection.seed, 2 * j + 1);
        const Dataset train_mod = perturb_dataset(train_set, train_attr, levels[j], train_proj, prior, schedule, map);
        const Dataset test_mod = perturb_dataset(test_set, test_attr, levels[j], test_proj, prior, schedule, map);
        correct[j] = correct_predictions(fit_classifier(train_mod, cfg), test_mod);
    });

    auto curve = curve_from_predictions(projection.project ? "goar" : "goar_noproj", train_attr.method, levels, correct);
    curve.seeds = {cfg.seed, projection.seed};
    return curve;
}

namespace {

std::vector<Index> top_k_order(const Vector& v, Index k, RankBy rank_by) {
    std::vector<Index> order(static_cast<std::size_t>(v.size()));
    std::iota(order.begin(), order.end(), Index{0});
    auto score = [&](Index i) { return rank_by == RankBy::magnitude ? std::abs(v[i]) : v[i]; };
    std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) { return score(a) > score(b); });
    order.resize(static_cast<std::size_t>(k));
    return order;
}

int sign_of(double x) { return (x > 0.0) - (x < 0.0); }

Vector average_ranks(const Vector& v) {
    const Index n = v.size();
    std::vector<Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), Index{0});
    std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) { return v[a] < v[b]; });
    Vector ranks(n);
    for (Index i = 0; i < n;) {
        Index j = i;
        while (j + 1 < n && v[order[static_cast<std::size_t>(j + 1)]] == v[order[static_cast<std::size_t>(i)]]) ++j;
        const double rank = 0.5 * static_cast<double>(i + j) + 1.0;
        for (Index m = i; m <= j; ++m) ranks[order[static_cast<std::size_t>(m)]] = rank;
        i = j + 1;
    }
    return ranks;
}

}  // namespace

TopKAgreement topk_agreement(const Vector& v, const Vector& v_gt, Index k, RankBy rank_by) {
    if (v.size() != v_gt.size()) throw std::invalid_argument("topk_agreement: length mismatch");
    if (k < 1 || k > v.size()) throw std::invalid_argument("topk_agreement: k must be in [1, d]");
    const auto top = top_k_order(v, k, rank_by);
    const auto top_gt = top_k_order(v_gt, k, rank_by);
    Index shared = 0, same_rank = 0, same_sign = 0, same_rank_sign = 0;
    for (Index r = 0; r < k; ++r) {
        const Index f = top[static_cast<std::size_t>(r)];
        const bool sign_match = sign_of(v[f]) == sign_of(v_gt[f]);
        if (std::find(top_gt.begin(), top_gt.end(), f) != top_gt.end()) {
            ++shared;
            if (sign_match) ++same_sign;
        }
        if (f == top_gt[static_cast<std::size_t>(r)]) {
            ++same_rank;
            if (sign_match) ++same_rank_sign;
        }
    }
    const double kk = static_cast<double>(k);
    return {shared / kk, same_rank / kk, same_sign / kk, same_rank_sign / kk};
}

RankMetrics rank_metrics(const Vector& v, const Vector& v_gt) {
    if (v.size() != v_gt.size()) throw std::invalid_argument("rank_metrics: length mismatch");
    const Index d = v.size();
    if (d < 2) throw std::invalid_argument("rank_metrics: need at least 2 features");
    RankMetrics out;
    const Vector ra = average_ranks(v);
    const Vector rb = average_ranks(v_gt);
    const Vector ca = ra.array() - ra.mean();
    const Vector cb = rb.array() - rb.mean();
    const double denom = std::sqrt(ca.squaredNorm() * cb.squaredNorm());
    out.rc = denom > 0.0 ? std::clamp(ca.dot(cb) / denom, -1.0, 1.0) : 0.0;

    Index agree = 0, pairs = 0;
    for (Index i = 0; i < d; ++i)
        for (Index j = i + 1; j < d; ++j) {
            ++pairs;
            if (sign_of(v[i] - v[j]) == sign_of(v_gt[i] - v_gt[j])) ++agree;
        }
    out.pra = static_cast<double>(agree) / static_cast<double>(pairs);
    return out;
}

const std::vector<std::string>& agreement_metric_names() {
    static const std::vector<std::string> names{"FA", "RA", "SA", "SRA", "PRA", "RC"};
    return names;
}

double agreement_metric(const AgreementScores& s, const std::string& name) {
    if (name == "FA") return s.fa;
    if (name == "RA") return s.ra;
    if (name == "SA") return s.sa;
    if (name == "SRA") return s.sra;
    if (name == "PRA") return s.pra;
    if (name == "RC") return s.rc;
    throw std::invalid_argument("unknown agreement metric '" + name + "'");
}

Index default_top_k(Index dim) {
    return std::max<Index>(1, static_cast<Index>(std::llround(0.25 * static_cast<double>(dim))));
}

AgreementScores agreement_scores(const Attribution& attr, const Attribution& ground_truth, Index k, RankBy rank_by) {
    if (attr.vectors.rows() != ground_truth.vectors.rows() || attr.vectors.cols() != ground_truth.vectors.cols())
        throw std::invalid_argument("agreement_scores: attribution shapes differ");
    const Index n = attr.vectors.rows();
    if (n < 1) throw std::invalid_argument("agreement_scores: no samples");
    AgreementScores out;
    out.k = k;
    for (Index i = 0; i < n; ++i) {
        const Vector v = attr.vectors.row(i).transpose();
        const Vector g = ground_truth.vectors.row(i).transpose();
        const auto top = topk_agreement(v, g, k, rank_by);
        const auto rank = rank_metrics(v, g);
        out.fa += top.fa;
        out.ra += top.ra;
        out.sa += top.sa;
        out.sra += top.sra;
        out.rc += rank.rc;
        out.pra += rank.pra;
    }
    const double inv = 1.0 / static_cast<double>(n);
    out.fa *= inv;
    out.ra *= inv;
    out.sa *= inv;
    out.sra *= inv;
    out.rc *= inv;
    out.pra *= inv;
    return out;
}

DropMeasure default_drop_measure(const DegradationCurve& curve) {
    return curve.strategy.rfind("goar", 0) == 0 ? DropMeasure::cumulative_misclassified : DropMeasure::accuracy_drop;
}

double performance_drop_score(const DegradationCurve& curve, DropMeasure measure) {
    if (curve.points.empty()) throw std::invalid_argument("performance_drop_score: empty curve");
    auto value = [&](const CurvePoint& p) {
        return measure == DropMeasure::cumulative_misclassified ? p.cumulative_misclassified
                                                                : curve.points.front().accuracy - p.accuracy;
    };
    if (curve.points.size() == 1) return value(curve.points.front());
    double area = 0.0;
    for (std::size_t j = 1; j < curve.points.size(); ++j) {
        const auto& a = curve.points[j - 1];
        const auto& b = curve.points[j];
        area += 0.5 * (value(a) + value(b)) * (b.level - a.level);
    }
    const double span = curve.points.back().level - curve.points.front().level;
    if (!(span > 0.0)) throw std::invalid_argument("performance_drop_score: levels must increase");
    return area / span;
}

double performance_drop_score(const DegradationCurve& curve) {
    return performance_drop_score(curve, default_drop_measure(curve));
}

std::optional<double> pearson(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size() || a.size() < 2) throw std::invalid_argument("pearson: need two equal-length series");
    const double n = static_cast<double>(a.size());
    const double ma = std::accumulate(a.begin(), a.end(), 0.0) / n;
    const double mb = std::accumulate(b.begin(), b.end(), 0.0) / n;
    double sab = 0.0, saa = 0.0, sbb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        sab += (a[i] - ma) * (b[i] - mb);
        saa += (a[i] - ma) * (a[i] - ma);
        sbb += (b[i] - mb) * (b[i] - mb);
    }
    // Relative floor so that float noise on a constant series counts as constant.
    const double scale_a = std::max(1.0, ma * ma) * n * 1e-24;
    const double scale_b = std::max(1.0, mb * mb) * n * 1e-24;
    if (saa <= scale_a || sbb <= scale_b) return std::nullopt;
    return std::clamp(sab / std::sqrt(saa * sbb), -1.0, 1.0);
}

const CorrelationEntry& CorrelationTable::at(const std::string& benchmark, const std::string& metric) const {
    for (const auto& e : entries)
        if (e.benchmark == benchmark && e.metric == metric) return e;
    throw std::out_of_range("correlation table has no entry " + benchmark + "/" + metric);
}

CorrelationTable correlation_table(const std::vector<BenchmarkDrops>& drops,
                                   const std::vector<AgreementScores>& agreements, std::size_t n_bootstrap,
                                   std::uint64_t seed) {
    const std::size_t m = agreements.size();
    if (m < 3) throw std::invalid_argument("correlation_table: need at least 3 methods");
    CorrelationTable table;
    for (const auto& bench : drops) {
        if (bench.drops.size() != m)
            throw std::invalid_argument("correlation_table: benchmark '" + bench.benchmark + "' has " +
                                        std::to_string(bench.drops.size()) + " drop scores for " +
                                        std::to_string(m) + " methods");
        for (const auto& metric : agreement_metric_names()) {
            std::vector<double> scores;
            for (const auto& a : agreements) scores.push_back(agreement_metric(a, metric));
            CorrelationEntry entry{bench.benchmark, metric, pearson(bench.drops, scores), std::nullopt};

            Rng rng(derive_seed(seed, table.entries.size()));
            std::uniform_int_distribution<std::size_t> pick(0, m - 1);
            std::vector<double> samples;
            for (std::size_t b = 0; b < n_bootstrap; ++b) {
                std::vector<double> xs, ys;
                for (std::size_t i = 0; i < m; ++i) {
                    const std::size_t idx = pick(rng);
                    xs.push_back(bench.drops[idx]);
                    ys.push_back(scores[idx]);
                }
                if (const auto r = pearson(xs, ys)) samples.push_back(*r);
            }
            if (samples.size() >= 2) {
                const double mean = std::accumulate(samples.begin(), samples.end(), 0.0) / static_cast<double>(samples.size());
                double var = 0.0;
                for (double s : samples) var += (s - mean) * (s - mean);
                entry.std = std::sqrt(var / static_cast<double>(samples.size() - 1));
            }
            table.entries.push_back(std::move(entry));
        }
    }
    return table;
}

}  // namespace goar
