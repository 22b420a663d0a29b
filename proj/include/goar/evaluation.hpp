#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "goar/attribution.hpp"
#include "goar/common.hpp"
#include "goar/curve.hpp"
#include "goar/data.hpp"
#include "goar/diffusion.hpp"
#include "goar/nn.hpp"

namespace goar {

// GOAR: for each strength, perturb train and test along -v with manifold
// projection, retrain a fresh seeded model, and accumulate the set of test
// samples that have been misclassified at any strength so far. A level-0
// clean baseline is prepended when strengths does not start at 0.
DegradationCurve run_goar(const Dataset& train_set, const Attribution& train_attr, const Dataset& test_set,
                          const Attribution& test_attr, const std::vector<double>& strengths,
                          const TrainConfig& cfg, const ProjectionConfig& projection, const GmmPrior& prior,
                          const DiffusionSchedule& schedule, const CanonicalMap& map);

struct TopKAgreement {
    double fa = 0.0;   // feature agreement
    double ra = 0.0;   // rank agreement (same feature at the same rank)
    double sa = 0.0;   // sign agreement
    double sra = 0.0;  // signed rank agreement
};

TopKAgreement topk_agreement(const Vector& v, const Vector& v_gt, Index k, RankBy rank_by = RankBy::value);

struct RankMetrics {
    double rc = 0.0;   // Spearman rank correlation (average ranks for ties)
    double pra = 0.0;  // pairwise rank agreement
};

// RC is 0 when either vector is constant.
RankMetrics rank_metrics(const Vector& v, const Vector& v_gt);

struct AgreementScores {
    double fa = 0.0, ra = 0.0, sa = 0.0, sra = 0.0, rc = 0.0, pra = 0.0;
    Index k = 0;
};

// Metric names in report order.
const std::vector<std::string>& agreement_metric_names();
double agreement_metric(const AgreementScores& scores, const std::string& name);

// Per-sample agreement averaged over all samples.
AgreementScores agreement_scores(const Attribution& attr, const Attribution& ground_truth, Index k,
                                 RankBy rank_by = RankBy::value);

// Default k for top-k metrics: 25% of d, at least 1.
Index default_top_k(Index dim);

enum class DropMeasure {
    cumulative_misclassified,  // GOAR
    accuracy_drop,             // pixel strategies: clean accuracy - accuracy
};

DropMeasure default_drop_measure(const DegradationCurve& curve);

// Trapezoid area under the chosen series over the level grid, divided by the
// grid span.
double performance_drop_score(const DegradationCurve& curve, DropMeasure measure);
double performance_drop_score(const DegradationCurve& curve);

std::optional<double> pearson(const std::vector<double>& a, const std::vector<double>& b);

struct BenchmarkDrops {
    std::string benchmark;
    std::vector<double> drops;  // one per method, same order as the agreements
};

struct CorrelationEntry {
    std::string benchmark;
    std::string metric;
    std::optional<double> r;    // empty when a series has zero variance
    std::optional<double> std;  // bootstrap std over methods
};

struct CorrelationTable {
    std::vector<CorrelationEntry> entries;

    const CorrelationEntry& at(const std::string& benchmark, const std::string& metric) const;
};

// Pearson r between drop scores and each agreement metric across methods;
// the std column comes from n_bootstrap resamples of the methods.
CorrelationTable correlation_table(const std::vector<BenchmarkDrops>& drops,
                                   const std::vector<AgreementScores>& agreements, std::size_t n_bootstrap,
                                   std::uint64_t seed);

}  // namespace goar
