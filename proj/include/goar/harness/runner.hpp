#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "goar/evaluation.hpp"
#include "goar/harness/config.hpp"
#include "goar/harness/report.hpp"

namespace goar::harness {

inline constexpr const char* kToolVersion = "1.0.0";

struct ExperimentResult {
    std::vector<DegradationCurve> curves;  // sorted by (strategy, method)
    std::vector<DropScore> drops;          // same order as curves
    std::vector<MethodAgreement> agreements;
    std::optional<CorrelationTable> correlations;
    std::vector<std::pair<std::string, std::uint64_t>> seeds;
    double strength_unit = 0.0;  // input-space distance of one relative GOAR strength unit
    double clean_accuracy = 0.0;
    std::vector<std::string> notes;
};

// Every random stream is derived from config.seed; identical configs give
// identical results regardless of the worker count.
ExperimentResult run_experiment(const ExperimentConfig& config);

// Writes curves.csv, scores.csv, agreement.csv, correlations.csv, one
// curves_<strategy>.svg per strategy and manifest.json into `dir`.
void write_report(const ExperimentConfig& config, const ExperimentResult& result, const std::filesystem::path& dir,
                  double wall_seconds);

// manifest.json with status "failed" and the error text.
void write_failure_manifest(const ExperimentConfig& config, const std::string& error, const std::filesystem::path& dir,
                            double wall_seconds);

// run_experiment + write_report; on failure writes the failure manifest and
// rethrows.
ExperimentResult run_and_report(const ExperimentConfig& config, const std::filesystem::path& dir);

}  // namespace goar::harness
