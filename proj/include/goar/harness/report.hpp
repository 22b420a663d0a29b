#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "goar/curve.hpp"
#include "goar/evaluation.hpp"

namespace goar::harness {

struct MethodAgreement {
    std::string method;
    AgreementScores scores;
};

struct DropScore {
    std::string strategy;
    std::string method;
    double score = 0.0;
    DropMeasure measure = DropMeasure::cumulative_misclassified;
};

const char* to_string(DropMeasure measure);

// Quotes a CSV field when it contains a comma, quote or line break.
std::string csv_field(const std::string& text);

// strategy,method,level,accuracy,cumulative_misclassified; one row per point.
std::string curves_csv(const std::vector<DegradationCurve>& curves);
// Inverse of curves_csv. Consecutive rows with the same (strategy, method)
// form one curve. Throws std::runtime_error with the offending row number.
std::vector<DegradationCurve> parse_curves_csv(const std::string& text);
std::vector<DegradationCurve> read_curves_csv(const std::filesystem::path& path);

// method,FA,RA,SA,SRA,RC,PRA
std::string agreement_csv(const std::vector<MethodAgreement>& rows);
// benchmark,metric,r,std; undefined values are written as NA.
std::string correlations_csv(const CorrelationTable& table);
// strategy,method,drop_score,measure
std::string scores_csv(const std::vector<DropScore>& rows);

void write_text_file(const std::filesystem::path& path, const std::string& text);

}  // namespace goar::harness
