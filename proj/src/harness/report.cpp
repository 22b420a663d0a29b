#include "goar/harness/report.hpp"

#include <charconv>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "goar/data.hpp"
#include "goar/harness/config.hpp"

namespace goar::harness {

const char* to_string(DropMeasure measure) {
    return measure == DropMeasure::cumulative_misclassified ? "cumulative_misclassified" : "accuracy_drop";
}

std::string csv_field(const std::string& text) {
    if (text.find_first_of(",\"\n\r") == std::string::npos) return text;
    std::string out = "\"";
    for (char ch : text) {
        if (ch == '"') out += '"';
        out += ch;
    }
    return out + "\"";
}

std::string curves_csv(const std::vector<DegradationCurve>& curves) {
    std::string out = "strategy,method,level,accuracy,cumulative_misclassified\n";
    for (const auto& c : curves)
        for (const auto& p : c.points)
            out += csv_field(c.strategy) + "," + csv_field(c.method) + "," + format_double(p.level) + "," +
                   format_double(p.accuracy) + "," + format_double(p.cumulative_misclassified) + "\n";
    return out;
}

namespace {

double parse_number(const std::string& text, std::size_t row) {
    double value = 0.0;
    const auto res = std::from_chars(text.data(), text.data() + text.size(), value);
    if (text.empty() || res.ec != std::errc() || res.ptr != text.data() + text.size())
        throw std::runtime_error("curves csv row " + std::to_string(row) + ": '" + text + "' is not a number");
    return value;
}

}  // namespace

std::vector<DegradationCurve> parse_curves_csv(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("curves csv is empty");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != "strategy,method,level,accuracy,cumulative_misclassified")
        throw std::runtime_error("curves csv has an unexpected header: '" + line + "'");
    std::vector<DegradationCurve> curves;
    std::size_t row = 1;
    while (std::getline(in, line)) {
        ++row;
        if (line.empty() || line == "\r") continue;
        const auto f = split_csv_line(line);
        if (f.size() != 5)
            throw std::runtime_error("curves csv row " + std::to_string(row) + ": expected 5 fields, got " +
                                     std::to_string(f.size()));
        if (curves.empty() || curves.back().strategy != f[0] || curves.back().method != f[1])
            curves.push_back({f[0], f[1], {}, {}});
        curves.back().points.push_back({parse_number(f[2], row), parse_number(f[3], row), parse_number(f[4], row)});
    }
    return curves;
}

std::vector<DegradationCurve> read_curves_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    std::ostringstream text;
    text << in.rdbuf();
    return parse_curves_csv(text.str());
}

std::string agreement_csv(const std::vector<MethodAgreement>& rows) {
    std::string out = "method,FA,RA,SA,SRA,RC,PRA\n";
    for (const auto& r : rows) {
        const auto& s = r.scores;
        out += csv_field(r.method) + "," + format_double(s.fa) + "," + format_double(s.ra) + "," + format_double(s.sa) +
               "," + format_double(s.sra) + "," + format_double(s.rc) + "," + format_double(s.pra) + "\n";
    }
    return out;
}

std::string correlations_csv(const CorrelationTable& table) {
    std::string out = "benchmark,metric,r,std\n";
    auto opt = [](const std::optional<double>& v) { return v ? format_double(*v) : std::string("NA"); };
    for (const auto& e : table.entries)
        out += csv_field(e.benchmark) + "," + e.metric + "," + opt(e.r) + "," + opt(e.std) + "\n";
    return out;
}

std::string scores_csv(const std::vector<DropScore>& rows) {
    std::string out = "strategy,method,drop_score,measure\n";
    for (const auto& r : rows)
        out += csv_field(r.strategy) + "," + csv_field(r.method) + "," + format_double(r.score) + "," +
               to_string(r.measure) + "\n";
    return out;
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << text;
    if (!out) throw std::runtime_error("failed writing " + path.string());
}

}  // namespace goar::harness
