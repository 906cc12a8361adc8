#include "alphasde/report.hpp"

#include <algorithm>
#include <ostream>

#include "alphasde/errors.hpp"
#include "alphasde/format.hpp"

namespace alphasde {

namespace {

// Quantity strings are free text; keep the CSV parseable.
std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + '"';
}

} // namespace

bool all_passed(const std::vector<CheckOutcome>& results) noexcept {
    return std::all_of(results.begin(), results.end(), [](const CheckOutcome& r) { return r.pass; });
}

void emit_report(std::vector<CheckOutcome> results, std::ostream& os) {
    if (results.empty()) throw ParameterError("emit_report: no results");
    std::stable_sort(results.begin(), results.end(),
                     [](const CheckOutcome& a, const CheckOutcome& b) { return a.test_name < b.test_name; });
    os << "test_name,quantity,expected,observed,tolerance,pass\n";
    for (const CheckOutcome& r : results) {
        os << csv_field(r.test_name) << ',' << csv_field(r.quantity) << ',' << format_double(r.expected) << ','
           << format_double(r.observed) << ',' << format_double(r.tolerance) << ',' << (r.pass ? "true" : "false")
           << '\n';
    }
}

void emit_statistic_report(const std::vector<CheckOutcome>& results, std::ostream& os) {
    os << "test_name,statistic,threshold,pass\n";
    for (const CheckOutcome& r : results) {
        os << csv_field(r.test_name) << ',' << format_double(r.observed) << ',' << format_double(r.tolerance) << ','
           << (r.pass ? "true" : "false") << '\n';
    }
}

} // namespace alphasde
