#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace alphasde {

/// One checked quantity. `expected` and `tolerance` are read together with
/// the check's own comparison (band, bound or threshold) described in
/// `quantity`.
struct CheckOutcome {
    std::string test_name;
    std::string quantity;
    double expected = 0.0;
    double observed = 0.0;
    double tolerance = 0.0;
    bool pass = false;
};

bool all_passed(const std::vector<CheckOutcome>& results) noexcept;

/// CSV `test_name,quantity,expected,observed,tolerance,pass`, rows sorted by
/// test_name (stable for equal names). Throws ParameterError when empty.
void emit_report(std::vector<CheckOutcome> results, std::ostream& os);

/// CSV `test_name,statistic,threshold,pass`, in the given order.
void emit_statistic_report(const std::vector<CheckOutcome>& results, std::ostream& os);

} // namespace alphasde
