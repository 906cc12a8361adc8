#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "alphasde/report.hpp"

namespace alphasde {

struct AcceptanceOptions {
    std::uint64_t seed = 20240611;
    unsigned threads = 0;
};

struct Criterion {
    int id;
    std::string name;     // also the test_name prefix in reports
    std::string summary;  // one line
    std::function<std::vector<CheckOutcome>(const AcceptanceOptions&)> run;
};

/// The twelve acceptance checks, in order.
const std::vector<Criterion>& acceptance_criteria();

/// Runs the selected checks (all when `ids` is empty); one line per
/// criterion goes to `log` if given.
std::vector<CheckOutcome> run_acceptance(const std::vector<int>& ids, const AcceptanceOptions& options,
                                         std::ostream* log = nullptr);

} // namespace alphasde
