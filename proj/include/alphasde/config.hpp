#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "alphasde/fpe.hpp"
#include "alphasde/integrate.hpp"
#include "alphasde/presets.hpp"

namespace alphasde {

inline constexpr int kSchemaVersion = 1;

/// Schema violation. `line()` is 1-based, 0 when no source position applies.
class ConfigError : public ParameterError {
public:
    ConfigError(const std::string& what, int line) : ParameterError(what), line_(line) {}
    int line() const noexcept { return line_; }

private:
    int line_;
};

enum class Experiment { simulate, wdw, fpe_evolve, operators, steady, reversal, report_all };

std::string_view to_string(Experiment e) noexcept;

struct ModelSpec {
    std::string preset = "linear-noise";
    PresetParams params;
};

struct SimSpec {
    std::size_t n_paths = 10000;
    double dt = 1e-3;
    double t_end = 1.0;
    std::uint64_t seed = 0;
    std::vector<double> x0;   // empty: origin
    std::size_t steps = 1000;  // wdw only
    bool keep_paths = false;
};

struct FpeSpec {
    double t_end = 1.0;
    double dt = 0.0;
    std::vector<double> snapshots;
    std::vector<double> initial_mean;  // empty: origin
    double initial_std = 0.2;
    Boundary boundary = Boundary::no_flux;
};

enum class SteadyMethod { nullspace, quadrature };

struct SteadySpec {
    double epsilon = 1.0;
    SteadyMethod method = SteadyMethod::nullspace;
};

struct ReversalSpec {
    double x = -0.8;
    double y = 0.8;
    double t = 0.25;
    double delta = 0.1;
    std::optional<bool> expect_symmetric;  // default: alpha == 1
    std::optional<double> threshold;       // default: 4 symmetric, 8 otherwise
};

struct ReportSpec {
    std::vector<int> checks;  // empty: all
};

struct RunConfig {
    Experiment experiment = Experiment::simulate;
    Alpha alpha = Alpha::anti_ito();
    Scheme scheme = Scheme::ito_form;
    int picard_iters = kDefaultPicardIterations;
    ModelSpec model;
    std::vector<Axis> grid;  // empty when the experiment needs none
    SimSpec sim;
    FpeSpec fpe;
    SteadySpec steady;
    ReversalSpec reversal;
    ReportSpec report;
    std::string output_dir;  // empty: caller default
    unsigned threads = 0;
    nlohmann::json source;   // the document as given
};

/// Parses and validates a JSON config. Unknown keys, wrong types and
/// out-of-range values throw ConfigError with the offending line.
RunConfig parse_config(std::string_view text);
RunConfig load_config(const std::filesystem::path& path);

} // namespace alphasde
