#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "alphasde/config.hpp"

namespace alphasde {

inline constexpr const char* kVersion = "0.1.0";
inline constexpr const char* kOutputDirVariable = "ALPHASDE_OUT_DIR";

inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 1;
inline constexpr int kExitNumerical = 2;  // numerical failure or a failed check

struct RunOptions {
    std::optional<std::filesystem::path> out_dir;  // overrides output.dir
    std::optional<std::uint64_t> seed;             // overrides sim.seed
    std::optional<unsigned> threads;               // overrides threads
    std::ostream* log = nullptr;                   // progress and warnings
};

struct RunOutcome {
    int exit_code = kExitOk;
    std::filesystem::path out_dir;
    std::vector<std::string> files;  // names relative to out_dir, manifest last
    std::string message;
};

/// $ALPHASDE_OUT_DIR if set, else ./alphasde_out.
std::filesystem::path default_output_dir();

/// Runs one experiment and writes its artifacts plus manifest.json. Never
/// throws for numerical trouble: that is reported through the exit code and
/// the manifest. Parameter errors surfacing during the run map to exit 1.
RunOutcome run_config(const RunConfig& config, const RunOptions& options = {});

} // namespace alphasde
