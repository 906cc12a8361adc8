#include <CLI11.hpp>

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include "alphasde/errors.hpp"
#include "alphasde/format.hpp"
#include "alphasde/presets.hpp"
#include "alphasde/run.hpp"

using namespace alphasde;

namespace {

void print_presets(std::ostream& os) {
    for (const PresetInfo& p : preset_registry()) {
        os << p.name << "  (dim " << p.state_dim << ")  " << p.description << '\n';
        for (const PresetParam& q : p.params) {
            os << "    " << q.name << " = " << format_double(q.default_value);
            if (!q.meaning.empty()) os << "  " << q.meaning;
            os << '\n';
        }
    }
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"alpha-SDE integrator and Fokker-Planck toolkit"};
    app.set_version_flag("--version", std::string(kVersion));
    app.require_subcommand(1);

    std::string config_path;
    std::optional<std::string> out_dir;
    std::optional<std::uint64_t> seed;
    std::optional<unsigned> threads;
    bool quiet = false;

    CLI::App* run = app.add_subcommand("run", "run the experiment described by a JSON config");
    run->add_option("-c,--config", config_path, "config file")->required();
    run->add_option("-o,--out", out_dir, "output directory (default: output.dir, $ALPHASDE_OUT_DIR, ./alphasde_out)");
    run->add_option("--seed", seed, "master seed, overrides sim.seed");
    run->add_option("--threads", threads, "worker threads, 0 for all cores");
    run->add_flag("-q,--quiet", quiet, "no progress output");

    app.add_subcommand("presets", "list built-in models and their parameters");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitValidation;
    }

    if (app.got_subcommand("presets")) {
        print_presets(std::cout);
        return kExitOk;
    }

    RunConfig cfg;
    try {
        cfg = load_config(config_path);
    } catch (const Error& e) {
        std::cerr << "alphasde: " << e.what() << '\n';
        return kExitValidation;
    }

    RunOptions opt;
    if (out_dir) opt.out_dir = *out_dir;
    opt.seed = seed;
    opt.threads = threads;
    opt.log = quiet ? nullptr : &std::cerr;
    const RunOutcome outcome = run_config(cfg, opt);
    if (outcome.exit_code != kExitOk) std::cerr << "alphasde: " << outcome.message << '\n';
    if (!quiet) std::cout << outcome.out_dir.string() << '\n';
    return outcome.exit_code;
}
