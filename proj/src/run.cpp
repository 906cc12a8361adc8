#include "alphasde/run.hpp"

#include <chrono>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <ostream>

#include <Eigen/Core>

#include "alphasde/acceptance.hpp"
#include "alphasde/format.hpp"
#include "alphasde/stats.hpp"
#include "alphasde/steady.hpp"

namespace alphasde {

using nlohmann::json;
namespace fs = std::filesystem;

fs::path default_output_dir() {
    if (const char* env = std::getenv(kOutputDirVariable); env && *env) return env;
    return "alphasde_out";
}

namespace {

class Artifacts {
public:
    explicit Artifacts(fs::path dir) : dir_(std::move(dir)) { fs::create_directories(dir_); }

    std::ofstream open(const std::string& name) {
        std::ofstream out(dir_ / name, std::ios::binary);
        if (!out) throw Error("cannot write " + (dir_ / name).string());
        files_.push_back(name);
        return out;
    }

    const fs::path& dir() const { return dir_; }
    const std::vector<std::string>& files() const { return files_; }

private:
    fs::path dir_;
    std::vector<std::string> files_;
};

struct Context {
    const RunConfig& cfg;
    std::uint64_t seed;
    unsigned threads;
    Artifacts& out;
    std::ostream* log;
    bool seed_given;
    json results = json::object();
    std::vector<std::string> warnings;
    bool checks_failed = false;

    void warn(const std::string& w) {
        warnings.push_back(w);
        if (log) *log << "warning: " << w << '\n';
    }
};

Vector start_point(const std::vector<double>& given, int dim) {
    if (given.empty()) return Vector::Zero(dim);
    return Eigen::Map<const Vector>(given.data(), static_cast<Eigen::Index>(given.size()));
}

void run_simulate(Context& c, const SDEModel& model) {
    EnsembleSpec spec;
    spec.x0 = start_point(c.cfg.sim.x0, model.state_dim());
    spec.t_end = c.cfg.sim.t_end;
    spec.dt = c.cfg.sim.dt;
    spec.alpha = c.cfg.alpha;
    spec.scheme = c.cfg.scheme;
    spec.n_paths = c.cfg.sim.n_paths;
    spec.seed = c.seed;
    spec.picard_iters = c.cfg.picard_iters;
    spec.keep_paths = c.cfg.sim.keep_paths;
    spec.threads = c.threads;
    const Ensemble ens = simulate_ensemble(model, spec);
    {
        auto os = c.out.open("endpoints.csv");
        write_endpoints_csv(ens, os);
    }
    if (spec.keep_paths) {
        auto os = c.out.open("paths.bin");
        write_paths_binary(ens, os);
    }
    if (!c.cfg.grid.empty()) {
        const Grid grid(c.cfg.grid);
        const EmpiricalDensity e = empirical_density(ens, grid);
        auto os = c.out.open("density.csv");
        os << (grid.dim() == 1 ? "x,density,count\n" : "x,y,density,count\n");
        for (std::size_t p = 0; p < grid.size(); ++p) {
            const Vector x = grid.node(p);
            for (int k = 0; k < grid.dim(); ++k) os << format_double(x[k]) << ',';
            os << format_double(e.density[static_cast<Eigen::Index>(p)]) << ',' << e.counts[p] << '\n';
        }
        for (const auto& w : e.warnings) c.warn(w);
    }
    c.results["steps"] = ens.steps;
    c.results["failed_paths"] = ens.failures.size();
    if (!ens.ok()) {
        auto os = c.out.open("failures.csv");
        os << "path_id,step,reason\n";
        for (const PathFailure& f : ens.failures) os << f.path << ',' << f.step << ",\"" << f.reason << "\"\n";
        throw DivergenceError(std::to_string(ens.failures.size()) + " of " + std::to_string(ens.n_paths) +
                                  " paths diverged; see failures.csv",
                              0);
    }
}

void run_wdw(Context& c) {
    const auto samples =
        wdw_samples(c.seed, c.cfg.sim.t_end, c.cfg.sim.steps, c.cfg.alpha, c.cfg.sim.n_paths, c.threads);
    auto os = c.out.open("wdw_samples.csv");
    os << "sample_index,value\n";
    double sum = 0.0;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        os << i << ',' << format_double(samples[i]) << '\n';
        sum += samples[i];
    }
    const double mean = sum / static_cast<double>(samples.size());
    double ss = 0.0;
    for (double v : samples) ss += (v - mean) * (v - mean);
    c.results["mean"] = mean;
    c.results["expected_mean"] = c.cfg.alpha.value() * c.cfg.sim.t_end;
    c.results["variance"] = samples.size() > 1 ? ss / static_cast<double>(samples.size() - 1) : 0.0;
    c.results["expected_variance"] = 0.5 * c.cfg.sim.t_end * c.cfg.sim.t_end;
}

void run_fpe(Context& c, const SDEModel& model) {
    const Grid grid(c.cfg.grid);
    const GridDensity w0 =
        GridDensity::gaussian(grid, start_point(c.cfg.fpe.initial_mean, grid.dim()), c.cfg.fpe.initial_std);
    EvolveOptions opt;
    opt.t_end = c.cfg.fpe.t_end;
    opt.dt = c.cfg.fpe.dt;
    opt.snapshot_times = c.cfg.fpe.snapshots;
    opt.boundary = c.cfg.fpe.boundary;
    const EvolveResult run = evolve_density(model, w0, c.cfg.alpha, opt);
    for (const auto& w : run.warnings) c.warn(w);
    {
        auto os = c.out.open("snapshots.csv");
        write_snapshots_csv(run.snapshots, os);
    }
    const auto track = extremum_track(run.snapshots);
    auto os = c.out.open("extrema.csv");
    os << (grid.dim() == 1 ? "t,x,node_index,w_max,on_boundary,unique\n" : "t,x,y,node_index,w_max,on_boundary,unique\n");
    for (std::size_t s = 0; s < track.size(); ++s) {
        os << format_double(run.snapshots[s].t);
        for (int k = 0; k < grid.dim(); ++k) os << ',' << format_double(track[s].x[k]);
        os << ',' << track[s].node << ',' << format_double(run.snapshots[s].w.maxCoeff()) << ','
           << (track[s].on_boundary ? "true" : "false") << ',' << (track[s].unique ? "true" : "false") << '\n';
        if (track[s].on_boundary) c.warn("maximum on the boundary at t=" + format_double(run.snapshots[s].t));
    }
    c.results["steps"] = run.steps;
    c.results["max_mass_error"] = run.max_mass_error;
    c.results["min_value"] = run.min_value;
}

void run_operators(Context& c, const SDEModel& model) {
    const Grid grid(c.cfg.grid);
    const OperatorMatrix fwd = build_forward(model, grid, c.cfg.alpha, c.cfg.fpe.boundary);
    const OperatorMatrix bwd = build_backward(model, grid, c.cfg.alpha);
    const OperatorMatrix gap = operator_gap(model, grid, c.cfg.alpha);
    for (const auto& [name, op] : {std::pair{"forward.csv", &fwd}, {"backward.csv", &bwd}, {"gap.csv", &gap}}) {
        auto os = c.out.open(name);
        write_operator_csv(*op, os);
    }
    const SparseMatrix diff = fwd.matrix - bwd.matrix;
    auto os = c.out.open("operators_summary.csv");
    os << "quantity,value\n";
    os << "max_abs_forward," << format_double(max_abs(fwd.matrix)) << '\n';
    os << "max_column_sum_forward," << format_double(max_column_sum(fwd.matrix)) << '\n';
    os << "max_abs_forward_minus_backward," << format_double(max_abs(diff)) << '\n';
    os << "max_abs_gap_pure_noise," << format_double(max_abs(gap.matrix)) << '\n';
    c.results["max_abs_gap_pure_noise"] = max_abs(gap.matrix);
}

void run_steady(Context& c, const SDEModel& model) {
    const Grid grid(c.cfg.grid);
    GridDensity w = c.cfg.steady.method == SteadyMethod::quadrature
                        ? steady_1d_zero_current(model, grid, c.cfg.alpha)
                        : steady_nullspace(build_forward(model, grid, c.cfg.alpha));
    const Quasipotential q = quasipotential(w, c.cfg.steady.epsilon);
    auto os = c.out.open("steady.csv");
    write_steady_csv(w, q, os);
    if (!q.zero_density_nodes.empty()) {
        c.warn(std::to_string(q.zero_density_nodes.size()) + " node(s) with zero density; phi set to inf there");
    }
    if (grid.dim() == 1) c.results["quasipotential_minima"] = local_minima(q);
}

void run_reversal(Context& c, const SDEModel& model) {
    KernelSymmetrySpec spec;
    spec.x = c.cfg.reversal.x;
    spec.y = c.cfg.reversal.y;
    spec.t = c.cfg.reversal.t;
    spec.delta = c.cfg.reversal.delta;
    spec.dt = c.cfg.sim.dt;
    spec.n_paths = c.cfg.sim.n_paths;
    spec.alpha = c.cfg.alpha;
    spec.scheme = c.cfg.scheme;
    spec.seed = c.seed;
    spec.threads = c.threads;
    const KernelSymmetryResult r = kernel_symmetry(model, spec);
    const bool symmetric = c.cfg.reversal.expect_symmetric.value_or(c.cfg.alpha.value() == 1.0);
    const double threshold = c.cfg.reversal.threshold.value_or(symmetric ? 4.0 : 8.0);
    const double z = std::abs(r.z);
    const bool pass = !r.inconclusive && (symmetric ? z <= threshold : z >= threshold);
    {
        auto os = c.out.open("reversal.csv");
        emit_statistic_report({{symmetric ? "kernel_symmetric" : "kernel_asymmetric", "|z|", 0.0, z, threshold, pass}},
                              os);
    }
    auto os = c.out.open("kernel.csv");
    os << "direction,hits,probability\n";
    os << "forward," << r.hits_forward << ',' << format_double(r.p_forward) << '\n';
    os << "backward," << r.hits_backward << ',' << format_double(r.p_backward) << '\n';
    c.results["z"] = r.z;
    c.results["inconclusive"] = r.inconclusive;
    if (r.inconclusive) c.warn("no hits in either direction; the symmetry test is inconclusive");
    c.checks_failed = !pass;
}

void run_report_all(Context& c) {
    AcceptanceOptions opt;
    if (c.seed_given) opt.seed = c.seed;
    c.seed = opt.seed;
    opt.threads = c.threads;
    const auto rows = run_acceptance(c.cfg.report.checks, opt, c.log);
    auto os = c.out.open("summary.csv");
    emit_report(rows, os);
    std::size_t failed = 0;
    for (const auto& r : rows) failed += r.pass ? 0 : 1;
    c.results["checks"] = rows.size();
    c.results["failed_checks"] = failed;
    c.checks_failed = failed > 0;
}

std::string utc_timestamp() {
    const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

} // namespace

RunOutcome run_config(const RunConfig& cfg, const RunOptions& options) {
    RunOutcome outcome;
    outcome.out_dir = options.out_dir ? *options.out_dir
                      : !cfg.output_dir.empty() ? fs::path(cfg.output_dir)
                                                : default_output_dir();
    const auto started = std::chrono::steady_clock::now();
    const std::string timestamp = utc_timestamp();

    std::optional<Artifacts> out;
    try {
        out.emplace(outcome.out_dir);
    } catch (const std::exception& e) {
        outcome.exit_code = kExitValidation;
        outcome.message = "cannot create output directory " + outcome.out_dir.string() + ": " + e.what();
        return outcome;
    }

    const bool seed_given = options.seed || (cfg.source.contains("sim") && cfg.source["sim"].contains("seed"));
    Context c{cfg, options.seed.value_or(cfg.sim.seed), options.threads.value_or(cfg.threads), *out, options.log,
              seed_given, json::object(), {}};
    std::string status = "ok";
    try {
        if (cfg.experiment == Experiment::wdw) {
            run_wdw(c);
        } else if (cfg.experiment == Experiment::report_all) {
            run_report_all(c);
        } else {
            const SDEModel model = make_preset(cfg.model.preset, cfg.model.params);
            switch (cfg.experiment) {
            case Experiment::simulate: run_simulate(c, model); break;
            case Experiment::fpe_evolve: run_fpe(c, model); break;
            case Experiment::operators: run_operators(c, model); break;
            case Experiment::steady: run_steady(c, model); break;
            case Experiment::reversal: run_reversal(c, model); break;
            default: break;
            }
        }
        if (c.checks_failed) {
            outcome.exit_code = kExitNumerical;
            status = "checks_failed";
            outcome.message = "one or more checks failed";
        }
    } catch (const ParameterError& e) {
        outcome.exit_code = kExitValidation;
        status = "invalid";
        outcome.message = e.what();
    } catch (const std::exception& e) {
        outcome.exit_code = kExitNumerical;
        status = "numerical_failure";
        outcome.message = e.what();
    }

    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    json manifest = {
        {"tool", "alphasde"},
        {"experiment", to_string(cfg.experiment)},
        {"config", cfg.source},
        {"seed", c.seed},
        {"threads", c.threads},
        {"versions",
         {{"alphasde", kVersion},
          {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                        std::to_string(EIGEN_MINOR_VERSION)},
          {"nlohmann_json", std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." +
                                std::to_string(NLOHMANN_JSON_VERSION_MINOR) + "." +
                                std::to_string(NLOHMANN_JSON_VERSION_PATCH)},
          {"compiler", __VERSION__}}},
        {"started_utc", timestamp},
        {"wall_time_seconds", wall},
        {"status", status},
        {"exit_code", outcome.exit_code},
        {"message", outcome.message},
        {"warnings", c.warnings},
        {"results", c.results},
        {"files", out->files()},
    };
    try {
        auto os = out->open("manifest.json");
        os << manifest.dump(2) << '\n';
    } catch (const std::exception& e) {
        if (outcome.exit_code == kExitOk) outcome.exit_code = kExitNumerical;
        outcome.message = e.what();
    }
    outcome.files = out->files();
    return outcome;
}

} // namespace alphasde
