#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "alphasde/model.hpp"

namespace alphasde {

enum class Scheme {
    ito_form,     // Euler-Maruyama on the drift-corrected Ito form
    alpha_point,  // noise evaluated at x + alpha * dX, solved by Picard iteration
};

std::string_view to_string(Scheme scheme) noexcept;
Scheme parse_scheme(std::string_view text);

inline constexpr int kDefaultPicardIterations = 2;

struct WienerIncrements {
    std::size_t steps = 0;
    double dt = 0.0;
    int noise_dim = 0;
    Matrix increments;  // steps x noise_dim
    std::uint64_t seed = 0;
};

/// I.i.d. N(0, dt) increments; row s holds step s. Deterministic in seed.
WienerIncrements wiener_increments(std::uint64_t seed, int noise_dim, double dt, std::size_t steps);

/// x + b(x) dW + [a(x) + alpha a_N(x)] dt.
Vector step_ito_form(const SDEModel& model, const Vector& x, double dt, const Vector& dw, Alpha alpha);

/// x + dX with dX = b(x + alpha dX) dW + a(x) dt, solved by `picard_iters`
/// fixed-point sweeps from dX_0 = b(x) dW + a(x) dt. The drift is always
/// taken at the start of the interval. Throws DivergenceError if an
/// iterate is not finite.
Vector step_alpha_point(const SDEModel& model, const Vector& x, double dt, const Vector& dw, Alpha alpha,
                        int picard_iters = kDefaultPicardIterations);

struct EnsembleSpec {
    Vector x0;
    double t_end = 1.0;
    double dt = 1e-3;
    Alpha alpha = Alpha::anti_ito();
    Scheme scheme = Scheme::ito_form;
    std::size_t n_paths = 1000;
    std::uint64_t seed = 0;
    int picard_iters = kDefaultPicardIterations;
    bool keep_paths = false;
    unsigned threads = 0;  // 0: hardware concurrency
};

struct PathFailure {
    std::size_t path = 0;
    std::size_t step = 0;
    std::string reason;
};

/// Simulated endpoints (and optionally full paths). Path p draws its noise
/// from Philox stream p of the master seed, so results do not depend on
/// the thread count.
struct Ensemble {
    std::string model_name;
    Alpha alpha = Alpha::anti_ito();
    Scheme scheme = Scheme::ito_form;
    Vector x0;
    double t_end = 0.0;
    double dt = 0.0;
    std::size_t n_paths = 0;
    std::size_t steps = 0;
    std::uint64_t seed = 0;
    Matrix endpoints;           // n_paths x state_dim; NaN rows for failed paths
    std::vector<double> paths;  // [path][step 0..steps][component], when kept
    std::vector<PathFailure> failures;

    bool ok() const noexcept { return failures.empty(); }
};

/// Step count for [0, t_end] at nominal step dt; the last step is
/// shortened when t_end is not a multiple of dt.
std::size_t step_count(double t_end, double dt);

Ensemble simulate_ensemble(const SDEModel& model, const EnsembleSpec& spec);

/// N samples of sum_i W(tau_i + alpha dtau) dW_i over [0, t], with W
/// linearly interpolated inside each subinterval. Sample s uses stream s.
std::vector<double> wdw_samples(std::uint64_t seed, double t, std::size_t steps, Alpha alpha, std::size_t n,
                                unsigned threads = 0);

/// CSV `path_id,component_index,value`.
void write_endpoints_csv(const Ensemble& ensemble, std::ostream& os);

/**
 * Full-path dump, little-endian:
 *   8 bytes   magic "ASDEPTH1"
 *   uint64    n_paths
 *   uint64    steps + 1 (stored time points)
 *   uint64    state_dim
 *   float64   t_end, dt
 *   float64[] values, row-major [path][time point][component]
 */
void write_paths_binary(const Ensemble& ensemble, std::ostream& os);

} // namespace alphasde
