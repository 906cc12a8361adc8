#include "alphasde/integrate.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <limits>
#include <ostream>

#include "alphasde/format.hpp"
#include "alphasde/parallel.hpp"
#include "alphasde/rng.hpp"

namespace alphasde {

std::string_view to_string(Scheme scheme) noexcept {
    return scheme == Scheme::ito_form ? "ito_form" : "alpha_point";
}

Scheme parse_scheme(std::string_view text) {
    if (text == "ito_form") return Scheme::ito_form;
    if (text == "alpha_point") return Scheme::alpha_point;
    throw ParameterError("unknown scheme '" + std::string(text) + "' (expected ito_form or alpha_point)");
}

namespace {

// Allocation-free single-step kernels with per-thread scratch space.
class Stepper {
public:
    explicit Stepper(const SDEModel& model)
        : model_(model), n_(static_cast<std::size_t>(model.state_dim())),
          m_(static_cast<std::size_t>(model.noise_dim())), drift_(n_), b_(n_ * m_), jac_(n_ * m_ * n_),
          incr_(n_), trial_(n_) {}

    // Returns false when the result is not finite.
    bool ito(std::span<const double> x, double dt, std::span<const double> dw, double alpha,
             std::span<double> out) {
        model_.drift(x, drift_);
        model_.noise(x, b_);
        if (alpha != 0.0) {
            model_.noise_jacobian(x, jac_);
            for (std::size_t i = 0; i < n_; ++i) {
                double an = 0.0;
                for (std::size_t k = 0; k < m_; ++k)
                    for (std::size_t mm = 0; mm < n_; ++mm) an += jac_[(i * m_ + k) * n_ + mm] * b_[mm * m_ + k];
                drift_[i] += alpha * an;
            }
        }
        for (std::size_t i = 0; i < n_; ++i) {
            double noise = 0.0;
            for (std::size_t k = 0; k < m_; ++k) noise += b_[i * m_ + k] * dw[k];
            out[i] = x[i] + (noise + drift_[i] * dt);
        }
        return all_finite(out);
    }

    // Returns 0 on success or the 1-based index of the first non-finite iterate.
    int alpha_point(std::span<const double> x, double dt, std::span<const double> dw, double alpha, int iters,
                    std::span<double> out) {
        model_.drift(x, drift_);
        model_.noise(x, b_);
        increment(dt, dw);
        if (!all_finite(incr_)) return 1;
        for (int it = 1; it <= iters; ++it) {
            for (std::size_t i = 0; i < n_; ++i) trial_[i] = x[i] + alpha * incr_[i];
            model_.noise(trial_, b_);
            increment(dt, dw);
            if (!all_finite(incr_)) return it;
        }
        for (std::size_t i = 0; i < n_; ++i) out[i] = x[i] + incr_[i];
        return all_finite(out) ? 0 : iters;
    }

private:
    void increment(double dt, std::span<const double> dw) {
        for (std::size_t i = 0; i < n_; ++i) {
            double noise = 0.0;
            for (std::size_t k = 0; k < m_; ++k) noise += b_[i * m_ + k] * dw[k];
            incr_[i] = noise + drift_[i] * dt;
        }
    }

    const SDEModel& model_;
    std::size_t n_, m_;
    std::vector<double> drift_, b_, jac_, incr_, trial_;
};

void check_step_args(const SDEModel& model, const Vector& x, double dt, const Vector& dw) {
    if (!(dt > 0.0)) throw ParameterError("dt must be positive");
    if (x.size() != model.state_dim()) throw ParameterError("state dimension mismatch");
    if (dw.size() != model.noise_dim()) throw ParameterError("noise increment dimension mismatch");
}

std::span<const double> view(const Vector& v) { return {v.data(), static_cast<std::size_t>(v.size())}; }

template <class T>
void put_le(std::ostream& os, T value) {
    static_assert(std::endian::native == std::endian::little || std::endian::native == std::endian::big);
    unsigned char bytes[sizeof(T)];
    std::memcpy(bytes, &value, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
    os.write(reinterpret_cast<const char*>(bytes), sizeof(T));
}

} // namespace

WienerIncrements wiener_increments(std::uint64_t seed, int noise_dim, double dt, std::size_t steps) {
    if (!(dt > 0.0)) throw ParameterError("wiener_increments: dt must be positive");
    if (steps < 1) throw ParameterError("wiener_increments: steps must be >= 1");
    if (noise_dim < 1) throw ParameterError("wiener_increments: noise dimension must be >= 1");
    WienerIncrements w{steps, dt, noise_dim, Matrix(static_cast<Eigen::Index>(steps), noise_dim), seed};
    NormalStream stream(seed, 0);
    const double scale = std::sqrt(dt);
    for (std::size_t s = 0; s < steps; ++s)
        for (int k = 0; k < noise_dim; ++k) w.increments(static_cast<Eigen::Index>(s), k) = scale * stream.next();
    return w;
}

Vector step_ito_form(const SDEModel& model, const Vector& x, double dt, const Vector& dw, Alpha alpha) {
    check_step_args(model, x, dt, dw);
    Stepper stepper(model);
    Vector out(x.size());
    if (!stepper.ito(view(x), dt, view(dw), alpha.value(), {out.data(), static_cast<std::size_t>(out.size())})) {
        throw EvaluationError("non-finite Ito-form step", {x.data(), x.data() + x.size()});
    }
    return out;
}

Vector step_alpha_point(const SDEModel& model, const Vector& x, double dt, const Vector& dw, Alpha alpha,
                        int picard_iters) {
    check_step_args(model, x, dt, dw);
    if (picard_iters < 1) throw ParameterError("picard_iters must be >= 1");
    Stepper stepper(model);
    Vector out(x.size());
    const int bad = stepper.alpha_point(view(x), dt, view(dw), alpha.value(), picard_iters,
                                        {out.data(), static_cast<std::size_t>(out.size())});
    if (bad != 0) {
        throw DivergenceError("alpha-point iteration diverged at iterate " + std::to_string(bad), bad);
    }
    return out;
}

std::size_t step_count(double t_end, double dt) {
    if (!(t_end > 0.0)) throw ParameterError("t_end must be positive");
    if (!(dt > 0.0) || dt > t_end * (1.0 + 1e-12)) throw ParameterError("dt must satisfy 0 < dt <= t_end");
    const double ratio = t_end / dt;
    return static_cast<std::size_t>(std::max(1.0, std::ceil(ratio - 1e-9)));
}

Ensemble simulate_ensemble(const SDEModel& model, const EnsembleSpec& spec) {
    if (spec.n_paths < 1) throw ParameterError("simulate_ensemble: need at least one path");
    if (spec.x0.size() != model.state_dim()) throw ParameterError("simulate_ensemble: x0 dimension mismatch");
    if (spec.picard_iters < 1) throw ParameterError("picard_iters must be >= 1");
    const std::size_t steps = step_count(spec.t_end, spec.dt);
    const double last_dt = spec.t_end - static_cast<double>(steps - 1) * spec.dt;
    const auto n = static_cast<std::size_t>(model.state_dim());
    const auto m = static_cast<std::size_t>(model.noise_dim());

    Ensemble ens;
    ens.model_name = model.name();
    ens.alpha = spec.alpha;
    ens.scheme = spec.scheme;
    ens.x0 = spec.x0;
    ens.t_end = spec.t_end;
    ens.dt = spec.dt;
    ens.n_paths = spec.n_paths;
    ens.steps = steps;
    ens.seed = spec.seed;
    // Row-major scratch so each path writes a contiguous slot.
    std::vector<double> ends(spec.n_paths * n);
    if (spec.keep_paths) ens.paths.assign(spec.n_paths * (steps + 1) * n, 0.0);
    std::vector<PathFailure> failure_slot(spec.n_paths);
    std::vector<char> failed(spec.n_paths, 0);

    parallel_for(spec.n_paths, spec.threads, [&](std::size_t begin, std::size_t end) {
        Stepper stepper(model);
        std::vector<double> x(n), next(n), dw(m);
        for (std::size_t p = begin; p < end; ++p) {
            NormalStream stream(spec.seed, p);
            std::copy(spec.x0.data(), spec.x0.data() + n, x.begin());
            double* trace = spec.keep_paths ? &ens.paths[p * (steps + 1) * n] : nullptr;
            if (trace) std::copy(x.begin(), x.end(), trace);
            for (std::size_t s = 0; s < steps; ++s) {
                const double h = s + 1 == steps ? last_dt : spec.dt;
                const double scale = std::sqrt(h);
                for (auto& v : dw) v = scale * stream.next();
                bool good;
                if (spec.scheme == Scheme::ito_form) {
                    good = stepper.ito(x, h, dw, spec.alpha.value(), next);
                } else {
                    good = stepper.alpha_point(x, h, dw, spec.alpha.value(), spec.picard_iters, next) == 0;
                }
                if (!good) {
                    failed[p] = 1;
                    failure_slot[p] = {p, s, "non-finite state"};
                    std::fill(x.begin(), x.end(), std::numeric_limits<double>::quiet_NaN());
                    break;
                }
                std::swap(x, next);
                if (trace) std::copy(x.begin(), x.end(), trace + (s + 1) * n);
            }
            std::copy(x.begin(), x.end(), ends.begin() + static_cast<std::ptrdiff_t>(p * n));
        }
    });

    ens.endpoints.resize(static_cast<Eigen::Index>(spec.n_paths), static_cast<Eigen::Index>(n));
    for (std::size_t p = 0; p < spec.n_paths; ++p) {
        for (std::size_t i = 0; i < n; ++i)
            ens.endpoints(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(i)) = ends[p * n + i];
        if (failed[p]) ens.failures.push_back(failure_slot[p]);
    }
    return ens;
}

std::vector<double> wdw_samples(std::uint64_t seed, double t, std::size_t steps, Alpha alpha, std::size_t n,
                                unsigned threads) {
    if (!(t > 0.0)) throw ParameterError("wdw_samples: t must be positive");
    if (steps < 100) throw ParameterError("wdw_samples: steps must be >= 100");
    if (n < 1) throw ParameterError("wdw_samples: need at least one sample");
    const double dtau = t / static_cast<double>(steps);
    const double scale = std::sqrt(dtau);
    const double a = alpha.value();
    std::vector<double> out(n);
    parallel_for(n, threads, [&](std::size_t begin, std::size_t end) {
        for (std::size_t s = begin; s < end; ++s) {
            NormalStream stream(seed, s);
            double w = 0.0, sum = 0.0;
            for (std::size_t i = 0; i < steps; ++i) {
                const double dw = scale * stream.next();
                sum += (w + a * dw) * dw;
                w += dw;
            }
            out[s] = sum;
        }
    });
    return out;
}

void write_endpoints_csv(const Ensemble& ensemble, std::ostream& os) {
    os << "path_id,component_index,value\n";
    for (Eigen::Index p = 0; p < ensemble.endpoints.rows(); ++p)
        for (Eigen::Index i = 0; i < ensemble.endpoints.cols(); ++i)
            os << p << ',' << i << ',' << format_double(ensemble.endpoints(p, i)) << '\n';
}

void write_paths_binary(const Ensemble& ensemble, std::ostream& os) {
    if (ensemble.paths.empty()) throw ParameterError("ensemble was simulated without keep_paths");
    os.write("ASDEPTH1", 8);
    const auto n = static_cast<std::uint64_t>(ensemble.endpoints.cols());
    put_le<std::uint64_t>(os, ensemble.n_paths);
    put_le<std::uint64_t>(os, ensemble.steps + 1);
    put_le<std::uint64_t>(os, n);
    put_le<double>(os, ensemble.t_end);
    put_le<double>(os, ensemble.dt);
    for (double v : ensemble.paths) put_le<double>(os, v);
}

} // namespace alphasde
