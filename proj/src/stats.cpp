#include "alphasde/stats.hpp"

#include <algorithm>
#include <cmath>

namespace alphasde {

EmpiricalDensity empirical_density(const Matrix& samples, const Grid& grid) {
    if (samples.rows() == 0) throw ParameterError("empirical_density: no samples");
    if (samples.cols() != grid.dim()) throw ParameterError("empirical_density: sample dimension mismatch");
    EmpiricalDensity out{grid, std::vector<std::uint64_t>(grid.size(), 0), static_cast<std::size_t>(samples.rows()),
                         0, Vector::Zero(static_cast<Eigen::Index>(grid.size())), {}};
    double point[2] = {0.0, 0.0};
    for (Eigen::Index r = 0; r < samples.rows(); ++r) {
        for (int k = 0; k < grid.dim(); ++k) point[k] = samples(r, k);
        const auto cell = grid.locate({point, static_cast<std::size_t>(grid.dim())});
        if (cell) {
            ++out.counts[*cell];
        } else {
            ++out.out_of_range;
        }
    }
    const std::size_t inside = out.n_samples - out.out_of_range;
    if (out.out_of_range * 100 > out.n_samples) {
        out.warnings.push_back(std::to_string(out.out_of_range) + " of " + std::to_string(out.n_samples) +
                               " samples fall outside the grid");
    }
    if (inside > 0) {
        const double norm = static_cast<double>(inside) * grid.cell_volume();
        for (std::size_t p = 0; p < grid.size(); ++p)
            out.density[static_cast<Eigen::Index>(p)] = static_cast<double>(out.counts[p]) / norm;
    }
    return out;
}

EmpiricalDensity empirical_density(const Ensemble& ensemble, const Grid& grid) {
    return empirical_density(ensemble.endpoints, grid);
}

double kolmogorov_q(double lambda) {
    // Q(0.2) differs from 1 by less than 1e-15.
    if (lambda < 0.2) return 1.0;
    double sum = 0.0, sign = 1.0;
    for (int k = 1; k <= 100; ++k) {
        const double term = sign * std::exp(-2.0 * k * k * lambda * lambda);
        sum += term;
        if (std::abs(term) <= 1e-16 * std::abs(sum)) break;
        sign = -sign;
    }
    return std::clamp(2.0 * sum, 0.0, 1.0);
}

KsResult ks_two_sample(std::span<const double> a, std::span<const double> b) {
    if (a.empty() || b.empty()) throw ParameterError("ks_two_sample: both samples must be non-empty");
    std::vector<double> x(a.begin(), a.end()), y(b.begin(), b.end());
    std::sort(x.begin(), x.end());
    std::sort(y.begin(), y.end());
    const double n1 = static_cast<double>(x.size());
    const double n2 = static_cast<double>(y.size());
    std::size_t i = 0, j = 0;
    double d = 0.0;
    while (i < x.size() && j < y.size()) {
        const double v = std::min(x[i], y[j]);
        while (i < x.size() && x[i] == v) ++i;
        while (j < y.size() && y[j] == v) ++j;
        d = std::max(d, std::abs(static_cast<double>(i) / n1 - static_cast<double>(j) / n2));
    }
    const double ne = std::sqrt(n1 * n2 / (n1 + n2));
    return {d, kolmogorov_q((ne + 0.12 + 0.11 / ne) * d)};
}

KernelSymmetryResult kernel_symmetry(const SDEModel& model, const KernelSymmetrySpec& spec) {
    if (model.state_dim() != 1) throw ParameterError("kernel_symmetry: 1-D models only");
    if (!(spec.t > 0.0 && spec.delta > 0.0 && spec.n_paths > 0)) {
        throw ParameterError("kernel_symmetry: t, delta and N must be positive");
    }
    for (double probe : {spec.x, spec.y, 0.5 * (spec.x + spec.y)}) {
        if (model.drift_at(Vector::Constant(1, probe)).cwiseAbs().maxCoeff() != 0.0) {
            throw ParameterError("kernel_symmetry: model must be pure noise (zero drift)");
        }
    }
    EnsembleSpec es;
    es.t_end = spec.t;
    es.dt = std::min(spec.dt, spec.t);
    es.alpha = spec.alpha;
    es.scheme = spec.scheme;
    es.n_paths = spec.n_paths;
    es.seed = spec.seed;
    es.threads = spec.threads;

    auto hits = [&](double from, double to) {
        es.x0 = Vector::Constant(1, from);
        const Ensemble ens = simulate_ensemble(model, es);
        std::size_t count = 0;
        for (Eigen::Index p = 0; p < ens.endpoints.rows(); ++p) {
            const double v = ens.endpoints(p, 0);
            if (v >= to - spec.delta && v <= to + spec.delta) ++count;
        }
        return count;
    };

    KernelSymmetryResult r;
    r.hits_forward = hits(spec.x, spec.y);
    r.hits_backward = hits(spec.y, spec.x);
    const double n = static_cast<double>(spec.n_paths);
    r.p_forward = static_cast<double>(r.hits_forward) / n;
    r.p_backward = static_cast<double>(r.hits_backward) / n;
    if (r.hits_forward == 0 && r.hits_backward == 0) {
        r.inconclusive = true;
        return r;
    }
    const double var = r.p_forward * (1.0 - r.p_forward) / n + r.p_backward * (1.0 - r.p_backward) / n;
    r.z = var > 0.0 ? (r.p_forward - r.p_backward) / std::sqrt(var) : 0.0;
    return r;
}

} // namespace alphasde
