#include "alphasde/steady.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include <Eigen/SparseLU>

#include "alphasde/format.hpp"

namespace alphasde {

GridDensity steady_1d_zero_current(const SDEModel& model, const Grid& grid, Alpha alpha) {
    if (grid.dim() != 1 || model.state_dim() != 1) {
        throw ParameterError("steady_1d_zero_current requires a 1-D model and grid");
    }
    const std::size_t n = grid.size();
    const double h = grid.spacing(0);
    Vector d(static_cast<Eigen::Index>(n)), f(static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i) {
        const auto q = static_cast<Eigen::Index>(i);
        const Vector x = grid.node(i);
        d[q] = diffusion_at(model, x)(0, 0);
        if (!(d[q] > 0.0)) {
            throw DomainError("steady_1d_zero_current: D <= 0 at x=" + format_double(x[0]));
        }
        f[q] = 2.0 * model.drift_at(x)[0] / d[q];
    }
    const Matrix fp = grid_gradient(grid, f);

    Vector exponent(static_cast<Eigen::Index>(n));
    exponent[0] = 0.0;
    for (Eigen::Index i = 1; i < exponent.size(); ++i) {
        exponent[i] = exponent[i - 1] + 0.5 * h * (f[i - 1] + f[i]);
    }
    for (Eigen::Index i = 1; i < exponent.size(); ++i) exponent[i] -= h * h / 12.0 * (fp(i, 0) - fp(0, 0));
    for (Eigen::Index i = 0; i < exponent.size(); ++i) exponent[i] += (alpha.value() - 1.0) * std::log(d[i]);

    const double top = exponent.maxCoeff();
    Vector w = (exponent.array() - top).exp().matrix();
    return GridDensity::normalized(grid, std::move(w));
}

GridDensity steady_nullspace(const OperatorMatrix& op, const NullspaceOptions& options) {
    if (op.kind != OperatorKind::forward || op.boundary != Boundary::no_flux) {
        throw ParameterError("steady_nullspace needs a forward operator with no_flux boundaries");
    }
    const SparseMatrix& l = op.matrix;
    const double norm = max_abs(l);
    if (!(norm > 0.0)) throw ParameterError("steady_nullspace: operator is zero");
    const auto n = l.rows();
    const double h_vol = op.grid.cell_volume();

    SparseMatrix identity(n, n);
    identity.setIdentity();
    const double tau = 1e8 / norm;
    const SparseMatrix a = identity - tau * l;
    Eigen::SparseLU<SparseMatrix> lu;
    lu.compute(a);
    if (lu.info() != Eigen::Success) throw Error("steady_nullspace: factorization failed");

    Vector w = Vector::Constant(n, 1.0 / (static_cast<double>(n) * h_vol));
    double residual = (l * w).cwiseAbs().maxCoeff() / norm;
    for (int it = 0; it < options.max_iterations && residual > options.relative_residual; ++it) {
        w = lu.solve(w);
        if (!w.allFinite()) throw ConvergenceError("steady_nullspace: iterate became non-finite", residual);
        // The null vector has one sign; fix it positive before normalizing.
        if (w.sum() < 0.0) w = -w;
        w /= w.sum() * h_vol;
        residual = (l * w).cwiseAbs().maxCoeff() / norm;
    }
    if (!(residual <= options.relative_residual)) {
        throw ConvergenceError("steady_nullspace: residual " + format_double(residual) + " above target",
                               residual);
    }
    // Cross-diffusion stencils are not monotone, so 2-D null vectors can dip
    // slightly below zero in the tails; small undershoots are kept as is.
    const double scale = w.maxCoeff();
    const double lowest = w.minCoeff();
    if (lowest < -kSteadyUndershootTolerance * scale) {
        throw DomainError("steady_nullspace: null vector undershoots to " + format_double(lowest / scale) +
                          " of its peak; refine the grid");
    }
    return GridDensity{op.grid, std::move(w), 0.0};
}

Quasipotential quasipotential(const GridDensity& w, double epsilon) {
    if (!(epsilon > 0.0)) throw ParameterError("quasipotential: epsilon must be positive");
    Quasipotential q{w.grid, Vector(w.w.size()), epsilon, {}};
    const double top = w.w.maxCoeff();
    if (!(top > 0.0)) throw ParameterError("quasipotential: density has no positive value");
    for (Eigen::Index i = 0; i < w.w.size(); ++i) {
        if (w.w[i] > 0.0) {
            q.phi[i] = -epsilon * std::log(w.w[i] / top);
        } else {
            q.phi[i] = std::numeric_limits<double>::infinity();
            q.zero_density_nodes.push_back(static_cast<std::size_t>(i));
        }
    }
    return q;
}

std::vector<double> local_minima(const Quasipotential& q) {
    if (q.grid.dim() != 1) throw ParameterError("local_minima: 1-D only");
    std::vector<double> out;
    const double h = q.grid.spacing(0);
    for (Eigen::Index i = 1; i + 1 < q.phi.size(); ++i) {
        const double lo = q.phi[i - 1], mid = q.phi[i], hi = q.phi[i + 1];
        if (!(mid < lo && mid <= hi)) continue;
        const double curv = lo - 2.0 * mid + hi;
        double x = q.grid.node(static_cast<std::size_t>(i))[0];
        if (curv > 0.0 && std::isfinite(curv)) x += 0.5 * (lo - hi) / curv * h;
        out.push_back(x);
    }
    return out;
}

void write_steady_csv(const GridDensity& w, const Quasipotential& q, std::ostream& os) {
    const int d = w.grid.dim();
    os << (d == 1 ? "x,w,phi\n" : "x,y,w,phi\n");
    for (std::size_t p = 0; p < w.grid.size(); ++p) {
        const Vector x = w.grid.node(p);
        for (int k = 0; k < d; ++k) os << format_double(x[k]) << ',';
        const auto i = static_cast<Eigen::Index>(p);
        os << format_double(std::max(0.0, w.w[i])) << ',' << format_double(q.phi[i]) << '\n';
    }
}

} // namespace alphasde
