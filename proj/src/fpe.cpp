#include "alphasde/fpe.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <memory>
#include <ostream>

#include <Eigen/SparseLU>

#include "alphasde/format.hpp"
#include "alphasde/noise_drift.hpp"

namespace alphasde {

std::string_view to_string(Boundary boundary) noexcept {
    return boundary == Boundary::no_flux ? "no_flux" : "absorbing";
}

Boundary parse_boundary(std::string_view text) {
    if (text == "no_flux") return Boundary::no_flux;
    if (text == "absorbing") return Boundary::absorbing;
    throw ParameterError("unknown boundary '" + std::string(text) + "' (expected no_flux or absorbing)");
}

namespace {

using Triplets = std::vector<Eigen::Triplet<double>>;

struct Stencil {
    const Grid& grid;

    std::size_t stride(int k) const { return k == 0 ? 1 : grid.points(0); }
    std::size_t idx(std::size_t p, int k) const { return grid.index_along(p, k); }

    // Neighbour of p along axis k, clamped to p itself outside the box.
    std::size_t shift(std::size_t p, int k, int dir) const {
        const std::size_t i = idx(p, k);
        if (dir < 0) return i == 0 ? p : p - stride(k);
        return i + 1 == grid.points(k) ? p : p + stride(k);
    }
};

void check_model_grid(const SDEModel& model, const Grid& grid) {
    if (model.state_dim() != grid.dim()) {
        throw ParameterError("model dimension " + std::to_string(model.state_dim()) +
                             " does not match grid dimension " + std::to_string(grid.dim()));
    }
}

void check_psd_nodes(const SDEModel& model, const Grid& grid) {
    std::vector<std::size_t> bad;
    for (std::size_t p = 0; p < grid.size(); ++p) {
        const Matrix d = diffusion_at(model, grid.node(p));
        const double scale = d.cwiseAbs().maxCoeff();
        const Eigen::SelfAdjointEigenSolver<Matrix> eig(d, Eigen::EigenvaluesOnly);
        if (eig.eigenvalues().minCoeff() < -1e-10 * scale) bad.push_back(p);
    }
    if (!bad.empty()) {
        throw BuildError("diffusion matrix not positive semidefinite at " + std::to_string(bad.size()) +
                             " node(s), first at flat index " + std::to_string(bad.front()),
                         std::move(bad));
    }
}

// Visits every interior face: fn(axis, lower cell P, upper cell E, face midpoint).
template <class Fn>
void for_each_face(const Grid& grid, Fn fn) {
    const Stencil st{grid};
    for (int k = 0; k < grid.dim(); ++k) {
        for (std::size_t p = 0; p < grid.size(); ++p) {
            if (st.idx(p, k) + 1 == grid.points(k)) continue;
            const std::size_t e = p + st.stride(k);
            Vector xf = grid.node(p);
            xf[k] += 0.5 * grid.spacing(k);
            fn(k, p, e, xf);
        }
    }
}

// Adds the flux c * (face quantity) leaving P through its upper face into
// E: row P gains +c/h, row E gains -c/h, so columns telescope.
void add_flux(Triplets& t, std::size_t p, std::size_t e, double h, std::size_t col, double c) {
    t.emplace_back(static_cast<int>(p), static_cast<int>(col), c / h);
    t.emplace_back(static_cast<int>(e), static_cast<int>(col), -c / h);
}

// div[(D/2) grad w] on interior faces; shared verbatim by L and L+.
void add_diffusion_faces(const SDEModel& model, const Grid& grid, Triplets& t) {
    const Stencil st{grid};
    for_each_face(grid, [&](int k, std::size_t p, std::size_t e, const Vector& xf) {
        const Matrix d = diffusion_at(model, xf);
        const double h = grid.spacing(k);
        const double c = 0.5 * d(k, k) / h;
        add_flux(t, p, e, h, e, c);
        add_flux(t, p, e, h, p, -c);
        for (int l = 0; l < grid.dim(); ++l) {
            if (l == k || d(k, l) == 0.0) continue;
            const double cl = 0.5 * d(k, l) / (4.0 * grid.spacing(l));
            for (std::size_t cell : {p, e}) {
                add_flux(t, p, e, h, st.shift(cell, l, +1), cl);
                add_flux(t, p, e, h, st.shift(cell, l, -1), -cl);
            }
        }
    });
}

SparseMatrix assemble(const Grid& grid, const Triplets& t) {
    const auto n = static_cast<Eigen::Index>(grid.size());
    SparseMatrix m(n, n);
    m.setFromTriplets(t.begin(), t.end());
    m.makeCompressed();
    return m;
}

} // namespace

OperatorMatrix build_forward(const SDEModel& model, const Grid& grid, Alpha alpha, Boundary boundary) {
    check_model_grid(model, grid);
    check_psd_nodes(model, grid);
    Triplets t;
    add_diffusion_faces(model, grid, t);

    const bool need_an = alpha.value() != 1.0;
    for_each_face(grid, [&](int k, std::size_t p, std::size_t e, const Vector& xf) {
        double v = model.drift_at(xf)[k];
        if (need_an) v += (alpha.value() - 1.0) * a_n_from_b(model, xf)[k];
        const double h = grid.spacing(k);
        add_flux(t, p, e, h, p, -0.5 * v);
        add_flux(t, p, e, h, e, -0.5 * v);
    });

    if (boundary == Boundary::absorbing) {
        // w = 0 on the walls: ghost value -w_P, wall flux D_kk w_P / h outward.
        for (int k = 0; k < grid.dim(); ++k) {
            const double h = grid.spacing(k);
            for (std::size_t p = 0; p < grid.size(); ++p) {
                const std::size_t i = grid.index_along(p, k);
                for (int side : {-1, +1}) {
                    if ((side < 0 && i != 0) || (side > 0 && i + 1 != grid.points(k))) continue;
                    Vector xw = grid.node(p);
                    xw[k] += 0.5 * side * h;
                    const double dkk = diffusion_at(model, xw)(k, k);
                    t.emplace_back(static_cast<int>(p), static_cast<int>(p), -dkk / (h * h));
                }
            }
        }
    }
    return {grid, assemble(grid, t), OperatorKind::forward, alpha, boundary};
}

OperatorMatrix build_backward(const SDEModel& model, const Grid& grid, Alpha alpha) {
    check_model_grid(model, grid);
    check_psd_nodes(model, grid);
    Triplets t;
    add_diffusion_faces(model, grid, t);

    const Stencil st{grid};
    const bool need_an = alpha.value() != 1.0;
    for (std::size_t p = 0; p < grid.size(); ++p) {
        const Vector x = grid.node(p);
        Vector v = model.drift_at(x);
        if (need_an) v -= alpha.complement() * a_n_from_b(model, x);
        for (int k = 0; k < grid.dim(); ++k) {
            const double c = v[k] / (2.0 * grid.spacing(k));
            t.emplace_back(static_cast<int>(p), static_cast<int>(st.shift(p, k, +1)), c);
            t.emplace_back(static_cast<int>(p), static_cast<int>(st.shift(p, k, -1)), -c);
        }
    }
    return {grid, assemble(grid, t), OperatorKind::backward, alpha, Boundary::no_flux};
}

OperatorMatrix operator_gap(const SDEModel& model, const Grid& grid, Alpha alpha) {
    const SDEModel pure = model.with_zero_drift();
    OperatorMatrix forward = build_forward(pure, grid, alpha, Boundary::no_flux);
    const OperatorMatrix backward = build_backward(pure, grid, alpha);
    forward.matrix = (forward.matrix - backward.matrix).pruned(0.0);
    return forward;
}

double max_abs(const SparseMatrix& m) {
    double best = 0.0;
    for (Eigen::Index c = 0; c < m.outerSize(); ++c)
        for (SparseMatrix::InnerIterator it(m, c); it; ++it) best = std::max(best, std::abs(it.value()));
    return best;
}

double max_column_sum(const SparseMatrix& m) {
    double best = 0.0;
    for (Eigen::Index c = 0; c < m.outerSize(); ++c) {
        double s = 0.0;
        for (SparseMatrix::InnerIterator it(m, c); it; ++it) s += it.value();
        best = std::max(best, std::abs(s));
    }
    return best;
}

namespace {

// First-derivative weights on the integer nodes 0..6 evaluated at node
// `at`: the moment conditions sum c_j (j - at)^m = [m == 1], m = 0..6.
std::array<double, 7> derivative_weights(int at) {
    Eigen::Matrix<double, 7, 7> moments;
    for (int m = 0; m < 7; ++m)
        for (int j = 0; j < 7; ++j) moments(m, j) = std::pow(static_cast<double>(j - at), m);
    Eigen::Matrix<double, 7, 1> rhs = Eigen::Matrix<double, 7, 1>::Zero();
    rhs[1] = 1.0;
    const Eigen::Matrix<double, 7, 1> c = moments.fullPivLu().solve(rhs);
    std::array<double, 7> out{};
    for (int j = 0; j < 7; ++j) out[static_cast<std::size_t>(j)] = c[j];
    return out;
}

} // namespace

Matrix grid_gradient(const Grid& grid, const Vector& w) {
    if (static_cast<std::size_t>(w.size()) != grid.size()) throw ParameterError("gradient: size mismatch");
    static const auto weights = [] {
        std::array<std::array<double, 7>, 7> all{};
        for (int at = 0; at < 7; ++at) all[static_cast<std::size_t>(at)] = derivative_weights(at);
        return all;
    }();
    const Stencil st{grid};
    Matrix g(w.size(), grid.dim());
    for (int k = 0; k < grid.dim(); ++k) {
        const auto n = grid.points(k);
        const double h = grid.spacing(k);
        const auto s = static_cast<Eigen::Index>(st.stride(k));
        for (std::size_t p = 0; p < grid.size(); ++p) {
            const std::size_t i = st.idx(p, k);
            // seven-node window, centred where possible and shifted inward at the edges
            const std::size_t first = std::min(i >= 3 ? i - 3 : 0, n - 7);
            const auto& c = weights[i - first];
            const auto base = static_cast<Eigen::Index>(p) - static_cast<Eigen::Index>(i - first) * s;
            double d = 0.0;
            for (Eigen::Index j = 0; j < 7; ++j) d += c[static_cast<std::size_t>(j)] * w[base + j * s];
            g(static_cast<Eigen::Index>(p), k) = d / h;
        }
    }
    return g;
}

CurrentField probability_current(const SDEModel& model, const GridDensity& w, Alpha alpha) {
    check_model_grid(model, w.grid);
    const Matrix grad = grid_gradient(w.grid, w.w);
    CurrentField out{w.grid, Matrix(w.w.size(), w.grid.dim())};
    const bool need_an = alpha.value() != 1.0;
    for (std::size_t p = 0; p < w.grid.size(); ++p) {
        const auto q = static_cast<Eigen::Index>(p);
        const Vector x = w.grid.node(p);
        Vector v = model.drift_at(x);
        if (need_an) v -= alpha.complement() * a_n_from_b(model, x);
        const Matrix d = diffusion_at(model, x);
        out.j.row(q) = (v * w.w[q] - 0.5 * d * grad.row(q).transpose()).transpose();
    }
    return out;
}

double default_time_step(const SDEModel& model, const Grid& grid) {
    double dmax = 0.0;
    for (std::size_t p = 0; p < grid.size(); ++p) {
        const Matrix d = diffusion_at(model, grid.node(p));
        dmax = std::max(dmax, d.diagonal().maxCoeff());
    }
    double hmin = grid.spacing(0);
    for (int k = 1; k < grid.dim(); ++k) hmin = std::min(hmin, grid.spacing(k));
    if (!(dmax > 0.0)) throw ParameterError("default_time_step: diffusion vanishes on the grid");
    return hmin * hmin / (2.0 * dmax);
}

EvolveResult evolve_density(const SDEModel& model, const GridDensity& w0, Alpha alpha,
                            const EvolveOptions& options) {
    if (!(options.t_end > 0.0)) throw ParameterError("evolve_density: t_end must be positive");
    const double dt_nominal = options.dt > 0.0 ? options.dt : default_time_step(model, w0.grid);
    const OperatorMatrix op = build_forward(model, w0.grid, alpha, options.boundary);
    const auto n = static_cast<Eigen::Index>(w0.grid.size());
    SparseMatrix identity(n, n);
    identity.setIdentity();

    std::vector<double> targets;
    for (double t : options.snapshot_times) {
        if (!(t > 0.0 && t <= options.t_end * (1.0 + 1e-12))) {
            throw ParameterError("evolve_density: snapshot time outside (0, t_end]");
        }
        targets.push_back(std::min(t, options.t_end));
    }
    targets.push_back(options.t_end);
    std::sort(targets.begin(), targets.end());
    targets.erase(std::unique(targets.begin(), targets.end()), targets.end());

    struct Factored {
        SparseMatrix explicit_half;
        Eigen::SparseLU<SparseMatrix> implicit_half;
    };
    std::map<double, std::unique_ptr<Factored>> cache;
    auto solver_for = [&](double dt) -> Factored& {
        auto& slot = cache[dt];
        if (!slot) {
            slot = std::make_unique<Factored>();
            slot->explicit_half = identity + (0.5 * dt) * op.matrix;
            const SparseMatrix lhs = identity - (0.5 * dt) * op.matrix;
            slot->implicit_half.compute(lhs);
            if (slot->implicit_half.info() != Eigen::Success) {
                throw Error("evolve_density: factorization of the Crank-Nicolson matrix failed");
            }
        }
        return *slot;
    };

    EvolveResult result;
    result.snapshots.push_back(w0);
    const double mass0 = w0.mass();
    const double h_vol = w0.grid.cell_volume();
    Vector w = w0.w;
    double elapsed = 0.0;
    bool warned = false;
    for (double target : targets) {
        const double span = target - elapsed;
        if (span <= 0.0) continue;
        const auto steps = static_cast<std::size_t>(std::max(1.0, std::ceil(span / dt_nominal - 1e-9)));
        const double dt = span / static_cast<double>(steps);
        Factored& f = solver_for(dt);
        for (std::size_t s = 0; s < steps; ++s) {
            const Vector rhs = f.explicit_half * w;
            w = f.implicit_half.solve(rhs);
            if (!w.allFinite()) throw Error("evolve_density: solution became non-finite");
            ++result.steps;
            if (options.boundary == Boundary::no_flux) {
                result.max_mass_error = std::max(result.max_mass_error, std::abs(w.sum() * h_vol - mass0));
            }
            const double lo = w.minCoeff();
            result.min_value = std::min(result.min_value, lo);
            if (!warned && lo < -1e-6 * w.maxCoeff()) {
                warned = true;
                result.warnings.push_back("negative density lobe " + format_double(lo) + " at t=" +
                                          format_double(w0.t + elapsed + (s + 1) * dt) +
                                          "; reduce dt or refine the grid");
            }
        }
        elapsed = target;
        result.snapshots.push_back(GridDensity{w0.grid, w, w0.t + target});
    }
    return result;
}

std::vector<ExtremumPosition> extremum_track(std::span<const GridDensity> snapshots) {
    std::vector<ExtremumPosition> out;
    out.reserve(snapshots.size());
    for (const GridDensity& s : snapshots) {
        const Grid& g = s.grid;
        Eigen::Index best = 0;
        s.w.maxCoeff(&best);
        const auto p = static_cast<std::size_t>(best);
        ExtremumPosition e{g.node(p), p, g.on_boundary(p), true};
        const double top = s.w[best];
        for (Eigen::Index q = 0; q < s.w.size(); ++q)
            if (q != best && s.w[q] == top) e.unique = false;
        if (!e.on_boundary) {
            const Stencil st{g};
            for (int k = 0; k < g.dim(); ++k) {
                const double lo = s.w[static_cast<Eigen::Index>(st.shift(p, k, -1))];
                const double hi = s.w[static_cast<Eigen::Index>(st.shift(p, k, +1))];
                const double curv = lo - 2.0 * top + hi;
                if (curv < 0.0) e.x[k] += 0.5 * (lo - hi) / curv * g.spacing(k);
            }
        }
        out.push_back(std::move(e));
    }
    return out;
}

void write_operator_csv(const OperatorMatrix& op, std::ostream& os) {
    os << "row,col,value\n";
    for (Eigen::Index c = 0; c < op.matrix.outerSize(); ++c)
        for (SparseMatrix::InnerIterator it(op.matrix, c); it; ++it)
            os << it.row() << ',' << it.col() << ',' << format_double(it.value()) << '\n';
}

void write_snapshots_csv(std::span<const GridDensity> snapshots, std::ostream& os) {
    if (snapshots.empty()) return;
    const int d = snapshots.front().grid.dim();
    os << (d == 1 ? "t,node_index,x,w\n" : "t,node_index,x,y,w\n");
    for (const GridDensity& s : snapshots) {
        for (std::size_t p = 0; p < s.grid.size(); ++p) {
            const Vector x = s.grid.node(p);
            os << format_double(s.t) << ',' << p;
            for (int k = 0; k < d; ++k) os << ',' << format_double(x[k]);
            os << ',' << format_double(std::max(0.0, s.w[static_cast<Eigen::Index>(p)])) << '\n';
        }
    }
}

} // namespace alphasde
