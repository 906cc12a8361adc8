#include "alphasde/model.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace alphasde {

namespace {

std::vector<double> to_std(const Vector& x) { return {x.data(), x.data() + x.size()}; }

std::string point_string(const Vector& x) {
    std::ostringstream os;
    os << '(';
    for (Eigen::Index i = 0; i < x.size(); ++i) os << (i ? ", " : "") << x[i];
    os << ')';
    return os.str();
}

void require_dim(const Vector& x, int n) {
    if (x.size() != n) {
        throw ParameterError("state vector has dimension " + std::to_string(x.size()) +
                             ", model expects " + std::to_string(n));
    }
}

} // namespace

Alpha::Alpha(double value) : value_(value) {
    if (!(value >= 0.0 && value <= 1.0)) {
        std::ostringstream os;
        os << "alpha=" << value << " violates 0 <= alpha <= 1";
        throw ParameterError(os.str());
    }
}

bool all_finite(std::span<const double> values) noexcept {
    return std::all_of(values.begin(), values.end(), [](double v) { return std::isfinite(v); });
}

double fd_step(double xj) noexcept { return std::max(1e-5, 1e-5 * std::abs(xj)); }

SDEModel::SDEModel(std::string name, int state_dim, int noise_dim, FieldFn drift, FieldFn noise,
                   std::optional<FieldFn> noise_jacobian)
    : name_(std::move(name)), n_(state_dim), m_(noise_dim), drift_(std::move(drift)),
      noise_(std::move(noise)), jacobian_(std::move(noise_jacobian)) {
    if (n_ < 1 || m_ < 1) throw ParameterError("model dimensions must be positive");
    if (!drift_ || !noise_) throw ParameterError("model requires drift and noise fields");
}

void SDEModel::noise_jacobian(std::span<const double> x, std::span<double> out) const {
    if (jacobian_) {
        (*jacobian_)(x, out);
        return;
    }
    const auto n = static_cast<std::size_t>(n_);
    const auto nm = n * static_cast<std::size_t>(m_);
    std::vector<double> xp(x.begin(), x.end());
    std::vector<double> plus(nm), minus(nm);
    for (std::size_t j = 0; j < n; ++j) {
        const double h = fd_step(x[j]);
        xp[j] = x[j] + h;
        noise_(xp, plus);
        xp[j] = x[j] - h;
        noise_(xp, minus);
        xp[j] = x[j];
        for (std::size_t e = 0; e < nm; ++e) out[e * n + j] = (plus[e] - minus[e]) / (2.0 * h);
    }
}

Vector SDEModel::drift_at(const Vector& x) const {
    require_dim(x, n_);
    Vector out(n_);
    drift_({x.data(), static_cast<std::size_t>(n_)}, {out.data(), static_cast<std::size_t>(n_)});
    if (!all_finite({out.data(), static_cast<std::size_t>(n_)})) {
        throw EvaluationError("non-finite drift at " + point_string(x), to_std(x));
    }
    return out;
}

Matrix SDEModel::noise_at(const Vector& x) const {
    require_dim(x, n_);
    const auto nm = static_cast<std::size_t>(n_ * m_);
    std::vector<double> buf(nm);
    noise_({x.data(), static_cast<std::size_t>(n_)}, buf);
    if (!all_finite(buf)) throw EvaluationError("non-finite noise at " + point_string(x), to_std(x));
    Matrix b(n_, m_);
    for (int i = 0; i < n_; ++i)
        for (int k = 0; k < m_; ++k) b(i, k) = buf[static_cast<std::size_t>(i * m_ + k)];
    return b;
}

namespace {

std::vector<Matrix> unpack_jacobian(const std::vector<double>& buf, int n, int m) {
    std::vector<Matrix> jac(static_cast<std::size_t>(n), Matrix(n, m));
    for (int i = 0; i < n; ++i)
        for (int k = 0; k < m; ++k)
            for (int j = 0; j < n; ++j)
                jac[static_cast<std::size_t>(j)](i, k) = buf[static_cast<std::size_t>((i * m + k) * n + j)];
    return jac;
}

} // namespace

std::vector<Matrix> SDEModel::noise_jacobian_at(const Vector& x) const {
    require_dim(x, n_);
    std::vector<double> buf(static_cast<std::size_t>(n_ * m_ * n_));
    noise_jacobian({x.data(), static_cast<std::size_t>(n_)}, buf);
    if (!all_finite(buf)) {
        throw EvaluationError("non-finite noise derivative at " + point_string(x), to_std(x));
    }
    return unpack_jacobian(buf, n_, m_);
}

std::vector<Matrix> SDEModel::noise_jacobian_fd(const Vector& x) const {
    return without_analytic_jacobian().noise_jacobian_at(x);
}

SDEModel SDEModel::with_zero_drift() const {
    SDEModel copy = *this;
    copy.drift_ = [](std::span<const double>, std::span<double> out) {
        std::fill(out.begin(), out.end(), 0.0);
    };
    copy.zero_drift_ = true;
    return copy;
}

SDEModel SDEModel::without_analytic_jacobian() const {
    SDEModel copy = *this;
    copy.jacobian_.reset();
    return copy;
}

SDEModel SDEModel::with_noise(std::string name, FieldFn noise, std::optional<FieldFn> jacobian) const {
    SDEModel copy = *this;
    copy.name_ = std::move(name);
    copy.noise_ = std::move(noise);
    copy.jacobian_ = std::move(jacobian);
    return copy;
}

Matrix diffusion_at(const SDEModel& model, const Vector& x) {
    const Matrix b = model.noise_at(x);
    return b * b.transpose();
}

bool ProbeReport::passed() const noexcept {
    return finite && psd && (!jacobian_discrepancy || *jacobian_discrepancy <= kJacobianTolerance);
}

bool ValidationReport::all_passed() const noexcept {
    return std::all_of(probes.begin(), probes.end(), [](const ProbeReport& p) { return p.passed(); });
}

ValidationReport validate_model(const SDEModel& model, std::span<const Vector> probes) {
    if (probes.empty()) throw ParameterError("validate_model needs at least one probe point");
    ValidationReport report;
    for (const Vector& x : probes) {
        ProbeReport probe;
        probe.x = x;
        try {
            model.drift_at(x);
            const Matrix d = diffusion_at(model, x);
            probe.max_abs_diffusion = d.cwiseAbs().maxCoeff();
            probe.symmetry_error = (d - d.transpose()).cwiseAbs().maxCoeff();
            const Eigen::SelfAdjointEigenSolver<Matrix> eig(d, Eigen::EigenvaluesOnly);
            probe.min_eigenvalue = eig.eigenvalues().minCoeff();
            const double scale = probe.max_abs_diffusion;
            probe.psd = probe.min_eigenvalue >= -1e-10 * scale &&
                        probe.symmetry_error <= 1e-12 * scale;
            probe.degenerate = probe.min_eigenvalue <= 1e-10 * scale;
            if (probe.degenerate) probe.message = "degenerate diffusion (zero eigenvalue)";
            if (!probe.psd) probe.message = "diffusion matrix not positive semidefinite";
            if (model.has_noise_jacobian()) {
                const auto analytic = model.noise_jacobian_at(x);
                const auto numeric = model.noise_jacobian_fd(x);
                double diff = 0.0, ref = 0.0;
                for (std::size_t j = 0; j < analytic.size(); ++j) {
                    diff = std::max(diff, (analytic[j] - numeric[j]).cwiseAbs().maxCoeff());
                    ref = std::max(ref, numeric[j].cwiseAbs().maxCoeff());
                }
                probe.jacobian_discrepancy = diff / std::max(1.0, ref);
                if (*probe.jacobian_discrepancy > kJacobianTolerance) {
                    probe.message = "analytic noise Jacobian disagrees with central differences";
                }
            }
        } catch (const EvaluationError& e) {
            probe.finite = false;
            probe.message = e.what();
        }
        report.probes.push_back(std::move(probe));
    }
    return report;
}

Grid::Grid(std::vector<Axis> axes) : axes_(std::move(axes)) {
    if (axes_.empty() || axes_.size() > 2) throw ParameterError("grid dimension must be 1 or 2");
    for (const Axis& a : axes_) {
        if (a.points < kMinPoints) throw ParameterError("grid needs at least 8 points per axis");
        if (!(a.upper > a.lower) || !std::isfinite(a.lower) || !std::isfinite(a.upper)) {
            throw ParameterError("grid axis needs finite bounds with upper > lower");
        }
    }
}

Grid Grid::line(double lower, double upper, std::size_t points) {
    return Grid({Axis{lower, upper, points}});
}

Grid Grid::plane(Axis x_axis, Axis y_axis) { return Grid({x_axis, y_axis}); }

std::size_t Grid::size() const noexcept {
    std::size_t s = 1;
    for (const Axis& a : axes_) s *= a.points;
    return s;
}

double Grid::cell_volume() const noexcept {
    double v = 1.0;
    for (const Axis& a : axes_) v *= a.spacing();
    return v;
}

std::size_t Grid::index_along(std::size_t flat, int k) const noexcept {
    return k == 0 ? flat % axes_[0].points : flat / axes_[0].points;
}

Vector Grid::node(std::size_t flat) const {
    Vector x(dim());
    for (int k = 0; k < dim(); ++k) x[k] = axes_[static_cast<std::size_t>(k)].node(index_along(flat, k));
    return x;
}

bool Grid::on_boundary(std::size_t flat) const noexcept {
    for (int k = 0; k < dim(); ++k) {
        const std::size_t i = index_along(flat, k);
        if (i == 0 || i + 1 == axes_[static_cast<std::size_t>(k)].points) return true;
    }
    return false;
}

std::optional<std::size_t> Grid::locate(std::span<const double> x) const noexcept {
    std::size_t idx[2] = {0, 0};
    for (int k = 0; k < dim(); ++k) {
        const Axis& a = axes_[static_cast<std::size_t>(k)];
        const double v = x[static_cast<std::size_t>(k)];
        if (!(v >= a.lower && v <= a.upper)) return std::nullopt;
        auto i = static_cast<std::size_t>(std::floor((v - a.lower) / a.spacing()));
        idx[k] = std::min(i, a.points - 1);
    }
    return flat(idx[0], idx[1]);
}

bool operator==(const Grid& a, const Grid& b) {
    if (a.axes_.size() != b.axes_.size()) return false;
    for (std::size_t k = 0; k < a.axes_.size(); ++k) {
        const Axis& p = a.axes_[k];
        const Axis& q = b.axes_[k];
        if (p.lower != q.lower || p.upper != q.upper || p.points != q.points) return false;
    }
    return true;
}

GridDensity GridDensity::normalized(Grid grid, Vector w, double t) {
    if (static_cast<std::size_t>(w.size()) != grid.size()) {
        throw ParameterError("density size does not match grid");
    }
    for (Eigen::Index i = 0; i < w.size(); ++i) {
        if (!std::isfinite(w[i])) throw ParameterError("density contains non-finite values");
        if (w[i] < 0.0) {
            if (w[i] < -kNegativeDensityTolerance * std::max(1.0, w.cwiseAbs().maxCoeff())) {
                throw ParameterError("density has negative values below tolerance");
            }
            w[i] = 0.0;
        }
    }
    const double mass = w.sum() * grid.cell_volume();
    if (!(mass > 0.0)) throw ParameterError("density has zero mass");
    w /= mass;
    return GridDensity{std::move(grid), std::move(w), t};
}

GridDensity GridDensity::gaussian(Grid grid, const Vector& mean, double std_dev, double t) {
    if (mean.size() != grid.dim()) throw ParameterError("gaussian mean dimension mismatch");
    if (!(std_dev > 0.0)) throw ParameterError("gaussian width must be positive");
    Vector w(static_cast<Eigen::Index>(grid.size()));
    for (std::size_t p = 0; p < grid.size(); ++p) {
        const double r2 = (grid.node(p) - mean).squaredNorm();
        w[static_cast<Eigen::Index>(p)] = std::exp(-r2 / (2.0 * std_dev * std_dev));
    }
    return normalized(std::move(grid), std::move(w), t);
}

} // namespace alphasde
