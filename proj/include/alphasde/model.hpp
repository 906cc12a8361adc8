#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "alphasde/errors.hpp"

namespace alphasde {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Position of the evaluation point inside each time interval of the
/// stochastic integral: 0 is Ito, 1/2 Stratonovich, 1 anti-Ito.
class Alpha {
public:
    explicit Alpha(double value);

    double value() const noexcept { return value_; }
    double complement() const noexcept { return 1.0 - value_; }

    static Alpha ito() { return Alpha(0.0); }
    static Alpha stratonovich() { return Alpha(0.5); }
    static Alpha anti_ito() { return Alpha(1.0); }

    friend bool operator==(Alpha, Alpha) = default;

private:
    double value_;
};

/// Field callback: reads the state `x` and writes its result into `out`.
/// Callbacks must be reentrant; the model may be evaluated from many
/// threads at once.
using FieldFn = std::function<void(std::span<const double> x, std::span<double> out)>;

/**
 * dX = a(X) dt + b(X) dW with n state and m noise components.
 *
 * Layouts used by the callbacks:
 *   drift            out[i]                  = a^i(x)           (size n)
 *   noise            out[i*m + k]            = b^{ik}(x)        (size n*m, row-major)
 *   noise_jacobian   out[(i*m + k)*n + j]    = d b^{ik} / d x_j (size n*m*n)
 *
 * Objects are immutable after construction.
 */
class SDEModel {
public:
    SDEModel(std::string name, int state_dim, int noise_dim, FieldFn drift, FieldFn noise,
             std::optional<FieldFn> noise_jacobian = std::nullopt);

    const std::string& name() const noexcept { return name_; }
    int state_dim() const noexcept { return n_; }
    int noise_dim() const noexcept { return m_; }
    bool has_noise_jacobian() const noexcept { return jacobian_.has_value(); }

    // Raw, allocation-free evaluation; no finiteness check.
    void drift(std::span<const double> x, std::span<double> out) const { drift_(x, out); }
    void noise(std::span<const double> x, std::span<double> out) const { noise_(x, out); }
    // Analytic Jacobian if one was supplied, central differences otherwise.
    void noise_jacobian(std::span<const double> x, std::span<double> out) const;

    // Checked evaluation; throws EvaluationError carrying x on non-finite output.
    Vector drift_at(const Vector& x) const;
    Matrix noise_at(const Vector& x) const;
    /// Entry j is the n x m matrix d b / d x_j.
    std::vector<Matrix> noise_jacobian_at(const Vector& x) const;
    std::vector<Matrix> noise_jacobian_fd(const Vector& x) const;

    bool drift_is_zero() const noexcept { return zero_drift_; }
    SDEModel with_zero_drift() const;
    SDEModel without_analytic_jacobian() const;
    SDEModel with_noise(std::string name, FieldFn noise, std::optional<FieldFn> jacobian) const;

private:
    std::string name_;
    int n_;
    int m_;
    FieldFn drift_;
    FieldFn noise_;
    std::optional<FieldFn> jacobian_;
    bool zero_drift_ = false;
};

/// Central-difference step for component value `xj`.
double fd_step(double xj) noexcept;

/// D(x) = b(x) b(x)^T.
Matrix diffusion_at(const SDEModel& model, const Vector& x);

struct ProbeReport {
    Vector x;
    bool finite = true;
    double max_abs_diffusion = 0.0;
    double min_eigenvalue = 0.0;
    double symmetry_error = 0.0;
    bool psd = true;
    // Smallest eigenvalue is zero (relative to max|D|); allowed but flagged.
    bool degenerate = false;
    // max |analytic - central difference| / max(1, max|central difference|)
    std::optional<double> jacobian_discrepancy;
    std::string message;

    bool passed() const noexcept;
};

struct ValidationReport {
    std::vector<ProbeReport> probes;
    bool all_passed() const noexcept;
};

inline constexpr double kJacobianTolerance = 1e-5;

ValidationReport validate_model(const SDEModel& model, std::span<const Vector> probes);

// Uniform axis of cell-centred nodes: node(i) = lower + (i + 1/2) h,
// h = (upper - lower) / points. Node i represents the cell
// [lower + i h, lower + (i + 1) h].
struct Axis {
    double lower = 0.0;
    double upper = 1.0;
    std::size_t points = 8;

    double spacing() const noexcept { return (upper - lower) / static_cast<double>(points); }
    double node(std::size_t i) const noexcept {
        return lower + (static_cast<double>(i) + 0.5) * spacing();
    }
    double face(std::size_t i) const noexcept {
        return lower + static_cast<double>(i) * spacing();
    }
};

/// One- or two-dimensional uniform grid. Flat node index is i + nx * j.
class Grid {
public:
    static constexpr std::size_t kMinPoints = 8;

    static Grid line(double lower, double upper, std::size_t points);
    static Grid plane(Axis x_axis, Axis y_axis);
    explicit Grid(std::vector<Axis> axes);

    int dim() const noexcept { return static_cast<int>(axes_.size()); }
    const Axis& axis(int k) const { return axes_.at(static_cast<std::size_t>(k)); }
    const std::vector<Axis>& axes() const noexcept { return axes_; }
    std::size_t size() const noexcept;
    std::size_t points(int k) const { return axis(k).points; }
    double spacing(int k) const { return axis(k).spacing(); }
    double cell_volume() const noexcept;

    std::size_t flat(std::size_t i, std::size_t j = 0) const noexcept { return i + axes_[0].points * j; }
    std::size_t index_along(std::size_t flat, int k) const noexcept;
    Vector node(std::size_t flat) const;
    bool on_boundary(std::size_t flat) const noexcept;
    // Cell containing x, or nullopt when x lies outside the box.
    std::optional<std::size_t> locate(std::span<const double> x) const noexcept;

    friend bool operator==(const Grid& a, const Grid& b);

private:
    std::vector<Axis> axes_;
};

/// Density values per node of a grid at time t.
struct GridDensity {
    Grid grid;
    Vector w;
    double t = 0.0;

    double mass() const { return w.sum() * grid.cell_volume(); }

    // Clamps entries above -1e-12 to zero, rejects anything lower, and
    // rescales to unit mass.
    static GridDensity normalized(Grid grid, Vector w, double t = 0.0);
    // Gaussian exp(-|x - mean|^2 / (2 std^2)) sampled at nodes and normalized.
    static GridDensity gaussian(Grid grid, const Vector& mean, double std_dev, double t = 0.0);
};

inline constexpr double kNegativeDensityTolerance = 1e-12;

bool all_finite(std::span<const double> values) noexcept;

} // namespace alphasde
