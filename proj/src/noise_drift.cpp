#include "alphasde/noise_drift.hpp"

#include <algorithm>
#include <cmath>

namespace alphasde {

Vector a_n_from_b(const SDEModel& model, const Vector& x) {
    const int n = model.state_dim();
    const int m = model.noise_dim();
    const Matrix b = model.noise_at(x);
    const std::vector<Matrix> jac = model.noise_jacobian_at(x);
    Vector a = Vector::Zero(n);
    for (int i = 0; i < n; ++i)
        for (int k = 0; k < m; ++k)
            for (int mm = 0; mm < n; ++mm) a[i] += jac[static_cast<std::size_t>(mm)](i, k) * b(mm, k);
    return a;
}

Vector a_n_from_D(const SDEModel& model, const Vector& x) {
    const int n = model.state_dim();
    Vector a = Vector::Zero(n);
    Vector xp = x;
    for (int k = 0; k < n; ++k) {
        const double h = fd_step(x[k]);
        xp[k] = x[k] + h;
        const Matrix plus = diffusion_at(model, xp);
        xp[k] = x[k] - h;
        const Matrix minus = diffusion_at(model, xp);
        xp[k] = x[k];
        a += (plus.col(k) - minus.col(k)) / (4.0 * h);
    }
    if (!all_finite({a.data(), static_cast<std::size_t>(n)})) {
        throw EvaluationError("non-finite diffusion derivative", {x.data(), x.data() + x.size()});
    }
    return a;
}

SymmetrizationResult symmetrize(const Matrix& b) {
    if (b.size() == 0) throw ParameterError("symmetrize: empty matrix");
    if (!b.allFinite()) throw ParameterError("symmetrize: matrix has non-finite entries");

    const Eigen::Index side = std::max(b.rows(), b.cols());
    Matrix square = Matrix::Zero(side, side);
    square.topLeftCorner(b.rows(), b.cols()) = b;

    const double scale = square.cwiseAbs().maxCoeff();
    if ((square - square.transpose()).cwiseAbs().maxCoeff() <= 1e-14 * scale) {
        return {square, Matrix::Identity(side, side)};
    }

    const Eigen::JacobiSVD<Matrix> svd(square, Eigen::ComputeFullU | Eigen::ComputeFullV);
    const Matrix& u = svd.matrixU();
    const Matrix& v = svd.matrixV();
    Matrix rotation = v * u.transpose();
    Matrix b_star = u * svd.singularValues().asDiagonal() * u.transpose();
    // Exact symmetry; the product is symmetric only up to rounding.
    b_star = 0.5 * (b_star + b_star.transpose()).eval();
    return {std::move(b_star), std::move(rotation)};
}

SDEModel symmetrized_model(const SDEModel& model) {
    const int n = model.state_dim();
    const int m = model.noise_dim();
    SDEModel base = model;
    // The symmetric factor of the zero-padded square is zero outside its
    // leading n x n block, so the symmetrized noise is always n x n.
    FieldFn noise = [base, n, m](std::span<const double> x, std::span<double> out) {
        std::vector<double> raw(static_cast<std::size_t>(n * m));
        base.noise(x, raw);
        Matrix b = Matrix::Zero(n, m);
        for (int i = 0; i < n; ++i)
            for (int k = 0; k < m; ++k) b(i, k) = raw[static_cast<std::size_t>(i * m + k)];
        const Matrix bs = symmetrize(b).b_star;
        for (int i = 0; i < n; ++i)
            for (int k = 0; k < n; ++k) out[static_cast<std::size_t>(i * n + k)] = bs(i, k);
    };
    return SDEModel(model.name() + "-symmetrized", n, n,
                    [base](std::span<const double> x, std::span<double> out) { base.drift(x, out); },
                    std::move(noise));
}

} // namespace alphasde
