#include "doctest.h"

#include <cmath>

#include "alphasde/noise_drift.hpp"
#include "alphasde/presets.hpp"
#include "alphasde/rng.hpp"
#include "oracles.hpp"

using namespace alphasde;

namespace {

using Span = std::span<const double>;
using Out = std::span<double>;

void zero(Span, Out out) { std::fill(out.begin(), out.end(), 0.0); }

// b = diag(x1^2, x2), no analytic Jacobian so the library falls back to
// central differences.
SDEModel diag_model() {
    return SDEModel("diag", 2, 2, zero, [](Span x, Out out) {
        out[0] = x[0] * x[0];
        out[1] = 0.0;
        out[2] = 0.0;
        out[3] = x[1];
    });
}

void check_symmetrization(const Matrix& b, const SymmetrizationResult& r) {
    const Matrix& bs = r.b_star;
    const Matrix& o = r.rotation;
    const Eigen::Index side = o.rows();
    CHECK((bs - bs.transpose()).cwiseAbs().maxCoeff() <= 1e-10 * bs.cwiseAbs().maxCoeff());
    CHECK((o.transpose() * o - Matrix::Identity(side, side)).cwiseAbs().maxCoeff() <= 1e-12);
    CHECK(std::abs(std::abs(o.determinant()) - 1.0) <= 1e-10);
    Matrix padded = Matrix::Zero(side, side);
    padded.topLeftCorner(b.rows(), b.cols()) = b;
    const Matrix d = padded * padded.transpose();
    CHECK((bs * bs.transpose() - d).cwiseAbs().maxCoeff() <= 1e-10 * d.cwiseAbs().maxCoeff());
    CHECK((padded * o - bs).cwiseAbs().maxCoeff() <= 1e-10 * std::max(1.0, bs.cwiseAbs().maxCoeff()));
}

} // namespace

TEST_CASE("a_N from b: examples") {
    CHECK(a_n_from_b(make_preset("ou"), Vector::Constant(1, 0.7)).norm() == 0.0);

    // b(x) = x at 1.5: Eq (2.2) via an independent finite-difference oracle
    const SDEModel lin = make_preset("linear-noise").without_analytic_jacobian();
    const double expected = 1.5 * oracle::central_diff([](double x) { return x; }, 1.5);
    CHECK(a_n_from_b(lin, Vector::Constant(1, 1.5))[0] == doctest::Approx(expected).epsilon(1e-8));
    CHECK(expected == doctest::Approx(1.5).epsilon(1e-8));

    Vector x(2);
    x << 1.0, 2.0;
    const Vector a = a_n_from_b(diag_model(), x);
    const double o1 = oracle::central_diff([](double v) { return v * v; }, 1.0) * 1.0;
    const double o2 = oracle::central_diff([](double v) { return v; }, 2.0) * 2.0;
    CHECK(a[0] == doctest::Approx(o1).epsilon(1e-8));
    CHECK(a[1] == doctest::Approx(o2).epsilon(1e-8));
    CHECK(a[0] == doctest::Approx(2.0).epsilon(1e-8));
    CHECK(a[1] == doctest::Approx(2.0).epsilon(1e-8));
}

TEST_CASE("a_N from D: examples") {
    CHECK(a_n_from_D(make_preset("ou"), Vector::Constant(1, -0.3)).norm() == 0.0);
    const Vector at = Vector::Constant(1, 1.5);
    // D = x^2 -> D'/2 = x
    const double expected = 0.5 * oracle::central_diff([](double v) { return v * v; }, 1.5);
    CHECK(a_n_from_D(make_preset("linear-noise"), at)[0] == doctest::Approx(expected).epsilon(1e-8));
    CHECK(a_n_from_D(make_preset("linear-noise"), at)[0] ==
          doctest::Approx(a_n_from_b(make_preset("linear-noise"), at)[0]).epsilon(1e-8));

    Vector x(2);
    x << 1.0, 2.0;
    const Vector a = a_n_from_D(diag_model(), x);  // D = diag(x1^4, x2^2)
    CHECK(a[0] == doctest::Approx(2.0).epsilon(1e-8));
    CHECK(a[1] == doctest::Approx(2.0).epsilon(1e-8));
}

TEST_CASE("a_N identity holds on random probes of every preset") {
    NormalStream rng(7, 0);
    for (const PresetInfo& info : preset_registry()) {
        CAPTURE(info.name);
        const SDEModel model = make_preset(info.name);
        for (int probe = 0; probe < 100; ++probe) {
            Vector x(info.state_dim);
            for (int k = 0; k < info.state_dim; ++k) x[k] = 1.5 * rng.next();
            const double err = (a_n_from_b(model, x) - a_n_from_D(model, x)).cwiseAbs().maxCoeff();
            CHECK(err <= 1e-4);
        }
    }
}

TEST_CASE("symmetrize examples") {
    SUBCASE("symmetric input is returned unchanged") {
        Matrix b(2, 2);
        b << 2, 1, 1, -3;
        const auto r = symmetrize(b);
        CHECK((r.rotation - Matrix::Identity(2, 2)).norm() == 0.0);
        CHECK((r.b_star - b).norm() == 0.0);
    }
    SUBCASE("rotation by 90 degrees") {
        Matrix b(2, 2);
        b << 0, 1, -1, 0;
        const auto r = symmetrize(b);
        Matrix o(2, 2);
        o << 0, -1, 1, 0;
        CHECK((r.rotation - o).cwiseAbs().maxCoeff() <= 1e-12);
        CHECK((r.b_star - Matrix::Identity(2, 2)).cwiseAbs().maxCoeff() <= 1e-12);
        check_symmetrization(b, r);
    }
    SUBCASE("shear: symmetric square root of B B^T") {
        Matrix b(2, 2);
        b << 1, 1, 0, 1;
        const auto r = symmetrize(b);
        check_symmetrization(b, r);
        // Oracle: square root via the eigen-decomposition of [[2,1],[1,1]].
        Matrix d(2, 2);
        d << 2, 1, 1, 1;
        const Eigen::SelfAdjointEigenSolver<Matrix> eig(d);
        const Matrix root = eig.eigenvectors() * eig.eigenvalues().cwiseSqrt().asDiagonal() *
                            eig.eigenvectors().transpose();
        CHECK((r.b_star - root).cwiseAbs().maxCoeff() <= 1e-12);
    }
    SUBCASE("rank deficient and rectangular inputs") {
        Matrix b(2, 2);
        b << 1, 2, 2, 4.0000001;
        b(1, 0) = 2.5;
        check_symmetrization(b, symmetrize(b));
        Matrix singular(3, 3);
        singular << 1, 2, 3, 2, 4, 6, 0, 1, 0;
        check_symmetrization(singular, symmetrize(singular));
        Matrix wide(1, 3);
        wide << 1, -2, 0.5;
        const auto r = symmetrize(wide);
        CHECK(r.b_star.rows() == 3);
        check_symmetrization(wide, r);
        Matrix tall(3, 1);
        tall << 1, -2, 0.5;
        check_symmetrization(tall, symmetrize(tall));
    }
    SUBCASE("non-finite input") {
        Matrix b = Matrix::Identity(2, 2);
        b(0, 1) = std::nan("");
        CHECK_THROWS_AS(symmetrize(b), ParameterError);
    }
}

TEST_CASE("symmetrize is idempotent") {
    NormalStream rng(11, 0);
    for (int trial = 0; trial < 50; ++trial) {
        Matrix b(3, 3);
        for (Eigen::Index i = 0; i < b.size(); ++i) b.data()[i] = rng.next();
        const auto first = symmetrize(b);
        check_symmetrization(b, first);
        const auto second = symmetrize(first.b_star);
        CHECK((second.rotation - Matrix::Identity(3, 3)).cwiseAbs().maxCoeff() <= 1e-10);
    }
}

TEST_CASE("symmetrized non-symmetric field reproduces a_N of the original diffusion") {
    const SDEModel rotated = make_preset("rotated", {{"theta", 0.9}, {"c", 0.6}});
    const SDEModel sym = symmetrized_model(rotated);
    NormalStream rng(5, 0);
    for (int probe = 0; probe < 100; ++probe) {
        Vector x(2);
        x << rng.next(), rng.next();
        const Matrix b = sym.noise_at(x);
        CHECK((b - b.transpose()).cwiseAbs().maxCoeff() <= 1e-10 * b.cwiseAbs().maxCoeff());
        CHECK((diffusion_at(sym, x) - diffusion_at(rotated, x)).cwiseAbs().maxCoeff() <= 1e-10);
        CHECK((a_n_from_b(sym, x) - a_n_from_D(rotated, x)).cwiseAbs().maxCoeff() <= 1e-4);
    }
}
