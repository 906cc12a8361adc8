#include "doctest.h"

#include <cmath>
#include <limits>

#include "alphasde/model.hpp"
#include "alphasde/presets.hpp"
#include "oracles.hpp"

using namespace alphasde;

namespace {

SDEModel constant_noise(const Matrix& b) {
    const int n = static_cast<int>(b.rows()), m = static_cast<int>(b.cols());
    return SDEModel(
        "const", n, m, [](std::span<const double>, std::span<double> out) { std::fill(out.begin(), out.end(), 0.0); },
        [b, m](std::span<const double>, std::span<double> out) {
            for (Eigen::Index i = 0; i < b.rows(); ++i)
                for (int k = 0; k < m; ++k) out[static_cast<std::size_t>(i * m + k)] = b(i, k);
        });
}

SDEModel identity_noise(double jacobian_value) {
    return SDEModel(
        "b=x", 1, 1, [](std::span<const double>, std::span<double> out) { out[0] = 0.0; },
        [](std::span<const double> x, std::span<double> out) { out[0] = x[0]; },
        [jacobian_value](std::span<const double>, std::span<double> out) { out[0] = jacobian_value; });
}

} // namespace

TEST_CASE("alpha rejects values outside [0, 1]") {
    CHECK_NOTHROW(Alpha(0.0));
    CHECK_NOTHROW(Alpha(1.0));
    CHECK_THROWS_AS(Alpha(1.5), ParameterError);
    CHECK_THROWS_AS(Alpha(-0.1), ParameterError);
    CHECK_THROWS_AS(Alpha(std::nan("")), ParameterError);
}

TEST_CASE("diffusion_at examples") {
    Matrix b(2, 2);
    b << 1, 0, 0, 2;
    Matrix expected(2, 2);
    expected << 1, 0, 0, 4;
    CHECK((diffusion_at(constant_noise(b), Vector::Zero(2)) - expected).norm() == 0.0);

    Matrix row(1, 2);
    row << 1, 1;
    CHECK(diffusion_at(constant_noise(row), Vector::Zero(1))(0, 0) == doctest::Approx(2.0));

    const SDEModel half = make_preset("linear-noise", {{"sigma", 0.5}});
    CHECK(diffusion_at(half, Vector::Constant(1, 2.0))(0, 0) == doctest::Approx(1.0));
}

TEST_CASE("non-finite noise raises an evaluation error carrying x") {
    const SDEModel bad("bad", 1, 1, [](std::span<const double>, std::span<double> out) { out[0] = 0.0; },
                       [](std::span<const double> x, std::span<double> out) { out[0] = std::log(x[0]); });
    try {
        diffusion_at(bad, Vector::Constant(1, -1.0));
        FAIL("expected EvaluationError");
    } catch (const EvaluationError& e) {
        REQUIRE(e.point().size() == 1);
        CHECK(e.point()[0] == -1.0);
    }
}

TEST_CASE("diffusion is invariant under orthogonal mixing of the noise") {
    const SDEModel rotated = make_preset("rotated", {{"theta", 0.7}});
    const double angle = 1.234;
    Matrix o(2, 2);
    o << std::cos(angle), -std::sin(angle), std::sin(angle), std::cos(angle);
    Matrix reflect = o;
    reflect.col(1) *= -1.0;  // det = -1 is admitted too
    for (double x1 : {-1.5, 0.0, 0.8})
        for (double x2 : {-0.3, 2.0}) {
            Vector x(2);
            x << x1, x2;
            const Matrix b = rotated.noise_at(x);
            const Matrix d = diffusion_at(rotated, x);
            for (const Matrix& q : {o, reflect}) {
                const Matrix bo = b * q;
                CHECK((bo * bo.transpose() - d).cwiseAbs().maxCoeff() <= 1e-12);
            }
        }
}

TEST_CASE("validate_model") {
    const Vector probes[] = {Vector::Constant(1, -1.0), Vector::Constant(1, 0.5), Vector::Constant(1, 1.0)};

    SUBCASE("constant noise passes everywhere") {
        const auto report = validate_model(make_preset("ou"), probes);
        CHECK(report.all_passed());
        CHECK(report.probes.size() == 3);
    }
    SUBCASE("exact analytic Jacobian") {
        const auto report = validate_model(identity_noise(1.0), probes);
        CHECK(report.all_passed());
        for (const auto& p : report.probes) {
            REQUIRE(p.jacobian_discrepancy.has_value());
            CHECK(*p.jacobian_discrepancy <= 1e-5);
        }
    }
    SUBCASE("wrong Jacobian is reported with its discrepancy") {
        const Vector at_one[] = {Vector::Constant(1, 1.0)};
        const auto report = validate_model(identity_noise(2.0), at_one);
        CHECK_FALSE(report.all_passed());
        // central-difference oracle: d(x)/dx = 1, analytic claims 2
        const double fd = oracle::central_diff([](double x) { return x; }, 1.0);
        CHECK(*report.probes[0].jacobian_discrepancy == doctest::Approx(std::abs(2.0 - fd)).epsilon(1e-6));
    }
    SUBCASE("degenerate diffusion is flagged but passes") {
        const Vector at_zero[] = {Vector::Zero(1)};
        const auto report = validate_model(make_preset("linear-noise"), at_zero);
        CHECK(report.all_passed());
        CHECK(report.probes[0].degenerate);
    }
    SUBCASE("non-finite evaluation becomes a failed entry") {
        const SDEModel bad("bad", 1, 1, [](std::span<const double>, std::span<double> out) { out[0] = 0.0; },
                           [](std::span<const double>, std::span<double> out) {
                               out[0] = std::numeric_limits<double>::infinity();
                           });
        const auto report = validate_model(bad, probes);
        CHECK_FALSE(report.all_passed());
        CHECK_FALSE(report.probes[0].finite);
    }
    SUBCASE("no probes") { CHECK_THROWS_AS(validate_model(make_preset("ou"), {}), ParameterError); }
}

TEST_CASE("every preset has a consistent analytic Jacobian and PSD diffusion") {
    for (const PresetInfo& info : preset_registry()) {
        CAPTURE(info.name);
        const SDEModel model = make_preset(info.name);
        CHECK(model.state_dim() == info.state_dim);
        std::vector<Vector> probes;
        for (double t : {-1.7, -0.4, 0.3, 1.1, 1.9}) {
            Vector x(info.state_dim);
            for (int k = 0; k < info.state_dim; ++k) x[k] = t + 0.37 * k;
            probes.push_back(x);
        }
        const auto report = validate_model(model, probes);
        for (const auto& p : report.probes) {
            CHECK(p.finite);
            CHECK(p.psd);
            CHECK(p.min_eigenvalue >= -1e-10 * p.max_abs_diffusion);
            CHECK(p.symmetry_error <= 1e-12 * p.max_abs_diffusion);
            if (p.jacobian_discrepancy) CHECK(*p.jacobian_discrepancy <= kJacobianTolerance);
        }
    }
}

TEST_CASE("preset registry rejects unknown names and parameters") {
    CHECK_THROWS_AS(make_preset("nope"), ParameterError);
    CHECK_THROWS_AS(make_preset("ou", {{"sigma", 1.0}}), ParameterError);
    CHECK_THROWS_AS(make_preset("tanh-diffusion", {{"c", 1.5}}), ParameterError);
}

TEST_CASE("grid geometry") {
    const Grid g = Grid::line(-1.0, 1.0, 8);
    CHECK(g.spacing(0) == doctest::Approx(0.25));
    CHECK(g.node(0)[0] == doctest::Approx(-0.875));
    CHECK(g.node(7)[0] == doctest::Approx(0.875));
    CHECK(g.on_boundary(0));
    CHECK_FALSE(g.on_boundary(3));
    const double inside[] = {0.1};
    CHECK(g.locate(inside).value() == 4);
    const double outside[] = {1.2};
    CHECK_FALSE(g.locate(outside).has_value());
    CHECK_THROWS_AS(Grid::line(0.0, 1.0, 7), ParameterError);
    CHECK_THROWS_AS(Grid::line(1.0, 0.0, 16), ParameterError);

    const Grid p = Grid::plane({0.0, 1.0, 8}, {0.0, 2.0, 10});
    CHECK(p.size() == 80);
    CHECK(p.cell_volume() == doctest::Approx(0.125 * 0.2));
    CHECK(p.flat(3, 2) == 19);
    CHECK(p.index_along(19, 0) == 3);
    CHECK(p.index_along(19, 1) == 2);
}

TEST_CASE("GridDensity normalization") {
    const Grid g = Grid::line(0.0, 1.0, 10);
    Vector w = Vector::Constant(10, 3.0);
    w[2] = -5e-13;
    const auto d = GridDensity::normalized(g, w);
    CHECK(d.mass() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(d.w[2] == 0.0);
    w[2] = -1e-3;
    CHECK_THROWS_AS(GridDensity::normalized(g, w), ParameterError);
}
