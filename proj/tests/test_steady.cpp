#include "doctest.h"

#include <cmath>
#include <sstream>

#include "alphasde/presets.hpp"
#include "alphasde/steady.hpp"
#include "oracles.hpp"

using namespace alphasde;

namespace {

struct Case {
    const char* name;
    PresetParams params;
    double lower, upper;
};

// 1-D presets with a confining drift and D > 0 on the box.
std::vector<Case> confined_cases() {
    return {
        {"ou", {{"k", 1.0}, {"d", 2.0}}, -6.0, 6.0},
        {"linear-noise", {{"k", 1.0}, {"sigma", 0.8}}, 0.5, 4.0},
        {"tanh-diffusion", {{"k", 1.0}}, -4.0, 4.0},
        {"sine-diffusion", {{"k", 1.0}}, -5.0, 5.0},
        {"quadratic-diffusion", {{"k", 2.0}}, -4.0, 4.0},
        {"double-well", {}, -2.0, 2.0},
        {"polynomial", {{"d1", -1.0}, {"d3", -0.2}, {"b0", 1.0}, {"b1", 0.3}}, -2.5, 2.0},
    };
}

double l1(const GridDensity& a, const GridDensity& b) { return (a.w - b.w).cwiseAbs().sum() * a.grid.spacing(0); }

double argmax_x(const GridDensity& w, double from, double to) {
    double best = -1.0, at = 0.0;
    for (std::size_t p = 0; p < w.grid.size(); ++p) {
        const double x = w.grid.node(p)[0];
        if (x < from || x > to) continue;
        if (w.w[static_cast<Eigen::Index>(p)] > best) {
            best = w.w[static_cast<Eigen::Index>(p)];
            at = x;
        }
    }
    return at;
}

} // namespace

TEST_CASE("zero-current density: Gaussian") {
    const Grid g = Grid::line(-6.0, 6.0, 512);
    for (double a : {0.0, 0.5, 1.0}) {
        const GridDensity w = steady_1d_zero_current(make_preset("ou", {{"k", 1.0}, {"d", 2.0}}), g, Alpha(a));
        double err = 0.0;
        for (std::size_t p = 0; p < g.size(); ++p)
            err = std::max(err, std::abs(w.w[static_cast<Eigen::Index>(p)] - oracle::gaussian_pdf(g.node(p)[0], 0.0, 1.0)));
        CHECK(err <= 1e-6);
    }
}

TEST_CASE("zero-current density without drift") {
    const Grid g = Grid::line(-2.0, 2.0, 512);
    SUBCASE("alpha = 1 gives the uniform density for any D") {
        for (const char* name : {"tanh-diffusion", "sine-diffusion", "quadratic-diffusion"}) {
            const GridDensity w = steady_1d_zero_current(make_preset(name), g, Alpha(1.0));
            CHECK((w.w.array() - 0.25).abs().maxCoeff() <= 1e-12);
        }
    }
    SUBCASE("alpha = 0 with D = 1 + x^2 gives 1/(1 + x^2)") {
        const GridDensity w = steady_1d_zero_current(make_preset("quadratic-diffusion"), g, Alpha(0.0));
        Vector expected(static_cast<Eigen::Index>(g.size()));
        for (std::size_t p = 0; p < g.size(); ++p) {
            const double x = g.node(p)[0];
            expected[static_cast<Eigen::Index>(p)] = 1.0 / (1.0 + x * x);
        }
        expected /= expected.sum() * g.spacing(0);
        CHECK((w.w - expected).cwiseAbs().maxCoeff() <= 1e-6);
        // continuous normalization 1 / (2 atan 2) differs only by the midpoint-rule error
        CHECK(w.w[0] * (1.0 + g.node(0)[0] * g.node(0)[0]) ==
              doctest::Approx(1.0 / (2.0 * std::atan(2.0))).epsilon(1e-4));
    }
    SUBCASE("vanishing diffusion is a domain error") {
        CHECK_THROWS_AS(steady_1d_zero_current(make_preset("linear-noise"), Grid::line(-1.0, 1.0, 9), Alpha(1.0)),
                        DomainError);
    }
}

TEST_CASE("null space agrees with the zero-current quadrature") {
    for (const Case& c : confined_cases()) {
        for (double a : {0.0, 1.0}) {
            CAPTURE(std::string(c.name));
            CAPTURE(a);
            const SDEModel model = make_preset(c.name, c.params);
            double dist[2];
            int slot = 0;
            for (std::size_t points : {512u, 1024u}) {
                const Grid g = Grid::line(c.lower, c.upper, points);
                const auto op = build_forward(model, g, Alpha(a));
                const GridDensity null = steady_nullspace(op);
                CHECK((op.matrix * null.w).cwiseAbs().maxCoeff() <= 1e-10 * max_abs(op.matrix));
                CHECK(null.w.minCoeff() >= 0.0);
                dist[slot++] = l1(null, steady_1d_zero_current(model, g, Alpha(a)));
            }
            CHECK(dist[0] <= 1e-3);
            CHECK(dist[1] <= 2.5e-4);
        }
    }
}

TEST_CASE("null space of pure noise at alpha = 1 is uniform") {
    const Grid g = Grid::line(-4.0, 4.0, 512);
    const GridDensity w = steady_nullspace(build_forward(make_preset("tanh-diffusion"), g, Alpha(1.0)));
    CHECK((w.w.maxCoeff() - w.w.minCoeff()) / w.w.maxCoeff() <= 1e-6);
}

TEST_CASE("null space in 2-D") {
    const SDEModel model = make_preset("rotated", {{"k", 1.0}});
    const Grid g = Grid::plane({-3.0, 3.0, 80}, {-3.0, 3.0, 84});
    const auto op = build_forward(model, g, Alpha(0.5));
    const GridDensity w = steady_nullspace(op);
    CHECK(w.mass() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK((op.matrix * w.w).cwiseAbs().maxCoeff() <= 1e-10 * max_abs(op.matrix));
    CHECK(w.w.minCoeff() >= -kSteadyUndershootTolerance * w.w.maxCoeff());
    // too coarse for the cross-diffusion stencil: the tails undershoot
    const Grid coarse = Grid::plane({-3.0, 3.0, 40}, {-3.0, 3.0, 44});
    CHECK_THROWS_AS(steady_nullspace(build_forward(model, coarse, Alpha(0.5))), DomainError);
}

TEST_CASE("null space preconditions") {
    const Grid g = Grid::line(-1.0, 1.0, 16);
    const SDEModel ou = make_preset("ou");
    CHECK_THROWS_AS(steady_nullspace(build_backward(ou, g, Alpha(1.0))), ParameterError);
    CHECK_THROWS_AS(steady_nullspace(build_forward(ou, g, Alpha(1.0), Boundary::absorbing)), ParameterError);
    NullspaceOptions starved;
    starved.max_iterations = 0;
    starved.relative_residual = 1e-300;
    CHECK_THROWS_AS(steady_nullspace(build_forward(ou, g, Alpha(1.0)), starved), ConvergenceError);
}

TEST_CASE("steady densities carry no current") {
    for (const Case& c : confined_cases()) {
        CAPTURE(std::string(c.name));
        const SDEModel model = make_preset(c.name, c.params);
        const Grid g = Grid::line(c.lower, c.upper, 512);
        const GridDensity w = steady_1d_zero_current(model, g, Alpha(1.0));
        const auto j = probability_current(model, w, Alpha(1.0));
        double aw = 0.0;
        for (std::size_t p = 0; p < g.size(); ++p)
            aw = std::max(aw, std::abs(model.drift_at(g.node(p))[0] * w.w[static_cast<Eigen::Index>(p)]));
        CHECK(j.j.cwiseAbs().maxCoeff() <= 1e-6 * aw + 1e-12);
    }
}

TEST_CASE("quasipotential") {
    SUBCASE("Gaussian gives x^2 / 2") {
        const Grid g = Grid::line(-6.0, 6.0, 512);
        const auto q = quasipotential(steady_1d_zero_current(make_preset("ou", {{"k", 1.0}, {"d", 2.0}}), g,
                                                             Alpha(1.0)),
                                      1.0);
        const double x0 = g.node(256)[0];  // node nearest the maximum
        for (std::size_t p = 0; p < g.size(); ++p) {
            const double x = g.node(p)[0];
            CHECK(q.phi[static_cast<Eigen::Index>(p)] == doctest::Approx(0.5 * (x * x - x0 * x0)).epsilon(1e-6).scale(1.0));
        }
        CHECK(q.phi.minCoeff() == 0.0);
    }
    SUBCASE("zero-density nodes become infinite and are listed") {
        const Grid g = Grid::line(0.0, 1.0, 8);
        Vector w = Vector::Constant(8, 1.0);
        w[5] = 0.0;
        const auto q = quasipotential(GridDensity::normalized(g, w), 0.1);
        CHECK(std::isinf(q.phi[5]));
        REQUIRE(q.zero_density_nodes.size() == 1);
        CHECK(q.zero_density_nodes[0] == 5);
        std::ostringstream csv;
        write_steady_csv(GridDensity::normalized(g, w), q, csv);
        CHECK(csv.str().rfind("x,w,phi\n", 0) == 0);
        CHECK(csv.str().find(",0,inf\n") != std::string::npos);
    }
    SUBCASE("epsilon must be positive") {
        const Grid g = Grid::line(0.0, 1.0, 8);
        CHECK_THROWS_AS(quasipotential(GridDensity::normalized(g, Vector::Constant(8, 1.0)), 0.0), ParameterError);
    }
}

TEST_CASE("double-well: quasipotential minima sit on the stable zeros of the drift") {
    const double eps = 0.05;
    const SDEModel model = make_preset("double-well", {{"eps", eps}});
    const Grid g = Grid::line(-2.0, 2.0, 1024);
    const double h = g.spacing(0);

    const GridDensity w1 = steady_1d_zero_current(model, g, Alpha(1.0));
    const auto minima = local_minima(quasipotential(w1, eps));
    REQUIRE(minima.size() == 2);
    CHECK(std::abs(minima[0] + 1.0) <= 2.0 * h);
    CHECK(std::abs(minima[1] - 1.0) <= 2.0 * h);
    CHECK(std::abs(argmax_x(w1, 0.0, 2.0) - 1.0) <= h);

    // alpha = 0 moves the peaks toward smaller D, against a_N = eps x / 2
    const GridDensity w0 = steady_1d_zero_current(model, g, Alpha(0.0));
    const double right = argmax_x(w0, 0.0, 2.0), left = argmax_x(w0, -2.0, 0.0);
    CHECK(1.0 - right > 2.0 * h);
    CHECK(left + 1.0 > 2.0 * h);
    // stationary condition 2a = D' puts the peak at x^2 = 1 - eps/2
    CHECK(std::abs(right - std::sqrt(1.0 - eps / 2.0)) <= h);
}
