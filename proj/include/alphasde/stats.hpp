#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "alphasde/integrate.hpp"

namespace alphasde {

/// Histogram over the cells of a grid. Samples outside the box are
/// counted in out_of_range and excluded from the normalization.
struct EmpiricalDensity {
    Grid grid;
    std::vector<std::uint64_t> counts;
    std::size_t n_samples = 0;
    std::size_t out_of_range = 0;
    Vector density;
    std::vector<std::string> warnings;
};

/// Rows of `samples` are points. Throws ParameterError when empty.
EmpiricalDensity empirical_density(const Matrix& samples, const Grid& grid);
EmpiricalDensity empirical_density(const Ensemble& ensemble, const Grid& grid);

struct KsResult {
    double statistic = 0.0;
    double p_value = 1.0;
};

/// Kolmogorov survival function Q(lambda) = 2 sum (-1)^(k-1) exp(-2 k^2 lambda^2).
double kolmogorov_q(double lambda);

/// Two-sample Kolmogorov-Smirnov test with the asymptotic p-value
/// Q((sqrt(ne) + 0.12 + 0.11/sqrt(ne)) * D), ne = n*m/(n+m).
KsResult ks_two_sample(std::span<const double> a, std::span<const double> b);

struct KernelSymmetrySpec {
    double x = -0.8;
    double y = 0.8;
    double t = 0.25;
    double delta = 0.1;
    double dt = 1e-3;
    std::size_t n_paths = 400000;
    Alpha alpha = Alpha::anti_ito();
    Scheme scheme = Scheme::ito_form;
    std::uint64_t seed = 0;
    unsigned threads = 0;
};

struct KernelSymmetryResult {
    double p_forward = 0.0;   // P(X_t in [y - delta, y + delta] | X_0 = x)
    double p_backward = 0.0;  // P(X_t in [x - delta, x + delta] | X_0 = y)
    std::size_t hits_forward = 0;
    std::size_t hits_backward = 0;
    double z = 0.0;
    bool inconclusive = false;  // no hits in either direction
};

/**
 * Estimates both transition probabilities by simulation and returns
 * z = (p1 - p2) / sqrt(p1 (1 - p1) / N + p2 (1 - p2) / N).
 *
 * Both ensembles use the same seed, so x == y gives z = 0 exactly.
 * Requires a 1-D model with zero drift.
 */
KernelSymmetryResult kernel_symmetry(const SDEModel& model, const KernelSymmetrySpec& spec);

} // namespace alphasde
