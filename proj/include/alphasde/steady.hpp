#pragma once

#include <iosfwd>
#include <limits>
#include <vector>

#include "alphasde/fpe.hpp"

namespace alphasde {

/// Zero-current steady density on a 1-D grid,
///   w ∝ D^(alpha - 1) exp(int 2a/D dx),
/// with the exponent integrated from the left node by the trapezoid rule
/// plus the Euler-Maclaurin end correction -h^2/12 [f'(x) - f'(x_0)].
/// Throws DomainError if D <= 0 on any node.
GridDensity steady_1d_zero_current(const SDEModel& model, const Grid& grid, Alpha alpha);

struct NullspaceOptions {
    int max_iterations = 100;
    double relative_residual = 1e-10;  // target for max|L w| / max|L|
};

inline constexpr double kSteadyUndershootTolerance = 1e-6;

/// Normalized null vector of a no-flux forward operator, by inverse
/// iteration on the implicit Euler map w <- (I - tau L)^-1 w. Negative
/// values down to -kSteadyUndershootTolerance * max w are left in place;
/// deeper undershoots throw DomainError. Throws ConvergenceError carrying
/// the residual when the target is missed.
GridDensity steady_nullspace(const OperatorMatrix& op, const NullspaceOptions& options = {});

struct Quasipotential {
    Grid grid;
    Vector phi;  // +inf where w = 0
    double epsilon = 1.0;
    std::vector<std::size_t> zero_density_nodes;
};

/// phi = -eps ln(w / max w), so min phi = 0.
Quasipotential quasipotential(const GridDensity& w, double epsilon);

/// Interior local minima of a 1-D quasipotential, refined by a parabola
/// through each minimal node and its neighbours.
std::vector<double> local_minima(const Quasipotential& q);

/// CSV `x(,y),w,phi`; phi written as "inf" on zero-density nodes.
void write_steady_csv(const GridDensity& w, const Quasipotential& q, std::ostream& os);

} // namespace alphasde
