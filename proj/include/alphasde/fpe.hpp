#pragma once

#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Sparse>

#include "alphasde/model.hpp"

namespace alphasde {

using SparseMatrix = Eigen::SparseMatrix<double>;

enum class Boundary { no_flux, absorbing };
enum class OperatorKind { forward, backward };

std::string_view to_string(Boundary boundary) noexcept;
Boundary parse_boundary(std::string_view text);

/// Discrete forward operator L or backward operator L+ on a grid.
struct OperatorMatrix {
    Grid grid;
    SparseMatrix matrix;
    OperatorKind kind = OperatorKind::forward;
    Alpha alpha = Alpha::anti_ito();
    Boundary boundary = Boundary::no_flux;
};

/**
 * Forward operator in flux form,
 *
 *   L w = div[ -(a + (alpha - 1) a_N) w + (D/2) grad w ],
 *
 * assembled from cell-face fluxes. D, a and a_N are evaluated at face
 * midpoints; the advective face value of w is the mean of the two cells.
 * With no_flux boundaries the boundary faces carry no flux, so every column
 * sums to zero. For alpha = 1 the noise-induced drift is never evaluated.
 * In 2-D the mixed D terms use the average of the centred cross
 * differences of both cells adjacent to the face (neighbours outside the
 * box are replaced by the cell itself).
 *
 * Throws BuildError listing nodes where D is not positive semidefinite.
 */
OperatorMatrix build_forward(const SDEModel& model, const Grid& grid, Alpha alpha,
                             Boundary boundary = Boundary::no_flux);

/**
 * Backward operator
 *
 *   L+ u = a . grad u + div[(D/2) grad u] - (1 - alpha) a_N . grad u,
 *
 * with the same face stencil as build_forward for the divergence term and
 * centred node differences for the advection terms. Reflecting (Neumann)
 * boundaries.
 */
OperatorMatrix build_backward(const SDEModel& model, const Grid& grid, Alpha alpha);

/// L - L+ for the model with its drift removed.
OperatorMatrix operator_gap(const SDEModel& model, const Grid& grid, Alpha alpha);

double max_abs(const SparseMatrix& m);
/// Largest |column sum|.
double max_column_sum(const SparseMatrix& m);

/// Node-wise gradient; rows are nodes, columns axes. Sixth-order
/// differences on seven nodes: centred in the interior, shifted inward
/// near the edges.
Matrix grid_gradient(const Grid& grid, const Vector& w);

struct CurrentField {
    Grid grid;
    Matrix j;  // nodes x dim
};

/// J = [a + (alpha - 1) a_N] w - (1/2) D grad w at every node.
CurrentField probability_current(const SDEModel& model, const GridDensity& w, Alpha alpha);

struct EvolveOptions {
    double t_end = 1.0;
    double dt = 0.0;  // 0: default_time_step
    std::vector<double> snapshot_times;  // in (t0, t0 + t_end]; the initial and final states are always kept
    Boundary boundary = Boundary::no_flux;
};

struct EvolveResult {
    std::vector<GridDensity> snapshots;  // raw values, not renormalized
    std::vector<std::string> warnings;
    double max_mass_error = 0.0;  // largest |mass - initial mass| over all steps
    double min_value = 0.0;       // most negative node value over all steps
    std::size_t steps = 0;
};

/// h_min^2 / (2 max D) over the grid nodes.
double default_time_step(const SDEModel& model, const Grid& grid);

/// Crank-Nicolson time stepping of w_t = L w. Undershoots below -1e-6 of
/// the peak are reported as warnings; a failed factorization throws.
EvolveResult evolve_density(const SDEModel& model, const GridDensity& w0, Alpha alpha,
                            const EvolveOptions& options);

struct ExtremumPosition {
    Vector x;          // refined position
    std::size_t node;  // flat index of the maximal node
    bool on_boundary = false;
    bool unique = true;
};

/// Position of the maximum of each snapshot, refined by a parabola through
/// the maximal node and its neighbours along each axis.
std::vector<ExtremumPosition> extremum_track(std::span<const GridDensity> snapshots);

/// CSV `row,col,value`, column-major order.
void write_operator_csv(const OperatorMatrix& op, std::ostream& os);
/// CSV `t,node_index,x(,y),w`; negative values are written as 0.
void write_snapshots_csv(std::span<const GridDensity> snapshots, std::ostream& os);

} // namespace alphasde
