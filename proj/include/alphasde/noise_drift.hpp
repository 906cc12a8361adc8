#pragma once

#include "alphasde/model.hpp"

namespace alphasde {

/// Noise-induced drift a_N^i = (d b^{ik} / d x_m) b^{mk}, from the noise
/// matrix and its Jacobian (analytic when the model has one).
Vector a_n_from_b(const SDEModel& model, const Vector& x);

/// Noise-induced drift a_N^i = (1/2) d D^{ik} / d x_k, by central
/// differences of D = b b^T.
Vector a_n_from_D(const SDEModel& model, const Vector& x);

/// B_star = B * rotation is symmetric and B_star B_star^T = B B^T.
struct SymmetrizationResult {
    Matrix b_star;
    Matrix rotation;
};

/**
 * Right-multiplies B by an orthogonal matrix so the product is symmetric.
 *
 * Uses the polar decomposition B = P Q (P symmetric PSD, Q orthogonal) from
 * the SVD B = U S V^T: rotation = Q^T = V U^T and B_star = U S U^T = P.
 * Inputs that are already symmetric come back unchanged with the identity
 * rotation. Rectangular inputs are padded with zeros to a square of side
 * max(rows, cols). Rank-deficient inputs are fine; the orthogonal factor is
 * completed from the full SVD bases.
 */
SymmetrizationResult symmetrize(const Matrix& b);

/// Same model with the noise field replaced by x -> b(x) O(x) where O(x)
/// symmetrizes b(x) pointwise. The diffusion field is unchanged. O(x) is
/// not guaranteed to be continuous where singular values of b cross.
SDEModel symmetrized_model(const SDEModel& model);

} // namespace alphasde
