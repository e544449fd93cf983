#pragma once

#include "optrec/hilbert.hpp"

namespace optrec {

/// Coefficients of a recovered element over the representers u_i (a) and
/// the model basis v_j (b). Satisfies G a + C b = y and C^T a = 0.
struct RecoveryCoefficients {
  Vector a;  // length m
  Vector b;  // length n (empty for ridge/ridgeless)
};

/// Assembles f = sum_i a_i u_i + sum_j b_j v_j in coordinates.
Vector assemble(const ObservationSetup& obs, const Matrix& basis_v,
                const RecoveryCoefficients& coeffs);

/// Core solve shared by the coordinate and kernel instantiations:
///   b = (C^T G^-1 C)^-1 C^T G^-1 y,   a = G^-1 (y - C b).
/// G must be symmetric positive definite and C full column rank. Throws
/// IllConditioned past cond_max, ModelAssumptionViolated when C is rank
/// deficient.
RecoveryCoefficients recover_from_gramians(const Matrix& gramian,
                                           const Matrix& cross_gramian,
                                           const Vector& y);

/// The worst-case-optimal recovery map: the minimizer of ||f - P_V f||
/// subject to L(f) = y. Output does not depend on model.epsilon.
RecoveryCoefficients optimal_recover(const ObservationSetup& obs,
                                     const ModelSet& model, const Vector& y);

/// Minimum-norm interpolation, a = G^-1 y (the V = {0} special case).
RecoveryCoefficients ridgeless_recover(const ObservationSetup& obs,
                                       const Vector& y);

/// a = (G + gamma I)^-1 y for gamma > 0.
RecoveryCoefficients ridge_recover(const ObservationSetup& obs,
                                   const Vector& y, double gamma);

/// Ridge/ridgeless variants operating directly on a Gramian (kernel use).
Vector ridgeless_from_gramian(const Matrix& gramian, const Vector& y);
Vector ridge_from_gramian(const Matrix& gramian, const Vector& y,
                          double gamma);

/// Recovery of a quantity of interest Q(f) when the approximability model
/// constrains a transform T(f): minimize ||T f - P_V(T f)|| over L(f) = y.
struct GeneralizedProblem {
  Matrix transform;   // T, maps ambient (N) to transformed space (N')
  Matrix quantity;    // Q, maps ambient (N) to the quantity space
  Matrix basis_v;     // N' x n basis of V in the transformed space
};

struct GeneralizedRecovery {
  Vector f_hat;    // length N, the minimum-norm-tie-broken minimizer
  Vector q_value;  // Q applied to f_hat
};

GeneralizedRecovery generalized_recover(const ObservationSetup& obs,
                                        const GeneralizedProblem& prob,
                                        const Vector& y);

/// Compatibility indicator
///   mu = sup { ||Q u|| / dist(T u, V) : u in ker(L), u != 0 },
/// computed as the largest generalized eigenvalue of the ker(L)-restricted
/// quadratic forms. Returns 0 when ker(L) is trivial and +infinity when
/// the denominator form is singular while the numerator does not vanish on
/// its null space.
double compute_mu(const ObservationSetup& obs, const GeneralizedProblem& prob);

/// Minimal local worst-case error at y: mu * sqrt(eps^2 - delta^2), where
/// delta = ||f_hat - P_V f_hat|| for the optimal recovery f_hat and mu is
/// the compatibility indicator with T = Q = identity. Throws
/// ModelInconsistentData when delta exceeds eps beyond tolerance.
double minimal_local_wce(const ObservationSetup& obs, const ModelSet& model,
                         const Vector& y);

}  // namespace optrec
