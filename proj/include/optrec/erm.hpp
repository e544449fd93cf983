#pragma once

#include "optrec/hilbert.hpp"

namespace optrec {

/// Empirical-risk-minimization fit over the hypothesis class V.
struct ErmSolution {
  Vector b;                 // coefficients over the v_j
  double residual_norm = 0; // data misfit in the solved norm's base metric
  int iterations = 0;       // 0 for closed-form solves
};

/// Square loss: b = (C^T C)^-1 C^T y. Throws RankDeficient when the
/// cross-Gramian loses full column rank.
ErmSolution erm2(const ObservationSetup& obs, const ModelSet& model,
                 const Vector& y);

/// Same closed form, directly from a cross-Gramian (kernel use).
ErmSolution erm2_from_cross_gramian(const Matrix& cross_gramian,
                                    const Vector& y);

/// l1 loss, solved by iteratively reweighted least squares with an
/// annealed smoothing of |r| by sqrt(r^2 + eta^2). Throws NoConvergence
/// when the objective is still moving after the iteration cap.
ErmSolution erm1(const ObservationSetup& obs, const ModelSet& model,
                 const Vector& y);

/// Square loss with the relaxed constraint dist(f, V) <= eps instead of
/// f in V. `active` reports whether the constraint is tight at the
/// returned point.
struct ConstrainedErmSolution {
  Vector f_hat;        // length N
  bool active = false;
};

ConstrainedErmSolution erm2_constrained(const ObservationSetup& obs,
                                        const ModelSet& model,
                                        const Vector& y);

}  // namespace optrec
