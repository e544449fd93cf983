#pragma once

#include "optrec/hilbert.hpp"

namespace optrec {

/// Certificate for the exact local worst-case error of a recovery output g
/// at data y:
///   value^2 = ||h - g''||^2 + ||g'||^2 + c_star,
/// with h the minimum-norm interpolant, g' the ker(L) component of g,
/// g'' = g - g', and (c_star, d_star) the optimizers of the dual scalar
/// program obtained from the semidefinite formulation by Schur complement.
struct WceCertificate {
  double value = 0;       // the local worst-case error
  double c_star = 0;      // optimal value of the reduced dual program
  double d_star = 0;      // dual multiplier, >= 1/lambda_min(K^T P_Vperp K)
  double h_norm_sq = 0;   // ||h||^2
  double w_norm_sq = 0;   // ||P_Vperp h||^2
  double delta_terms = 0; // ||h - g''||^2 + ||g'||^2
  bool feasible = false;  // constraint set nonempty at (y, epsilon)
};

/// The unique h in ker(L)^perp with L(h) = y (same formula as ridgeless
/// recovery).
Vector min_norm_interpolant(const ObservationSetup& obs, const Vector& y);

/// Exact local worst-case error sup { ||f - g|| : dist(f,V) <= eps,
/// L(f) = y } for an arbitrary g, via the one-dimensional convex dual of
/// the semidefinite formulation. Throws InfeasibleData when
/// ||P_Vperp h|| > eps (1 + feasibility_rel) and ModelAssumptionViolated
/// when V meets ker(L) nontrivially.
WceCertificate local_wce(const ObservationSetup& obs, const ModelSet& model,
                         const Vector& y, const Vector& g);

/// Independent sampling oracle for local_wce, valid for ker(L) dimension
/// at most 3: dense boundary sampling of the feasible ellipsoid at
/// `grid_resolution` points per angular axis, plus multistart projected
/// gradient ascent. Returns a lower bound that converges to the true value
/// as the resolution grows.
double brute_force_wce(const ObservationSetup& obs, const ModelSet& model,
                       const Vector& y, const Vector& g, int grid_resolution);

}  // namespace optrec
