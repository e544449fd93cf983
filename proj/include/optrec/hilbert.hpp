#pragma once

#include <Eigen/Core>

#include "optrec/errors.hpp"

namespace optrec {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using Index = Eigen::Index;

/// Orthonormal basis of the null space of `representers` (rows are the
/// Riesz representers u_i of the observation functionals). Returned as an
/// N x (N-m) matrix with orthonormal columns; N x 0 when m = N. Computed
/// by a full singular value decomposition, so reruns on identical input
/// are bit-stable.
///
/// Throws RankDeficient when the rows are not linearly independent.
Matrix kernel_basis(const Matrix& representers);

/// Orthogonal projection of `v` onto the span of the columns of `basis`.
/// An N x 0 basis projects everything to zero. Throws RankDeficient when
/// the columns are linearly dependent.
Vector project(const Vector& v, const Matrix& basis);

/// Orthonormal basis (thin) for the column span of `basis`; validates
/// linear independence. Shared by projections and subspace geometry.
Matrix orthonormal_columns(const Matrix& basis);

/// Pairwise inner products of two vector families given as matrix columns:
/// result(i, j) = <a_i, b_j>.  gram(A, A) is symmetric positive
/// semidefinite by construction.
Matrix gram(const Matrix& vectors_a, const Matrix& vectors_b);

/// The observation operator L(f) = (<u_1,f>, ..., <u_m,f>) together with a
/// cached orthonormal basis of ker(L). Immutable after construction.
class ObservationSetup {
 public:
  /// `representers` is m x N with row i = u_i. Throws RankDeficient when
  /// the rows are dependent (the observation functionals must be linearly
  /// independent) and DimensionMismatch when m > N.
  explicit ObservationSetup(Matrix representers);

  const Matrix& representers() const { return representers_; }
  const Matrix& kernel() const { return kernel_basis_; }
  Index num_observations() const { return representers_.rows(); }  // m
  Index ambient_dim() const { return representers_.cols(); }       // N

  /// L(f).
  Vector observe(const Vector& f) const;

  /// Gramian G with G(i,i') = <u_i, u_i'>; positive definite.
  Matrix gramian() const;

  /// Cross-Gramian C with C(i,j) = <u_i, v_j> for the columns v_j of
  /// `basis_v`.
  Matrix cross_gramian(const Matrix& basis_v) const;

 private:
  Matrix representers_;   // m x N
  Matrix kernel_basis_;   // N x (N-m), orthonormal columns
};

/// Approximability model set { f : dist(f, V) <= epsilon }.
struct ModelSet {
  Matrix basis;        // N x n, columns span V; may have zero columns
  double epsilon = 0;  // approximability radius, >= 0

  ModelSet(Matrix basis_v, double eps);
  /// The model with V = {0}.
  static ModelSet trivial(Index ambient_dim, double eps);

  Index dim() const { return basis.cols(); }
};

struct AssumptionDiagnostic {
  double sigma_min = 0;  // smallest singular value of the cross-Gramian
  bool ok = false;       // V and ker(L) intersect trivially
};

/// Checks the standing assumption that V intersects ker(L) only at zero,
/// equivalently that the cross-Gramian has full column rank. Returns a
/// diagnostic instead of throwing; dim(V) > m fails by dimension count.
AssumptionDiagnostic check_model_assumption(const ObservationSetup& obs,
                                            const ModelSet& model);

}  // namespace optrec
