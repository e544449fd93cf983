#pragma once

#include <utility>
#include <vector>

#include "optrec/hilbert.hpp"
#include "optrec/recovery.hpp"

namespace optrec {

/// Gaussian kernel K(x, x') = exp(-||x - x'||^2 / (2 sigma^2)).
struct KernelSpec {
  double sigma = 1.0;  // kernel width, same units as the input coordinates
  Index dim = 1;       // input dimension d

  KernelSpec(double sigma_, Index dim_);
};

double kernel_eval(const KernelSpec& spec, const Vector& x,
                   const Vector& x_prime);

struct KernelGramResult {
  Matrix gram;  // m x m, symmetric, unit diagonal
  std::vector<std::pair<Index, Index>> duplicates;  // coincident point pairs
};

/// Gramian of the point-evaluation representers K(x_i, .) for the rows of
/// `points` (m x d). Coincident rows make the Gramian singular; they are
/// reported in `duplicates` rather than raised.
KernelGramResult kernel_gram(const KernelSpec& spec, const Matrix& points);

/// Monomial features damped by the Gaussian envelope,
///   phi_alpha(x) = x^alpha exp(-||x||^2 / (2 sigma^2)),
/// spanning the degree-<=k polynomial-times-envelope subspace of the
/// Gaussian RKHS. Multi-indices are enumerated in graded lexicographic
/// order (total degree ascending, first coordinate dominant), so the
/// degree-1 prefix is 1, x_1, ..., x_d. The default evaluation omits the
/// orthonormalization coefficient sqrt(sigma^-2|alpha| / alpha!), which
/// changes nothing about the span; pass normalized = true to include it
/// (needed when summing the Mercer series).
struct TaylorBasisSpec {
  int degree = 0;                 // k
  double sigma = 1.0;
  Eigen::MatrixXi multi_indices;  // n x d, row per alpha, graded-lex order

  static TaylorBasisSpec make(Index input_dim, int degree, double sigma);
  Index size() const { return multi_indices.rows(); }
  Index input_dim() const { return multi_indices.cols(); }
};

double taylor_feature_eval(const TaylorBasisSpec& basis, Index alpha_index,
                           const Vector& x, bool normalized = false);

/// Cross-Gramian for point evaluations against the Taylor features:
/// entry (i, j) = phi_j(x_i).
Matrix cross_gram(const TaylorBasisSpec& basis, const Matrix& points);

/// A fitted regressor f = sum_i a_i K(x_i, .) + sum_j b_j phi_j, evaluable
/// anywhere.
struct RecoveredFunction {
  Matrix points;          // m x d training inputs
  KernelSpec kernel;
  Vector a;               // length m
  TaylorBasisSpec basis;  // may be empty (size 0)
  Vector b;               // length basis.size()

  double evaluate(const Vector& x) const;
  /// Evaluates at every row of `query_points`.
  Vector evaluate_rows(const Matrix& query_points) const;
};

/// Optimal recovery in the Gaussian RKHS with V spanned by the Taylor
/// features of `basis`; reduces to ridgeless interpolation when the basis
/// is empty.
RecoveredFunction fit_optimal(const Matrix& points, const Vector& y,
                              const KernelSpec& kernel,
                              const TaylorBasisSpec& basis);

/// Minimum-RKHS-norm interpolation of the data.
RecoveredFunction fit_ridgeless(const Matrix& points, const Vector& y,
                                const KernelSpec& kernel);

/// Square-loss empirical risk minimization over the Taylor features alone
/// (no kernel part); an empty basis yields the zero predictor.
RecoveredFunction fit_taylor_erm2(const Matrix& points, const Vector& y,
                                  const KernelSpec& kernel,
                                  const TaylorBasisSpec& basis);

}  // namespace optrec
