#include "optrec/hilbert.hpp"

#include <Eigen/Dense>
#include <limits>

namespace optrec {

namespace {

void require_finite(const Matrix& m, const char* what) {
  if (!m.allFinite()) {
    throw DimensionMismatch(std::string(what) + " contains non-finite entries");
  }
}

}  // namespace

Matrix kernel_basis(const Matrix& representers) {
  const Index m = representers.rows();
  const Index n_dim = representers.cols();
  if (m < 1 || n_dim < 1) {
    throw DimensionMismatch("representer matrix must be at least 1 x 1");
  }
  if (m > n_dim) {
    throw DimensionMismatch("more observations than ambient dimensions");
  }
  require_finite(representers, "representer matrix");

  // Full SVD: the trailing right singular vectors span the null space.
  Eigen::JacobiSVD<Matrix> svd(representers, Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  if (sv(0) <= 0 || sv(m - 1) <= tol::rank_rel * sv(0)) {
    throw RankDeficient("observation representers are linearly dependent");
  }
  return svd.matrixV().rightCols(n_dim - m);
}

Matrix orthonormal_columns(const Matrix& basis) {
  const Index k = basis.cols();
  if (k == 0) return Matrix(basis.rows(), 0);
  require_finite(basis, "basis");
  Eigen::JacobiSVD<Matrix> svd(basis, Eigen::ComputeThinU);
  const auto& sv = svd.singularValues();
  if (sv(0) <= 0 || sv(k - 1) <= tol::rank_rel * sv(0)) {
    throw RankDeficient("basis columns are linearly dependent");
  }
  return svd.matrixU();
}

Vector project(const Vector& v, const Matrix& basis) {
  if (basis.cols() == 0) return Vector::Zero(v.size());
  if (basis.rows() != v.size()) {
    throw DimensionMismatch("vector and basis dimensions differ");
  }
  const Matrix q = orthonormal_columns(basis);
  return q * (q.transpose() * v);
}

Matrix gram(const Matrix& vectors_a, const Matrix& vectors_b) {
  if (vectors_a.rows() != vectors_b.rows()) {
    throw DimensionMismatch("vector families live in different dimensions");
  }
  return vectors_a.transpose() * vectors_b;
}

ObservationSetup::ObservationSetup(Matrix representers)
    : representers_(std::move(representers)),
      kernel_basis_(kernel_basis(representers_)) {}

Vector ObservationSetup::observe(const Vector& f) const {
  if (f.size() != ambient_dim()) {
    throw DimensionMismatch("element dimension does not match the setup");
  }
  return representers_ * f;
}

Matrix ObservationSetup::gramian() const {
  return representers_ * representers_.transpose();
}

Matrix ObservationSetup::cross_gramian(const Matrix& basis_v) const {
  if (basis_v.rows() != ambient_dim()) {
    throw DimensionMismatch("model basis dimension does not match the setup");
  }
  return representers_ * basis_v;
}

ModelSet::ModelSet(Matrix basis_v, double eps) : basis(std::move(basis_v)), epsilon(eps) {
  if (!(eps >= 0)) throw DimensionMismatch("epsilon must be nonnegative");
  require_finite(basis, "model basis");
  if (basis.cols() > 0) {
    orthonormal_columns(basis);  // rank validation only
  }
}

ModelSet ModelSet::trivial(Index ambient_dim, double eps) {
  return ModelSet(Matrix(ambient_dim, 0), eps);
}

AssumptionDiagnostic check_model_assumption(const ObservationSetup& obs,
                                            const ModelSet& model) {
  const Index n = model.dim();
  if (n == 0) {
    return {std::numeric_limits<double>::infinity(), true};
  }
  if (n > obs.num_observations()) {
    // dim(V) > m forces a nontrivial intersection with ker(L).
    return {0.0, false};
  }
  const Matrix c = obs.cross_gramian(model.basis);
  Eigen::JacobiSVD<Matrix> svd(c);
  const auto& sv = svd.singularValues();
  const double smax = sv(0);
  const double smin = sv(n - 1);
  return {smin, smax > 0 && smin > tol::rank_rel * smax};
}

}  // namespace optrec
