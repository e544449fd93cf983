#include "optrec/rkhs.hpp"

#include <cmath>

#include "optrec/erm.hpp"

namespace optrec {

KernelSpec::KernelSpec(double sigma_, Index dim_) : sigma(sigma_), dim(dim_) {
  if (!(sigma > 0)) throw DimensionMismatch("kernel width must be positive");
  if (dim < 1) throw DimensionMismatch("input dimension must be at least 1");
}

double kernel_eval(const KernelSpec& spec, const Vector& x,
                   const Vector& x_prime) {
  if (x.size() != spec.dim || x_prime.size() != spec.dim) {
    throw DimensionMismatch("point dimension does not match the kernel");
  }
  return std::exp(-(x - x_prime).squaredNorm() / (2.0 * spec.sigma * spec.sigma));
}

KernelGramResult kernel_gram(const KernelSpec& spec, const Matrix& points) {
  const Index m = points.rows();
  if (m < 1) throw DimensionMismatch("at least one point required");
  if (points.cols() != spec.dim) {
    throw DimensionMismatch("point dimension does not match the kernel");
  }

  // Stable distance expansion ||x||^2 + ||x'||^2 - 2 x.x' with precomputed
  // squared norms.
  const Vector sq = points.rowwise().squaredNorm();
  Matrix dist_sq = sq.replicate(1, m) + sq.transpose().replicate(m, 1) -
                   2.0 * points * points.transpose();
  dist_sq = dist_sq.cwiseMax(0.0);

  KernelGramResult out;
  out.gram = (-dist_sq / (2.0 * spec.sigma * spec.sigma)).array().exp();
  out.gram.diagonal().setOnes();
  for (Index i = 0; i < m; ++i) {
    for (Index j = i + 1; j < m; ++j) {
      if (dist_sq(i, j) <= 0.0) out.duplicates.emplace_back(i, j);
    }
  }
  return out;
}

TaylorBasisSpec TaylorBasisSpec::make(Index input_dim, int degree,
                                      double sigma) {
  if (input_dim < 1) throw DimensionMismatch("input dimension must be >= 1");
  if (degree < 0) throw DimensionMismatch("degree must be nonnegative");
  if (!(sigma > 0)) throw DimensionMismatch("kernel width must be positive");

  // Graded lexicographic enumeration: total degree ascending; within one
  // degree the leftmost coordinate carries the largest exponent first, so
  // the degree-1 block reads x_1, x_2, ..., x_d.
  std::vector<Eigen::VectorXi> rows;
  std::vector<int> alpha(static_cast<std::size_t>(input_dim), 0);
  const auto emit = [&]() {
    Eigen::VectorXi r(input_dim);
    for (Index i = 0; i < input_dim; ++i) r(i) = alpha[static_cast<std::size_t>(i)];
    rows.push_back(r);
  };
  const auto enumerate = [&](auto&& self, Index pos, int remaining) -> void {
    if (pos == input_dim - 1) {
      alpha[static_cast<std::size_t>(pos)] = remaining;
      emit();
      return;
    }
    for (int e = remaining; e >= 0; --e) {
      alpha[static_cast<std::size_t>(pos)] = e;
      self(self, pos + 1, remaining - e);
    }
  };
  for (int total = 0; total <= degree; ++total) {
    enumerate(enumerate, 0, total);
  }

  TaylorBasisSpec spec;
  spec.degree = degree;
  spec.sigma = sigma;
  spec.multi_indices.resize(static_cast<Index>(rows.size()), input_dim);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    spec.multi_indices.row(static_cast<Index>(i)) = rows[i].transpose();
  }
  return spec;
}

double taylor_feature_eval(const TaylorBasisSpec& basis, Index alpha_index,
                           const Vector& x, bool normalized) {
  if (alpha_index < 0 || alpha_index >= basis.size()) {
    throw IndexOutOfRange("feature index out of range");
  }
  if (x.size() != basis.input_dim()) {
    throw DimensionMismatch("point dimension does not match the basis");
  }
  const auto alpha = basis.multi_indices.row(alpha_index);
  double value = std::exp(-x.squaredNorm() / (2.0 * basis.sigma * basis.sigma));
  for (Index i = 0; i < x.size(); ++i) {
    for (int e = 0; e < alpha(i); ++e) value *= x(i);
  }
  if (normalized) {
    double coef = 1.0;
    const double inv_sq = 1.0 / (basis.sigma * basis.sigma);
    for (Index i = 0; i < alpha.size(); ++i) {
      for (int e = 1; e <= alpha(i); ++e) coef *= inv_sq / e;
    }
    value *= std::sqrt(coef);
  }
  return value;
}

Matrix cross_gram(const TaylorBasisSpec& basis, const Matrix& points) {
  if (points.cols() != basis.input_dim()) {
    throw DimensionMismatch("point dimension does not match the basis");
  }
  Matrix c(points.rows(), basis.size());
  for (Index i = 0; i < points.rows(); ++i) {
    const Vector x = points.row(i).transpose();
    for (Index j = 0; j < basis.size(); ++j) {
      c(i, j) = taylor_feature_eval(basis, j, x);
    }
  }
  return c;
}

double RecoveredFunction::evaluate(const Vector& x) const {
  if (x.size() != points.cols()) {
    throw DimensionMismatch("query dimension does not match training points");
  }
  double value = 0;
  for (Index i = 0; i < points.rows(); ++i) {
    value += a(i) * kernel_eval(kernel, points.row(i).transpose(), x);
  }
  for (Index j = 0; j < b.size(); ++j) {
    value += b(j) * taylor_feature_eval(basis, j, x);
  }
  return value;
}

Vector RecoveredFunction::evaluate_rows(const Matrix& query_points) const {
  Vector out(query_points.rows());
  for (Index i = 0; i < query_points.rows(); ++i) {
    out(i) = evaluate(query_points.row(i).transpose());
  }
  return out;
}

RecoveredFunction fit_optimal(const Matrix& points, const Vector& y,
                              const KernelSpec& kernel,
                              const TaylorBasisSpec& basis) {
  if (points.rows() != y.size()) {
    throw DimensionMismatch("points and targets disagree in length");
  }
  const Matrix g = kernel_gram(kernel, points).gram;
  const Matrix c = cross_gram(basis, points);
  const RecoveryCoefficients coeffs = recover_from_gramians(g, c, y);
  return {points, kernel, coeffs.a, basis, coeffs.b};
}

RecoveredFunction fit_ridgeless(const Matrix& points, const Vector& y,
                                const KernelSpec& kernel) {
  if (points.rows() != y.size()) {
    throw DimensionMismatch("points and targets disagree in length");
  }
  const Matrix g = kernel_gram(kernel, points).gram;
  TaylorBasisSpec none;
  none.degree = 0;
  none.sigma = kernel.sigma;
  none.multi_indices = Eigen::MatrixXi(0, kernel.dim);
  return {points, kernel, ridgeless_from_gramian(g, y), none, Vector(0)};
}

RecoveredFunction fit_taylor_erm2(const Matrix& points, const Vector& y,
                                  const KernelSpec& kernel,
                                  const TaylorBasisSpec& basis) {
  if (points.rows() != y.size()) {
    throw DimensionMismatch("points and targets disagree in length");
  }
  const Matrix c = cross_gram(basis, points);
  const ErmSolution sol = erm2_from_cross_gramian(c, y);
  return {points, kernel, Vector::Zero(points.rows()), basis, sol.b};
}

}  // namespace optrec
