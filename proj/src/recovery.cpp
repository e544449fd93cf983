#include "optrec/recovery.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <limits>

namespace optrec {

namespace {

// Symmetric positive-definite solver: Cholesky with a single jitter retry,
// refusing matrices conditioned beyond cond_max.
class SpdSolver {
 public:
  SpdSolver(Matrix g, const char* label) : g_(std::move(g)) {
    const Index n = g_.rows();
    Eigen::SelfAdjointEigenSolver<Matrix> eig(g_, Eigen::EigenvaluesOnly);
    const double lam_max = eig.eigenvalues()(n - 1);
    double lam_min = eig.eigenvalues()(0);
    llt_.compute(g_);
    if (llt_.info() != Eigen::Success || lam_min <= 0) {
      const double jitter = 1e-12 * g_.trace() / static_cast<double>(n);
      g_.diagonal().array() += jitter;
      lam_min += jitter;
      llt_.compute(g_);
      if (llt_.info() != Eigen::Success || lam_min <= 0) {
        throw IllConditioned(std::string(label) +
                             " is not numerically positive definite");
      }
    }
    if (lam_max > tol::cond_max * lam_min) {
      throw IllConditioned(std::string(label) +
                           " condition number exceeds 1e12");
    }
  }

  template <typename Rhs>
  auto solve(const Rhs& rhs) const {
    return llt_.solve(rhs).eval();
  }

 private:
  Matrix g_;
  Eigen::LLT<Matrix> llt_;
};

Matrix identity_like(Index n) { return Matrix::Identity(n, n); }

}  // namespace

Vector assemble(const ObservationSetup& obs, const Matrix& basis_v,
                const RecoveryCoefficients& coeffs) {
  Vector f = obs.representers().transpose() * coeffs.a;
  if (coeffs.b.size() > 0) {
    if (basis_v.cols() != coeffs.b.size()) {
      throw DimensionMismatch("basis and coefficient sizes differ");
    }
    f += basis_v * coeffs.b;
  }
  return f;
}

RecoveryCoefficients recover_from_gramians(const Matrix& gramian,
                                           const Matrix& cross_gramian,
                                           const Vector& y) {
  const Index m = gramian.rows();
  const Index n = cross_gramian.cols();
  if (gramian.cols() != m || cross_gramian.rows() != m || y.size() != m) {
    throw DimensionMismatch("gramian, cross-gramian and data sizes disagree");
  }
  const SpdSolver g_solver(gramian, "Gramian");
  if (n == 0) {
    return {g_solver.solve(y), Vector(0)};
  }

  const Matrix ginv_c = g_solver.solve(cross_gramian);
  const Matrix normal = cross_gramian.transpose() * ginv_c;  // C^T G^-1 C
  {
    Eigen::JacobiSVD<Matrix> svd(cross_gramian);
    const auto& sv = svd.singularValues();
    if (sv(0) <= 0 || sv(n - 1) <= tol::rank_rel * sv(0)) {
      throw ModelAssumptionViolated(
          "cross-Gramian is column rank deficient: V meets ker(L)");
    }
  }
  const SpdSolver n_solver(normal, "reduced normal matrix");
  RecoveryCoefficients out;
  out.b = n_solver.solve(ginv_c.transpose() * y);
  out.a = g_solver.solve(y - cross_gramian * out.b);
  return out;
}

RecoveryCoefficients optimal_recover(const ObservationSetup& obs,
                                     const ModelSet& model, const Vector& y) {
  const auto diag = check_model_assumption(obs, model);
  if (!diag.ok) {
    throw ModelAssumptionViolated("V intersects ker(L) nontrivially");
  }
  if (y.size() != obs.num_observations()) {
    throw DimensionMismatch("data length does not match the observation count");
  }
  if (model.dim() == 0) return ridgeless_recover(obs, y);
  return recover_from_gramians(obs.gramian(), obs.cross_gramian(model.basis),
                               y);
}

RecoveryCoefficients ridgeless_recover(const ObservationSetup& obs,
                                       const Vector& y) {
  if (y.size() != obs.num_observations()) {
    throw DimensionMismatch("data length does not match the observation count");
  }
  return {ridgeless_from_gramian(obs.gramian(), y), Vector(0)};
}

Vector ridgeless_from_gramian(const Matrix& gramian, const Vector& y) {
  const SpdSolver solver(gramian, "Gramian");
  return solver.solve(y);
}

RecoveryCoefficients ridge_recover(const ObservationSetup& obs,
                                   const Vector& y, double gamma) {
  if (y.size() != obs.num_observations()) {
    throw DimensionMismatch("data length does not match the observation count");
  }
  return {ridge_from_gramian(obs.gramian(), y, gamma), Vector(0)};
}

Vector ridge_from_gramian(const Matrix& gramian, const Vector& y,
                          double gamma) {
  if (!(gamma > 0)) throw NonPositiveGamma("ridge parameter must be positive");
  Matrix g = gramian;
  g.diagonal().array() += gamma;
  const SpdSolver solver(g, "ridge Gramian");
  return solver.solve(y);
}

GeneralizedRecovery generalized_recover(const ObservationSetup& obs,
                                        const GeneralizedProblem& prob,
                                        const Vector& y) {
  const Index ambient = obs.ambient_dim();
  if (prob.transform.cols() != ambient || prob.quantity.cols() != ambient) {
    throw DimensionMismatch("transform/quantity input dimension mismatch");
  }
  if (prob.basis_v.cols() > 0 && prob.basis_v.rows() != prob.transform.rows()) {
    throw DimensionMismatch("V basis does not live in the transform codomain");
  }
  const Vector h = obs.representers().transpose() *
                   ridgeless_from_gramian(obs.gramian(), y);
  const Matrix& k = obs.kernel();
  GeneralizedRecovery out;
  if (k.cols() == 0) {
    out.f_hat = h;
    out.q_value = prob.quantity * h;
    return out;
  }

  Matrix residual_map = prob.transform * k;   // (I - P_V) T restricted to ker(L)
  Vector offset = prob.transform * h;
  if (prob.basis_v.cols() > 0) {
    const Matrix q = orthonormal_columns(prob.basis_v);
    residual_map -= q * (q.transpose() * residual_map);
    offset -= q * (q.transpose() * offset);
  }

  // Least squares in the kernel coordinates; the SVD solve returns the
  // minimum-norm minimizer, which is the tie-break when the residual map
  // is rank deficient.
  Eigen::JacobiSVD<Matrix> svd(residual_map,
                               Eigen::ComputeThinU | Eigen::ComputeThinV);
  svd.setThreshold(tol::rank_rel);
  const Vector x = svd.solve(-offset);

  out.f_hat = h + k * x;
  out.q_value = prob.quantity * out.f_hat;
  return out;
}

double compute_mu(const ObservationSetup& obs, const GeneralizedProblem& prob) {
  const Matrix& k = obs.kernel();
  const Index r = k.cols();
  if (r == 0) return 0.0;  // sup over the empty set
  if (prob.transform.cols() != obs.ambient_dim() ||
      prob.quantity.cols() != obs.ambient_dim()) {
    throw DimensionMismatch("transform/quantity input dimension mismatch");
  }

  Matrix tk = prob.transform * k;
  if (prob.basis_v.cols() > 0) {
    const Matrix q = orthonormal_columns(prob.basis_v);
    tk -= q * (q.transpose() * tk);
  }
  const Matrix denom = tk.transpose() * tk;          // K^T T^T (I-P_V) T K
  const Matrix qk = prob.quantity * k;
  const Matrix numer = qk.transpose() * qk;          // K^T Q^T Q K

  Eigen::SelfAdjointEigenSolver<Matrix> eig(denom);
  const Vector lam = eig.eigenvalues();
  const Matrix z = eig.eigenvectors();
  const double lam_max = lam(r - 1);
  const double cutoff = tol::rank_rel * std::max(lam_max, 0.0);

  Index rank = 0;
  for (Index i = 0; i < r; ++i) {
    if (lam(i) > cutoff) ++rank;
  }
  const Index nullity = r - rank;

  if (nullity > 0) {
    const Matrix z_null = z.leftCols(nullity);
    const Matrix n_null = z_null.transpose() * numer * z_null;
    const double num_scale = std::max(numer.trace(), 1.0);
    Eigen::SelfAdjointEigenSolver<Matrix> null_eig(n_null,
                                                   Eigen::EigenvaluesOnly);
    if (null_eig.eigenvalues()(nullity - 1) > tol::rank_rel * num_scale) {
      return std::numeric_limits<double>::infinity();
    }
  }
  if (rank == 0) return 0.0;  // numerator vanishes wherever denominator does

  const Matrix z_r = z.rightCols(rank);
  const Vector lam_r = lam.tail(rank);
  const Matrix scaled =
      lam_r.cwiseSqrt().cwiseInverse().asDiagonal() *
      (z_r.transpose() * numer * z_r) *
      lam_r.cwiseSqrt().cwiseInverse().asDiagonal();
  Eigen::SelfAdjointEigenSolver<Matrix> pencil(scaled, Eigen::EigenvaluesOnly);
  return std::sqrt(std::max(pencil.eigenvalues()(rank - 1), 0.0));
}

double minimal_local_wce(const ObservationSetup& obs, const ModelSet& model,
                         const Vector& y) {
  const RecoveryCoefficients coeffs = optimal_recover(obs, model, y);
  const Vector f_hat = assemble(obs, model.basis, coeffs);
  const double delta = (f_hat - project(f_hat, model.basis)).norm();
  if (delta > model.epsilon + tol::solve) {
    throw ModelInconsistentData(
        "data are inconsistent with the model set: dist(f_hat, V) > epsilon");
  }
  const double gap_sq = model.epsilon * model.epsilon - delta * delta;
  if (gap_sq <= 0) return 0.0;  // unique model-consistent interpolant

  GeneralizedProblem identity_prob{identity_like(obs.ambient_dim()),
                                   identity_like(obs.ambient_dim()),
                                   model.basis};
  return compute_mu(obs, identity_prob) * std::sqrt(gap_sq);
}

}  // namespace optrec
