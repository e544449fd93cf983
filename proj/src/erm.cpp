#include "optrec/erm.hpp"

#include <Eigen/Dense>
#include <cmath>

#include "optrec/recovery.hpp"
#include "optrec/worst_case.hpp"

namespace optrec {

namespace {

void check_full_column_rank(const Matrix& c) {
  const Index n = c.cols();
  if (n == 0) return;
  Eigen::JacobiSVD<Matrix> svd(c);
  const auto& sv = svd.singularValues();
  if (sv(0) <= 0 || sv(n - 1) <= tol::rank_rel * sv(0)) {
    throw RankDeficient("cross-Gramian loses full column rank");
  }
}

}  // namespace

ErmSolution erm2_from_cross_gramian(const Matrix& cross_gramian,
                                    const Vector& y) {
  if (cross_gramian.rows() != y.size()) {
    throw DimensionMismatch("cross-Gramian and data sizes disagree");
  }
  check_full_column_rank(cross_gramian);
  ErmSolution out;
  if (cross_gramian.cols() == 0) {
    out.b = Vector(0);
    out.residual_norm = y.norm();
    return out;
  }
  // Normal equations via QR for stability.
  out.b = cross_gramian.householderQr().solve(y);
  out.residual_norm = (y - cross_gramian * out.b).norm();
  out.iterations = 0;
  return out;
}

ErmSolution erm2(const ObservationSetup& obs, const ModelSet& model,
                 const Vector& y) {
  return erm2_from_cross_gramian(obs.cross_gramian(model.basis), y);
}

ErmSolution erm1(const ObservationSetup& obs, const ModelSet& model,
                 const Vector& y) {
  const Matrix c = obs.cross_gramian(model.basis);
  if (c.rows() != y.size()) {
    throw DimensionMismatch("cross-Gramian and data sizes disagree");
  }
  check_full_column_rank(c);
  if (c.cols() == 0) return {Vector(0), y.lpNorm<1>(), 0};

  // Iteratively reweighted least squares on the smoothed objective
  // sum_i sqrt(r_i^2 + eta^2), annealing eta from 1e-2 down to 1e-10.
  constexpr int max_iter = 200;
  constexpr int anneal_iters = 120;
  const double eta_start = 1e-2;
  const double eta_end = 1e-10;
  const double anneal_factor =
      std::pow(eta_end / eta_start, 1.0 / (anneal_iters - 1));

  Vector b = erm2_from_cross_gramian(c, y).b;
  double eta = eta_start;
  double prev_obj = (y - c * b).lpNorm<1>();
  const double obj_tol = 1e-12 * (1.0 + y.lpNorm<1>());
  int it = 0;
  bool settled = false;
  for (; it < max_iter; ++it) {
    const Vector r = y - c * b;
    const Vector weights =
        (r.array().square() + eta * eta).rsqrt().matrix();
    const Matrix cw = weights.asDiagonal() * c;
    const Vector yw = weights.asDiagonal() * y;
    b = cw.householderQr().solve(yw);

    const double obj = (y - c * b).lpNorm<1>();
    const bool annealed = eta <= eta_end * (1.0 + 1e-12);
    if (annealed && std::abs(obj - prev_obj) <= obj_tol) {
      settled = true;
      ++it;
      break;
    }
    prev_obj = obj;
    eta = std::max(eta * anneal_factor, eta_end);
  }
  if (!settled) {
    throw NoConvergence("l1 risk minimization did not settle in 200 iterations");
  }
  return {b, (y - c * b).lpNorm<1>(), it};
}

ConstrainedErmSolution erm2_constrained(const ObservationSetup& obs,
                                        const ModelSet& model,
                                        const Vector& y) {
  if (y.size() != obs.num_observations()) {
    throw DimensionMismatch("data length does not match the observation count");
  }
  const double eps = model.epsilon;
  if (!(eps > 0)) throw DimensionMismatch("constraint radius must be positive");

  Matrix qv(obs.ambient_dim(), 0);
  if (model.dim() > 0) qv = orthonormal_columns(model.basis);
  const auto dist_to_v = [&](const Vector& f) {
    return (f - qv * (qv.transpose() * f)).norm();
  };

  // The zero-residual interpolant of minimum norm; if it already satisfies
  // the constraint, nothing binds.
  const Vector h = min_norm_interpolant(obs, y);
  if (dist_to_v(h) <= eps * (1.0 + 1e-10)) {
    return {h, false};
  }

  // Zero residual may still be achievable inside the constraint set: the
  // optimal recovery element attains the smallest possible dist(f, V) among
  // interpolants (it is the lambda -> 0 limit of the regularized path).
  const auto diag = check_model_assumption(obs, model);
  if (diag.ok) {
    const RecoveryCoefficients coeffs = optimal_recover(obs, model, y);
    const Vector f_hat = assemble(obs, model.basis, coeffs);
    const double delta = dist_to_v(f_hat);
    if (delta <= eps * (1.0 + 1e-10)) {
      return {f_hat, delta >= eps * (1.0 - 1e-8)};
    }
  }

  // Constraint binds: solve (U^T U + lambda (I - P_V)) f = U^T y and
  // bisect on the multiplier until ||f - P_V f|| = eps. The rank-revealing
  // solve returns the minimum-norm solution when the system is singular.
  const Matrix& u = obs.representers();
  const Matrix utu = u.transpose() * u;
  Matrix penalty = Matrix::Identity(obs.ambient_dim(), obs.ambient_dim());
  if (qv.cols() > 0) penalty -= qv * qv.transpose();
  const Vector uty = u.transpose() * y;

  const auto solve_at = [&](double lambda) -> Vector {
    const Matrix a = utu + lambda * penalty;
    Eigen::CompleteOrthogonalDecomposition<Matrix> cod(a);
    cod.setThreshold(tol::rank_rel);
    return cod.solve(uty);
  };

  double lo = 1e-12;
  double hi = 1.0;
  Vector f = solve_at(hi);
  int guard = 0;
  while (dist_to_v(f) > eps && guard++ < 200) {
    hi *= 4.0;
    f = solve_at(hi);
  }
  if (guard >= 200) {
    throw IllConditioned("constraint multiplier bracket expansion failed");
  }
  f = solve_at(lo);
  guard = 0;
  while (dist_to_v(f) < eps && guard++ < 200 && lo > 1e-300) {
    lo /= 4.0;
    f = solve_at(lo);
  }

  Vector best = f;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    best = solve_at(mid);
    const double d = dist_to_v(best);
    if (std::abs(d - eps) <= 1e-10 * (1.0 + eps)) break;
    if (d > eps) {
      lo = mid;
    } else {
      hi = mid;
    }
    if ((hi - lo) <= 1e-16 * hi) break;
  }
  return {best, true};
}

}  // namespace optrec
