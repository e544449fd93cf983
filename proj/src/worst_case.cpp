#include "optrec/worst_case.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

#include "optrec/recovery.hpp"

namespace optrec {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kPi = 3.14159265358979323846;

// Dual objective of the worst-case maximization after the Schur-complement
// reduction of the semidefinite constraint:
//   phi(d) = sum_j beta_j(d)^2 / (d lam_j - 1) + d (eps^2 - ||w||^2),
// with beta(d) = d p + q in the eigenbasis of M = K^T P_Vperp K. Convex on
// (1/lam_min, infinity).
struct DualObjective {
  Vector lam;  // eigenvalues of M, ascending, all in (0, 1]
  Vector p;    // eigenbasis coordinates of K^T w
  Vector q;    // eigenbasis coordinates of K^T g'
  double slack = 0;  // eps^2 - ||w||^2

  double value(double d) const {
    double s = d * slack;
    for (Index j = 0; j < lam.size(); ++j) {
      const double u = d * lam(j) - 1.0;
      const double beta = d * p(j) + q(j);
      if (u <= 0) return kInf;
      s += beta * beta / u;
    }
    return s;
  }

  double derivative(double d) const {
    double s = slack;
    for (Index j = 0; j < lam.size(); ++j) {
      const double u = d * lam(j) - 1.0;
      const double beta = d * p(j) + q(j);
      s += (2.0 * p(j) * beta * u - lam(j) * beta * beta) / (u * u);
    }
    return s;
  }

  double second_derivative(double d) const {
    double s = 0;
    for (Index j = 0; j < lam.size(); ++j) {
      const double u = d * lam(j) - 1.0;
      const double t = p(j) + lam(j) * q(j);
      s += 2.0 * t * t / (u * u * u);
    }
    return s;
  }

  // phi at the boundary d = 1/lam_min, using the pseudo-inverse rule: null
  // directions of (d M - I) are dropped when beta vanishes on them and make
  // the boundary infeasible (+inf) otherwise.
  double boundary_value(double d_min) const {
    const double lam_min = lam(0);
    double scale = 0;
    for (Index j = 0; j < lam.size(); ++j) {
      scale = std::max(scale, std::abs(d_min * p(j) + q(j)));
    }
    double s = d_min * slack;
    for (Index j = 0; j < lam.size(); ++j) {
      const double u = d_min * lam(j) - 1.0;
      const double beta = d_min * p(j) + q(j);
      if (lam(j) <= lam_min * (1.0 + 1e-10) || u <= 0) {
        if (std::abs(beta) > 1e-9 * (1.0 + scale)) return kInf;
        continue;  // in range of the pseudo-inverse's null space
      }
      s += beta * beta / u;
    }
    return s;
  }
};

struct DualSolution {
  double c_star = 0;
  double d_star = 0;
};

DualSolution minimize_dual(const DualObjective& phi, double d_min) {
  const double offset = 1e-12 * (1.0 + d_min);
  const double d_lo = d_min + offset;

  // Bracket the minimizer: expand geometrically until the objective rises.
  double step = std::max(1.0, d_min);
  double a = d_lo;
  double best_d = a;
  double best_f = phi.value(a);
  double b = a;
  double fb = best_f;
  for (int k = 0; k < 200; ++k) {
    const double cand = d_lo + step;
    const double fc = phi.value(cand);
    if (fc < best_f) {
      best_f = fc;
      best_d = cand;
    }
    if (fc >= fb && k > 0) {
      b = cand;
      break;
    }
    b = cand;
    fb = fc;
    step *= 2.0;
  }

  // Golden-section search; phi is convex, hence unimodal on [a, b].
  const double golden = 0.5 * (std::sqrt(5.0) - 1.0);
  double x1 = b - golden * (b - a);
  double x2 = a + golden * (b - a);
  double f1 = phi.value(x1);
  double f2 = phi.value(x2);
  while (b - a > std::max(1e-12, 8 * std::numeric_limits<double>::epsilon() *
                                      (std::abs(a) + std::abs(b)))) {
    if (f1 < best_f) {
      best_f = f1;
      best_d = x1;
    }
    if (f2 < best_f) {
      best_f = f2;
      best_d = x2;
    }
    if (f1 <= f2) {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - golden * (b - a);
      f1 = phi.value(x1);
    } else {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + golden * (b - a);
      f2 = phi.value(x2);
    }
  }
  double d = 0.5 * (a + b);
  double fd = phi.value(d);
  if (best_f < fd) {
    d = best_d;
    fd = best_f;
  }

  // Newton polish on the analytic derivative.
  for (int it = 0; it < 3; ++it) {
    const double curvature = phi.second_derivative(d);
    if (!(curvature > 0)) break;
    const double cand = d - phi.derivative(d) / curvature;
    if (!(cand > d_lo) || !std::isfinite(cand)) break;
    const double fc = phi.value(cand);
    if (fc <= fd) {
      d = cand;
      fd = fc;
    } else {
      break;
    }
  }

  // The boundary (trust-region hard case) may beat every interior point.
  const double f_boundary = phi.boundary_value(d_min);
  if (f_boundary <= fd) {
    return {f_boundary, d_min};
  }
  return {fd, d};
}

}  // namespace

Vector min_norm_interpolant(const ObservationSetup& obs, const Vector& y) {
  const RecoveryCoefficients coeffs = ridgeless_recover(obs, y);
  return assemble(obs, Matrix(obs.ambient_dim(), 0), coeffs);
}

WceCertificate local_wce(const ObservationSetup& obs, const ModelSet& model,
                         const Vector& y, const Vector& g) {
  if (g.size() != obs.ambient_dim()) {
    throw DimensionMismatch("recovery output dimension does not match setup");
  }
  if (!check_model_assumption(obs, model).ok) {
    throw ModelAssumptionViolated("V intersects ker(L) nontrivially");
  }

  const Vector h = min_norm_interpolant(obs, y);
  const Matrix& k = obs.kernel();
  const Index r = k.cols();
  const double eps = model.epsilon;

  Matrix qv(obs.ambient_dim(), 0);
  if (model.dim() > 0) qv = orthonormal_columns(model.basis);
  const Vector w = h - qv * (qv.transpose() * h);

  WceCertificate cert;
  cert.h_norm_sq = h.squaredNorm();
  cert.w_norm_sq = w.squaredNorm();
  if (w.norm() > eps * (1.0 + tol::feasibility_rel)) {
    throw InfeasibleData("no model-consistent element interpolates the data");
  }
  cert.feasible = true;

  const Vector g_ker = k * (k.transpose() * g);  // g'
  const Vector g_perp = g - g_ker;               // g''
  cert.delta_terms = (h - g_perp).squaredNorm() + g_ker.squaredNorm();

  if (r == 0) {
    // ker(L) trivial: the feasible set is the single point h.
    cert.c_star = 0;
    cert.d_star = 0;
    cert.value = (h - g).norm();
    return cert;
  }

  // M = K^T P_Vperp K = I - S S^T with S = K^T Q_V.
  Matrix m_mat = Matrix::Identity(r, r);
  if (qv.cols() > 0) {
    const Matrix s = k.transpose() * qv;
    m_mat -= s * s.transpose();
  }
  Eigen::SelfAdjointEigenSolver<Matrix> eig(m_mat);
  const Vector lam = eig.eigenvalues();
  if (lam(0) <= 0) {
    throw ModelAssumptionViolated(
        "K^T P_Vperp K is numerically singular: V meets ker(L)");
  }

  DualObjective phi;
  phi.lam = lam;
  phi.p = eig.eigenvectors().transpose() * (k.transpose() * w);
  phi.q = eig.eigenvectors().transpose() * (k.transpose() * g_ker);
  phi.slack = eps * eps - cert.w_norm_sq;

  const DualSolution sol = minimize_dual(phi, 1.0 / lam(0));
  cert.c_star = sol.c_star;
  cert.d_star = sol.d_star;
  cert.value = std::sqrt(std::max(cert.delta_terms + cert.c_star, 0.0));
  return cert;
}

double brute_force_wce(const ObservationSetup& obs, const ModelSet& model,
                       const Vector& y, const Vector& g, int grid_resolution) {
  const Matrix& k = obs.kernel();
  const Index r = k.cols();
  if (r > 3) {
    throw SearchDimensionTooLarge("sampling oracle limited to dim(ker L) <= 3");
  }
  if (!check_model_assumption(obs, model).ok) {
    throw ModelAssumptionViolated("V intersects ker(L) nontrivially");
  }
  if (grid_resolution < 1) grid_resolution = 1;

  const Vector h = min_norm_interpolant(obs, y);
  const double eps = model.epsilon;
  Matrix qv(obs.ambient_dim(), 0);
  if (model.dim() > 0) qv = orthonormal_columns(model.basis);
  const Vector w = h - qv * (qv.transpose() * h);
  if (w.norm() > eps * (1.0 + tol::feasibility_rel)) {
    throw InfeasibleData("no model-consistent element interpolates the data");
  }
  if (r == 0) return (h - g).norm();

  Matrix m_mat = Matrix::Identity(r, r);
  if (qv.cols() > 0) {
    const Matrix s = k.transpose() * qv;
    m_mat -= s * s.transpose();
  }
  Eigen::SelfAdjointEigenSolver<Matrix> eig(m_mat);
  if (eig.eigenvalues()(0) <= 0) {
    throw ModelAssumptionViolated(
        "feasible set unbounded: V meets ker(L) numerically");
  }

  // Ellipsoid { x : x^T M x + 2 x^T K^T w + ||w||^2 <= eps^2 } mapped to the
  // unit-norm ball of radius rho via x = x_center + M^{-1/2} z.
  const Vector kt_w = k.transpose() * w;
  const Vector x_center = -eig.eigenvectors() *
                          (eig.eigenvalues().cwiseInverse().asDiagonal() *
                           (eig.eigenvectors().transpose() * kt_w));
  const Matrix sqrt_inv =
      eig.eigenvectors() *
      eig.eigenvalues().cwiseSqrt().cwiseInverse().asDiagonal() *
      eig.eigenvectors().transpose();
  // rho^2 = (eps^2 - ||w||^2) + x_c^T M x_c, and M x_c = -K^T w.
  const double rho_sq = eps * eps - w.squaredNorm() - x_center.dot(kt_w);
  const double rho = std::sqrt(std::max(rho_sq, 0.0));

  const Vector base = (h - g) + k * x_center;
  const Matrix span = k * sqrt_inv;  // maps z to ambient displacement

  const auto objective = [&](const Vector& z) {
    return (base + span * z).squaredNorm();
  };

  double best = objective(Vector::Zero(r));
  std::array<Vector, 4> starts;
  std::array<double, 4> start_vals;
  starts.fill(Vector::Zero(r));
  start_vals.fill(-1.0);
  const auto consider = [&](const Vector& z) {
    const double f = objective(z);
    best = std::max(best, f);
    for (std::size_t i = 0; i < starts.size(); ++i) {
      if (f > start_vals[i]) {
        for (std::size_t j = starts.size() - 1; j > i; --j) {
          starts[j] = starts[j - 1];
          start_vals[j] = start_vals[j - 1];
        }
        starts[i] = z;
        start_vals[i] = f;
        break;
      }
    }
  };

  if (rho > 0) {
    if (r == 1) {
      consider(Vector::Constant(1, rho));
      consider(Vector::Constant(1, -rho));
    } else if (r == 2) {
      for (int i = 0; i < grid_resolution; ++i) {
        const double th = 2.0 * kPi * i / grid_resolution;
        Vector z(2);
        z << rho * std::cos(th), rho * std::sin(th);
        consider(z);
      }
    } else {
      for (int i = 0; i <= grid_resolution; ++i) {
        const double th = kPi * i / grid_resolution;
        for (int j = 0; j < grid_resolution; ++j) {
          const double ph = 2.0 * kPi * j / grid_resolution;
          Vector z(3);
          z << rho * std::sin(th) * std::cos(ph),
              rho * std::sin(th) * std::sin(ph), rho * std::cos(th);
          consider(z);
        }
      }
    }

    // Multistart projected gradient ascent on the sphere ||z|| = rho. The
    // iterates stay feasible, so the result remains a lower bound.
    for (std::size_t s = 0; s < starts.size() && r > 1; ++s) {
      if (start_vals[s] < 0) continue;
      Vector z = starts[s];
      if (z.norm() == 0) continue;
      z *= rho / z.norm();
      double fz = objective(z);
      double step = 0.5;
      for (int it = 0; it < 500; ++it) {
        const Vector grad = 2.0 * span.transpose() * (base + span * z);
        Vector tangent = grad - (grad.dot(z) / (rho * rho)) * z;
        const double tn = tangent.norm();
        if (tn <= 1e-16 * (1.0 + grad.norm())) break;
        Vector cand = z + (step * rho / tn) * tangent;
        cand *= rho / cand.norm();
        const double fc = objective(cand);
        if (fc > fz) {
          z = cand;
          fz = fc;
          step = std::min(step * 1.5, 2.0);
        } else {
          step *= 0.5;
          if (step < 1e-14) break;
        }
      }
      best = std::max(best, fz);
    }
  }

  return std::sqrt(best);
}

}  // namespace optrec
