#include <Eigen/Dense>
#include <cmath>
#include <cstring>

#include "doctest.h"
#include "optrec/recovery.hpp"
#include "optrec/worst_case.hpp"
#include "test_helpers.hpp"

using namespace optrec;
using optrec::testing::make_instance;
using optrec::testing::random_matrix;
using optrec::testing::random_vector;

TEST_CASE("optimal_recover: two-dimensional hand instance") {
  // u1 = e1, V = span{(1,1)/sqrt(2)}, y = (1):
  // b = sqrt(2), a = 0, f_hat = (1, 1).
  Matrix reps(1, 2);
  reps << 1, 0;
  Matrix basis(2, 1);
  basis << 1.0 / std::sqrt(2.0), 1.0 / std::sqrt(2.0);
  const ObservationSetup obs(reps);
  const ModelSet model(basis, 0.5);
  Vector y(1);
  y << 1;

  const auto coeffs = optimal_recover(obs, model, y);
  CHECK(coeffs.b(0) == doctest::Approx(std::sqrt(2.0)).epsilon(1e-12));
  CHECK(std::abs(coeffs.a(0)) < 1e-12);
  const Vector f = assemble(obs, model.basis, coeffs);
  CHECK(f(0) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(f(1) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("optimal_recover: empty V reduces to ridgeless") {
  const auto inst = make_instance(3, 7, 3, 0);
  const auto opt = optimal_recover(inst.obs, inst.model(), inst.y);
  const auto ridgeless = ridgeless_recover(inst.obs, inst.y);
  CHECK((opt.a - ridgeless.a).norm() == 0.0);
  CHECK(opt.b.size() == 0);
}

TEST_CASE("optimal_recover: square invertible cross-Gramian interpolates in V") {
  SplitMix64 rng(9);
  const Matrix reps = random_matrix(3, 5, rng);
  const Matrix basis = random_matrix(5, 3, rng);
  const ObservationSetup obs(reps);
  const ModelSet model(basis, 1.0);
  const Vector y = random_vector(3, rng);

  const auto coeffs = optimal_recover(obs, model, y);
  const Matrix c = obs.cross_gramian(basis);
  const Vector b_direct = c.fullPivLu().solve(y);
  CHECK((coeffs.b - b_direct).norm() < 1e-9 * (1.0 + b_direct.norm()));
  CHECK(coeffs.a.cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("ridgeless_recover: examples") {
  // Orthonormal representers: a = y.
  Matrix reps(2, 4);
  reps << 1, 0, 0, 0, 0, 1, 0, 0;
  const ObservationSetup obs(reps);
  Vector y(2);
  y << 3, -2;
  CHECK((ridgeless_recover(obs, y).a - y).norm() < 1e-14);
  CHECK(ridgeless_recover(obs, Vector::Zero(2)).a.norm() == 0.0);

  // Gram [[1,q],[q,1]] -> a = (1,-q)/(1-q^2).
  const double q = 0.3;
  Matrix g(2, 2);
  g << 1, q, q, 1;
  Vector y2(2);
  y2 << 1, 0;
  const Vector a = ridgeless_from_gramian(g, y2);
  CHECK(a(0) == doctest::Approx(1.0 / (1 - q * q)).epsilon(1e-14));
  CHECK(a(1) == doctest::Approx(-q / (1 - q * q)).epsilon(1e-14));
}

TEST_CASE("ridge_recover: examples and the ridgeless limit") {
  Matrix g1(1, 1);
  g1 << 1;
  Vector y1(1);
  y1 << 2;
  CHECK(ridge_from_gramian(g1, y1, 1.0)(0) == doctest::Approx(1.0));
  Matrix g2(1, 1);
  g2 << 2;
  Vector y2(1);
  y2 << 4;
  CHECK(ridge_from_gramian(g2, y2, 2.0)(0) == doctest::Approx(1.0));
  CHECK_THROWS_AS(ridge_from_gramian(g1, y1, 0.0), NonPositiveGamma);
  CHECK_THROWS_AS(ridge_from_gramian(g1, y1, -1.0), NonPositiveGamma);

  // Halving gamma halves the distance to the ridgeless coefficients.
  const auto inst = make_instance(8, 9, 4, 0);
  const Vector base = ridgeless_recover(inst.obs, inst.y).a;
  double prev = -1;
  double gamma = 1e-3;
  for (int step = 0; step < 6; ++step) {
    const double err =
        (ridge_recover(inst.obs, inst.y, gamma).a - base).norm();
    if (prev > 0) {
      const double ratio = err / prev;
      CHECK(ratio > 0.35);
      CHECK(ratio < 0.65);
    }
    prev = err;
    gamma *= 0.5;
  }
}

TEST_CASE("generalized_recover: identity transform matches optimal_recover") {
  const auto inst = make_instance(12, 6, 3, 2);
  GeneralizedProblem prob{Matrix::Identity(6, 6), Matrix::Identity(6, 6),
                          inst.basis};
  const auto gen = generalized_recover(inst.obs, prob, inst.y);
  const auto direct =
      assemble(inst.obs, inst.basis, optimal_recover(inst.obs, inst.model(), inst.y));
  CHECK((gen.f_hat - direct).norm() < 1e-10 * (1.0 + direct.norm()));
  CHECK((gen.q_value - gen.f_hat).norm() == 0.0);
}

TEST_CASE("generalized_recover: rank-deficient transform ties break to min norm") {
  Matrix reps(1, 2);
  reps << 1, 0;
  const ObservationSetup obs(reps);
  Matrix t = Matrix::Zero(2, 2);
  t(0, 0) = 1;
  const double c = 2.5;
  Vector y(1);
  y << c;

  GeneralizedProblem prob{t, Matrix::Identity(2, 2), Matrix(2, 0)};
  const auto gen = generalized_recover(obs, prob, y);
  CHECK(gen.f_hat(0) == doctest::Approx(c));
  CHECK(std::abs(gen.f_hat(1)) < 1e-12);

  Matrix q_row(1, 2);
  q_row << 0, 1;
  GeneralizedProblem prob2{t, q_row, Matrix(2, 0)};
  CHECK(std::abs(generalized_recover(obs, prob2, y).q_value(0)) < 1e-12);
}

TEST_CASE("compute_mu: examples") {
  SplitMix64 rng(21);
  const Matrix reps = random_matrix(2, 5, rng);
  const ObservationSetup obs(reps);
  const Index ambient = 5;
  GeneralizedProblem identity{Matrix::Identity(ambient, ambient),
                              Matrix::Identity(ambient, ambient),
                              Matrix(ambient, 0)};
  CHECK(compute_mu(obs, identity) == doctest::Approx(1.0).epsilon(1e-10));

  // V orthogonal to ker(L): spanned by representers.
  GeneralizedProblem with_v = identity;
  with_v.basis_v = reps.transpose();
  CHECK(compute_mu(obs, with_v) == doctest::Approx(1.0).epsilon(1e-8));

  // ker(L) = span{(1,1)/sqrt2}, V = span{e1}: mu = sqrt(2).
  Matrix reps2(1, 2);
  reps2 << 1, -1;  // kernel is span{(1,1)}
  const ObservationSetup obs2(reps2);
  Matrix e1 = Matrix::Zero(2, 1);
  e1(0, 0) = 1;
  GeneralizedProblem prob2{Matrix::Identity(2, 2), Matrix::Identity(2, 2), e1};
  CHECK(compute_mu(obs2, prob2) == doctest::Approx(std::sqrt(2.0)).epsilon(1e-12));

  // Trivial kernel: mu = 0 by the empty-supremum convention.
  const ObservationSetup full(Matrix::Identity(3, 3));
  GeneralizedProblem prob3{Matrix::Identity(3, 3), Matrix::Identity(3, 3),
                           Matrix(3, 0)};
  CHECK(compute_mu(full, prob3) == 0.0);

  // Singular denominator with a surviving numerator: mu = +infinity.
  Matrix reps3(1, 3);
  reps3 << 1, 0, 0;
  const ObservationSetup obs3(reps3);
  Matrix t3 = Matrix::Zero(3, 3);  // T annihilates everything
  GeneralizedProblem prob4{t3, Matrix::Identity(3, 3), Matrix(3, 0)};
  CHECK(std::isinf(compute_mu(obs3, prob4)));
}

TEST_CASE("minimal_local_wce: examples") {
  SplitMix64 rng(33);
  const Matrix reps = random_matrix(3, 6, rng);
  const Matrix basis = random_matrix(6, 2, rng);
  const ObservationSetup obs(reps);

  // Data observed from an element of V: delta = 0, result = mu * eps.
  const Vector v = basis * random_vector(2, rng);
  const Vector y = obs.observe(v);
  const double eps = 0.7;
  GeneralizedProblem identity{Matrix::Identity(6, 6), Matrix::Identity(6, 6),
                              basis};
  const double mu = compute_mu(obs, identity);
  CHECK(minimal_local_wce(obs, ModelSet(basis, eps), y) ==
        doctest::Approx(mu * eps).epsilon(1e-10));

  // eps = delta exactly: unique model-consistent interpolant, zero error.
  const auto inst = make_instance(44, 6, 3, 2, 1.0);
  const auto coeffs = optimal_recover(inst.obs, inst.model(), inst.y);
  const Vector f_hat = assemble(inst.obs, inst.basis, coeffs);
  const double delta = (f_hat - project(f_hat, inst.basis)).norm();
  CHECK(minimal_local_wce(inst.obs, ModelSet(inst.basis, delta), inst.y) ==
        0.0);

  // Model-inconsistent data rejected.
  CHECK_THROWS_AS(
      minimal_local_wce(inst.obs, ModelSet(inst.basis, delta * 0.5), inst.y),
      ModelInconsistentData);
}

TEST_CASE("recovery certificates on random instances") {
  for (std::uint64_t seed = 0; seed < 40; ++seed) {
    const auto inst = make_instance(seed + 100, 9, 4, 2);
    const ModelSet model = inst.model();
    const auto coeffs = optimal_recover(inst.obs, model, inst.y);
    const Vector f_hat = assemble(inst.obs, inst.basis, coeffs);

    // Data consistency G a + C b = y, i.e. L(f_hat) = y.
    CHECK((inst.obs.observe(f_hat) - inst.y).norm() <
          1e-9 * (1.0 + inst.y.norm()));

    // Orthogonality certificate C^T a = 0.
    const Matrix c = inst.obs.cross_gramian(inst.basis);
    CHECK((c.transpose() * coeffs.a).cwiseAbs().maxCoeff() <
          1e-9 * (1.0 + coeffs.a.norm() * c.norm()));

    // f_hat - P_V f_hat is orthogonal to ker(L).
    const Vector residual = f_hat - project(f_hat, inst.basis);
    CHECK((inst.obs.kernel().transpose() * residual).cwiseAbs().maxCoeff() <
          1e-9 * (1.0 + residual.norm()));
  }
}

TEST_CASE("optimal_recover is linear and epsilon-invariant") {
  const auto inst = make_instance(7, 8, 4, 2);
  SplitMix64 rng(71);
  const Vector y1 = random_vector(4, rng);
  const Vector y2 = random_vector(4, rng);
  const double alpha = 1.7, beta = -0.4;

  const ModelSet model = inst.model();
  const auto r1 = optimal_recover(inst.obs, model, y1);
  const auto r2 = optimal_recover(inst.obs, model, y2);
  const auto mix = optimal_recover(inst.obs, model, alpha * y1 + beta * y2);
  CHECK((mix.a - alpha * r1.a - beta * r2.a).cwiseAbs().maxCoeff() < 1e-9);
  CHECK((mix.b - alpha * r1.b - beta * r2.b).cwiseAbs().maxCoeff() < 1e-9);

  // Bit-identical output for different epsilon.
  const auto small = optimal_recover(inst.obs, ModelSet(inst.basis, 1e-6), y1);
  const auto large = optimal_recover(inst.obs, ModelSet(inst.basis, 1e6), y1);
  REQUIRE(small.a.size() == large.a.size());
  CHECK(std::memcmp(small.a.data(), large.a.data(),
                    sizeof(double) * static_cast<std::size_t>(small.a.size())) == 0);
  CHECK(std::memcmp(small.b.data(), large.b.data(),
                    sizeof(double) * static_cast<std::size_t>(small.b.size())) == 0);
}

TEST_CASE("representer-spanned V reduces to ridgeless") {
  SplitMix64 rng(55);
  for (int trial = 0; trial < 20; ++trial) {
    const Index m = 5;
    const Matrix reps = random_matrix(m, 11, rng);
    const ObservationSetup obs(reps);
    const Vector y = random_vector(m, rng);
    const Vector ridgeless =
        assemble(obs, Matrix(11, 0), ridgeless_recover(obs, y));

    // Random subset I of the representers, including the empty set.
    const std::uint64_t mask = rng.below(1ull << m);
    Index count = 0;
    for (Index i = 0; i < m; ++i) count += (mask >> i) & 1 ? 1 : 0;
    Matrix basis(11, count);
    Index at = 0;
    for (Index i = 0; i < m; ++i) {
      if ((mask >> i) & 1) basis.col(at++) = reps.row(i).transpose();
    }
    const ModelSet model(basis, 1.0);
    const Vector f =
        assemble(obs, basis, optimal_recover(obs, model, y));
    CHECK((f - ridgeless).cwiseAbs().maxCoeff() <
          1e-8 * (1.0 + ridgeless.cwiseAbs().maxCoeff()));
  }
}

TEST_CASE("ill-conditioned Gramian refused") {
  Matrix reps(2, 3);
  reps << 1, 0, 0, 1, 1e-7, 0;  // nearly parallel rows: cond(G) ~ 4e14
  const ObservationSetup obs(reps);
  Vector y(2);
  y << 1, 1;
  CHECK_THROWS_AS(ridgeless_recover(obs, y), IllConditioned);
}

TEST_CASE("model assumption violations rejected") {
  SplitMix64 rng(61);
  const Matrix reps = random_matrix(2, 5, rng);
  const ObservationSetup obs(reps);
  const ModelSet bad(obs.kernel().col(0), 1.0);
  Vector y(2);
  y << 1, 2;
  CHECK_THROWS_AS(optimal_recover(obs, bad, y), ModelAssumptionViolated);
}
