#include <Eigen/Dense>
#include <cmath>

#include "doctest.h"
#include "optrec/erm.hpp"
#include "optrec/recovery.hpp"
#include "optrec/worst_case.hpp"
#include "test_helpers.hpp"

using namespace optrec;
using optrec::testing::make_instance;
using optrec::testing::random_matrix;
using optrec::testing::random_vector;

TEST_CASE("erm2: examples") {
  // Square invertible system interpolates exactly.
  Matrix c1(2, 2);
  c1 << 2, 1, 1, 3;
  Vector y1(2);
  y1 << 1, 4;
  const auto sol1 = erm2_from_cross_gramian(c1, y1);
  CHECK((c1 * sol1.b - y1).norm() < 1e-12);
  CHECK(sol1.residual_norm < 1e-12);
  CHECK(sol1.iterations == 0);

  // Column of ones, y = (0, 2): b = 1, residual sqrt(2).
  Matrix c2(2, 1);
  c2 << 1, 1;
  Vector y2(2);
  y2 << 0, 2;
  const auto sol2 = erm2_from_cross_gramian(c2, y2);
  CHECK(sol2.b(0) == doctest::Approx(1.0));
  CHECK(sol2.residual_norm == doctest::Approx(std::sqrt(2.0)));

  // In-range data leaves no residual.
  SplitMix64 rng(4);
  const Matrix c3 = random_matrix(5, 2, rng);
  const Vector y3 = c3 * random_vector(2, rng);
  CHECK(erm2_from_cross_gramian(c3, y3).residual_norm < 1e-10);

  Matrix dependent(3, 2);
  dependent << 1, 2, 2, 4, 3, 6;
  CHECK_THROWS_AS(erm2_from_cross_gramian(dependent, Vector::Zero(3)),
                  RankDeficient);
}

TEST_CASE("erm1: the column-of-ones fit is the median") {
  SplitMix64 rng(12);
  const Matrix reps = random_matrix(3, 5, rng);
  const ObservationSetup obs(reps);
  // Model basis chosen so the cross-Gramian is a column of ones.
  const Matrix c_target = Matrix::Ones(3, 1);
  const Matrix basis = reps.transpose() *
                       (reps * reps.transpose()).ldlt().solve(c_target);
  Vector y(3);
  y << 1, 2, 9;
  const auto sol = erm1(obs, ModelSet(basis, 1.0), y);

  // Oracle: dense one-dimensional grid on the l1 objective.
  double best_obj = std::numeric_limits<double>::infinity();
  for (double b = 0.0; b <= 10.0; b += 1e-4) {
    const double obj =
        std::abs(1 - b) + std::abs(2 - b) + std::abs(9 - b);
    best_obj = std::min(best_obj, obj);
  }
  const double obj_at_sol = (y - c_target * sol.b).lpNorm<1>();
  CHECK(obj_at_sol <= best_obj + 1e-7 * (1.0 + y.lpNorm<1>()));
  CHECK(sol.b(0) == doctest::Approx(2.0).epsilon(1e-5));
  CHECK(sol.iterations > 0);
}

TEST_CASE("erm1: exact fits") {
  SplitMix64 rng(14);
  const Matrix reps = random_matrix(4, 7, rng);
  const ObservationSetup obs(reps);
  const Matrix basis = random_matrix(7, 2, rng);
  const ModelSet model(basis, 1.0);

  // In-range data: the interpolant is recovered with near-zero objective.
  const Vector b_true = random_vector(2, rng);
  const Vector y = obs.cross_gramian(basis) * b_true;
  const auto sol = erm1(obs, model, y);
  CHECK(sol.residual_norm < 1e-7 * (1.0 + y.lpNorm<1>()));
  CHECK((sol.b - b_true).norm() < 1e-6 * (1.0 + b_true.norm()));

  // m = n = 1 with C = [[1]]: b equals the data value.
  Matrix reps1(1, 2);
  reps1 << 1, 0;
  const ObservationSetup obs1(reps1);
  Matrix basis1(2, 1);
  basis1 << 1, 0;
  Vector y1(1);
  y1 << -3.25;
  CHECK(erm1(obs1, ModelSet(basis1, 1.0), y1).b(0) ==
        doctest::Approx(-3.25).epsilon(1e-9));
}

TEST_CASE("erm loss orderings") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto inst = make_instance(seed + 70, 8, 5, 2);
    const ModelSet model = inst.model();
    const Matrix c = inst.obs.cross_gramian(inst.basis);
    const auto sol1 = erm1(inst.obs, model, inst.y);
    const auto sol2 = erm2(inst.obs, model, inst.y);
    const double slack = 1e-7 * (1.0 + inst.y.lpNorm<1>());
    CHECK((inst.y - c * sol1.b).lpNorm<1>() <=
          (inst.y - c * sol2.b).lpNorm<1>() + slack);
    CHECK((inst.y - c * sol2.b).norm() <=
          (inst.y - c * sol1.b).norm() + slack);
  }
}

TEST_CASE("erm2 is invariant under change of basis of V") {
  const auto inst = make_instance(81, 8, 4, 2);
  SplitMix64 rng(82);
  Matrix mix = random_matrix(2, 2, rng);
  mix(0, 0) += 3.0;  // keep it comfortably invertible
  const Matrix basis2 = inst.basis * mix;

  const Vector f1 = inst.basis * erm2(inst.obs, inst.model(), inst.y).b;
  const Vector f2 = basis2 * erm2(inst.obs, ModelSet(basis2, 1.0), inst.y).b;
  CHECK((f1 - f2).cwiseAbs().maxCoeff() < 1e-9 * (1.0 + f1.norm()));
}

TEST_CASE("erm2_constrained: inactive when the interpolant is feasible") {
  const auto inst = make_instance(91, 7, 3, 2, 1.5);
  const Vector h = min_norm_interpolant(inst.obs, inst.y);
  const auto sol = erm2_constrained(inst.obs, inst.model(), inst.y);
  CHECK_FALSE(sol.active);
  CHECK((sol.f_hat - h).norm() < 1e-12 * (1.0 + h.norm()));
  CHECK((inst.obs.observe(sol.f_hat) - inst.y).norm() <
        1e-9 * (1.0 + inst.y.norm()));

  // Essentially infinite radius behaves the same.
  const auto wide =
      erm2_constrained(inst.obs, ModelSet(inst.basis, 1e9), inst.y);
  CHECK_FALSE(wide.active);
  CHECK((wide.f_hat - h).norm() < 1e-12 * (1.0 + h.norm()));
}

TEST_CASE("erm2_constrained: hand instance with a binding constraint") {
  // L = [1, 0], y = 2, V = span{e2}, eps = 1: the distance to V is |f_1|,
  // so the best feasible point is f = (1, 0) with unit residual.
  Matrix reps(1, 2);
  reps << 1, 0;
  const ObservationSetup obs(reps);
  Matrix basis(2, 1);
  basis << 0, 1;
  Vector y(1);
  y << 2;
  const auto sol = erm2_constrained(obs, ModelSet(basis, 1.0), y);
  CHECK(sol.active);
  CHECK(sol.f_hat(0) == doctest::Approx(1.0).epsilon(1e-8));
  CHECK(std::abs(sol.f_hat(1)) < 1e-8);
  CHECK(std::abs((y - obs.observe(sol.f_hat)).norm() - 1.0) < 1e-8);
}

TEST_CASE("erm2_constrained: zero residual between delta and the interpolant") {
  // Choose eps between dist(f_hat, V) and dist(h, V): interpolation stays
  // possible but the minimum-norm interpolant is excluded.
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto inst = make_instance(seed + 500, 8, 4, 2);
    const Vector h = min_norm_interpolant(inst.obs, inst.y);
    const double w_norm = (h - project(h, inst.basis)).norm();
    const Vector f_hat = assemble(
        inst.obs, inst.basis, optimal_recover(inst.obs, inst.model(), inst.y));
    const double delta = (f_hat - project(f_hat, inst.basis)).norm();
    if (w_norm <= delta * 1.02) continue;  // no gap to probe on this draw
    const double eps = 0.5 * (delta + w_norm);
    const auto sol = erm2_constrained(inst.obs, ModelSet(inst.basis, eps), inst.y);
    CHECK((inst.obs.observe(sol.f_hat) - inst.y).norm() <
          1e-8 * (1.0 + inst.y.norm()));
    const double dist = (sol.f_hat - project(sol.f_hat, inst.basis)).norm();
    CHECK(dist <= eps * (1.0 + 1e-8));
  }
}

TEST_CASE("worst-case ordering of the constrained maps (recorded)") {
  const auto inst = make_instance(123, 9, 5, 3, 1.5);
  const ModelSet model = inst.model();
  const Vector f_opt = assemble(inst.obs, inst.basis,
                                optimal_recover(inst.obs, model, inst.y));
  const Vector f_e2 = inst.basis * erm2(inst.obs, model, inst.y).b;
  const Vector f_e1 = inst.basis * erm1(inst.obs, model, inst.y).b;
  const double wce_opt = local_wce(inst.obs, model, inst.y, f_opt).value;
  const double wce_e2 = local_wce(inst.obs, model, inst.y, f_e2).value;
  const double wce_e1 = local_wce(inst.obs, model, inst.y, f_e1).value;
  CHECK(wce_opt <= wce_e2 * (1.0 + 1e-9));
  // The ERM2 <= ERM1 relation is an observed trend, not a theorem; record it.
  MESSAGE("wce ordering: or=", wce_opt, " erm2=", wce_e2, " erm1=", wce_e1);
}
