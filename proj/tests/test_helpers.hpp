#pragma once

#include <cstdint>
#include <utility>

#include "optrec/hilbert.hpp"
#include "optrec/recovery.hpp"
#include "optrec/rng.hpp"
#include "optrec/worst_case.hpp"

namespace optrec::testing {

inline Matrix random_matrix(Index rows, Index cols, SplitMix64& rng) {
  Matrix m(rows, cols);
  for (Index i = 0; i < rows; ++i) {
    for (Index j = 0; j < cols; ++j) m(i, j) = rng.normal();
  }
  return m;
}

inline Vector random_vector(Index size, SplitMix64& rng) {
  Vector v(size);
  for (Index i = 0; i < size; ++i) v(i) = rng.normal();
  return v;
}

struct TestInstance {
  ObservationSetup obs;
  Matrix basis;  // N x n
  Vector y;
  double epsilon = 1.0;

  ModelSet model() const { return ModelSet(basis, epsilon); }
};

/// Random well-posed instance with the data guaranteed feasible for the
/// worst-case program: epsilon = eps_factor * ||P_Vperp h||.
inline TestInstance make_instance(std::uint64_t seed, Index ambient, Index m,
                                  Index n, double eps_factor = 1.3) {
  for (std::uint64_t attempt = 0;; ++attempt) {
    SplitMix64 rng(seed * 1000003ull + attempt);
    Matrix reps = random_matrix(m, ambient, rng);
    Matrix basis = random_matrix(ambient, n, rng);
    Vector y = random_vector(m, rng);
    try {
      ObservationSetup obs(std::move(reps));
      if (!check_model_assumption(obs, ModelSet(basis, 1.0)).ok) continue;
      const Vector h = min_norm_interpolant(obs, y);
      const double w_norm = (h - project(h, basis)).norm();
      const double eps = w_norm > 0 ? w_norm * eps_factor : 1.0;
      return {std::move(obs), std::move(basis), std::move(y), eps};
    } catch (const Error&) {
      if (attempt > 20) throw;
    }
  }
}

}  // namespace optrec::testing
