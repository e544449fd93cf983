#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace optrec {

/// Base class of every error thrown by the library.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct DimensionMismatch : Error { using Error::Error; };
struct RankDeficient : Error { using Error::Error; };
struct IllConditioned : Error { using Error::Error; };
struct ModelAssumptionViolated : Error { using Error::Error; };
struct InfeasibleData : Error { using Error::Error; };
struct ModelInconsistentData : Error { using Error::Error; };
struct NonPositiveGamma : Error { using Error::Error; };
struct NoConvergence : Error { using Error::Error; };
struct SearchDimensionTooLarge : Error { using Error::Error; };
struct IndexOutOfRange : Error { using Error::Error; };

struct ParseError : Error {
  ParseError(const std::string& msg, std::size_t row, std::size_t column)
      : Error(msg + " (row " + std::to_string(row) + ", column " +
              std::to_string(column) + ")"),
        row(row),
        column(column) {}
  std::size_t row;
  std::size_t column;
};
struct EmptyDataset : Error { using Error::Error; };
struct FeatureOutOfRange : Error { using Error::Error; };
struct DegenerateSplit : Error { using Error::Error; };

// Shared numerical tolerances for dense double-precision factorizations.
namespace tol {
inline constexpr double rank_rel = 1e-10;  // relative to the largest singular value
inline constexpr double ortho = 1e-10;     // absolute orthonormality residual
inline constexpr double solve = 1e-9;      // linear-system consistency checks
inline constexpr double cond_max = 1e12;   // refuse factorizations beyond this
inline constexpr double feasibility_rel = 1e-9;  // slack on quadratic feasibility
}  // namespace tol

}  // namespace optrec
