#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "optrec/hilbert.hpp"
#include "optrec/rkhs.hpp"

namespace optrec {

/// A rectangular regression dataset: numeric feature columns plus one
/// target column.
struct Dataset {
  Matrix features;                        // rows x d
  Vector targets;                         // rows
  std::vector<std::string> column_names;  // feature names, original order
  std::string target_name;
  Index dropped_rows = 0;  // rows rejected for missing/non-finite values

  Index rows() const { return features.rows(); }
  Index dim() const { return features.cols(); }
};

/// Loads a comma-delimited file with a header row. The target column is
/// selected by name or by 0-based index given as digits; the remaining
/// numeric columns become features in their original order. Rows with
/// missing or non-numeric values in retained columns are dropped and
/// counted. Lines starting with '#' are metadata comments and skipped.
Dataset load_csv(const std::string& path, const std::string& target_column);
Dataset load_csv_stream(std::istream& in, const std::string& target_column,
                        const std::string& display_name);

struct SplitResult {
  Dataset train;
  Dataset test;
};

/// Deterministic non-IID split: stable-sort rows by `sort_feature`
/// (1-based) in descending order, then take the first
/// ceil(train_frac * rows) rows as training data.
SplitResult noniid_split(const Dataset& ds, int sort_feature,
                         double train_frac);

/// Column-wise z-score statistics computed on training data only.
struct Standardizer {
  Vector mean;
  Vector scale;  // stddev floored at a tiny value to avoid division by zero

  static Standardizer fit(const Matrix& features);
  Matrix apply(const Matrix& features) const;
};

struct ExperimentConfig {
  std::vector<double> sigma_grid;      // gridsearch candidates
  double sigma = 1.0;                  // chosen kernel width
  int taylor_degree = 1;
  std::vector<double> epsilon_grid;    // wce sweep; empty selects the
                                       // feasibility-scaled default grid
  int sort_feature = 5;                // 1-based
  double train_frac = 0.7;
  std::optional<Index> subsample;      // Monte Carlo subsample size
  int mc_runs = 40;
  std::uint64_t seed = 1;
  // Random-instance dimensions for the worst-case sweep: dim(V), dim(H), m.
  Index sweep_subspace_dim = 20;
  Index sweep_ambient_dim = 200;
  Index sweep_observations = 50;
};

struct GridSearchEntry {
  double sigma = 0;
  double validation_mse = 0;
};

struct GridSearchResult {
  double best_sigma = 0;
  std::vector<GridSearchEntry> table;  // one entry per distinct sigma
};

/// Grid search for the kernel width: refits optimal recovery (Taylor
/// degree from the config) on the leading 80% of the training rows and
/// scores mean squared error on the trailing 20%, preserving the non-IID
/// ordering. Ties prefer the smaller sigma. Throws DegenerateSplit when
/// the fitting part has fewer than dim(V) + 1 rows.
GridSearchResult sigma_grid_search(const Dataset& train,
                                   const ExperimentConfig& cfg);

struct WceSweepRow {
  double epsilon = 0;
  double wce_or = 0;
  double wce_erm1 = 0;
  double wce_erm2 = 0;
  double wce_erm2_constrained = 0;
};

struct WceSweepResult {
  std::vector<WceSweepRow> rows;
  double w_norm = 0;  // dist(h, V) of the generated instance's interpolant
};

/// Random-instance worst-case-error sweep: draws Gaussian representers and
/// a random subspace V, observes a model-consistent element, and evaluates
/// the exact local worst-case error of each competing map across the
/// epsilon grid. With an empty grid in the config, epsilons are placed at
/// 10 points spanning [1.05, 3] times the instance's minimum feasible
/// radius.
WceSweepResult wce_sweep(const ExperimentConfig& cfg);

struct TestErrorRow {
  Index dim_v = 0;
  double mse_or = 0;
  double se_or = 0;
  double mse_ridgeless = 0;
  double se_ridgeless = 0;
  double mse_taylor_erm2 = 0;
  double se_taylor_erm2 = 0;
};

struct TestErrorCurve {
  std::vector<TestErrorRow> rows;
  double sigma = 0;
  double train_mse_or_full = 0;  // training misfit of the full-dim OR fit
};

/// Test-error comparison of optimal recovery against ridgeless kernel
/// interpolation and Taylor-features least squares, sweeping dim(V) from 0
/// to d+1 (degree-1 features added in graded order). Features are z-scored
/// with training statistics. When cfg.subsample is set, each point is the
/// mean over cfg.mc_runs seeded subsamples of the training rows, with the
/// standard error reported alongside.
TestErrorCurve test_error_curve(const Dataset& train, const Dataset& test,
                                const ExperimentConfig& cfg);

// ---- CSV emission --------------------------------------------------------

/// Formats one double with 17 significant digits (round-trip exact).
std::string format_value(double v);

/// Writes a comma-delimited table: optional '#'-prefixed metadata lines,
/// then the header, then rows, LF line endings throughout.
void write_csv(std::ostream& out, const std::vector<std::string>& metadata,
               const std::vector<std::string>& header,
               const std::vector<std::vector<double>>& rows);

void write_csv_file(const std::string& path,
                    const std::vector<std::string>& metadata,
                    const std::vector<std::string>& header,
                    const std::vector<std::vector<double>>& rows);

/// Re-emits a dataset (features in original order, target last).
void write_dataset_csv(const std::string& path, const Dataset& ds);

}  // namespace optrec
