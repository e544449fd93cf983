#include "optrec/experiments.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>

#include "optrec/erm.hpp"
#include "optrec/recovery.hpp"
#include "optrec/rng.hpp"
#include "optrec/worst_case.hpp"

namespace optrec {

namespace {

constexpr double kNan = std::numeric_limits<double>::quiet_NaN();

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r");
  return s.substr(begin, end - begin + 1);
}

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      fields.push_back(trim(cur));
      cur.clear();
    } else {
      cur.push_back(ch);
    }
  }
  fields.push_back(trim(cur));
  return fields;
}

bool is_missing_marker(const std::string& s) {
  return s.empty() || s == "NA" || s == "na" || s == "N/A" || s == "n/a" ||
         s == "?" || s == "NaN" || s == "nan" || s == "NAN";
}

// Parses a full numeric field; returns NaN for missing markers, nullopt for
// text that is not a number at all.
std::optional<double> parse_field(const std::string& s) {
  if (is_missing_marker(s)) return kNan;
  const char* begin = s.c_str();
  char* end = nullptr;
  const double v = std::strtod(begin, &end);
  if (end != begin + s.size()) return std::nullopt;
  if (!std::isfinite(v)) return kNan;
  return v;
}

std::vector<Index> sample_without_replacement(Index population, Index count,
                                              SplitMix64& rng) {
  std::vector<Index> idx(static_cast<std::size_t>(population));
  std::iota(idx.begin(), idx.end(), Index{0});
  for (Index i = 0; i < count; ++i) {
    const Index j =
        i + static_cast<Index>(rng.below(static_cast<std::uint64_t>(population - i)));
    std::swap(idx[static_cast<std::size_t>(i)], idx[static_cast<std::size_t>(j)]);
  }
  idx.resize(static_cast<std::size_t>(count));
  std::sort(idx.begin(), idx.end());
  return idx;
}

Dataset take_rows(const Dataset& ds, const std::vector<Index>& rows) {
  Dataset out;
  out.column_names = ds.column_names;
  out.target_name = ds.target_name;
  out.features.resize(static_cast<Index>(rows.size()), ds.dim());
  out.targets.resize(static_cast<Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    out.features.row(static_cast<Index>(i)) = ds.features.row(rows[i]);
    out.targets(static_cast<Index>(i)) = ds.targets(rows[i]);
  }
  return out;
}

std::vector<double> linspace(double lo, double hi, int count) {
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) {
    out.push_back(count == 1 ? lo : lo + (hi - lo) * i / (count - 1));
  }
  return out;
}

double mse(const Vector& predictions, const Vector& truth) {
  return (predictions - truth).squaredNorm() /
         static_cast<double>(truth.size());
}

}  // namespace

Dataset load_csv(const std::string& path, const std::string& target_column) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open '" + path + "'", 0, 0);
  return load_csv_stream(in, target_column, path);
}

Dataset load_csv_stream(std::istream& in, const std::string& target_column,
                        const std::string& display_name) {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> cells;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line[0] == '#') continue;  // metadata comment
    auto fields = split_fields(line);
    if (header.empty()) {
      header = std::move(fields);
      continue;
    }
    if (fields.size() != header.size()) {
      throw ParseError("field count differs from header in '" + display_name + "'",
                       line_no, fields.size());
    }
    cells.push_back(std::move(fields));
  }
  if (header.empty()) throw EmptyDataset("no header row in '" + display_name + "'");
  if (cells.empty()) throw EmptyDataset("no data rows in '" + display_name + "'");

  // Resolve the target: a pure-digit selector is a 0-based column index.
  std::size_t target_idx = header.size();
  const bool numeric_selector =
      !target_column.empty() &&
      std::all_of(target_column.begin(), target_column.end(),
                  [](unsigned char c) { return std::isdigit(c); });
  if (numeric_selector) {
    const std::size_t idx = std::stoul(target_column);
    if (idx >= header.size()) {
      throw ParseError("target index " + target_column + " out of range", 0, idx);
    }
    target_idx = idx;
  } else {
    for (std::size_t j = 0; j < header.size(); ++j) {
      if (header[j] == target_column) target_idx = j;
    }
    if (target_idx == header.size()) {
      throw ParseError("target column '" + target_column + "' not found", 0, 0);
    }
  }

  // A column is numeric when every entry parses as a number or a missing
  // marker; other columns are excluded from the feature matrix.
  const std::size_t ncols = header.size();
  std::vector<bool> numeric(ncols, true);
  for (const auto& row : cells) {
    for (std::size_t j = 0; j < ncols; ++j) {
      if (numeric[j] && !parse_field(row[j]).has_value()) numeric[j] = false;
    }
  }
  if (!numeric[target_idx]) {
    throw ParseError("target column '" + header[target_idx] + "' is not numeric",
                     0, target_idx);
  }
  std::vector<std::size_t> feature_cols;
  for (std::size_t j = 0; j < ncols; ++j) {
    if (j != target_idx && numeric[j]) feature_cols.push_back(j);
  }
  if (feature_cols.empty()) {
    throw EmptyDataset("no numeric feature columns in '" + display_name + "'");
  }

  Dataset ds;
  ds.target_name = header[target_idx];
  for (std::size_t j : feature_cols) ds.column_names.push_back(header[j]);

  std::vector<std::vector<double>> kept;
  for (const auto& row : cells) {
    std::vector<double> values;
    values.reserve(feature_cols.size() + 1);
    bool ok = true;
    for (std::size_t j : feature_cols) {
      const double v = *parse_field(row[j]);
      if (std::isnan(v)) ok = false;
      values.push_back(v);
    }
    const double t = *parse_field(row[target_idx]);
    if (std::isnan(t)) ok = false;
    values.push_back(t);
    if (ok) {
      kept.push_back(std::move(values));
    } else {
      ++ds.dropped_rows;
    }
  }
  if (kept.empty()) {
    throw EmptyDataset("every row of '" + display_name +
                       "' has missing values");
  }

  ds.features.resize(static_cast<Index>(kept.size()),
                     static_cast<Index>(feature_cols.size()));
  ds.targets.resize(static_cast<Index>(kept.size()));
  for (std::size_t i = 0; i < kept.size(); ++i) {
    for (std::size_t j = 0; j < feature_cols.size(); ++j) {
      ds.features(static_cast<Index>(i), static_cast<Index>(j)) = kept[i][j];
    }
    ds.targets(static_cast<Index>(i)) = kept[i].back();
  }
  return ds;
}

SplitResult noniid_split(const Dataset& ds, int sort_feature,
                         double train_frac) {
  if (sort_feature < 1 || sort_feature > ds.dim()) {
    throw FeatureOutOfRange("sort feature index " +
                            std::to_string(sort_feature) + " out of range");
  }
  if (!(train_frac > 0.0) || !(train_frac < 1.0)) {
    throw DegenerateSplit("train fraction must lie strictly between 0 and 1");
  }
  const Index col = sort_feature - 1;
  std::vector<Index> order(static_cast<std::size_t>(ds.rows()));
  std::iota(order.begin(), order.end(), Index{0});
  std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) {
    return ds.features(a, col) > ds.features(b, col);
  });

  const Index train_rows = static_cast<Index>(
      std::ceil(train_frac * static_cast<double>(ds.rows())));
  if (train_rows < 1 || train_rows >= ds.rows()) {
    throw DegenerateSplit("split leaves an empty train or test part");
  }
  const std::vector<Index> train_idx(order.begin(), order.begin() + train_rows);
  const std::vector<Index> test_idx(order.begin() + train_rows, order.end());
  return {take_rows(ds, train_idx), take_rows(ds, test_idx)};
}

Standardizer Standardizer::fit(const Matrix& features) {
  Standardizer s;
  const double rows = static_cast<double>(features.rows());
  s.mean = features.colwise().mean();
  s.scale.resize(features.cols());
  for (Index j = 0; j < features.cols(); ++j) {
    const double var =
        (features.col(j).array() - s.mean(j)).square().sum() / rows;
    const double sd = std::sqrt(var);
    s.scale(j) = sd > 1e-12 * (1.0 + std::abs(s.mean(j))) ? sd : 1.0;
  }
  return s;
}

Matrix Standardizer::apply(const Matrix& features) const {
  if (features.cols() != mean.size()) {
    throw DimensionMismatch("standardizer fitted on a different width");
  }
  Matrix out = features.rowwise() - mean.transpose();
  out.array().rowwise() /= scale.transpose().array();
  return out;
}

GridSearchResult sigma_grid_search(const Dataset& train,
                                   const ExperimentConfig& cfg) {
  if (cfg.sigma_grid.empty()) {
    throw DimensionMismatch("sigma grid must be non-empty");
  }
  std::vector<double> grid = cfg.sigma_grid;
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());

  const Index rows = train.rows();
  const Index fit_rows = static_cast<Index>(
      std::ceil(0.8 * static_cast<double>(rows)));
  const Index val_rows = rows - fit_rows;
  const Index n_basis = TaylorBasisSpec::make(train.dim(), cfg.taylor_degree, 1.0).size();
  if (val_rows < 1 || fit_rows < n_basis + 1) {
    throw DegenerateSplit("training part too small for a validation split");
  }

  std::vector<Index> head(static_cast<std::size_t>(fit_rows));
  std::iota(head.begin(), head.end(), Index{0});
  std::vector<Index> tail(static_cast<std::size_t>(val_rows));
  std::iota(tail.begin(), tail.end(), fit_rows);
  const Dataset fit_part = take_rows(train, head);
  const Dataset val_part = take_rows(train, tail);

  const Standardizer std_fit = Standardizer::fit(fit_part.features);
  const Matrix x_fit = std_fit.apply(fit_part.features);
  const Matrix x_val = std_fit.apply(val_part.features);

  GridSearchResult out;
  double best = std::numeric_limits<double>::infinity();
  for (double sigma : grid) {
    double score = std::numeric_limits<double>::infinity();
    try {
      const KernelSpec kernel(sigma, train.dim());
      const auto basis =
          TaylorBasisSpec::make(train.dim(), cfg.taylor_degree, sigma);
      const RecoveredFunction f =
          fit_optimal(x_fit, fit_part.targets, kernel, basis);
      score = mse(f.evaluate_rows(x_val), val_part.targets);
    } catch (const IllConditioned&) {
      // An unusable width scores +inf rather than aborting the search.
    } catch (const ModelAssumptionViolated&) {
      score = std::numeric_limits<double>::infinity();
    }
    out.table.push_back({sigma, score});
    if (score < best) {
      best = score;
      out.best_sigma = sigma;
    }
  }
  if (!std::isfinite(best)) {
    throw IllConditioned("every sigma in the grid failed to fit");
  }
  return out;
}

WceSweepResult wce_sweep(const ExperimentConfig& cfg) {
  const Index n = cfg.sweep_subspace_dim;
  const Index ambient = cfg.sweep_ambient_dim;
  const Index m = cfg.sweep_observations;
  if (n < 0 || m < 1 || ambient < m || n > m) {
    throw DimensionMismatch("sweep dimensions must satisfy n <= m <= N");
  }

  SplitMix64 rng(cfg.seed);
  Matrix representers(m, ambient);
  for (Index i = 0; i < m; ++i) {
    for (Index j = 0; j < ambient; ++j) representers(i, j) = rng.normal();
  }
  Matrix raw_basis(ambient, n);
  for (Index i = 0; i < ambient; ++i) {
    for (Index j = 0; j < n; ++j) raw_basis(i, j) = rng.normal();
  }
  Matrix basis(ambient, n);
  if (n > 0) {
    basis = Eigen::HouseholderQR<Matrix>(raw_basis).householderQ() *
            Matrix::Identity(ambient, n);
  }

  // Observe a model-consistent element: a subspace component plus a unit
  // perturbation orthogonal to V, scaled to keep every epsilon in the grid
  // feasible for the worst-case program.
  Vector in_v = Vector::Zero(ambient);
  for (Index j = 0; j < n; ++j) in_v += rng.normal() * basis.col(j);
  Vector perturb(ambient);
  for (Index i = 0; i < ambient; ++i) perturb(i) = rng.normal();
  if (n > 0) perturb -= basis * (basis.transpose() * perturb);
  perturb.normalize();

  const double eps_ref =
      cfg.epsilon_grid.empty()
          ? 1.0
          : *std::min_element(cfg.epsilon_grid.begin(), cfg.epsilon_grid.end());
  const Vector f0 = in_v + eps_ref * perturb;

  const ObservationSetup obs(representers);
  Vector y = obs.observe(f0);

  const auto interpolant_residual = [&](const Vector& data) {
    const Vector h = min_norm_interpolant(obs, data);
    return n > 0 ? (h - basis * (basis.transpose() * h)).norm() : h.norm();
  };
  double w_norm = interpolant_residual(y);
  if (!cfg.epsilon_grid.empty() && w_norm > 0.95 * eps_ref && w_norm > 0) {
    y *= 0.95 * eps_ref / w_norm;  // homogeneous rescale; keeps y = L(0.95.../w_norm f0)
    w_norm = interpolant_residual(y);
  }

  std::vector<double> grid = cfg.epsilon_grid;
  if (grid.empty()) {
    grid = w_norm > 0 ? linspace(1.05 * w_norm, 3.0 * w_norm, 10)
                      : linspace(0.1, 1.0, 10);
  }
  for (double eps : grid) {
    if (!(eps > 0)) throw DimensionMismatch("epsilon grid must be positive");
  }

  // The unconstrained competitors do not depend on epsilon.
  const ModelSet model_ref(basis, grid.front());
  const Vector g_or = assemble(obs, basis, optimal_recover(obs, model_ref, y));
  Vector g_erm1 = Vector::Zero(ambient);
  Vector g_erm2 = Vector::Zero(ambient);
  if (n > 0) {
    g_erm2 = basis * erm2(obs, model_ref, y).b;
    g_erm1 = basis * erm1(obs, model_ref, y).b;
  }

  WceSweepResult out;
  out.w_norm = w_norm;
  for (double eps : grid) {
    const ModelSet model(basis, eps);
    WceSweepRow row;
    row.epsilon = eps;
    row.wce_or = local_wce(obs, model, y, g_or).value;
    row.wce_erm1 = local_wce(obs, model, y, g_erm1).value;
    row.wce_erm2 = local_wce(obs, model, y, g_erm2).value;
    row.wce_erm2_constrained =
        local_wce(obs, model, y, erm2_constrained(obs, model, y).f_hat).value;
    out.rows.push_back(row);
  }
  return out;
}

TestErrorCurve test_error_curve(const Dataset& train, const Dataset& test,
                                const ExperimentConfig& cfg) {
  if (cfg.taylor_degree != 1) {
    throw DimensionMismatch("the test-error sweep is defined for degree 1");
  }
  if (train.dim() != test.dim()) {
    throw DimensionMismatch("train and test have different widths");
  }
  const Index d = train.dim();
  const Index n_full = d + 1;

  const Standardizer stats = Standardizer::fit(train.features);
  const Matrix x_train = stats.apply(train.features);
  const Matrix x_test = stats.apply(test.features);
  const KernelSpec kernel(cfg.sigma, d);
  const TaylorBasisSpec full_basis = TaylorBasisSpec::make(d, 1, cfg.sigma);

  // One pass over dim(V) for a given subset of training rows. Entry layout:
  // [or_0 .. or_{d+1}, ridgeless, taylor_0 .. taylor_{d+1}].
  const auto run_once = [&](const Matrix& x, const Vector& y) {
    std::vector<double> result;
    const RecoveredFunction ridgeless = fit_ridgeless(x, y, kernel);
    const double mse_ridgeless = mse(ridgeless.evaluate_rows(x_test), test.targets);
    for (Index dim_v = 0; dim_v <= n_full; ++dim_v) {
      if (dim_v == 0) {
        result.push_back(mse_ridgeless);  // identical map, identical number
        continue;
      }
      TaylorBasisSpec sub = full_basis;
      sub.multi_indices = full_basis.multi_indices.topRows(dim_v);
      const RecoveredFunction f = fit_optimal(x, y, kernel, sub);
      result.push_back(mse(f.evaluate_rows(x_test), test.targets));
    }
    result.push_back(mse_ridgeless);
    for (Index dim_v = 0; dim_v <= n_full; ++dim_v) {
      TaylorBasisSpec sub = full_basis;
      sub.multi_indices = full_basis.multi_indices.topRows(dim_v);
      const RecoveredFunction f = fit_taylor_erm2(x, y, kernel, sub);
      result.push_back(mse(f.evaluate_rows(x_test), test.targets));
    }
    return result;
  };

  std::vector<std::vector<double>> samples;
  if (cfg.subsample.has_value() && *cfg.subsample < train.rows()) {
    if (cfg.mc_runs < 1) throw DimensionMismatch("mc_runs must be positive");
    for (int run = 0; run < cfg.mc_runs; ++run) {
      SplitMix64 stream = SplitMix64::substream(cfg.seed, static_cast<std::uint64_t>(run));
      const auto idx =
          sample_without_replacement(train.rows(), *cfg.subsample, stream);
      Matrix x(static_cast<Index>(idx.size()), d);
      Vector y(static_cast<Index>(idx.size()));
      for (std::size_t i = 0; i < idx.size(); ++i) {
        x.row(static_cast<Index>(i)) = x_train.row(idx[i]);
        y(static_cast<Index>(i)) = train.targets(idx[i]);
      }
      samples.push_back(run_once(x, y));
    }
  } else {
    samples.push_back(run_once(x_train, train.targets));
  }

  const auto mean_se = [&](Index column) {
    double mean = 0;
    for (const auto& s : samples) mean += s[static_cast<std::size_t>(column)];
    mean /= static_cast<double>(samples.size());
    double se = 0;
    if (samples.size() > 1) {
      double var = 0;
      for (const auto& s : samples) {
        const double dlt = s[static_cast<std::size_t>(column)] - mean;
        var += dlt * dlt;
      }
      var /= static_cast<double>(samples.size() - 1);
      se = std::sqrt(var / static_cast<double>(samples.size()));
    }
    return std::pair<double, double>(mean, se);
  };

  TestErrorCurve curve;
  curve.sigma = cfg.sigma;
  for (Index dim_v = 0; dim_v <= n_full; ++dim_v) {
    TestErrorRow row;
    row.dim_v = dim_v;
    std::tie(row.mse_or, row.se_or) = mean_se(dim_v);
    std::tie(row.mse_ridgeless, row.se_ridgeless) = mean_se(n_full + 1);
    std::tie(row.mse_taylor_erm2, row.se_taylor_erm2) =
        mean_se(n_full + 2 + dim_v);
    curve.rows.push_back(row);
  }

  // Training misfit of the full-dimensional optimal recovery fit.
  const RecoveredFunction f_full =
      fit_optimal(x_train, train.targets, kernel, full_basis);
  curve.train_mse_or_full = mse(f_full.evaluate_rows(x_train), train.targets);
  return curve;
}

std::string format_value(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_csv(std::ostream& out, const std::vector<std::string>& metadata,
               const std::vector<std::string>& header,
               const std::vector<std::vector<double>>& rows) {
  for (const auto& line : metadata) out << "# " << line << "\n";
  for (std::size_t j = 0; j < header.size(); ++j) {
    out << header[j] << (j + 1 < header.size() ? "," : "");
  }
  out << "\n";
  for (const auto& row : rows) {
    for (std::size_t j = 0; j < row.size(); ++j) {
      out << format_value(row[j]) << (j + 1 < row.size() ? "," : "");
    }
    out << "\n";
  }
}

void write_csv_file(const std::string& path,
                    const std::vector<std::string>& metadata,
                    const std::vector<std::string>& header,
                    const std::vector<std::vector<double>>& rows) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ParseError("cannot write '" + path + "'", 0, 0);
  write_csv(out, metadata, header, rows);
}

void write_dataset_csv(const std::string& path, const Dataset& ds) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ParseError("cannot write '" + path + "'", 0, 0);
  for (std::size_t j = 0; j < ds.column_names.size(); ++j) {
    out << ds.column_names[j] << ",";
  }
  out << ds.target_name << "\n";
  for (Index i = 0; i < ds.rows(); ++i) {
    for (Index j = 0; j < ds.dim(); ++j) {
      out << format_value(ds.features(i, j)) << ",";
    }
    out << format_value(ds.targets(i)) << "\n";
  }
}

}  // namespace optrec
