// Command-line interface for optimal-recovery regression experiments:
// worst-case-error sweeps, non-IID splits, kernel-width search, fitting,
// prediction, and test-error comparisons. All outputs are deterministic
// functions of the inputs and the --seed value.

#include <CLI11.hpp>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <optional>
#include <string>
#include <vector>

#include "optrec/experiments.hpp"
#include "optrec/rkhs.hpp"

namespace {

using json = nlohmann::json;
using namespace optrec;

std::string strip_extension(const std::string& path) {
  const auto slash = path.find_last_of('/');
  const auto dot = path.find_last_of('.');
  if (dot == std::string::npos || (slash != std::string::npos && dot < slash)) {
    return path;
  }
  return path.substr(0, dot);
}

std::string extension_of(const std::string& path) {
  const auto stem = strip_extension(path);
  return path.substr(stem.size());
}

double resolve_sigma(const Dataset& train, const ExperimentConfig& cfg,
                     bool have_sigma, std::ostream& log) {
  if (have_sigma) return cfg.sigma;
  const auto search = sigma_grid_search(train, cfg);
  log << "selected sigma " << format_value(search.best_sigma) << "\n";
  return search.best_sigma;
}

int run_wce_sweep(const ExperimentConfig& cfg, const std::string& output) {
  const auto sweep = wce_sweep(cfg);
  std::vector<std::vector<double>> rows;
  for (const auto& r : sweep.rows) {
    rows.push_back(
        {r.epsilon, r.wce_or, r.wce_erm1, r.wce_erm2, r.wce_erm2_constrained});
  }
  write_csv_file(
      output,
      {"generator: splitmix64", "seed: " + std::to_string(cfg.seed),
       "dims (dimV,dimH,m): " + std::to_string(cfg.sweep_subspace_dim) + "," +
           std::to_string(cfg.sweep_ambient_dim) + "," +
           std::to_string(cfg.sweep_observations),
       "instance dist(h,V): " + format_value(sweep.w_norm)},
      {"epsilon", "wce_or", "wce_erm1", "wce_erm2", "wce_erm2_constrained"},
      rows);
  return 0;
}

int run_split(const std::string& input, const std::string& target,
              int sort_feature, double train_frac, const std::string& output) {
  const Dataset ds = load_csv(input, target);
  if (ds.dropped_rows > 0) {
    std::cerr << "dropped " << ds.dropped_rows
              << " rows with missing values\n";
  }
  const auto split = noniid_split(ds, sort_feature, train_frac);
  const std::string stem = strip_extension(output);
  const std::string ext = extension_of(output);
  write_dataset_csv(stem + ".train" + ext, split.train);
  write_dataset_csv(stem + ".test" + ext, split.test);
  std::cout << split.train.rows() << " train rows, " << split.test.rows()
            << " test rows\n";
  return 0;
}

int run_gridsearch(const std::string& input, const std::string& target,
                   const ExperimentConfig& cfg, const std::string& output) {
  const Dataset ds = load_csv(input, target);
  const auto split = noniid_split(ds, cfg.sort_feature, cfg.train_frac);
  const auto result = sigma_grid_search(split.train, cfg);
  std::vector<std::vector<double>> rows;
  for (const auto& entry : result.table) {
    rows.push_back({entry.sigma, entry.validation_mse});
  }
  write_csv_file(output,
                 {"best_sigma: " + format_value(result.best_sigma),
                  "taylor_degree: " + std::to_string(cfg.taylor_degree),
                  "validation: trailing 20% of the training rows"},
                 {"sigma", "validation_mse"}, rows);
  std::cout << "best sigma " << format_value(result.best_sigma) << "\n";
  return 0;
}

json model_to_json(const RecoveredFunction& f, const Standardizer& stats,
                   const Dataset& train) {
  json model;
  model["format"] = "optrec-model";
  model["version"] = 1;
  model["kernel"] = {{"type", "gaussian"}, {"sigma", f.kernel.sigma}};
  model["taylor_degree"] = f.basis.degree;
  model["feature_names"] = train.column_names;
  model["target"] = train.target_name;
  model["standardization"] = {
      {"mean", std::vector<double>(stats.mean.data(),
                                   stats.mean.data() + stats.mean.size())},
      {"scale", std::vector<double>(stats.scale.data(),
                                    stats.scale.data() + stats.scale.size())}};
  std::vector<std::vector<double>> pts;
  for (Index i = 0; i < f.points.rows(); ++i) {
    std::vector<double> row(static_cast<std::size_t>(f.points.cols()));
    for (Index j = 0; j < f.points.cols(); ++j) {
      row[static_cast<std::size_t>(j)] = f.points(i, j);
    }
    pts.push_back(std::move(row));
  }
  model["points"] = pts;
  model["a"] = std::vector<double>(f.a.data(), f.a.data() + f.a.size());
  model["b"] = std::vector<double>(f.b.data(), f.b.data() + f.b.size());
  return model;
}

int run_fit(const std::string& input, const std::string& target,
            ExperimentConfig cfg, bool have_sigma, const std::string& output) {
  const Dataset ds = load_csv(input, target);
  cfg.sigma = resolve_sigma(ds, cfg, have_sigma, std::cerr);
  const Standardizer stats = Standardizer::fit(ds.features);
  const Matrix x = stats.apply(ds.features);
  const KernelSpec kernel(cfg.sigma, ds.dim());
  const auto basis = TaylorBasisSpec::make(ds.dim(), cfg.taylor_degree, cfg.sigma);
  const RecoveredFunction f = fit_optimal(x, ds.targets, kernel, basis);

  std::ofstream out(output, std::ios::binary);
  if (!out) throw ParseError("cannot write '" + output + "'", 0, 0);
  out << model_to_json(f, stats, ds).dump(2) << "\n";
  std::cout << "fitted " << ds.rows() << " rows, dim(V) = " << basis.size()
            << "\n";
  return 0;
}

int run_predict(const std::string& model_path, const std::string& input,
                const std::string& output) {
  std::ifstream in(model_path);
  if (!in) throw ParseError("cannot open model '" + model_path + "'", 0, 0);
  json model = json::parse(in, nullptr, /*allow_exceptions=*/true);
  if (model.value("format", "") != "optrec-model") {
    throw ParseError("'" + model_path + "' is not a model file", 0, 0);
  }

  const double sigma = model["kernel"]["sigma"].get<double>();
  const auto names = model["feature_names"].get<std::vector<std::string>>();
  const auto mean_v = model["standardization"]["mean"].get<std::vector<double>>();
  const auto scale_v = model["standardization"]["scale"].get<std::vector<double>>();
  const auto pts = model["points"].get<std::vector<std::vector<double>>>();
  const auto a_v = model["a"].get<std::vector<double>>();
  const auto b_v = model["b"].get<std::vector<double>>();
  const int degree = model["taylor_degree"].get<int>();
  const Index d = static_cast<Index>(names.size());

  RecoveredFunction f{Matrix(static_cast<Index>(pts.size()), d),
                      KernelSpec(sigma, d), Vector(static_cast<Index>(a_v.size())),
                      TaylorBasisSpec::make(d, degree, sigma),
                      Vector(static_cast<Index>(b_v.size()))};
  for (std::size_t i = 0; i < pts.size(); ++i) {
    for (Index j = 0; j < d; ++j) f.points(static_cast<Index>(i), j) = pts[i][static_cast<std::size_t>(j)];
  }
  for (std::size_t i = 0; i < a_v.size(); ++i) f.a(static_cast<Index>(i)) = a_v[i];
  for (std::size_t i = 0; i < b_v.size(); ++i) f.b(static_cast<Index>(i)) = b_v[i];

  // The prediction input may or may not carry the target column; select the
  // model's features by name.
  const Dataset ds = load_csv(input, model["target"].get<std::string>());
  Standardizer stats;
  stats.mean = Vector(d);
  stats.scale = Vector(d);
  Matrix x(ds.rows(), d);
  for (Index j = 0; j < d; ++j) {
    Index found = -1;
    for (Index c = 0; c < ds.dim(); ++c) {
      if (ds.column_names[static_cast<std::size_t>(c)] == names[static_cast<std::size_t>(j)]) found = c;
    }
    if (found < 0) {
      throw ParseError("input lacks feature '" + names[static_cast<std::size_t>(j)] + "'", 0, 0);
    }
    x.col(j) = ds.features.col(found);
    stats.mean(j) = mean_v[static_cast<std::size_t>(j)];
    stats.scale(j) = scale_v[static_cast<std::size_t>(j)];
  }
  const Vector pred = f.evaluate_rows(stats.apply(x));

  std::vector<std::vector<double>> rows;
  for (Index i = 0; i < pred.size(); ++i) rows.push_back({pred(i)});
  write_csv_file(output, {"model: " + model_path}, {"prediction"}, rows);
  return 0;
}

int run_compare(const std::string& input, const std::string& target,
                ExperimentConfig cfg, bool have_sigma,
                const std::string& output) {
  const Dataset ds = load_csv(input, target);
  const auto split = noniid_split(ds, cfg.sort_feature, cfg.train_frac);
  cfg.sigma = resolve_sigma(split.train, cfg, have_sigma, std::cerr);
  const auto curve = test_error_curve(split.train, split.test, cfg);

  std::vector<std::vector<double>> rows;
  for (const auto& r : curve.rows) {
    rows.push_back({static_cast<double>(r.dim_v), r.mse_or, r.se_or,
                    r.mse_ridgeless, r.se_ridgeless, r.mse_taylor_erm2,
                    r.se_taylor_erm2});
  }
  std::vector<std::string> metadata = {
      "sigma: " + format_value(curve.sigma),
      "taylor_degree: " + std::to_string(cfg.taylor_degree),
      "standardization: z-score with training statistics",
      "seed: " + std::to_string(cfg.seed),
      "train_mse_or_full: " + format_value(curve.train_mse_or_full)};
  if (cfg.subsample.has_value()) {
    metadata.push_back("subsample: " + std::to_string(*cfg.subsample));
    metadata.push_back("mc_runs: " + std::to_string(cfg.mc_runs));
  }
  write_csv_file(output, metadata,
                 {"dim_v", "mse_or", "se_or", "mse_ridgeless", "se_ridgeless",
                  "mse_taylor_erm2", "se_taylor_erm2"},
                 rows);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Optimal-recovery regression in Hilbert spaces"};
  app.require_subcommand(1);

  ExperimentConfig cfg;
  std::string input, output, target, model_path;
  std::vector<Index> dims;
  std::int64_t subsample = -1;
  bool have_sigma = false;

  const auto add_data_flags = [&](CLI::App* cmd) {
    cmd->add_option("--input", input, "input CSV file")->required();
    cmd->add_option("--target", target,
                    "target column (name or 0-based index)")
        ->required();
  };
  const auto add_sigma_flags = [&](CLI::App* cmd, bool grid_only = false) {
    if (!grid_only) {
      cmd->add_option("--sigma", cfg.sigma, "Gaussian kernel width")
          ->check(CLI::PositiveNumber);
    }
    cmd->add_option("--sigma-grid", cfg.sigma_grid,
                    "comma-separated kernel width candidates")
        ->delimiter(',');
    cmd->add_option("--taylor-degree", cfg.taylor_degree,
                    "Taylor feature degree (default 1)");
  };

  auto* sweep = app.add_subcommand(
      "wce-sweep", "worst-case errors of OR/ERM maps on a random instance");
  sweep->add_option("--dims", dims,
                    "dimV,dimH,m for the random instance (default 20,200,50)")
      ->delimiter(',')
      ->expected(3);
  sweep->add_option("--epsilon-grid", cfg.epsilon_grid,
                    "comma-separated approximability radii")
      ->delimiter(',');
  sweep->add_option("--seed", cfg.seed, "random seed");
  sweep->add_option("--output", output, "output CSV")->required();

  auto* split = app.add_subcommand("split", "deterministic non-IID split");
  add_data_flags(split);
  split->add_option("--sort-feature", cfg.sort_feature,
                    "1-based feature to sort by (default 5)");
  split->add_option("--train-frac", cfg.train_frac,
                    "training fraction (default 0.7)");
  split->add_option("--output", output,
                    "output stem; writes <stem>.train/.test CSVs")
      ->required();

  auto* grid = app.add_subcommand("gridsearch", "kernel width selection");
  add_data_flags(grid);
  add_sigma_flags(grid, /*grid_only=*/true);
  grid->get_option("--sigma-grid")->required();
  grid->add_option("--sort-feature", cfg.sort_feature, "1-based sort feature");
  grid->add_option("--train-frac", cfg.train_frac, "training fraction");
  grid->add_option("--output", output, "output CSV")->required();

  auto* fit = app.add_subcommand("fit", "fit an optimal-recovery model");
  add_data_flags(fit);
  add_sigma_flags(fit);
  fit->add_option("--output", output, "output model JSON")->required();

  auto* predict = app.add_subcommand("predict", "evaluate a fitted model");
  predict->add_option("--model", model_path, "model JSON from 'fit'")
      ->required();
  predict->add_option("--input", input, "input CSV with feature columns")
      ->required();
  predict->add_option("--output", output, "output CSV of predictions")
      ->required();

  auto* compare = app.add_subcommand(
      "compare", "test-error curve of OR vs ridgeless and Taylor ERM2");
  add_data_flags(compare);
  add_sigma_flags(compare);
  compare->add_option("--sort-feature", cfg.sort_feature, "1-based sort feature");
  compare->add_option("--train-frac", cfg.train_frac, "training fraction");
  compare->add_option("--subsample", subsample,
                      "Monte Carlo training subsample size");
  compare->add_option("--mc-runs", cfg.mc_runs,
                      "Monte Carlo repetitions (default 40)");
  compare->add_option("--seed", cfg.seed, "random seed");
  compare->add_option("--output", output, "output CSV")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (subsample > 0) cfg.subsample = static_cast<Index>(subsample);
    if (!dims.empty()) {
      cfg.sweep_subspace_dim = dims[0];
      cfg.sweep_ambient_dim = dims[1];
      cfg.sweep_observations = dims[2];
    }
    have_sigma = fit->count("--sigma") > 0 || compare->count("--sigma") > 0;
    if (!have_sigma && cfg.sigma_grid.empty() &&
        (fit->parsed() || compare->parsed())) {
      std::cerr << "either --sigma or --sigma-grid is required\n";
      return 2;
    }

    if (sweep->parsed()) return run_wce_sweep(cfg, output);
    if (split->parsed()) {
      return run_split(input, target, cfg.sort_feature, cfg.train_frac, output);
    }
    if (grid->parsed()) return run_gridsearch(input, target, cfg, output);
    if (fit->parsed()) return run_fit(input, target, cfg, have_sigma, output);
    if (predict->parsed()) return run_predict(model_path, input, output);
    if (compare->parsed()) {
      return run_compare(input, target, cfg, have_sigma, output);
    }
    return 2;
  } catch (const ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const EmptyDataset& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const FeatureOutOfRange& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const DegenerateSplit& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const IndexOutOfRange& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const DimensionMismatch& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const InfeasibleData& e) {
    std::cerr << "infeasible: " << e.what() << "\n";
    return 4;
  } catch (const ModelInconsistentData& e) {
    std::cerr << "infeasible: " << e.what() << "\n";
    return 4;
  } catch (const ModelAssumptionViolated& e) {
    std::cerr << "infeasible: " << e.what() << "\n";
    return 4;
  } catch (const Error& e) {
    // IllConditioned, RankDeficient, NoConvergence, SearchDimensionTooLarge.
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 3;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
}
