// gspam: fit, select and evaluate group-sparse additive models from the
// command line. See README.md for the file formats.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "gspam/io.hpp"
#include "gspam/modelsel.hpp"
#include "gspam/overlap.hpp"
#include "gspam/reproduce.hpp"
#include "gspam/simgen.hpp"
#include "gspam/smoother.hpp"
#include "gspam/solver.hpp"

namespace fs = std::filesystem;
using namespace gspam;

namespace {

void warn_if_not_converged(const FittedModel& m) {
  if (!m.converged)
    std::cerr << "warning: fit did not converge within " << m.outer_iterations
              << " sweeps; results are the last iterate\n";
}

void print_active_set(const FittedModel& m) {
  std::cout << "lambda " << io::format_double(m.lambda) << "\n";
  std::cout << "converged " << (m.converged ? "yes" : "no") << " after "
            << m.outer_iterations << " sweeps, objective "
            << io::format_double(m.objective) << "\n";
  std::cout << "active set (" << m.active_set.size() << "):";
  for (int j : m.active_set) std::cout << " " << (j + 1);
  std::cout << "\n";
}

GroupStructure load_groups_for(const Dataset& data, const std::string& path) {
  GroupStructure gs = io::read_groups_file(path);
  if (gs.p() != data.p())
    throw std::runtime_error(
        "groups file covers " + std::to_string(gs.p()) + " covariates but the data has " +
        std::to_string(data.p()) + "; every covariate needs a group");
  return gs;
}

// Deterministic head/tail split used by `fit --lambda auto`.
std::pair<Dataset, Dataset> head_tail_split(const Dataset& data) {
  const Eigen::Index n = data.n();
  const Eigen::Index n_train = std::max<Eigen::Index>(2, (3 * n) / 4);
  const Eigen::Index n_val = n - n_train;
  if (n_val < 2)
    throw std::runtime_error("--lambda auto needs at least 4 samples");
  Dataset train(data.x.topRows(n_train), data.y.head(n_train), data.column_names);
  Dataset val(data.x.bottomRows(n_val), data.y.tail(n_val), data.column_names);
  return {std::move(train), std::move(val)};
}

std::vector<int> parse_index_list(const std::string& csv, int p) {
  std::vector<int> out;
  std::stringstream ss(csv);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    const int idx = io::parse_int(tok, "--indices");
    if (idx < 1 || idx > p)
      throw std::runtime_error("--indices: covariate " + tok + " out of range");
    out.push_back(idx - 1);
  }
  return out;
}

int cmd_simulate(int n, int p, double t, std::uint64_t seed, bool literal,
                 const std::string& out_dir) {
  if (p % 4 != 0)
    throw std::runtime_error(
        "p must be divisible by 4 for the default block-of-4 groups; pick such a p "
        "or write your own groups file and use `fit`");
  Scenario sc;
  sc.n = n;
  sc.p = p;
  sc.t = t;
  sc.seed = seed;
  sc.literal_snr = literal;
  const ScenarioData data = make_scenario(sc);
  fs::create_directories(out_dir);
  io::write_dataset_csv((fs::path(out_dir) / "train.csv").string(), data.train);
  io::write_dataset_csv((fs::path(out_dir) / "validation.csv").string(),
                        data.validation);
  io::write_dataset_csv((fs::path(out_dir) / "test.csv").string(), data.test);
  io::write_groups_file((fs::path(out_dir) / "groups.txt").string(), data.groups);
  io::TruthInfo truth;
  truth.support = data.true_support;
  truth.sigma = data.sigma;
  io::write_truth_file((fs::path(out_dir) / "truth.txt").string(), truth);
  std::cout << "wrote train/validation/test (" << n << "x" << p << ", t=" << t
            << ", sigma=" << io::format_double(data.sigma) << ") plus groups and "
            << "truth to " << out_dir << "\n";
  return 0;
}

int cmd_fit(const std::string& data_path, const std::string& groups_path,
            const std::string& lambda_arg, const std::string& algorithm,
            bool overlap, const std::string& out_path) {
  const Dataset data = io::read_dataset_csv(data_path);
  const GroupStructure groups = load_groups_for(data, groups_path);
  const Algorithm algo = algorithm_from_string(algorithm);
  const SmootherSet smoothers = SmootherSet::build(data.x);

  SolverConfig cfg;
  if (lambda_arg == "auto") {
    if (algo == Algorithm::kBackfit) {
      std::cerr << "warning: backfit is unpenalized; --lambda auto ignored\n";
    } else {
      const auto [train, val] = head_tail_split(data);
      PathConfig pc;
      pc.algorithm = algo;
      const PathResult path = fit_path(train, val, groups, pc, SolverConfig{});
      cfg.lambda = path.lambdas[path.selected_index];
      std::cout << "auto-selected lambda " << io::format_double(cfg.lambda)
                << " (grid index " << path.selected_index << ")\n";
    }
  } else {
    cfg.lambda = io::parse_double(lambda_arg, "--lambda");
    if (cfg.lambda < 0) throw std::runtime_error("--lambda must be >= 0");
  }

  FittedModel model;
  if (algo == Algorithm::kBackfit) {
    model = fit_backfit(data, smoothers, cfg);
  } else if (algo == Algorithm::kSpam) {
    model = fit_spam(data, smoothers, cfg);
  } else if (groups.is_partition() && !overlap) {
    model = fit_groupspam(data, groups, smoothers, cfg);
  } else if (!groups.is_partition() && !overlap) {
    const auto [a, b] = groups.first_overlapping_pair();
    throw std::runtime_error("groups '" + groups.group(a).name + "' and '" +
                             groups.group(b).name +
                             "' overlap; pass --overlap to fit latent components");
  } else {
    OverlapFit fit = fit_groupspam_overlap(data, groups, smoothers, cfg);
    io::save_model(out_path + ".latent", fit.latent);
    std::cout << "latent per-group components written to " << out_path
              << ".latent\n";
    model = std::move(fit.collapsed);
  }

  io::save_model(out_path, model);
  warn_if_not_converged(model);
  print_active_set(model);
  std::cout << "model written to " << out_path << "\n";
  return 0;
}

int cmd_predict(const std::string& model_path, const std::string& data_path,
                const std::string& out_path) {
  const FittedModel model = io::load_model(model_path);
  const Dataset data = io::read_dataset_csv(data_path);
  if (data.p() != model.p())
    throw std::runtime_error("data has p=" + std::to_string(data.p()) +
                             " but the model expects p=" + std::to_string(model.p()));
  Eigen::VectorXd yhat = Eigen::VectorXd::Constant(data.n(), model.y_mean);
  for (int j : model.active_set)
    yhat += predict_component(model, j, data.x.col(j));
  std::ofstream out(out_path);
  if (!out) throw std::runtime_error("cannot open '" + out_path + "' for writing");
  out << "yhat\n";
  for (Eigen::Index i = 0; i < yhat.size(); ++i)
    out << io::format_double(yhat[i]) << "\n";
  std::cout << "wrote " << yhat.size() << " predictions to " << out_path << "\n";
  return 0;
}

int cmd_path(const std::string& train_path, const std::string& val_path,
             const std::string& groups_path, const std::string& algorithm,
             int grid_count, double grid_ratio, const std::string& out_dir) {
  const Dataset train = io::read_dataset_csv(train_path);
  const Dataset validation = io::read_dataset_csv(val_path);
  const GroupStructure groups = load_groups_for(train, groups_path);
  PathConfig pc;
  pc.algorithm = algorithm_from_string(algorithm);
  pc.grid_count = grid_count;
  pc.grid_ratio = grid_ratio;
  const PathResult path = fit_path(train, validation, groups, pc, SolverConfig{});

  fs::create_directories(out_dir);
  const std::string summary_path = (fs::path(out_dir) / "path_summary.csv").string();
  std::ofstream out(summary_path);
  if (!out) throw std::runtime_error("cannot open '" + summary_path + "'");
  out << "lambda,validation_mse,support_size,converged\n";
  for (std::size_t i = 0; i < path.lambdas.size(); ++i)
    out << io::format_double(path.lambdas[i]) << ","
        << io::format_double(path.validation_mse[i]) << ","
        << path.models[i].active_set.size() << ","
        << (path.models[i].converged ? 1 : 0) << "\n";
  out.close();

  const std::string model_path = (fs::path(out_dir) / "selected_model.txt").string();
  io::save_model(model_path, path.selected());
  std::cout << "path summary written to " << summary_path << "\n";
  std::cout << "selected lambda " << io::format_double(path.lambdas[path.selected_index])
            << " (index " << path.selected_index << ", validation mse "
            << io::format_double(path.validation_mse[path.selected_index]) << ")\n";
  std::cout << "selected model written to " << model_path << "\n";
  return 0;
}

int cmd_eval(const std::string& model_path, const std::string& data_path,
             const std::string& truth_path, const std::string& out_path) {
  const FittedModel model = io::load_model(model_path);
  const Dataset test = io::read_dataset_csv(data_path);
  const double mse = test_mse(model, test);
  std::string record = "mse=" + io::format_double(mse);
  if (!truth_path.empty()) {
    const io::TruthInfo truth = io::read_truth_file(truth_path);
    const SupportMetrics sm = support_metrics(model, truth.support);
    record += " precision=" + io::format_double(sm.precision) +
              " recall=" + io::format_double(sm.recall) +
              " size=" + std::to_string(sm.size);
  }
  std::cout << record << "\n";
  if (!out_path.empty()) {
    std::ofstream out(out_path);
    if (!out) throw std::runtime_error("cannot open '" + out_path + "'");
    out << record << "\n";
  }
  return 0;
}

int cmd_plot_components(const std::string& model_path, const std::string& indices_arg,
                        int resolution, bool scale01, const std::string& out_dir) {
  if (resolution < 2) throw std::runtime_error("--resolution must be >= 2");
  const FittedModel model = io::load_model(model_path);
  std::vector<int> indices;
  if (indices_arg.empty())
    indices = model.active_set;
  else
    indices = parse_index_list(indices_arg, static_cast<int>(model.p()));

  fs::create_directories(out_dir);
  const std::string curves_path = (fs::path(out_dir) / "curves.csv").string();
  const std::string resid_path = (fs::path(out_dir) / "residuals.csv").string();
  std::ofstream curves(curves_path);
  std::ofstream resid(resid_path);
  if (!curves || !resid) throw std::runtime_error("cannot open plot outputs");

  curves << "# fitted curves via kernel interpolation of the stored training-point "
            "values;\n# curve(x_train) approaches the stored values as the bandwidth "
            "shrinks\n";
  curves << "covariate,x,fhat\n";
  resid << "covariate,x,partial_residual\n";

  const Eigen::VectorXd y_c = model.train_y.array() - model.y_mean;
  for (int j : indices) {
    const Eigen::VectorXd& col = model.train_x.col(j);
    const double lo = col.minCoeff();
    const double hi = col.maxCoeff();
    const Eigen::VectorXd grid = Eigen::VectorXd::LinSpaced(resolution, lo, hi);
    const Eigen::VectorXd fhat = predict_component(model, j, grid);
    const auto scaled = [&](double x) {
      return scale01 && hi > lo ? (x - lo) / (hi - lo) : x;
    };
    for (int i = 0; i < resolution; ++i)
      curves << (j + 1) << "," << io::format_double(scaled(grid[i])) << ","
             << io::format_double(fhat[i]) << "\n";

    Eigen::VectorXd r = y_c;
    for (int k : model.active_set)
      if (k != j) r -= model.f_hat[k];
    for (Eigen::Index i = 0; i < r.size(); ++i)
      resid << (j + 1) << "," << io::format_double(scaled(col[i])) << ","
            << io::format_double(r[i]) << "\n";
  }
  std::cout << "wrote " << curves_path << " and " << resid_path << " for "
            << indices.size() << " covariates\n";
  return 0;
}

int cmd_reproduce(const std::vector<int>& p_values, const std::vector<double>& t_values,
                  int n, int replicates, std::uint64_t seed,
                  const std::string& methods_arg, int grid_count, double grid_ratio,
                  int threads, bool literal, const std::string& out_path) {
  ReproduceConfig cfg;
  cfg.p_values = p_values;
  cfg.t_values = t_values;
  cfg.n = n;
  cfg.replicates = replicates;
  cfg.seed = seed;
  cfg.path.grid_count = grid_count;
  cfg.path.grid_ratio = grid_ratio;
  cfg.threads = threads;
  cfg.literal_snr = literal;
  cfg.methods.clear();
  std::stringstream ss(methods_arg);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    const Algorithm a = algorithm_from_string(tok);
    if (a == Algorithm::kBackfit)
      throw std::runtime_error("reproduce compares penalized methods; backfit has "
                               "no selection path");
    cfg.methods.push_back(a);
  }

  const ReproduceResult result = run_reproduce(cfg);
  write_reproduce_csv(out_path, result);
  for (const auto& row : result.rows) {
    std::cout << "p=" << row.p << " t=" << row.t << " " << to_string(row.method)
              << ": precision " << row.precision_mean << " (" << row.precision_sd
              << "), recall " << row.recall_mean << " (" << row.recall_sd
              << "), size " << row.size_mean << ", mse " << row.mse_mean << " ("
              << row.mse_sd << ")";
    if (row.replicates_failed > 0)
      std::cout << " [" << row.replicates_failed << " replicates failed]";
    std::cout << "\n";
  }
  std::cout << "aggregate table written to " << out_path << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"group-sparse additive models: simulation, fitting, selection"};
  app.require_subcommand(1);

  // simulate
  auto* sim = app.add_subcommand("simulate", "generate synthetic train/validation/test data");
  int sim_n = 150, sim_p = 200;
  double sim_t = 0.0;
  std::uint64_t sim_seed = 1;
  bool sim_literal = false;
  std::string sim_out;
  sim->add_option("--n", sim_n, "samples per split");
  sim->add_option("--p", sim_p, "covariate count (divisible by 4)");
  sim->add_option("--t", sim_t, "compound-symmetry correlation parameter");
  sim->add_option("--seed", sim_seed, "RNG seed");
  sim->add_flag("--snr-literal", sim_literal,
                "use the literal SNR reading sqrt(Var(m))/sigma^2 = 3");
  sim->add_option("--out", sim_out, "output directory")->required();

  // fit
  auto* fit = app.add_subcommand("fit", "fit one model at a fixed or auto lambda");
  std::string fit_data, fit_groups, fit_lambda = "0", fit_algorithm = "groupspam",
              fit_out;
  bool fit_overlap = false;
  fit->add_option("--data", fit_data, "training CSV")->required();
  fit->add_option("--groups", fit_groups, "groups file")->required();
  fit->add_option("--lambda", fit_lambda, "penalty level, or 'auto'");
  fit->add_option("--algorithm", fit_algorithm, "backfit | spam | groupspam");
  fit->add_flag("--overlap", fit_overlap, "expand overlapping groups into latent components");
  fit->add_option("--out", fit_out, "model file to write")->required();

  // predict
  auto* pred = app.add_subcommand("predict", "predict responses for new data");
  std::string pred_model, pred_data, pred_out;
  pred->add_option("--model", pred_model, "model file")->required();
  pred->add_option("--data", pred_data, "data CSV (y column ignored)")->required();
  pred->add_option("--out", pred_out, "output CSV")->required();

  // path
  auto* path = app.add_subcommand("path", "regularization path with validation selection");
  std::string path_data, path_val, path_groups, path_algorithm = "groupspam", path_out;
  int path_count = 30;
  double path_ratio = 0.01;
  path->add_option("--data", path_data, "training CSV")->required();
  path->add_option("--validation", path_val, "validation CSV")->required();
  path->add_option("--groups", path_groups, "groups file")->required();
  path->add_option("--algorithm", path_algorithm, "spam | groupspam");
  path->add_option("--grid-count", path_count, "number of lambda grid points");
  path->add_option("--grid-ratio", path_ratio, "smallest lambda as a fraction of lambda_max");
  path->add_option("--out", path_out, "output directory")->required();

  // eval
  auto* eval = app.add_subcommand("eval", "test MSE and, with a truth file, support metrics");
  std::string eval_model, eval_data, eval_truth, eval_out;
  eval->add_option("--model", eval_model, "model file")->required();
  eval->add_option("--data", eval_data, "test CSV")->required();
  eval->add_option("--truth", eval_truth, "truth file with the true support");
  eval->add_option("--out", eval_out, "also write the one-line record here");

  // plot-components
  auto* plot = app.add_subcommand("plot-components",
                                  "emit fitted curves and partial-residual scatter data");
  std::string plot_model, plot_indices, plot_out;
  int plot_resolution = 100;
  bool plot_scale01 = false;
  plot->add_option("--model", plot_model, "model file")->required();
  plot->add_option("--indices", plot_indices,
                   "1-based covariate list (default: the active set)");
  plot->add_option("--resolution", plot_resolution, "grid points per curve");
  plot->add_flag("--scale01", plot_scale01, "rescale x to [0,1] per covariate");
  plot->add_option("--out", plot_out, "output directory")->required();

  // reproduce
  auto* rep = app.add_subcommand("reproduce", "replicate the simulation benchmark table");
  std::vector<int> rep_p{200};
  std::vector<double> rep_t{0.0};
  int rep_n = 150, rep_replicates = 10, rep_count = 30, rep_threads = 0;
  double rep_ratio = 0.01;
  std::uint64_t rep_seed = 1;
  bool rep_literal = false;
  std::string rep_methods = "spam,groupspam", rep_out;
  rep->add_option("--p", rep_p, "covariate counts")->delimiter(',');
  rep->add_option("--t", rep_t, "correlation parameters")->delimiter(',');
  rep->add_option("--n", rep_n, "samples per split");
  rep->add_option("--replicates", rep_replicates, "replicates per scenario");
  rep->add_option("--seed", rep_seed, "base seed");
  rep->add_option("--methods", rep_methods, "comma list of spam,groupspam");
  rep->add_option("--grid-count", rep_count, "lambda grid points");
  rep->add_option("--grid-ratio", rep_ratio, "smallest lambda fraction");
  rep->add_option("--threads", rep_threads,
                  "worker threads (0 = auto, capped by GSPAM_THREADS)");
  rep->add_flag("--snr-literal", rep_literal, "literal SNR reading");
  rep->add_option("--out", rep_out, "aggregate CSV path")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*sim)
      return cmd_simulate(sim_n, sim_p, sim_t, sim_seed, sim_literal, sim_out);
    if (*fit)
      return cmd_fit(fit_data, fit_groups, fit_lambda, fit_algorithm, fit_overlap,
                     fit_out);
    if (*pred) return cmd_predict(pred_model, pred_data, pred_out);
    if (*path)
      return cmd_path(path_data, path_val, path_groups, path_algorithm, path_count,
                      path_ratio, path_out);
    if (*eval) return cmd_eval(eval_model, eval_data, eval_truth, eval_out);
    if (*plot)
      return cmd_plot_components(plot_model, plot_indices, plot_resolution,
                                 plot_scale01, plot_out);
    if (*rep)
      return cmd_reproduce(rep_p, rep_t, rep_n, rep_replicates, rep_seed, rep_methods,
                           rep_count, rep_ratio, rep_threads, rep_literal, rep_out);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
