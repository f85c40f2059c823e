#ifndef GSPAM_MODELSEL_HPP
#define GSPAM_MODELSEL_HPP

#include <vector>

#include "gspam/core.hpp"
#include "gspam/smoother.hpp"

namespace gspam {

enum class Algorithm { kBackfit, kSpam, kGroupSpam };

Algorithm algorithm_from_string(const std::string& name);
std::string to_string(Algorithm a);

// Smallest penalty at which the all-zero model passes every group's
// threshold test: max_g omega_hat_g(y_centered) / sqrt(d_g), nudged up by a
// few ulps so a fit at exactly this value stays all-zero.
double lambda_max(const Dataset& dataset, const GroupStructure& structure,
                  const SmootherSet& smoothers);

// Log-spaced decreasing grid from lambda_max down to ratio*lambda_max.
std::vector<double> lambda_grid(double lambda_max, int count, double ratio);

struct PathConfig {
  int grid_count = 30;
  double grid_ratio = 0.01;
  Algorithm algorithm = Algorithm::kGroupSpam;
};

struct PathResult {
  std::vector<double> lambdas;       // strictly decreasing, first = lambda_max
  std::vector<FittedModel> models;   // one per lambda
  std::vector<double> validation_mse;
  int selected_index = 0;            // minimizer; ties go to the larger lambda

  const FittedModel& selected() const { return models[selected_index]; }
};

// Fit the regularization path from lambda_max downward with warm starts and
// pick the validation-MSE minimizer. Overlapping structures are routed
// through the latent expansion; the stored models are the collapsed,
// per-covariate ones.
PathResult fit_path(const Dataset& train, const Dataset& validation,
                    const GroupStructure& structure, const PathConfig& path_config,
                    const SolverConfig& solver_config);

struct SupportMetrics {
  double precision = 0.0;
  double recall = 0.0;
  int size = 0;
  std::vector<bool> per_covariate_selected;
};

// Precision/recall/size of the estimated support against a reference set.
// An empty estimate scores precision 1 against an empty reference and 0
// against a nonempty one.
SupportMetrics support_metrics(const FittedModel& model,
                               const std::vector<int>& true_support);

// Mean squared prediction error on a held-out dataset.
double test_mse(const FittedModel& model, const Dataset& test);

}  // namespace gspam

#endif
