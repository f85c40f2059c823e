#include "gspam/modelsel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "gspam/overlap.hpp"
#include "gspam/solver.hpp"

namespace gspam {

Algorithm algorithm_from_string(const std::string& name) {
  if (name == "backfit") return Algorithm::kBackfit;
  if (name == "spam") return Algorithm::kSpam;
  if (name == "groupspam") return Algorithm::kGroupSpam;
  throw std::invalid_argument("unknown algorithm '" + name +
                              "' (expected backfit, spam or groupspam)");
}

std::string to_string(Algorithm a) {
  switch (a) {
    case Algorithm::kBackfit: return "backfit";
    case Algorithm::kSpam: return "spam";
    case Algorithm::kGroupSpam: return "groupspam";
  }
  return "?";
}

double lambda_max(const Dataset& dataset, const GroupStructure& structure,
                  const SmootherSet& smoothers) {
  if (structure.p() != dataset.p())
    throw std::invalid_argument("lambda_max: group structure p mismatch");
  const Eigen::VectorXd y_c = dataset.y.array() - dataset.y.mean();
  double lmax = 0.0;
  for (int g = 0; g < structure.size(); ++g) {
    const auto& members = structure.group(g).members;
    const auto th = group_threshold_check(y_c, smoothers, members, 0.0);
    const double ratio =
        th.omega_hat / std::sqrt(static_cast<double>(members.size()));
    lmax = std::max(lmax, ratio);
  }
  // A few ulps of headroom so the argmax group's threshold comparison cannot
  // round the wrong way at exactly this lambda.
  return lmax * (1.0 + 4.0 * std::numeric_limits<double>::epsilon());
}

std::vector<double> lambda_grid(double lambda_max, int count, double ratio) {
  if (count < 2) throw std::invalid_argument("lambda_grid: count must be >= 2");
  if (!(ratio > 0.0 && ratio < 1.0))
    throw std::invalid_argument("lambda_grid: ratio must be in (0,1)");
  if (lambda_max < 0) throw std::invalid_argument("lambda_grid: negative lambda_max");
  std::vector<double> grid(count);
  if (lambda_max == 0.0) return grid;  // degenerate: unpenalized everywhere
  const double log_step = std::log(ratio) / static_cast<double>(count - 1);
  for (int i = 0; i < count; ++i)
    grid[i] = lambda_max * std::exp(log_step * static_cast<double>(i));
  grid.front() = lambda_max;
  grid.back() = lambda_max * ratio;
  return grid;
}

PathResult fit_path(const Dataset& train, const Dataset& validation,
                    const GroupStructure& structure, const PathConfig& path_config,
                    const SolverConfig& solver_config) {
  if (train.p() != validation.p())
    throw std::invalid_argument("fit_path: train/validation p mismatch");
  if (structure.p() != train.p())
    throw std::invalid_argument("fit_path: group structure p mismatch");
  if (path_config.algorithm == Algorithm::kBackfit)
    throw std::invalid_argument("fit_path: backfit has no regularization path");

  const SmootherSet smoothers = SmootherSet::build(train.x);
  const bool spam = path_config.algorithm == Algorithm::kSpam;
  const bool overlap = !spam && !structure.is_partition();

  const GroupStructure effective =
      spam ? GroupStructure::singletons(static_cast<int>(train.p())) : structure;

  double lmax = 0.0;
  if (overlap) {
    // The zero model's threshold must be evaluated per latent block.
    const OverlapExpansion expansion = expand_overlap(train, structure);
    std::vector<int> sources(expansion.column_map.size());
    for (std::size_t c = 0; c < sources.size(); ++c)
      sources[c] = expansion.column_map[c].first;
    lmax = lambda_max(expansion.expanded_dataset, expansion.expanded_groups,
                      smoothers.aliased(sources));
  } else {
    lmax = lambda_max(train, effective, smoothers);
  }

  PathResult result;
  result.lambdas = lambda_grid(lmax, path_config.grid_count, path_config.grid_ratio);
  result.models.reserve(result.lambdas.size());
  result.validation_mse.reserve(result.lambdas.size());

  std::vector<Eigen::VectorXd> warm;  // latent-scale components in overlap mode
  bool have_warm = false;
  for (double lambda : result.lambdas) {
    SolverConfig cfg = solver_config;
    cfg.lambda = lambda;
    FittedModel model;
    try {
      if (spam) {
        model = fit_spam(train, smoothers, cfg, have_warm ? &warm : nullptr);
        warm = model.f_hat;
      } else if (overlap) {
        OverlapFit fit = fit_groupspam_overlap(train, structure, smoothers, cfg,
                                               have_warm ? &warm : nullptr);
        warm = fit.latent.f_hat;
        model = std::move(fit.collapsed);
      } else {
        model = fit_groupspam(train, effective, smoothers, cfg,
                              have_warm ? &warm : nullptr);
        warm = model.f_hat;
      }
    } catch (const std::exception& e) {
      throw std::runtime_error("fit_path: fit at lambda=" + std::to_string(lambda) +
                               " failed: " + e.what());
    }
    have_warm = true;
    result.validation_mse.push_back(test_mse(model, validation));
    result.models.push_back(std::move(model));
  }

  result.selected_index = 0;
  for (std::size_t i = 1; i < result.validation_mse.size(); ++i)
    if (result.validation_mse[i] < result.validation_mse[result.selected_index])
      result.selected_index = static_cast<int>(i);
  return result;
}

SupportMetrics support_metrics(const FittedModel& model,
                               const std::vector<int>& true_support) {
  std::vector<int> truth = true_support;
  std::sort(truth.begin(), truth.end());
  truth.erase(std::unique(truth.begin(), truth.end()), truth.end());

  SupportMetrics m;
  m.size = static_cast<int>(model.active_set.size());
  m.per_covariate_selected.assign(model.p(), false);
  for (int j : model.active_set) m.per_covariate_selected[j] = true;

  std::vector<int> inter;
  std::set_intersection(model.active_set.begin(), model.active_set.end(),
                        truth.begin(), truth.end(), std::back_inserter(inter));
  const double hits = static_cast<double>(inter.size());
  m.precision = model.active_set.empty() ? (truth.empty() ? 1.0 : 0.0)
                                         : hits / static_cast<double>(m.size);
  m.recall = truth.empty() ? 1.0 : hits / static_cast<double>(truth.size());
  return m;
}

double test_mse(const FittedModel& model, const Dataset& test) {
  if (test.p() != model.p())
    throw std::invalid_argument("test_mse: dataset p mismatch");
  Eigen::VectorXd yhat = Eigen::VectorXd::Constant(test.n(), model.y_mean);
  for (int j : model.active_set)
    yhat += predict_component(model, j, test.x.col(j));
  return (test.y - yhat).squaredNorm() / static_cast<double>(test.n());
}

}  // namespace gspam
