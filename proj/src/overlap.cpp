#include "gspam/overlap.hpp"

#include <algorithm>

#include "gspam/solver.hpp"

namespace gspam {

OverlapExpansion expand_overlap(const Dataset& dataset,
                                const GroupStructure& structure) {
  if (structure.p() != dataset.p())
    throw std::invalid_argument("expand_overlap: group structure p mismatch");

  int expanded_p = 0;
  for (int g = 0; g < structure.size(); ++g)
    expanded_p += static_cast<int>(structure.group(g).members.size());

  Eigen::MatrixXd x(dataset.n(), expanded_p);
  std::vector<std::pair<int, int>> column_map;
  column_map.reserve(expanded_p);
  std::vector<Group> expanded_groups;
  expanded_groups.reserve(structure.size());
  std::vector<std::string> names;
  names.reserve(expanded_p);

  int col = 0;
  for (int g = 0; g < structure.size(); ++g) {
    const Group& src = structure.group(g);
    Group eg;
    eg.name = src.name;
    for (int j : src.members) {
      x.col(col) = dataset.x.col(j);
      column_map.emplace_back(j, g);
      eg.members.push_back(col);
      const std::string base = dataset.column_names.empty()
                                   ? "x" + std::to_string(j + 1)
                                   : dataset.column_names[j];
      names.push_back(base + "@" + src.name);
      ++col;
    }
    expanded_groups.push_back(std::move(eg));
  }

  OverlapExpansion out{
      Dataset(std::move(x), dataset.y, std::move(names)),
      GroupStructure(std::move(expanded_groups), expanded_p),
      std::move(column_map)};
  return out;
}

std::vector<Eigen::VectorXd> collapse_latent(
    const FittedModel& expanded_model,
    const std::vector<std::pair<int, int>>& column_map, int p_original) {
  if (static_cast<Eigen::Index>(column_map.size()) != expanded_model.p())
    throw std::invalid_argument("collapse_latent: column map size mismatch");
  const Eigen::Index n = expanded_model.n();
  std::vector<Eigen::VectorXd> f(p_original, Eigen::VectorXd::Zero(n));
  for (std::size_t c = 0; c < column_map.size(); ++c) {
    const int j = column_map[c].first;
    if (j < 0 || j >= p_original)
      throw std::invalid_argument("collapse_latent: covariate index out of range");
    f[j] += expanded_model.f_hat[c];
  }
  return f;
}

OverlapFit fit_groupspam_overlap(const Dataset& dataset,
                                 const GroupStructure& structure,
                                 const SmootherSet& smoothers,
                                 const SolverConfig& config,
                                 const std::vector<Eigen::VectorXd>* latent_warm) {
  OverlapExpansion expansion = expand_overlap(dataset, structure);

  std::vector<int> sources(expansion.column_map.size());
  for (std::size_t c = 0; c < expansion.column_map.size(); ++c)
    sources[c] = expansion.column_map[c].first;
  const SmootherSet expanded_smoothers = smoothers.aliased(sources);

  FittedModel latent = fit_groupspam(expansion.expanded_dataset,
                                     expansion.expanded_groups, expanded_smoothers,
                                     config, latent_warm);

  FittedModel collapsed;
  collapsed.f_hat = collapse_latent(latent, expansion.column_map, dataset.p());
  collapsed.y_mean = latent.y_mean;
  collapsed.train_x = dataset.x;
  collapsed.train_y = dataset.y;
  collapsed.bandwidths.resize(dataset.p());
  for (int j = 0; j < dataset.p(); ++j)
    collapsed.bandwidths[j] = smoothers.bandwidth(j);
  collapsed.lambda = config.lambda;
  collapsed.groups = structure.groups();
  collapsed.group_p = structure.p();
  collapsed.converged = latent.converged;
  collapsed.outer_iterations = latent.outer_iterations;
  collapsed.objective = latent.objective;

  // Support is the union of the members of groups whose latent block is
  // nonzero.
  std::vector<bool> selected(dataset.p(), false);
  for (int g = 0; g < expansion.expanded_groups.size(); ++g) {
    const auto& eg = expansion.expanded_groups.group(g).members;
    const bool active = std::any_of(eg.begin(), eg.end(), [&](int c) {
      return (latent.f_hat[c].array() != 0.0).any();
    });
    if (active)
      for (int c : eg) selected[expansion.column_map[c].first] = true;
  }
  for (int j = 0; j < dataset.p(); ++j)
    if (selected[j]) collapsed.active_set.push_back(j);

  return OverlapFit{std::move(collapsed), std::move(latent), std::move(expansion)};
}

}  // namespace gspam
