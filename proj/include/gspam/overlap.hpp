#ifndef GSPAM_OVERLAP_HPP
#define GSPAM_OVERLAP_HPP

#include <utility>
#include <vector>

#include "gspam/core.hpp"
#include "gspam/smoother.hpp"

namespace gspam {

// Reduction of an overlapping group structure to a partition: one duplicated
// covariate column per (group, member) pair. Fitting on the expansion gives
// one latent component per copy; summing the copies of a covariate recovers
// its component, and the selected support is a union of groups.
struct OverlapExpansion {
  Dataset expanded_dataset;
  GroupStructure expanded_groups;              // always a partition
  std::vector<std::pair<int, int>> column_map; // expanded column -> (covariate, group)
};

OverlapExpansion expand_overlap(const Dataset& dataset,
                                const GroupStructure& structure);

// Sum the latent components of each original covariate.
std::vector<Eigen::VectorXd> collapse_latent(
    const FittedModel& expanded_model,
    const std::vector<std::pair<int, int>>& column_map, int p_original);

struct OverlapFit {
  FittedModel collapsed;  // per original covariate
  FittedModel latent;     // per duplicated column
  OverlapExpansion expansion;
};

// Fit on the expansion and collapse back. The duplicated columns alias the
// original covariates' smoother matrices; nothing is rebuilt.
OverlapFit fit_groupspam_overlap(const Dataset& dataset,
                                 const GroupStructure& structure,
                                 const SmootherSet& smoothers,
                                 const SolverConfig& config,
                                 const std::vector<Eigen::VectorXd>* latent_warm = nullptr);

}  // namespace gspam

#endif
