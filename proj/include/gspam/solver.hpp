#ifndef GSPAM_SOLVER_HPP
#define GSPAM_SOLVER_HPP

#include <Eigen/Dense>

#include <vector>

#include "gspam/core.hpp"
#include "gspam/smoother.hpp"

namespace gspam {

// Tolerance band for post-fit consistency checks of the group zero/nonzero
// status against the threshold condition.
inline constexpr double kThresholdBand = 1e-8;

// Smoothing followed by mean removal. The raw smoother estimates a
// conditional expectation; removing the mean is the sample analogue of
// mapping into the space of mean-zero component functions. Every smoothing
// application inside the solvers goes through this.
inline Eigen::VectorXd smooth_centered(const Eigen::MatrixXd& S,
                                       const Eigen::Ref<const Eigen::VectorXd>& v) {
  Eigen::VectorXd s = S * v;
  s.array() -= s.mean();
  return s;
}

// y_centered minus the sum of all fitted components except those listed in
// `exclude`.
Eigen::VectorXd partial_residual(const Eigen::Ref<const Eigen::VectorXd>& y_centered,
                                 const std::vector<Eigen::VectorXd>& f_hat,
                                 const std::vector<int>& exclude);

struct ThresholdResult {
  double omega_hat = 0.0;
  bool is_zero = false;
};

// Group-level threshold test: omega_hat = sqrt(sum_j |S_j R|_n^2) over the
// group members; the whole group is zeroed iff omega_hat <= lambda*sqrt(d).
ThresholdResult group_threshold_check(const Eigen::Ref<const Eigen::VectorXd>& residual,
                                      const SmootherSet& smoothers,
                                      const std::vector<int>& members, double lambda);

// The stacked linear system describing a group's stationary condition:
// j_hat has identity diagonal blocks and the member smoothing operators in
// the off-diagonal blocks of each block row; q_applied stacks the smoothed
// partial residual per member.
struct GroupBlockSystem {
  Eigen::MatrixXd j_hat;     // (n*d) x (n*d)
  Eigen::VectorXd q_applied; // n*d
};

GroupBlockSystem build_group_system(const Eigen::Ref<const Eigen::VectorXd>& residual,
                                    const SmootherSet& smoothers,
                                    const std::vector<int>& members);

// Solve the nonzero-group stationary condition
//   (J + lambda*sqrt(d)/|f_g|_n * I) f_g = Q R_g
// by fixed-point iteration on the norm-dependent ridge term. Each linear
// solve uses block elimination: the per-member blocks are reduced to one
// n x n system for the within-group component sum. Singleton groups have a
// closed-form solution and are returned directly. Preconditions: the group
// passed the threshold test and init has positive group norm.
std::vector<Eigen::VectorXd> fixed_point_solve(
    const Eigen::Ref<const Eigen::VectorXd>& residual, const SmootherSet& smoothers,
    const std::vector<int>& members, double lambda,
    std::vector<Eigen::VectorXd> init, const SolverConfig& config);

// Relative violation of the stationary condition for a nonzero group:
// |J f_g + c f_g - Q R_g| / max(|Q R_g|, zero_guard) with
// c = lambda*sqrt(d)/|f_g|_n. Errors for an all-zero group (its optimality
// is the threshold condition, not this equation).
double stationarity_residual(const FittedModel& model, const Dataset& dataset,
                             const SmootherSet& smoothers, int group_index,
                             double lambda);

// Penalized least-squares diagnostic tracked once per outer sweep:
// 0.5*|y_c - sum_j f_j|_n^2 + lambda * sum_g sqrt(d_g)*|f_g|.
double objective_value(const Eigen::Ref<const Eigen::VectorXd>& y_centered,
                       const std::vector<Eigen::VectorXd>& f_hat,
                       const GroupStructure& structure, double lambda);

// Unpenalized additive-model fit by cycling each component over its
// smoothed partial residual. Ignores config.lambda.
FittedModel fit_backfit(const Dataset& dataset, const SmootherSet& smoothers,
                        const SolverConfig& config);

// Sparse additive-model fit: per-component soft thresholding of the
// smoothed partial residual. Components at or below the threshold are
// exact zeros.
FittedModel fit_spam(const Dataset& dataset, const SmootherSet& smoothers,
                     const SolverConfig& config,
                     const std::vector<Eigen::VectorXd>* warm_start = nullptr);

// Group-sparse additive-model fit: block coordinate descent over a
// partition. Per group: threshold test, then either exact zeros or the
// fixed-point solve. Convergence additionally requires the zero/nonzero
// status of every group to be consistent with the threshold condition on
// the final residuals.
FittedModel fit_groupspam(const Dataset& dataset, const GroupStructure& structure,
                          const SmootherSet& smoothers, const SolverConfig& config,
                          const std::vector<Eigen::VectorXd>* warm_start = nullptr);

}  // namespace gspam

#endif
