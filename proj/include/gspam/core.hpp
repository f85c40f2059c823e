#ifndef GSPAM_CORE_HPP
#define GSPAM_CORE_HPP

#include <Eigen/Dense>

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

namespace gspam {

// Empirical L2 norm of a vector of function evaluations: sqrt((1/n) sum v_i^2).
// All norms in this library use the 1/n convention.
template <typename Derived>
typename Derived::Scalar empirical_norm(const Eigen::MatrixBase<Derived>& v) {
  if (v.size() == 0) throw std::invalid_argument("empirical_norm: empty vector");
  using Scalar = typename Derived::Scalar;
  return std::sqrt(v.squaredNorm() / Scalar(v.size()));
}

// Subtract the mean. Result has empirical mean zero.
template <typename Derived>
Eigen::Vector<typename Derived::Scalar, Eigen::Dynamic> center(
    const Eigen::MatrixBase<Derived>& v) {
  if (v.size() == 0) throw std::invalid_argument("center: empty vector");
  return (v.array() - v.mean()).matrix();
}

// Mixed norm of a set of component vectors: sqrt(sum_j |f_j|_n^2), where
// |.|_n is the empirical norm above.
double group_norm(const std::vector<Eigen::VectorXd>& components);

// group_norm restricted to the listed component indices.
double group_norm(const std::vector<Eigen::VectorXd>& components,
                  const std::vector<int>& members);

// n samples of p covariates plus a response. Immutable after construction.
struct Dataset {
  Eigen::MatrixXd x;
  Eigen::VectorXd y;
  std::vector<std::string> column_names;  // empty or exactly p names

  Dataset(Eigen::MatrixXd x_in, Eigen::VectorXd y_in,
          std::vector<std::string> names = {});

  Eigen::Index n() const { return x.rows(); }
  Eigen::Index p() const { return x.cols(); }
};

struct Group {
  std::string name;
  std::vector<int> members;  // 0-based covariate indices, sorted, unique
};

// Named groups of covariate indices over p covariates. Every covariate must
// belong to at least one group; groups may overlap.
class GroupStructure {
 public:
  GroupStructure(std::vector<Group> groups, int p);

  int p() const { return p_; }
  int size() const { return static_cast<int>(groups_.size()); }
  const Group& group(int g) const { return groups_[g]; }
  const std::vector<Group>& groups() const { return groups_; }
  bool is_partition() const { return is_partition_; }

  // First pair of groups sharing a covariate, or {-1,-1} for a partition
  // that covers everything disjointly.
  std::pair<int, int> first_overlapping_pair() const;

  static GroupStructure singletons(int p);
  static GroupStructure blocks(int p, int block_size);

 private:
  std::vector<Group> groups_;
  int p_ = 0;
  bool is_partition_ = false;
};

// Tolerances and iteration caps for the fitting algorithms.
struct SolverConfig {
  double lambda = 0.0;
  double outer_tol = 1e-4;
  int outer_max_iter = 100;
  double inner_tol = 1e-6;
  int inner_max_iter = 100;
  double zero_guard = 1e-12;

  void validate() const;
};

// A fitted additive model: per-covariate component evaluations at the
// training points plus everything needed to predict at new points.
// Components removed by thresholding are stored as exact zeros, so
// active_set membership is an exact test, not an epsilon test.
struct FittedModel {
  std::vector<Eigen::VectorXd> f_hat;  // p vectors of length n
  double y_mean = 0.0;
  Eigen::MatrixXd train_x;
  Eigen::VectorXd train_y;  // kept so partial residuals can be reconstructed
  Eigen::VectorXd bandwidths;
  double lambda = 0.0;
  std::vector<int> active_set;  // sorted indices with nonzero component
  std::vector<Group> groups;    // structure used at fit time
  int group_p = 0;

  bool converged = false;
  int outer_iterations = 0;
  double objective = 0.0;  // final value of the penalized least-squares diagnostic

  Eigen::Index n() const { return train_x.rows(); }
  Eigen::Index p() const { return train_x.cols(); }
  bool is_active(int j) const;

  GroupStructure structure() const { return GroupStructure(groups, group_p); }
};

// Recompute {j : |f_hat_j|_n > 0} from stored components.
std::vector<int> active_set_of(const std::vector<Eigen::VectorXd>& f_hat);

}  // namespace gspam

#endif
