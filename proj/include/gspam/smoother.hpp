#ifndef GSPAM_SMOOTHER_HPP
#define GSPAM_SMOOTHER_HPP

#include <Eigen/Dense>

#include <vector>

#include "gspam/core.hpp"

namespace gspam {

// Plug-in kernel bandwidth 0.6 * sd(column) * n^(-1/5), with the unbiased
// (n-1) sample standard deviation. Throws for constant columns.
double plugin_bandwidth(const Eigen::Ref<const Eigen::VectorXd>& column);

// Gaussian kernel weight exp(-u^2 / (2 h^2)).
inline double gaussian_kernel(double u, double h) {
  const double z = u / h;
  return std::exp(-0.5 * z * z);
}

// Row-normalized Gaussian kernel smoother matrix for one covariate column:
// S(i,k) = K_h(x_i - x_k) / sum_m K_h(x_i - x_m). Rows sum to one and all
// entries are nonnegative; the diagonal keeps every denominator >= 1.
Eigen::MatrixXd build_smoother(const Eigen::Ref<const Eigen::VectorXd>& column,
                               double h);

// Apply a smoother matrix to a vector of responses or residuals.
template <typename DerivedS, typename DerivedV>
Eigen::VectorXd smooth(const Eigen::MatrixBase<DerivedS>& S,
                       const Eigen::MatrixBase<DerivedV>& r) {
  if (S.cols() != r.size())
    throw std::invalid_argument("smooth: dimension mismatch");
  return S * r;
}

// One smoother matrix per covariate, plus the bandwidths and training
// columns they were built from. Duplicated covariates (overlap expansion)
// can alias a single stored matrix.
class SmootherSet {
 public:
  // Build with plug-in bandwidths, or with explicit per-covariate bandwidths.
  static SmootherSet build(const Eigen::MatrixXd& x);
  static SmootherSet build(const Eigen::MatrixXd& x,
                           const Eigen::VectorXd& bandwidths);

  // View of this set over duplicated columns: logical column c uses the
  // stored matrix of source covariate column_sources[c]. No matrices are
  // copied.
  SmootherSet aliased(const std::vector<int>& column_sources) const;

  int count() const { return static_cast<int>(alias_.size()); }
  Eigen::Index n() const { return storage_.empty() ? 0 : storage_[0].rows(); }

  const Eigen::MatrixXd& matrix(int j) const { return storage_[alias_[j]]; }
  double bandwidth(int j) const { return bandwidths_[alias_[j]]; }
  const Eigen::VectorXd& train_column(int j) const { return columns_[alias_[j]]; }
  // Column sums of matrix(j); cached for the mean-removal used by the solver.
  const Eigen::VectorXd& column_sums(int j) const { return colsums_[alias_[j]]; }

 private:
  std::vector<Eigen::MatrixXd> storage_;
  std::vector<Eigen::VectorXd> columns_;
  std::vector<Eigen::VectorXd> colsums_;
  std::vector<double> bandwidths_;
  std::vector<int> alias_;  // logical column -> storage index
};

// Nadaraya-Watson evaluation of a fitted component at new points, reusing
// the training bandwidth. Zero components yield zeros. Queries outside the
// training range are extrapolated by the same kernel weights.
Eigen::VectorXd predict_component(const FittedModel& model, int j,
                                  const Eigen::Ref<const Eigen::VectorXd>& x_new);

}  // namespace gspam

#endif
