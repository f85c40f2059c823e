#include "gspam/smoother.hpp"

#include <cmath>
#include <numeric>

namespace gspam {

double plugin_bandwidth(const Eigen::Ref<const Eigen::VectorXd>& column) {
  const Eigen::Index n = column.size();
  if (n < 2) throw std::invalid_argument("plugin_bandwidth: need at least 2 samples");
  const double mean = column.mean();
  const double ss = (column.array() - mean).square().sum();
  const double sd = std::sqrt(ss / static_cast<double>(n - 1));
  if (sd <= 0.0)
    throw std::invalid_argument("plugin_bandwidth: constant covariate column");
  return 0.6 * sd * std::pow(static_cast<double>(n), -0.2);
}

Eigen::MatrixXd build_smoother(const Eigen::Ref<const Eigen::VectorXd>& column,
                               double h) {
  if (h <= 0.0) throw std::invalid_argument("build_smoother: bandwidth must be positive");
  const Eigen::Index n = column.size();
  Eigen::MatrixXd S(n, n);
  const double inv2h2 = 1.0 / (2.0 * h * h);
  for (Eigen::Index i = 0; i < n; ++i) {
    double row_sum = 0.0;
    for (Eigen::Index k = 0; k < n; ++k) {
      const double u = column[i] - column[k];
      const double w = std::exp(-u * u * inv2h2);
      S(i, k) = w;
      row_sum += w;
    }
    S.row(i) /= row_sum;  // row_sum >= 1: the i==k term is exp(0)
  }
  return S;
}

SmootherSet SmootherSet::build(const Eigen::MatrixXd& x) {
  Eigen::VectorXd h(x.cols());
  for (Eigen::Index j = 0; j < x.cols(); ++j) h[j] = plugin_bandwidth(x.col(j));
  return build(x, h);
}

SmootherSet SmootherSet::build(const Eigen::MatrixXd& x,
                               const Eigen::VectorXd& bandwidths) {
  if (bandwidths.size() != x.cols())
    throw std::invalid_argument("SmootherSet: one bandwidth per covariate required");
  SmootherSet set;
  const int p = static_cast<int>(x.cols());
  set.storage_.reserve(p);
  set.columns_.reserve(p);
  set.colsums_.reserve(p);
  set.bandwidths_.reserve(p);
  set.alias_.resize(p);
  for (int j = 0; j < p; ++j) {
    set.storage_.push_back(build_smoother(x.col(j), bandwidths[j]));
    set.columns_.push_back(x.col(j));
    set.colsums_.push_back(set.storage_.back().colwise().sum().transpose());
    set.bandwidths_.push_back(bandwidths[j]);
    set.alias_[j] = j;
  }
  return set;
}

SmootherSet SmootherSet::aliased(const std::vector<int>& column_sources) const {
  SmootherSet out;
  out.storage_ = storage_;
  out.columns_ = columns_;
  out.colsums_ = colsums_;
  out.bandwidths_ = bandwidths_;
  out.alias_.reserve(column_sources.size());
  for (int src : column_sources) {
    if (src < 0 || src >= static_cast<int>(alias_.size()))
      throw std::invalid_argument("SmootherSet::aliased: source column out of range");
    out.alias_.push_back(alias_[src]);
  }
  return out;
}

Eigen::VectorXd predict_component(const FittedModel& model, int j,
                                  const Eigen::Ref<const Eigen::VectorXd>& x_new) {
  if (j < 0 || j >= model.p())
    throw std::invalid_argument("predict_component: covariate index out of range");
  const Eigen::Index m = x_new.size();
  if (!model.is_active(j)) return Eigen::VectorXd::Zero(m);

  const Eigen::VectorXd& xi = model.train_x.col(j);
  const Eigen::VectorXd& fi = model.f_hat[j];
  const double h = model.bandwidths[j];
  const double inv2h2 = 1.0 / (2.0 * h * h);
  Eigen::VectorXd out(m);
  Eigen::VectorXd w(xi.size());
  for (Eigen::Index q = 0; q < m; ++q) {
    // Shift by the smallest squared distance before exponentiating so far
    // queries do not underflow the whole weight row.
    const auto d2 = (xi.array() - x_new[q]).square();
    const double shift = d2.minCoeff();
    w = ((shift - d2) * inv2h2).exp();
    out[q] = w.dot(fi) / w.sum();
  }
  return out;
}

}  // namespace gspam
