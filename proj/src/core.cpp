#include "gspam/core.hpp"

#include <algorithm>
#include <set>

namespace gspam {

double group_norm(const std::vector<Eigen::VectorXd>& components) {
  if (components.empty()) throw std::invalid_argument("group_norm: empty group");
  const Eigen::Index n = components.front().size();
  double sum = 0.0;
  for (const auto& f : components) {
    if (f.size() != n)
      throw std::invalid_argument("group_norm: component length mismatch");
    sum += f.squaredNorm() / static_cast<double>(n);
  }
  return std::sqrt(sum);
}

double group_norm(const std::vector<Eigen::VectorXd>& components,
                  const std::vector<int>& members) {
  if (members.empty()) throw std::invalid_argument("group_norm: empty group");
  const Eigen::Index n = components.at(members.front()).size();
  double sum = 0.0;
  for (int j : members) {
    const auto& f = components.at(j);
    if (f.size() != n)
      throw std::invalid_argument("group_norm: component length mismatch");
    sum += f.squaredNorm() / static_cast<double>(n);
  }
  return std::sqrt(sum);
}

Dataset::Dataset(Eigen::MatrixXd x_in, Eigen::VectorXd y_in,
                 std::vector<std::string> names)
    : x(std::move(x_in)), y(std::move(y_in)), column_names(std::move(names)) {
  if (x.rows() < 2) throw std::invalid_argument("Dataset: need at least 2 samples");
  if (x.cols() < 1) throw std::invalid_argument("Dataset: need at least 1 covariate");
  if (y.size() != x.rows())
    throw std::invalid_argument("Dataset: y length must equal the sample count");
  if (!x.allFinite() || !y.allFinite())
    throw std::invalid_argument("Dataset: non-finite entries");
  if (!column_names.empty() &&
      static_cast<Eigen::Index>(column_names.size()) != x.cols())
    throw std::invalid_argument("Dataset: column_names size must equal p");
}

GroupStructure::GroupStructure(std::vector<Group> groups, int p)
    : groups_(std::move(groups)), p_(p) {
  if (p_ < 1) throw std::invalid_argument("GroupStructure: p must be positive");
  if (groups_.empty()) throw std::invalid_argument("GroupStructure: no groups");

  std::vector<int> cover_count(p_, 0);
  for (auto& g : groups_) {
    if (g.members.empty())
      throw std::invalid_argument("GroupStructure: empty group '" + g.name + "'");
    std::sort(g.members.begin(), g.members.end());
    for (std::size_t i = 0; i < g.members.size(); ++i) {
      const int j = g.members[i];
      if (j < 0 || j >= p_)
        throw std::invalid_argument("GroupStructure: index out of range in group '" +
                                    g.name + "'");
      if (i > 0 && g.members[i - 1] == j)
        throw std::invalid_argument("GroupStructure: duplicate index in group '" +
                                    g.name + "'");
      ++cover_count[j];
    }
  }
  for (int j = 0; j < p_; ++j)
    if (cover_count[j] == 0)
      throw std::invalid_argument("GroupStructure: covariate " +
                                  std::to_string(j + 1) + " not covered by any group");
  is_partition_ = std::all_of(cover_count.begin(), cover_count.end(),
                              [](int c) { return c == 1; });
}

std::pair<int, int> GroupStructure::first_overlapping_pair() const {
  std::vector<int> owner(p_, -1);
  for (int g = 0; g < size(); ++g)
    for (int j : groups_[g].members) {
      if (owner[j] >= 0) return {owner[j], g};
      owner[j] = g;
    }
  return {-1, -1};
}

GroupStructure GroupStructure::singletons(int p) {
  std::vector<Group> gs;
  gs.reserve(p);
  for (int j = 0; j < p; ++j)
    gs.push_back({"g" + std::to_string(j + 1), {j}});
  return GroupStructure(std::move(gs), p);
}

GroupStructure GroupStructure::blocks(int p, int block_size) {
  if (block_size < 1 || p % block_size != 0)
    throw std::invalid_argument("GroupStructure::blocks: p not divisible by block size");
  std::vector<Group> gs;
  gs.reserve(p / block_size);
  for (int b = 0; b < p / block_size; ++b) {
    Group g;
    g.name = "g" + std::to_string(b + 1);
    for (int k = 0; k < block_size; ++k) g.members.push_back(b * block_size + k);
    gs.push_back(std::move(g));
  }
  return GroupStructure(std::move(gs), p);
}

void SolverConfig::validate() const {
  if (lambda < 0) throw std::invalid_argument("SolverConfig: lambda must be >= 0");
  if (outer_tol <= 0 || inner_tol <= 0 || zero_guard <= 0)
    throw std::invalid_argument("SolverConfig: tolerances must be positive");
  if (outer_max_iter < 1 || inner_max_iter < 1)
    throw std::invalid_argument("SolverConfig: iteration caps must be >= 1");
}

bool FittedModel::is_active(int j) const {
  return std::binary_search(active_set.begin(), active_set.end(), j);
}

std::vector<int> active_set_of(const std::vector<Eigen::VectorXd>& f_hat) {
  std::vector<int> active;
  for (std::size_t j = 0; j < f_hat.size(); ++j)
    if ((f_hat[j].array() != 0.0).any()) active.push_back(static_cast<int>(j));
  return active;
}

}  // namespace gspam
