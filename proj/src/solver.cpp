#include "gspam/solver.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <utility>

namespace gspam {

namespace {

std::vector<Eigen::VectorXd> init_components(const std::vector<Eigen::VectorXd>* warm,
                                             Eigen::Index p, Eigen::Index n) {
  if (warm == nullptr)
    return std::vector<Eigen::VectorXd>(p, Eigen::VectorXd::Zero(n));
  if (static_cast<Eigen::Index>(warm->size()) != p)
    throw std::invalid_argument("warm start: wrong number of components");
  for (const auto& f : *warm)
    if (f.size() != n || !f.allFinite())
      throw std::invalid_argument("warm start: bad component vector");
  return *warm;
}

Eigen::VectorXd component_sum(const std::vector<Eigen::VectorXd>& f, Eigen::Index n) {
  Eigen::VectorXd total = Eigen::VectorXd::Zero(n);
  for (const auto& fj : f) total += fj;
  return total;
}

bool all_zero(const Eigen::VectorXd& v) { return !(v.array() != 0.0).any(); }

FittedModel finalize_model(const Dataset& dataset, const SmootherSet& smoothers,
                           const GroupStructure& structure, double lambda,
                           std::vector<Eigen::VectorXd> f, bool converged,
                           int sweeps, double objective) {
  FittedModel m;
  m.f_hat = std::move(f);
  m.y_mean = dataset.y.mean();
  m.train_x = dataset.x;
  m.train_y = dataset.y;
  m.bandwidths.resize(dataset.p());
  for (int j = 0; j < dataset.p(); ++j) m.bandwidths[j] = smoothers.bandwidth(j);
  m.lambda = lambda;
  m.active_set = active_set_of(m.f_hat);
  m.groups = structure.groups();
  m.group_p = structure.p();
  m.converged = converged;
  m.outer_iterations = sweeps;
  m.objective = objective;
  return m;
}

// Zero/nonzero status of every group must agree with the threshold
// condition on the residuals left at the end of a sweep; otherwise the
// sweep-to-sweep change can be small while a group is still on the wrong
// side of its threshold.
bool status_consistent(const Eigen::VectorXd& y_c, const Eigen::VectorXd& total,
                       const std::vector<Eigen::VectorXd>& f,
                       const GroupStructure& structure, const SmootherSet& smoothers,
                       double lambda) {
  Eigen::VectorXd R(y_c.size());
  for (int gi = 0; gi < structure.size(); ++gi) {
    const auto& members = structure.group(gi).members;
    R = y_c - total;
    for (int j : members) R += f[j];
    const auto th = group_threshold_check(R, smoothers, members, lambda);
    const double thr = lambda * std::sqrt(static_cast<double>(members.size()));
    bool zero_now = true;
    for (int j : members) zero_now = zero_now && all_zero(f[j]);
    if (zero_now && th.omega_hat > thr + kThresholdBand) return false;
    if (!zero_now && th.omega_hat <= thr - kThresholdBand) return false;
  }
  return true;
}

}  // namespace

Eigen::VectorXd partial_residual(const Eigen::Ref<const Eigen::VectorXd>& y_centered,
                                 const std::vector<Eigen::VectorXd>& f_hat,
                                 const std::vector<int>& exclude) {
  Eigen::VectorXd r = y_centered;
  std::vector<bool> skip(f_hat.size(), false);
  for (int j : exclude) skip.at(j) = true;
  for (std::size_t j = 0; j < f_hat.size(); ++j)
    if (!skip[j]) r -= f_hat[j];
  return r;
}

ThresholdResult group_threshold_check(const Eigen::Ref<const Eigen::VectorXd>& residual,
                                      const SmootherSet& smoothers,
                                      const std::vector<int>& members, double lambda) {
  if (members.empty())
    throw std::invalid_argument("group_threshold_check: empty group");
  if (lambda < 0) throw std::invalid_argument("group_threshold_check: lambda < 0");
  const double n = static_cast<double>(residual.size());
  double sum = 0.0;
  for (int j : members) {
    const Eigen::VectorXd s = smooth_centered(smoothers.matrix(j), residual);
    sum += s.squaredNorm() / n;
  }
  ThresholdResult out;
  out.omega_hat = std::sqrt(sum);
  out.is_zero = out.omega_hat <= lambda * std::sqrt(static_cast<double>(members.size()));
  return out;
}

GroupBlockSystem build_group_system(const Eigen::Ref<const Eigen::VectorXd>& residual,
                                    const SmootherSet& smoothers,
                                    const std::vector<int>& members) {
  const Eigen::Index n = residual.size();
  const int d = static_cast<int>(members.size());
  GroupBlockSystem sys;
  sys.j_hat.resize(n * d, n * d);
  sys.q_applied.resize(n * d);
  Eigen::MatrixXd stilde(n, n);
  for (int bj = 0; bj < d; ++bj) {
    const Eigen::MatrixXd& S = smoothers.matrix(members[bj]);
    stilde = S;
    stilde.rowwise() -= (smoothers.column_sums(members[bj]) / static_cast<double>(n))
                            .transpose();
    for (int bk = 0; bk < d; ++bk) {
      if (bk == bj)
        sys.j_hat.block(bj * n, bk * n, n, n) = Eigen::MatrixXd::Identity(n, n);
      else
        sys.j_hat.block(bj * n, bk * n, n, n) = stilde;
    }
    sys.q_applied.segment(bj * n, n) = smooth_centered(S, residual);
  }
  return sys;
}

std::vector<Eigen::VectorXd> fixed_point_solve(
    const Eigen::Ref<const Eigen::VectorXd>& residual, const SmootherSet& smoothers,
    const std::vector<int>& members, double lambda,
    std::vector<Eigen::VectorXd> init, const SolverConfig& config) {
  config.validate();
  const Eigen::Index n = residual.size();
  const int d = static_cast<int>(members.size());
  if (d == 0) throw std::invalid_argument("fixed_point_solve: empty group");

  const double nd = static_cast<double>(n);
  std::vector<Eigen::VectorXd> q(d);
  double omega2 = 0.0;
  for (int k = 0; k < d; ++k) {
    q[k] = smooth_centered(smoothers.matrix(members[k]), residual);
    omega2 += q[k].squaredNorm() / nd;
  }
  const double omega = std::sqrt(omega2);
  const double thr = lambda * std::sqrt(static_cast<double>(d));
  if (omega <= thr)
    throw std::invalid_argument(
        "fixed_point_solve: group does not pass the threshold test");

  if (d == 1) {
    // The scalar stationary condition has the closed form
    // (1 - lambda/omega) * q, the per-component soft threshold.
    std::vector<Eigen::VectorXd> f{(1.0 - lambda / omega) * q[0]};
    f[0].array() -= f[0].mean();
    return f;
  }

  if (lambda == 0.0) {
    // No ridge term: one direct solve of the stacked system.
    GroupBlockSystem sys = build_group_system(residual, smoothers, members);
    Eigen::VectorXd sol =
        sys.j_hat.completeOrthogonalDecomposition().solve(sys.q_applied);
    if (!sol.allFinite())
      throw std::runtime_error("fixed_point_solve: linear solve failed");
    std::vector<Eigen::VectorXd> f(d);
    for (int k = 0; k < d; ++k) {
      f[k] = sol.segment(k * n, n);
      f[k].array() -= f[k].mean();
    }
    return f;
  }

  if (static_cast<int>(init.size()) != d)
    throw std::invalid_argument("fixed_point_solve: init must have one vector per member");
  for (const auto& v : init)
    if (v.size() != n || !v.allFinite())
      throw std::invalid_argument("fixed_point_solve: bad init vector");
  if (!(group_norm(init) > config.zero_guard))
    throw std::invalid_argument("fixed_point_solve: init must have positive group norm");

  // Block elimination: with M_j = (1+c) I - S~_j, the stationary system
  // reduces to (I + T) sigma = T R for the component sum sigma, with
  // T = sum_j M_j^{-1} S~_j, and then f_j = M_j^{-1} S~_j (R - sigma).
  std::vector<Eigen::VectorXd> f = std::move(init);
  Eigen::MatrixXd stilde(n, n), M(n, n), T(n, n), tsys(n, n);
  Eigen::VectorXd rhs(n), sigma(n), radj(n), v(n);
  std::vector<Eigen::PartialPivLU<Eigen::MatrixXd>> lus(d);

  for (int iter = 1; iter <= config.inner_max_iter; ++iter) {
    const double gn = group_norm(f);
    if (gn < config.zero_guard)
      throw std::runtime_error(
          "fixed_point_solve: iterate collapsed to zero group norm");
    const double c = thr / gn;

    T.setZero();
    for (int k = 0; k < d; ++k) {
      const Eigen::MatrixXd& S = smoothers.matrix(members[k]);
      stilde = S;
      stilde.rowwise() -=
          (smoothers.column_sums(members[k]) / nd).transpose();
      M = -stilde;
      M.diagonal().array() += 1.0 + c;
      lus[k].compute(M);
      T.noalias() += lus[k].solve(stilde);
    }
    rhs.noalias() = T * residual;
    tsys = T;
    tsys.diagonal().array() += 1.0;
    sigma = tsys.partialPivLu().solve(rhs);
    if (!sigma.allFinite())
      throw std::runtime_error("fixed_point_solve: linear solve failed");
    radj = residual - sigma;

    double diff2 = 0.0;
    double base2 = 0.0;
    for (int k = 0; k < d; ++k) {
      v = smooth_centered(smoothers.matrix(members[k]), radj);
      Eigen::VectorXd fk = lus[k].solve(v);
      if (!fk.allFinite())
        throw std::runtime_error("fixed_point_solve: linear solve failed");
      diff2 += (fk - f[k]).squaredNorm() / nd;
      base2 += f[k].squaredNorm() / nd;
      f[k] = std::move(fk);
    }
    const double rel = std::sqrt(diff2) / std::max(std::sqrt(base2), config.zero_guard);
    if (rel <= config.inner_tol) break;
  }
  for (auto& fk : f) fk.array() -= fk.mean();
  return f;
}

double stationarity_residual(const FittedModel& model, const Dataset& dataset,
                             const SmootherSet& smoothers, int group_index,
                             double lambda) {
  if (group_index < 0 || group_index >= static_cast<int>(model.groups.size()))
    throw std::invalid_argument("stationarity_residual: group index out of range");
  const auto& members = model.groups[group_index].members;
  const double gn = group_norm(model.f_hat, members);
  if (gn == 0.0)
    throw std::invalid_argument(
        "stationarity_residual: group is zero; its optimality is the threshold "
        "condition");
  const Eigen::Index n = dataset.n();
  const Eigen::VectorXd y_c = dataset.y.array() - model.y_mean;
  const Eigen::VectorXd R = partial_residual(y_c, model.f_hat, members);
  const GroupBlockSystem sys = build_group_system(R, smoothers, members);

  const int d = static_cast<int>(members.size());
  Eigen::VectorXd fg(n * d);
  for (int k = 0; k < d; ++k) fg.segment(k * n, n) = model.f_hat[members[k]];
  const double c = lambda * std::sqrt(static_cast<double>(d)) / gn;
  const double viol = (sys.j_hat * fg + c * fg - sys.q_applied).norm();
  return viol / std::max(sys.q_applied.norm(), 1e-12);
}

double objective_value(const Eigen::Ref<const Eigen::VectorXd>& y_centered,
                       const std::vector<Eigen::VectorXd>& f_hat,
                       const GroupStructure& structure, double lambda) {
  Eigen::VectorXd r = y_centered;
  for (const auto& fj : f_hat) r -= fj;
  const double fit = 0.5 * r.squaredNorm() / static_cast<double>(r.size());
  double penalty = 0.0;
  for (int gi = 0; gi < structure.size(); ++gi) {
    const auto& members = structure.group(gi).members;
    penalty += std::sqrt(static_cast<double>(members.size())) *
               group_norm(f_hat, members);
  }
  return fit + lambda * penalty;
}

FittedModel fit_backfit(const Dataset& dataset, const SmootherSet& smoothers,
                        const SolverConfig& config) {
  config.validate();
  if (smoothers.count() != dataset.p())
    throw std::invalid_argument("fit_backfit: one smoother per covariate required");
  const Eigen::Index n = dataset.n();
  const int p = static_cast<int>(dataset.p());
  const Eigen::VectorXd y_c = dataset.y.array() - dataset.y.mean();
  std::vector<Eigen::VectorXd> f = init_components(nullptr, p, n);
  Eigen::VectorXd total = component_sum(f, n);
  const GroupStructure structure = GroupStructure::singletons(p);

  bool converged = false;
  int sweeps = 0;
  double obj = 0.0;
  Eigen::VectorXd R(n);
  for (int sweep = 1; sweep <= config.outer_max_iter; ++sweep) {
    sweeps = sweep;
    double max_change = 0.0;
    for (int j = 0; j < p; ++j) {
      R = y_c - total;
      R += f[j];
      Eigen::VectorXd nf = smooth_centered(smoothers.matrix(j), R);
      nf.array() -= nf.mean();
      const double change = empirical_norm(nf - f[j]);
      if (change > max_change) max_change = change;
      total += nf - f[j];
      f[j] = std::move(nf);
    }
    obj = objective_value(y_c, f, structure, 0.0);
    if (max_change <= config.outer_tol) {
      converged = true;
      break;
    }
  }
  return finalize_model(dataset, smoothers, structure, 0.0, std::move(f), converged,
                        sweeps, obj);
}

FittedModel fit_spam(const Dataset& dataset, const SmootherSet& smoothers,
                     const SolverConfig& config,
                     const std::vector<Eigen::VectorXd>* warm_start) {
  config.validate();
  if (smoothers.count() != dataset.p())
    throw std::invalid_argument("fit_spam: one smoother per covariate required");
  const Eigen::Index n = dataset.n();
  const int p = static_cast<int>(dataset.p());
  const double lambda = config.lambda;
  const Eigen::VectorXd y_c = dataset.y.array() - dataset.y.mean();
  std::vector<Eigen::VectorXd> f = init_components(warm_start, p, n);
  Eigen::VectorXd total = component_sum(f, n);
  const GroupStructure structure = GroupStructure::singletons(p);

  bool converged = false;
  int sweeps = 0;
  double obj = 0.0;
  Eigen::VectorXd R(n);
  for (int sweep = 1; sweep <= config.outer_max_iter; ++sweep) {
    sweeps = sweep;
    double max_change = 0.0;
    for (int j = 0; j < p; ++j) {
      R = y_c - total;
      R += f[j];
      const Eigen::VectorXd s = smooth_centered(smoothers.matrix(j), R);
      const double nu = empirical_norm(s);
      Eigen::VectorXd nf;
      if (nu <= lambda) {
        nf = Eigen::VectorXd::Zero(n);
      } else {
        nf = (1.0 - lambda / nu) * s;
        nf.array() -= nf.mean();
      }
      const double change = empirical_norm(nf - f[j]);
      if (change > max_change) max_change = change;
      total += nf - f[j];
      f[j] = std::move(nf);
    }
    obj = objective_value(y_c, f, structure, lambda);
    if (max_change <= config.outer_tol) {
      if (lambda == 0.0 ||
          status_consistent(y_c, total, f, structure, smoothers, lambda)) {
        converged = true;
        break;
      }
    }
  }
  return finalize_model(dataset, smoothers, structure, lambda, std::move(f), converged,
                        sweeps, obj);
}

FittedModel fit_groupspam(const Dataset& dataset, const GroupStructure& structure,
                          const SmootherSet& smoothers, const SolverConfig& config,
                          const std::vector<Eigen::VectorXd>* warm_start) {
  config.validate();
  if (structure.p() != dataset.p())
    throw std::invalid_argument("fit_groupspam: group structure p mismatch");
  if (!structure.is_partition()) {
    const auto [a, b] = structure.first_overlapping_pair();
    throw std::invalid_argument("fit_groupspam: groups '" + structure.group(a).name +
                                "' and '" + structure.group(b).name +
                                "' overlap; use the overlap expansion");
  }
  if (smoothers.count() != dataset.p())
    throw std::invalid_argument("fit_groupspam: one smoother per covariate required");

  const Eigen::Index n = dataset.n();
  const int p = static_cast<int>(dataset.p());
  const double lambda = config.lambda;
  const Eigen::VectorXd y_c = dataset.y.array() - dataset.y.mean();
  std::vector<Eigen::VectorXd> f = init_components(warm_start, p, n);
  Eigen::VectorXd total = component_sum(f, n);

  bool converged = false;
  int sweeps = 0;
  double obj = 0.0;
  Eigen::VectorXd R(n);
  for (int sweep = 1; sweep <= config.outer_max_iter; ++sweep) {
    sweeps = sweep;
    double max_change = 0.0;
    for (int gi = 0; gi < structure.size(); ++gi) {
      const auto& members = structure.group(gi).members;
      const int d = static_cast<int>(members.size());
      R = y_c - total;
      for (int j : members) R += f[j];
      const auto th = group_threshold_check(R, smoothers, members, lambda);

      std::vector<Eigen::VectorXd> nf;
      if (th.is_zero) {
        nf.assign(d, Eigen::VectorXd::Zero(n));
      } else {
        std::vector<Eigen::VectorXd> init;
        if (d > 1) {
          init.reserve(d);
          if (group_norm(f, members) > config.zero_guard) {
            for (int j : members) init.push_back(f[j]);
          } else {
            // Freshly activated group: start from the soft-threshold value,
            // which is strictly nonzero once the threshold test passes.
            const double scale =
                1.0 - lambda * std::sqrt(static_cast<double>(d)) / th.omega_hat;
            for (int j : members)
              init.push_back(scale * smooth_centered(smoothers.matrix(j), R));
          }
        }
        nf = fixed_point_solve(R, smoothers, members, lambda, std::move(init), config);
      }

      for (int k = 0; k < d; ++k) {
        const int j = members[k];
        const double change = empirical_norm(nf[k] - f[j]);
        if (change > max_change) max_change = change;
        total += nf[k] - f[j];
        f[j] = std::move(nf[k]);
      }
    }
    obj = objective_value(y_c, f, structure, lambda);
    if (max_change <= config.outer_tol) {
      if (lambda == 0.0 ||
          status_consistent(y_c, total, f, structure, smoothers, lambda)) {
        converged = true;
        break;
      }
    }
  }
  return finalize_model(dataset, smoothers, structure, lambda, std::move(f), converged,
                        sweeps, obj);
}

}  // namespace gspam
