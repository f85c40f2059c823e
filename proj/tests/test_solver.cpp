#include "gspam/solver.hpp"

#include <random>

#include "doctest.h"
#include "gspam/core.hpp"
#include "gspam/smoother.hpp"

using namespace gspam;

namespace {

Eigen::VectorXd uniform_column(int n, std::mt19937_64& rng, double lo = -2.5,
                               double hi = 2.5) {
  std::uniform_real_distribution<double> unif(lo, hi);
  Eigen::VectorXd v(n);
  for (int i = 0; i < n; ++i) v[i] = unif(rng);
  return v;
}

// Small additive-regression dataset: signal in the first two covariates.
Dataset make_dataset(int n, int p, unsigned seed, double noise_sd = 0.3) {
  std::mt19937_64 rng(seed);
  Eigen::MatrixXd x(n, p);
  for (int j = 0; j < p; ++j) x.col(j) = uniform_column(n, rng);
  std::normal_distribution<double> noise(0.0, noise_sd);
  Eigen::VectorXd y(n);
  for (int i = 0; i < n; ++i) {
    y[i] = std::sin(2.0 * x(i, 0)) + noise(rng);
    if (p > 1) y[i] += x(i, 1) * x(i, 1);
  }
  return Dataset(std::move(x), std::move(y));
}

Eigen::VectorXd centered_response(const Dataset& d) {
  return d.y.array() - d.y.mean();
}

bool group_is_zero(const FittedModel& m, const std::vector<int>& members) {
  for (int j : members)
    if ((m.f_hat[j].array() != 0.0).any()) return false;
  return true;
}

double max_component_diff(const std::vector<Eigen::VectorXd>& a,
                          const std::vector<Eigen::VectorXd>& b) {
  double worst = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j)
    worst = std::max(worst, (a[j] - b[j]).lpNorm<Eigen::Infinity>());
  return worst;
}

}  // namespace

TEST_CASE("partial_residual") {
  const int n = 10;
  Eigen::VectorXd y_c = Eigen::VectorXd::LinSpaced(n, -1.0, 1.0);
  std::vector<Eigen::VectorXd> f{Eigen::VectorXd::Constant(n, 0.5),
                                 Eigen::VectorXd::Constant(n, -0.25)};

  SUBCASE("all components zero") {
    std::vector<Eigen::VectorXd> zeros{Eigen::VectorXd::Zero(n),
                                       Eigen::VectorXd::Zero(n)};
    CHECK((partial_residual(y_c, zeros, {}) - y_c).lpNorm<Eigen::Infinity>() == 0.0);
  }
  SUBCASE("excluding everything returns y_c") {
    CHECK((partial_residual(y_c, f, {0, 1}) - y_c).lpNorm<Eigen::Infinity>() == 0.0);
  }
  SUBCASE("excluding nothing subtracts the full sum") {
    const Eigen::VectorXd r = partial_residual(y_c, f, {});
    CHECK((r - (y_c.array() - 0.25).matrix()).lpNorm<Eigen::Infinity>() < 1e-15);
  }
}

TEST_CASE("group_threshold_check") {
  const Dataset data = make_dataset(60, 3, 101);
  const SmootherSet smoothers = SmootherSet::build(data.x);
  const Eigen::VectorXd y_c = centered_response(data);

  SUBCASE("zero residual is always thresholded") {
    const auto th =
        group_threshold_check(Eigen::VectorXd::Zero(60), smoothers, {0, 1}, 0.5);
    CHECK(th.omega_hat == 0.0);
    CHECK(th.is_zero);
  }
  SUBCASE("lambda zero keeps any informative group") {
    const auto th = group_threshold_check(y_c, smoothers, {0, 1}, 0.0);
    CHECK(th.omega_hat > 0.0);
    CHECK_FALSE(th.is_zero);
  }
  SUBCASE("singleton reduces to the per-component norm condition") {
    const Eigen::VectorXd s = smooth_centered(smoothers.matrix(0), y_c);
    const double nu = empirical_norm(s);
    const auto th = group_threshold_check(y_c, smoothers, {0}, nu * 1.0001);
    CHECK(th.omega_hat == doctest::Approx(nu).epsilon(1e-14));
    CHECK(th.is_zero);
    CHECK_FALSE(group_threshold_check(y_c, smoothers, {0}, nu * 0.9999).is_zero);
  }
}

TEST_CASE("group block system layout") {
  const Dataset data = make_dataset(40, 3, 102);
  const SmootherSet smoothers = SmootherSet::build(data.x);
  const Eigen::VectorXd y_c = centered_response(data);
  const std::vector<int> members{0, 2};
  const GroupBlockSystem sys = build_group_system(y_c, smoothers, members);
  const int n = 40;
  REQUIRE(sys.j_hat.rows() == 2 * n);
  REQUIRE(sys.q_applied.size() == 2 * n);

  for (int bj = 0; bj < 2; ++bj) {
    Eigen::MatrixXd stilde = smoothers.matrix(members[bj]);
    stilde.rowwise() -=
        (smoothers.column_sums(members[bj]) / double(n)).transpose();
    for (int bk = 0; bk < 2; ++bk) {
      const Eigen::MatrixXd block = sys.j_hat.block(bj * n, bk * n, n, n);
      if (bj == bk)
        CHECK((block - Eigen::MatrixXd::Identity(n, n)).lpNorm<Eigen::Infinity>() ==
              0.0);
      else
        CHECK((block - stilde).lpNorm<Eigen::Infinity>() == 0.0);
    }
    const Eigen::VectorXd q =
        smooth_centered(smoothers.matrix(members[bj]), y_c);
    CHECK((sys.q_applied.segment(bj * n, n) - q).lpNorm<Eigen::Infinity>() == 0.0);
  }
}

TEST_CASE("fixed_point_solve") {
  const int n = 60;
  const Dataset data = make_dataset(n, 4, 103);
  const SmootherSet smoothers = SmootherSet::build(data.x);
  const Eigen::VectorXd y_c = centered_response(data);
  SolverConfig cfg;
  cfg.inner_tol = 1e-10;
  cfg.inner_max_iter = 500;

  SUBCASE("singleton matches the soft-threshold closed form") {
    const Eigen::VectorXd s = smooth_centered(smoothers.matrix(0), y_c);
    const double nu = empirical_norm(s);
    const double lambda = 0.4 * nu;
    const auto f = fixed_point_solve(y_c, smoothers, {0}, lambda, {}, cfg);
    REQUIRE(f.size() == 1);
    Eigen::VectorXd expect = (1.0 - lambda / nu) * s;
    expect.array() -= expect.mean();
    CHECK((f[0] - expect).lpNorm<Eigen::Infinity>() < cfg.inner_tol);
  }

  SUBCASE("one elimination iteration equals the direct stacked solve") {
    const std::vector<int> members{0, 1, 2};
    const auto th = group_threshold_check(y_c, smoothers, members, 0.0);
    const double lambda = 0.3 * th.omega_hat / std::sqrt(3.0);

    std::vector<Eigen::VectorXd> init;
    for (int j : members)
      init.push_back(smooth_centered(smoothers.matrix(j), y_c));

    SolverConfig one = cfg;
    one.inner_max_iter = 1;
    const auto stepped =
        fixed_point_solve(y_c, smoothers, members, lambda, init, one);

    const double c = lambda * std::sqrt(3.0) / group_norm(init);
    GroupBlockSystem sys = build_group_system(y_c, smoothers, members);
    sys.j_hat.diagonal().array() += c;
    const Eigen::VectorXd sol = sys.j_hat.partialPivLu().solve(sys.q_applied);
    for (int k = 0; k < 3; ++k) {
      Eigen::VectorXd expect = sol.segment(k * n, n);
      expect.array() -= expect.mean();
      CHECK((stepped[k] - expect).lpNorm<Eigen::Infinity>() < 1e-9);
    }
  }

  SUBCASE("converged solution satisfies the stationary system") {
    const std::vector<int> members{0, 1};
    const auto th = group_threshold_check(y_c, smoothers, members, 0.0);
    const double lambda = 0.25 * th.omega_hat / std::sqrt(2.0);
    std::vector<Eigen::VectorXd> init;
    for (int j : members)
      init.push_back(smooth_centered(smoothers.matrix(j), y_c));
    const auto f = fixed_point_solve(y_c, smoothers, members, lambda, init, cfg);

    Eigen::VectorXd fg(2 * n);
    fg << f[0], f[1];
    const double c = lambda * std::sqrt(2.0) / (fg.norm() / std::sqrt(double(n)));
    const GroupBlockSystem sys = build_group_system(y_c, smoothers, members);
    const double rel = (sys.j_hat * fg + c * fg - sys.q_applied).norm() /
                       sys.q_applied.norm();
    CHECK(rel < 10 * cfg.inner_tol);
  }

  SUBCASE("lambda 0 performs one exact direct solve") {
    const std::vector<int> members{0, 1};
    const auto f = fixed_point_solve(y_c, smoothers, members, 0.0, {}, cfg);
    Eigen::VectorXd fg(2 * n);
    fg << f[0], f[1];
    const GroupBlockSystem sys = build_group_system(y_c, smoothers, members);
    CHECK((sys.j_hat * fg - sys.q_applied).norm() < 1e-8 * sys.q_applied.norm());
  }

  SUBCASE("thresholded group is rejected") {
    const auto th = group_threshold_check(y_c, smoothers, {0, 1}, 0.0);
    const double lambda = 2.0 * th.omega_hat / std::sqrt(2.0);
    CHECK_THROWS_AS(fixed_point_solve(y_c, smoothers, {0, 1}, lambda, {}, cfg),
                    std::invalid_argument);
  }
}

TEST_CASE("fixed_point_solve matches soft thresholding when cross-smoothing vanishes") {
  // Balanced two-factor design with far-apart levels: each smoother averages
  // within its own factor's level sets, so smoothing a balanced function of
  // the other factor gives numerically zero.
  const int levels = 4;
  const int n = levels * levels;
  Eigen::MatrixXd x(n, 2);
  for (int i = 0; i < n; ++i) {
    x(i, 0) = 10.0 * (i / levels);
    x(i, 1) = 10.0 * (i % levels);
  }
  Eigen::VectorXd y(n);
  for (int i = 0; i < n; ++i)
    y[i] = std::sin(0.2 * x(i, 0)) + 0.05 * x(i, 1) - 0.002 * x(i, 1) * x(i, 1);
  const Dataset data(x, y);
  const Eigen::VectorXd bw = Eigen::VectorXd::Constant(2, 0.5);
  const SmootherSet smoothers = SmootherSet::build(data.x, bw);
  const Eigen::VectorXd y_c = centered_response(data);

  const std::vector<int> members{0, 1};
  const auto th = group_threshold_check(y_c, smoothers, members, 0.0);
  const double lambda = 0.5 * th.omega_hat / std::sqrt(2.0);

  std::vector<Eigen::VectorXd> init;
  for (int j : members) init.push_back(smooth_centered(smoothers.matrix(j), y_c));
  SolverConfig cfg;
  cfg.inner_tol = 1e-9;
  cfg.inner_max_iter = 500;
  const auto f = fixed_point_solve(y_c, smoothers, members, lambda, init, cfg);

  const double scale = 1.0 - lambda * std::sqrt(2.0) / th.omega_hat;
  for (int k = 0; k < 2; ++k) {
    const Eigen::VectorXd expect =
        scale * smooth_centered(smoothers.matrix(members[k]), y_c);
    CHECK((f[k] - expect).lpNorm<Eigen::Infinity>() < 1e-6);
  }
}

TEST_CASE("fit_backfit") {
  SUBCASE("zero response gives the zero model") {
    Eigen::MatrixXd x(30, 2);
    std::mt19937_64 rng(104);
    x.col(0) = uniform_column(30, rng);
    x.col(1) = uniform_column(30, rng);
    const Dataset data(x, Eigen::VectorXd::Constant(30, 3.25));
    const SmootherSet smoothers = SmootherSet::build(data.x);
    const FittedModel m = fit_backfit(data, smoothers, SolverConfig{});
    CHECK(m.converged);
    CHECK(m.active_set.empty());
    for (const auto& f : m.f_hat) CHECK(f.isZero(0.0));
    CHECK(m.y_mean == doctest::Approx(3.25));
  }

  SUBCASE("single covariate reaches its fixed point in one update") {
    const Dataset data = make_dataset(50, 1, 105);
    const SmootherSet smoothers = SmootherSet::build(data.x);
    const FittedModel m = fit_backfit(data, smoothers, SolverConfig{});
    CHECK(m.converged);
    Eigen::VectorXd expect =
        smooth_centered(smoothers.matrix(0), centered_response(data));
    expect.array() -= expect.mean();
    CHECK((m.f_hat[0] - expect).lpNorm<Eigen::Infinity>() < 1e-14);
  }

  SUBCASE("duplicated columns: the component sum solves the stacked equation") {
    std::mt19937_64 rng(106);
    Eigen::MatrixXd x(80, 2);
    x.col(0) = uniform_column(80, rng);
    x.col(1) = x.col(0);
    Eigen::VectorXd y(80);
    for (int i = 0; i < 80; ++i) y[i] = std::sin(2.0 * x(i, 0));
    const Dataset data(x, y);
    const SmootherSet smoothers = SmootherSet::build(data.x);
    SolverConfig cfg;
    cfg.outer_tol = 1e-10;
    cfg.outer_max_iter = 2000;
    const FittedModel m = fit_backfit(data, smoothers, cfg);

    Eigen::MatrixXd stilde = smoothers.matrix(0);
    stilde.rowwise() -= (smoothers.column_sums(0) / 80.0).transpose();
    const Eigen::VectorXd y_c = centered_response(data);
    const Eigen::VectorXd sum = m.f_hat[0] + m.f_hat[1];
    const Eigen::VectorXd lhs = sum + stilde * sum;
    const Eigen::VectorXd rhs = 2.0 * (stilde * y_c);
    CHECK((lhs - rhs).lpNorm<Eigen::Infinity>() < 1e-6);
  }
}

TEST_CASE("fit_spam") {
  const Dataset data = make_dataset(80, 5, 107);
  const SmootherSet smoothers = SmootherSet::build(data.x);
  const Eigen::VectorXd y_c = centered_response(data);

  SUBCASE("lambda 0 equals backfit") {
    SolverConfig cfg;
    const FittedModel spam = fit_spam(data, smoothers, cfg);
    const FittedModel back = fit_backfit(data, smoothers, cfg);
    CHECK(max_component_diff(spam.f_hat, back.f_hat) < 1e-12);
    CHECK(spam.outer_iterations == back.outer_iterations);
  }

  SUBCASE("full shrinkage above the largest component norm") {
    double max_nu = 0.0;
    for (int j = 0; j < 5; ++j)
      max_nu = std::max(max_nu,
                        empirical_norm(smooth_centered(smoothers.matrix(j), y_c)));
    SolverConfig cfg;
    cfg.lambda = 1.0001 * max_nu;
    const FittedModel m = fit_spam(data, smoothers, cfg);
    CHECK(m.converged);
    CHECK(m.active_set.empty());
  }

  SUBCASE("one covariate at half the unpenalized norm shrinks by half") {
    const Dataset single = make_dataset(60, 1, 108);
    const SmootherSet s1 = SmootherSet::build(single.x);
    const Eigen::VectorXd s =
        smooth_centered(s1.matrix(0), centered_response(single));
    const double nu = empirical_norm(s);
    SolverConfig cfg;
    cfg.lambda = 0.5 * nu;
    const FittedModel m = fit_spam(single, s1, cfg);
    CHECK(m.converged);
    Eigen::VectorXd expect = 0.5 * s;
    expect.array() -= expect.mean();
    CHECK((m.f_hat[0] - expect).lpNorm<Eigen::Infinity>() < 1e-12);
  }
}

TEST_CASE("fit_groupspam core behaviour") {
  const Dataset data = make_dataset(80, 8, 109, 0.5);
  const SmootherSet smoothers = SmootherSet::build(data.x);
  const GroupStructure blocks = GroupStructure::blocks(8, 4);
  const Eigen::VectorXd y_c = centered_response(data);

  SUBCASE("overlapping structure is rejected with the offending pair") {
    const GroupStructure bad({{"a", {0, 1}}, {"b", {1, 2, 3, 4, 5, 6, 7}}}, 8);
    CHECK_THROWS_WITH_AS(fit_groupspam(data, bad, smoothers, SolverConfig{}),
                         doctest::Contains("overlap"), std::invalid_argument);
  }

  SUBCASE("singleton groups reproduce spam across the path") {
    const GroupStructure singles = GroupStructure::singletons(8);
    double max_nu = 0.0;
    for (int j = 0; j < 8; ++j)
      max_nu = std::max(max_nu,
                        empirical_norm(smooth_centered(smoothers.matrix(j), y_c)));
    for (double frac : {0.0, 0.1, 0.35, 0.7}) {
      SolverConfig cfg;
      cfg.lambda = frac * max_nu;
      const FittedModel g = fit_groupspam(data, singles, smoothers, cfg);
      const FittedModel s = fit_spam(data, smoothers, cfg);
      CHECK(max_component_diff(g.f_hat, s.f_hat) < 1e-12);
      CHECK(g.active_set == s.active_set);
    }
  }

  SUBCASE("lambda 0 with real groups matches backfit") {
    const Dataset small = make_dataset(60, 4, 110, 0.2);
    const SmootherSet sm = SmootherSet::build(small.x);
    SolverConfig cfg;
    cfg.outer_tol = 1e-11;
    cfg.outer_max_iter = 3000;
    cfg.inner_tol = 1e-12;
    const FittedModel g =
        fit_groupspam(small, GroupStructure::blocks(4, 2), sm, cfg);
    const FittedModel b = fit_backfit(small, sm, cfg);
    CHECK(g.converged);
    CHECK(b.converged);
    CHECK(max_component_diff(g.f_hat, b.f_hat) < 1e-8);
  }

  SUBCASE("a group fit keeps signal groups and zeroes noise groups") {
    SolverConfig cfg;
    cfg.outer_tol = 1e-8;
    cfg.outer_max_iter = 400;
    const auto th0 = group_threshold_check(y_c, smoothers, blocks.group(0).members, 0.0);
    cfg.lambda = 0.35 * th0.omega_hat / 2.0;  // sqrt(d)=2
    const FittedModel m = fit_groupspam(data, blocks, smoothers, cfg);
    CHECK(m.converged);
    CHECK_FALSE(group_is_zero(m, blocks.group(0).members));

    // Every fitted component has empirical mean ~0 and the zero/nonzero
    // status agrees with the threshold condition on final residuals.
    for (const auto& f : m.f_hat) CHECK(std::abs(f.mean()) <= 1e-10);
    for (int gi = 0; gi < blocks.size(); ++gi) {
      const auto& members = blocks.group(gi).members;
      const Eigen::VectorXd r = partial_residual(y_c, m.f_hat, members);
      const auto th = group_threshold_check(r, smoothers, members, cfg.lambda);
      const double thr = cfg.lambda * 2.0;
      if (group_is_zero(m, members))
        CHECK(th.omega_hat <= thr + kThresholdBand);
      else {
        CHECK(th.omega_hat > thr - kThresholdBand);
        const double sr =
            stationarity_residual(m, data, smoothers, gi, cfg.lambda);
        CHECK(sr <= 10.0 * cfg.inner_tol);
      }
    }
  }

  SUBCASE("determinism: identical runs produce identical bits") {
    SolverConfig cfg;
    cfg.lambda = 0.2;
    const FittedModel a = fit_groupspam(data, blocks, smoothers, cfg);
    const FittedModel b = fit_groupspam(data, blocks, smoothers, cfg);
    CHECK(max_component_diff(a.f_hat, b.f_hat) == 0.0);
    CHECK(a.objective == b.objective);
  }
}

TEST_CASE("stationarity_residual") {
  const Dataset data = make_dataset(70, 4, 112, 0.2);
  const SmootherSet smoothers = SmootherSet::build(data.x);
  const GroupStructure blocks = GroupStructure::blocks(4, 2);
  const Eigen::VectorXd y_c = centered_response(data);

  SolverConfig cfg;
  cfg.outer_tol = 1e-8;
  cfg.inner_tol = 1e-8;
  cfg.outer_max_iter = 500;
  cfg.inner_max_iter = 500;
  const auto th0 = group_threshold_check(y_c, smoothers, {0, 1}, 0.0);
  cfg.lambda = 0.2 * th0.omega_hat / std::sqrt(2.0);
  const FittedModel m = fit_groupspam(data, blocks, smoothers, cfg);
  REQUIRE_FALSE(group_is_zero(m, {0, 1}));

  const double base = stationarity_residual(m, data, smoothers, 0, cfg.lambda);
  CHECK(base <= 10.0 * cfg.inner_tol);

  SUBCASE("perturbing a component strictly increases the residual") {
    FittedModel bumped = m;
    bumped.f_hat[0].array() += 0.1;
    const double worse = stationarity_residual(bumped, data, smoothers, 0, cfg.lambda);
    CHECK(worse > base);
  }

  SUBCASE("zero groups are rejected") {
    FittedModel zeroed = m;
    zeroed.f_hat[0].setZero();
    zeroed.f_hat[1].setZero();
    CHECK_THROWS_AS(stationarity_residual(zeroed, data, smoothers, 0, cfg.lambda),
                    std::invalid_argument);
  }

  SUBCASE("unpenalized converged fit satisfies the linear system tightly") {
    SolverConfig cfg0;
    cfg0.lambda = 0.0;
    cfg0.outer_tol = 1e-11;
    cfg0.outer_max_iter = 3000;
    const FittedModel m0 = fit_groupspam(data, blocks, smoothers, cfg0);
    CHECK(m0.converged);
    CHECK(stationarity_residual(m0, data, smoothers, 0, 0.0) <= 1e-8);
  }
}
