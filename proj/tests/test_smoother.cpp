#include "gspam/smoother.hpp"

#include <random>

#include "doctest.h"
#include "gspam/core.hpp"

using gspam::build_smoother;
using gspam::plugin_bandwidth;
using gspam::smooth;

namespace {

Eigen::VectorXd random_column(int n, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(-2.5, 2.5);
  Eigen::VectorXd v(n);
  for (int i = 0; i < n; ++i) v[i] = unif(rng);
  return v;
}

// Two-pass sample standard deviation, independent of the implementation.
double sample_sd(const Eigen::VectorXd& v) {
  const double mean = v.mean();
  double ss = 0.0;
  for (int i = 0; i < v.size(); ++i) ss += (v[i] - mean) * (v[i] - mean);
  return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

}  // namespace

TEST_CASE("plugin_bandwidth") {
  SUBCASE("unit sd at n=150") {
    Eigen::VectorXd col = random_column(150, 11);
    col /= sample_sd(col);  // sd exactly 1
    const double h = plugin_bandwidth(col);
    CHECK(h == doctest::Approx(0.6 * std::pow(150.0, -0.2)).epsilon(1e-10));
    CHECK(h == doctest::Approx(0.22026).epsilon(1e-4));
  }
  SUBCASE("linear in sd") {
    Eigen::VectorXd col = random_column(150, 12);
    const double h1 = plugin_bandwidth(col);
    const double h2 = plugin_bandwidth((2.0 * col).eval());
    CHECK(h2 == doctest::Approx(2.0 * h1).epsilon(1e-12));
  }
  SUBCASE("matches the formula on arbitrary columns") {
    Eigen::VectorXd col = random_column(73, 13);
    CHECK(plugin_bandwidth(col) ==
          doctest::Approx(0.6 * sample_sd(col) * std::pow(73.0, -0.2)).epsilon(1e-12));
  }
  SUBCASE("constant column errors") {
    Eigen::VectorXd flat = Eigen::VectorXd::Constant(20, 1.5);
    CHECK_THROWS_AS(plugin_bandwidth(flat), std::invalid_argument);
  }
}

TEST_CASE("build_smoother small cases") {
  SUBCASE("single point") {
    Eigen::VectorXd one(1);
    one << 0.7;
    const Eigen::MatrixXd S = build_smoother(one, 0.3);
    REQUIRE(S.rows() == 1);
    CHECK(S(0, 0) == doctest::Approx(1.0));
  }
  SUBCASE("coincident points split evenly") {
    Eigen::VectorXd two = Eigen::VectorXd::Constant(2, 1.0);
    const Eigen::MatrixXd S = build_smoother(two, 0.5);
    CHECK(S.minCoeff() == doctest::Approx(0.5));
    CHECK(S.maxCoeff() == doctest::Approx(0.5));
  }
  SUBCASE("hand-computed kernel weights at distance h") {
    const double h = 0.4;
    Eigen::VectorXd col(2);
    col << 0.0, h;
    const Eigen::MatrixXd S = build_smoother(col, h);
    const double e = std::exp(-0.5);
    CHECK(S(0, 0) == doctest::Approx(1.0 / (1.0 + e)).epsilon(1e-12));
    CHECK(S(0, 1) == doctest::Approx(e / (1.0 + e)).epsilon(1e-12));
    CHECK(S(0, 0) == doctest::Approx(0.6225).epsilon(1e-3));
    CHECK(S(0, 1) == doctest::Approx(0.3775).epsilon(1e-3));
  }
  SUBCASE("invalid bandwidth") {
    Eigen::VectorXd col = random_column(5, 14);
    CHECK_THROWS_AS(build_smoother(col, 0.0), std::invalid_argument);
  }
}

TEST_CASE("smoother matrices are row-stochastic and nonnegative") {
  for (unsigned seed : {21u, 22u, 23u}) {
    const Eigen::VectorXd col = random_column(60, seed);
    const Eigen::MatrixXd S = build_smoother(col, plugin_bandwidth(col));
    CHECK(S.minCoeff() >= 0.0);
    const Eigen::VectorXd row_sums = S.rowwise().sum();
    CHECK((row_sums.array() - 1.0).abs().maxCoeff() < 1e-10);
    // constants are preserved
    const Eigen::VectorXd ones = Eigen::VectorXd::Ones(60);
    CHECK((smooth(S, ones) - ones).lpNorm<Eigen::Infinity>() < 1e-12);
  }
}

TEST_CASE("reversing the sample order conjugates the smoother") {
  const Eigen::VectorXd col = random_column(40, 31);
  const double h = plugin_bandwidth(col);
  const Eigen::MatrixXd S = build_smoother(col, h);
  const Eigen::VectorXd rev = col.reverse();
  const Eigen::MatrixXd S_rev = build_smoother(rev, h);
  // S_rev should equal P S P^T for the reversal permutation P.
  Eigen::MatrixXd conj(40, 40);
  for (int i = 0; i < 40; ++i)
    for (int k = 0; k < 40; ++k) conj(i, k) = S(39 - i, 39 - k);
  CHECK((S_rev - conj).lpNorm<Eigen::Infinity>() < 1e-12);
}

TEST_CASE("smooth") {
  const Eigen::VectorXd r = random_column(25, 41);
  SUBCASE("identity smoother") {
    const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(25, 25);
    CHECK((smooth(I, r) - r).lpNorm<Eigen::Infinity>() == 0.0);
  }
  SUBCASE("coincident-point smoother averages") {
    Eigen::VectorXd two = Eigen::VectorXd::Constant(2, 3.0);
    const Eigen::MatrixXd S = build_smoother(two, 1.0);
    Eigen::VectorXd v(2);
    v << 0.0, 2.0;
    const Eigen::VectorXd out = smooth(S, v);
    CHECK(out[0] == doctest::Approx(1.0));
    CHECK(out[1] == doctest::Approx(1.0));
  }
  SUBCASE("dimension mismatch") {
    const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(4, 4);
    CHECK_THROWS_AS(smooth(I, r), std::invalid_argument);
  }
}

TEST_CASE("SmootherSet building and aliasing") {
  Eigen::MatrixXd x(30, 3);
  x.col(0) = random_column(30, 51);
  x.col(1) = random_column(30, 52);
  x.col(2) = random_column(30, 53);
  const gspam::SmootherSet set = gspam::SmootherSet::build(x);
  CHECK(set.count() == 3);
  CHECK(set.n() == 30);
  for (int j = 0; j < 3; ++j) {
    CHECK(set.bandwidth(j) == doctest::Approx(plugin_bandwidth(x.col(j))));
    CHECK((set.train_column(j) - x.col(j)).lpNorm<Eigen::Infinity>() == 0.0);
    CHECK((set.column_sums(j) - set.matrix(j).colwise().sum().transpose())
              .lpNorm<Eigen::Infinity>() == 0.0);
  }
  const gspam::SmootherSet dup = set.aliased({0, 1, 1, 2});
  CHECK(dup.count() == 4);
  CHECK(&dup.matrix(1) == &dup.matrix(2));  // shared storage, not a copy
  CHECK((dup.matrix(3) - set.matrix(2)).lpNorm<Eigen::Infinity>() == 0.0);
}

TEST_CASE("predict_component") {
  const int n = 20;
  Eigen::MatrixXd x(n, 2);
  x.col(0) = Eigen::VectorXd::LinSpaced(n, -2.0, 2.0);
  x.col(1) = random_column(n, 61);

  gspam::FittedModel model;
  model.train_x = x;
  model.bandwidths = Eigen::VectorXd::Constant(2, 0.01);
  model.f_hat = {x.col(0).array().sin().matrix(), Eigen::VectorXd::Zero(n)};
  model.active_set = {0};
  model.y_mean = 0.0;

  SUBCASE("zero component predicts zeros") {
    const Eigen::VectorXd out = gspam::predict_component(model, 1, x.col(1));
    CHECK(out.isZero(0.0));
  }
  SUBCASE("small bandwidth recovers stored values at training points") {
    const Eigen::VectorXd out = gspam::predict_component(model, 0, x.col(0));
    CHECK((out - model.f_hat[0]).lpNorm<Eigen::Infinity>() < 1e-8);
  }
  SUBCASE("constant stored values stay constant, including far queries") {
    model.f_hat[0] = Eigen::VectorXd::Constant(n, 2.5);
    Eigen::VectorXd queries(3);
    queries << -50.0, 0.3, 50.0;
    const Eigen::VectorXd out = gspam::predict_component(model, 0, queries);
    CHECK((out.array() - 2.5).abs().maxCoeff() < 1e-12);
  }
  SUBCASE("index out of range") {
    CHECK_THROWS_AS(gspam::predict_component(model, 5, x.col(0)),
                    std::invalid_argument);
  }
}
