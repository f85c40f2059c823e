#include "gspam/simgen.hpp"

#include <cmath>
#include <functional>
#include <stdexcept>

namespace gspam {

namespace {

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

double simpson(const std::function<double(double)>& f, double a, double m,
               double b, double fa, double fm, double fb) {
  return (b - a) / 6.0 * (fa + 4.0 * fm + fb);
}

double adaptive_simpson_rec(const std::function<double(double)>& f, double a,
                            double b, double fa, double fm, double fb, double whole,
                            double tol, int depth) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m);
  const double rm = 0.5 * (m + b);
  const double flm = f(lm);
  const double frm = f(rm);
  const double left = simpson(f, a, lm, m, fa, flm, fm);
  const double right = simpson(f, m, rm, b, fm, frm, fb);
  const double delta = left + right - whole;
  if (depth <= 0 || std::abs(delta) <= 15.0 * tol)
    return left + right + delta / 15.0;
  return adaptive_simpson_rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
         adaptive_simpson_rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

double adaptive_simpson(const std::function<double(double)>& f, double a, double b,
                        double tol) {
  const double m = 0.5 * (a + b);
  const double fa = f(a);
  const double fm = f(m);
  const double fb = f(b);
  const double whole = simpson(f, a, m, b, fa, fm, fb);
  return adaptive_simpson_rec(f, a, b, fa, fm, fb, whole, tol, 40);
}

constexpr double kLo = -2.5;
constexpr double kHi = 2.5;
constexpr double kQuadTol = 1e-6;

}  // namespace

double true_component(int j, double x) {
  switch (j) {
    case 1: return -2.0 * std::sin(2.0 * x);
    case 2: return x * x;
    case 3: return 2.0 * std::sin(x) / (2.0 - std::sin(x));
    case 4: return std::exp(-x);
    case 5: return x * x * x + 1.5 * (x - 1.0) * (x - 1.0);
    case 6: return x;
    case 7: return 3.0 * std::sin(std::exp(-0.5 * x));
    case 8: return -5.0 * normal_cdf((x - 0.5) / 0.8);
    default:
      throw std::invalid_argument("true_component: index must be in 1..8");
  }
}

double component_variance_oracle(int j) {
  const double density = 1.0 / (kHi - kLo);
  const auto f1 = [&](double x) { return density * true_component(j, x); };
  const auto f2 = [&](double x) {
    const double v = true_component(j, x);
    return density * v * v;
  };
  const double mean = adaptive_simpson(f1, kLo, kHi, kQuadTol);
  const double second = adaptive_simpson(f2, kLo, kHi, kQuadTol);
  return second - mean * mean;
}

double signal_variance() {
  double sum = 0.0;
  for (int j = 1; j <= 8; ++j) sum += component_variance_oracle(j);
  return sum;
}

double calibrated_sigma(bool literal_snr_reading) {
  const double var = signal_variance();
  if (literal_snr_reading) return std::sqrt(std::sqrt(var) / 3.0);
  return std::sqrt(var) / 3.0;
}

Eigen::MatrixXd gen_covariates(int n, int p, double t, Rng& rng) {
  if (n < 1 || p < 1) throw std::invalid_argument("gen_covariates: bad shape");
  if (t < 0) throw std::invalid_argument("gen_covariates: t must be >= 0");
  Eigen::MatrixXd x(n, p);
  const double denom = 1.0 + t;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < p; ++j) x(i, j) = rng.uniform(kLo, kHi);
    const double u = rng.uniform(kLo, kHi);
    for (int j = 0; j < p; ++j) x(i, j) = (x(i, j) + t * u) / denom;
  }
  return x;
}

Eigen::VectorXd gen_response(const Eigen::MatrixXd& x, double sigma, Rng& rng) {
  if (x.cols() < 8)
    throw std::invalid_argument("gen_response: need at least 8 covariates");
  if (sigma < 0) throw std::invalid_argument("gen_response: sigma must be >= 0");
  Eigen::VectorXd y(x.rows());
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    double signal = 0.0;
    for (int j = 1; j <= 8; ++j) signal += true_component(j, x(i, j - 1));
    y[i] = signal + sigma * rng.normal();
  }
  return y;
}

ScenarioData make_scenario(const Scenario& scenario) {
  if (scenario.p < 8)
    throw std::invalid_argument("make_scenario: p must be at least 8");
  if (scenario.p % 4 != 0)
    throw std::invalid_argument(
        "make_scenario: p must be divisible by 4 for the block structure");
  if (scenario.n < 2) throw std::invalid_argument("make_scenario: n too small");

  const double sigma = calibrated_sigma(scenario.literal_snr);
  const auto gen_split = [&](std::uint64_t stream) {
    Rng rng(mix_seed(scenario.seed, stream));
    Eigen::MatrixXd x = gen_covariates(scenario.n, scenario.p, scenario.t, rng);
    Eigen::VectorXd y = gen_response(x, sigma, rng);
    return Dataset(std::move(x), std::move(y));
  };

  ScenarioData data{gen_split(0),
                    gen_split(1),
                    gen_split(2),
                    {0, 1, 2, 3, 4, 5, 6, 7},
                    GroupStructure::blocks(scenario.p, 4),
                    sigma};
  return data;
}

}  // namespace gspam
