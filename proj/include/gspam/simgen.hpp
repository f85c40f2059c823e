#ifndef GSPAM_SIMGEN_HPP
#define GSPAM_SIMGEN_HPP

#include <cstdint>
#include <random>

#include "gspam/core.hpp"

namespace gspam {

// Derive an independent stream seed. Streams are split by hashing
// (seed, stream) through the splitmix64 finalizer, so replicates and data
// splits are reproducible independent of execution order.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t s = seed + 0x9e3779b97f4a7c15ull * (stream + 1);
  s = (s ^ (s >> 30)) * 0xbf58476d1ce4e5b9ull;
  s = (s ^ (s >> 27)) * 0x94d049bb133111ebull;
  return s ^ (s >> 31);
}

// mt19937_64 with explicit output mappings, so streams are bit-reproducible
// across standard library implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  // Uniform on [0, 1) with 53 random bits.
  double uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  double uniform(double a, double b) { return a + (b - a) * uniform(); }

  // Standard normal via Box-Muller; the paired draw is cached.
  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    const double u1 = 1.0 - uniform();  // (0, 1]
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * M_PI * u2;
    spare_ = r * std::sin(theta);
    have_spare_ = true;
    return r * std::cos(theta);
  }

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

// The eight benchmark signal components, indexed 1..8. Component 8 uses the
// Gaussian cumulative distribution function with mean 0.5 and standard
// deviation 0.8.
double true_component(int j, double x);

// Variance of component j under a uniform covariate on [-2.5, 2.5],
// computed by adaptive quadrature to absolute tolerance 1e-6. Independent
// of the generator path; used to calibrate the noise level.
double component_variance_oracle(int j);

// Sum of the eight component variances: the signal variance under
// independent covariates.
double signal_variance();

// Noise standard deviation for a signal-to-noise ratio of 3 at t = 0:
// sigma = sqrt(Var(signal))/3. The literal reading treats the ratio as
// sqrt(Var(signal))/sigma^2 = 3 instead.
double calibrated_sigma(bool literal_snr_reading = false);

// Compound-symmetry covariates: X_j = (W_j + t U)/(1 + t) with W_1..W_p and
// U i.i.d. uniform on [-2.5, 2.5], U shared within a sample. Pairwise
// correlation t^2/(1+t^2). Draw order per row: W_1..W_p, then U.
Eigen::MatrixXd gen_covariates(int n, int p, double t, Rng& rng);

// y_i = sum_{j=1..8} f_j(x_ij) + sigma * z_i with standard normal z.
Eigen::VectorXd gen_response(const Eigen::MatrixXd& x, double sigma, Rng& rng);

struct Scenario {
  int n = 150;
  int p = 200;
  double t = 0.0;
  std::uint64_t seed = 1;
  bool literal_snr = false;
};

struct ScenarioData {
  Dataset train;
  Dataset validation;
  Dataset test;
  std::vector<int> true_support;  // 0-based: covariates 0..7
  GroupStructure groups;          // consecutive blocks of 4
  double sigma;
};

// Three independent equal-sized splits (streams 0, 1, 2 of scenario.seed),
// the block-of-4 group structure, and the calibrated noise level.
ScenarioData make_scenario(const Scenario& scenario);

}  // namespace gspam

#endif
