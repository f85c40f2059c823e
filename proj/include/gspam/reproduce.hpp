#ifndef GSPAM_REPRODUCE_HPP
#define GSPAM_REPRODUCE_HPP

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "gspam/core.hpp"
#include "gspam/modelsel.hpp"

namespace gspam {

// Worker count: `requested` (0 = auto) capped by the GSPAM_THREADS
// environment variable (0 = auto there as well). Always at least 1.
int resolve_threads(int requested);

struct ReproduceConfig {
  std::vector<int> p_values{200};
  std::vector<double> t_values{0.0};
  int n = 150;
  int replicates = 10;
  std::uint64_t seed = 1;
  std::vector<Algorithm> methods{Algorithm::kSpam, Algorithm::kGroupSpam};
  PathConfig path;      // algorithm is overridden per method
  SolverConfig solver;  // lambda is overridden along the path
  bool literal_snr = false;
  int threads = 0;
};

struct ReplicateOutcome {
  bool ok = false;
  std::string error;
  double precision = 0.0;
  double recall = 0.0;
  int size = 0;
  double mse = 0.0;
  std::array<bool, 8> selected{};  // the eight signal covariates
  bool converged = false;
  double lambda = 0.0;
};

struct MethodAggregate {
  int p = 0;
  double t = 0.0;
  Algorithm method = Algorithm::kGroupSpam;
  int replicates_ok = 0;
  int replicates_failed = 0;
  double precision_mean = 0.0, precision_sd = 0.0;
  double recall_mean = 0.0, recall_sd = 0.0;
  double size_mean = 0.0, size_sd = 0.0;
  double mse_mean = 0.0, mse_sd = 0.0;
  std::array<int, 8> selection_counts{};
  std::vector<ReplicateOutcome> outcomes;  // indexed by replicate
};

struct ReproduceResult {
  std::vector<MethodAggregate> rows;
};

// Run the simulation benchmark: for each (p, t) scenario and replicate,
// generate train/validation/test splits, fit the regularization path per
// method with validation selection, and aggregate support metrics and test
// MSE. Replicates run on worker threads; every replicate owns its seed
// stream, so results are independent of scheduling.
ReproduceResult run_reproduce(const ReproduceConfig& config);

// Aggregate CSV: one row per (p, t, method) with mean/sd of precision,
// recall, size and MSE plus selection counts for the eight signal
// covariates. Deterministic given the config.
void write_reproduce_csv(const std::string& path, const ReproduceResult& result);

}  // namespace gspam

#endif
