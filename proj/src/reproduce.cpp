#include "gspam/reproduce.hpp"

#include <atomic>
#include <bit>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <thread>

#include "gspam/io.hpp"
#include "gspam/simgen.hpp"

namespace gspam {

namespace {

struct MeanSd {
  double mean = 0.0;
  double sd = 0.0;
};

MeanSd mean_sd(const std::vector<double>& v) {
  MeanSd out;
  if (v.empty()) return out;
  double sum = 0.0;
  for (double x : v) sum += x;
  out.mean = sum / static_cast<double>(v.size());
  if (v.size() < 2) return out;  // sd reported as 0 for a single replicate
  double ss = 0.0;
  for (double x : v) ss += (x - out.mean) * (x - out.mean);
  out.sd = std::sqrt(ss / static_cast<double>(v.size() - 1));
  return out;
}

std::uint64_t scenario_stream(int p, double t) {
  return mix_seed(static_cast<std::uint64_t>(p), std::bit_cast<std::uint64_t>(t));
}

}  // namespace

int resolve_threads(int requested) {
  const int hw = std::max(1u, std::thread::hardware_concurrency());
  int workers = requested > 0 ? requested : hw;
  if (const char* env = std::getenv("GSPAM_THREADS")) {
    const int cap = std::atoi(env);
    workers = std::min(workers, cap > 0 ? cap : hw);
  }
  return std::max(1, workers);
}

ReproduceResult run_reproduce(const ReproduceConfig& config) {
  if (config.replicates < 1)
    throw std::invalid_argument("run_reproduce: replicates must be >= 1");
  if (config.methods.empty())
    throw std::invalid_argument("run_reproduce: no methods requested");

  struct Task {
    int pi, ti, rep;
  };
  std::vector<Task> tasks;
  for (int pi = 0; pi < static_cast<int>(config.p_values.size()); ++pi)
    for (int ti = 0; ti < static_cast<int>(config.t_values.size()); ++ti)
      for (int rep = 0; rep < config.replicates; ++rep)
        tasks.push_back({pi, ti, rep});

  // outcome slot per (scenario, replicate, method)
  const int n_methods = static_cast<int>(config.methods.size());
  std::vector<ReplicateOutcome> outcomes(tasks.size() * n_methods);

  const auto run_task = [&](const Task& task) {
    const int p = config.p_values[task.pi];
    const double t = config.t_values[task.ti];
    const std::uint64_t rep_seed =
        mix_seed(mix_seed(config.seed, scenario_stream(p, t)),
                 static_cast<std::uint64_t>(task.rep));
    const std::size_t base =
        (static_cast<std::size_t>(task.pi) * config.t_values.size() + task.ti) *
            config.replicates * n_methods +
        static_cast<std::size_t>(task.rep) * n_methods;
    try {
      Scenario sc;
      sc.n = config.n;
      sc.p = p;
      sc.t = t;
      sc.seed = rep_seed;
      sc.literal_snr = config.literal_snr;
      const ScenarioData data = make_scenario(sc);
      for (int mi = 0; mi < n_methods; ++mi) {
        ReplicateOutcome& slot = outcomes[base + mi];
        try {
          PathConfig pc = config.path;
          pc.algorithm = config.methods[mi];
          const PathResult path =
              fit_path(data.train, data.validation, data.groups, pc, config.solver);
          const FittedModel& best = path.selected();
          const SupportMetrics sm = support_metrics(best, data.true_support);
          slot.ok = true;
          slot.precision = sm.precision;
          slot.recall = sm.recall;
          slot.size = sm.size;
          slot.mse = test_mse(best, data.test);
          for (int j = 0; j < 8; ++j) slot.selected[j] = sm.per_covariate_selected[j];
          slot.converged = best.converged;
          slot.lambda = best.lambda;
        } catch (const std::exception& e) {
          slot.ok = false;
          slot.error = e.what();
        }
      }
    } catch (const std::exception& e) {
      for (int mi = 0; mi < n_methods; ++mi) {
        outcomes[base + mi].ok = false;
        outcomes[base + mi].error = e.what();
      }
    }
  };

  const int workers =
      std::min(resolve_threads(config.threads), static_cast<int>(tasks.size()));
  if (workers <= 1) {
    for (const Task& task : tasks) run_task(task);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (int w = 0; w < workers; ++w)
      pool.emplace_back([&] {
        for (std::size_t i = next.fetch_add(1); i < tasks.size();
             i = next.fetch_add(1))
          run_task(tasks[i]);
      });
    for (auto& th : pool) th.join();
  }

  ReproduceResult result;
  for (int pi = 0; pi < static_cast<int>(config.p_values.size()); ++pi)
    for (int ti = 0; ti < static_cast<int>(config.t_values.size()); ++ti)
      for (int mi = 0; mi < n_methods; ++mi) {
        MethodAggregate row;
        row.p = config.p_values[pi];
        row.t = config.t_values[ti];
        row.method = config.methods[mi];
        std::vector<double> prec, rec, size, mse;
        for (int rep = 0; rep < config.replicates; ++rep) {
          const std::size_t base =
              (static_cast<std::size_t>(pi) * config.t_values.size() + ti) *
                  config.replicates * n_methods +
              static_cast<std::size_t>(rep) * n_methods;
          const ReplicateOutcome& o = outcomes[base + mi];
          row.outcomes.push_back(o);
          if (!o.ok) {
            ++row.replicates_failed;
            continue;
          }
          ++row.replicates_ok;
          prec.push_back(o.precision);
          rec.push_back(o.recall);
          size.push_back(static_cast<double>(o.size));
          mse.push_back(o.mse);
          for (int j = 0; j < 8; ++j)
            if (o.selected[j]) ++row.selection_counts[j];
        }
        const auto ms_p = mean_sd(prec);
        const auto ms_r = mean_sd(rec);
        const auto ms_s = mean_sd(size);
        const auto ms_m = mean_sd(mse);
        row.precision_mean = ms_p.mean;
        row.precision_sd = ms_p.sd;
        row.recall_mean = ms_r.mean;
        row.recall_sd = ms_r.sd;
        row.size_mean = ms_s.mean;
        row.size_sd = ms_s.sd;
        row.mse_mean = ms_m.mean;
        row.mse_sd = ms_m.sd;
        result.rows.push_back(std::move(row));
      }
  return result;
}

void write_reproduce_csv(const std::string& path, const ReproduceResult& result) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  out << "p,t,method,precision_mean,precision_sd,recall_mean,recall_sd,"
         "size_mean,size_sd,f1,f2,f3,f4,f5,f6,f7,f8,mse_mean,mse_sd,"
         "replicates,failed\n";
  for (const auto& row : result.rows) {
    out << row.p << "," << io::format_double(row.t) << "," << to_string(row.method)
        << "," << io::format_double(row.precision_mean) << ","
        << io::format_double(row.precision_sd) << ","
        << io::format_double(row.recall_mean) << ","
        << io::format_double(row.recall_sd) << ","
        << io::format_double(row.size_mean) << ","
        << io::format_double(row.size_sd);
    for (int j = 0; j < 8; ++j) out << "," << row.selection_counts[j];
    out << "," << io::format_double(row.mse_mean) << ","
        << io::format_double(row.mse_sd) << ","
        << (row.replicates_ok + row.replicates_failed) << "," << row.replicates_failed
        << "\n";
  }
  if (!out) throw std::runtime_error("write failed for '" + path + "'");
}

}  // namespace gspam
