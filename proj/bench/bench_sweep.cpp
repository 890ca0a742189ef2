// Times the OpenMP sweep against the serial reference on the same grid and
// checks that both produce identical rows.
//
//   bench_sweep [H] [K] [threads]

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <omp.h>

#include "tmis/harness.hpp"

namespace {

template <class F>
double seconds(F&& f) {
  const auto start = std::chrono::steady_clock::now();
  f();
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

bool same_rows(const tmis::SweepResult& a, const tmis::SweepResult& b) {
  if (a.rows.size() != b.rows.size()) return false;
  for (std::size_t i = 0; i < a.rows.size(); ++i) {
    const auto& x = a.rows[i];
    const auto& y = b.rows[i];
    if (x.mean_estimate != y.mean_estimate || x.rmse != y.rmse || x.true_value != y.true_value) return false;
  }
  return true;
}

}  // namespace

int main(int argc, char** argv) {
  const int horizon = argc > 1 ? std::atoi(argv[1]) : 100;
  const std::size_t reps = argc > 2 ? std::strtoull(argv[2], nullptr, 10) : 20;
  const int threads = argc > 3 ? std::atoi(argv[3]) : omp_get_max_threads();

  tmis::SweepConfig config;
  config.estimators = {tmis::EstimatorKind::TMIS, tmis::EstimatorKind::SMIS};
  config.n_values = {256, 1024, 4096};
  config.horizons = {horizon};
  config.replications = reps;
  config.workers = threads;
  config.record_timing = false;

  tmis::SweepResult serial, parallel;
  const double t_serial = seconds([&] { serial = tmis::run_sweep_serial(config); });
  const double t_parallel = seconds([&] { parallel = tmis::run_sweep(config); });

  std::printf("grid: H=%d, n={256,1024,4096}, K=%zu, estimators={tmis,smis}\n", horizon, reps);
  std::printf("serial    %8.3f s\n", t_serial);
  std::printf("openmp    %8.3f s  (%d threads, speedup %.2fx)\n", t_parallel, threads, t_serial / t_parallel);
  std::printf("identical rows: %s\n", same_rows(serial, parallel) ? "yes" : "NO");
  return same_rows(serial, parallel) ? 0 : 1;
}
