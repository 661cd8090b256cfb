// Benchmarks the OpenMP sample-evaluation kernels against the serial
// reference on a logistic-regression-sized workload and checks that both
// paths agree bitwise.

#include <chrono>
#include <cstdio>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "ssvb/ascent.hpp"
#include "ssvb/logistic.hpp"
#include "ssvb/special_functions.hpp"

using namespace ssvb;

namespace {

double now_seconds() {
  using clock = std::chrono::steady_clock;
  return std::chrono::duration<double>(clock::now().time_since_epoch()).count();
}

LogisticDataset synthetic_dataset(long n, int features, Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Mat X(n, features);
  Vec y(n);
  Vec truth(features);
  for (int j = 0; j < features; ++j) truth[j] = normal(rng);
  for (long i = 0; i < n; ++i) {
    for (int j = 0; j < features; ++j) X(i, j) = normal(rng);
    const double z = X.row(i).head(features).dot(truth);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    y[i] = unif(rng) < sigmoid(z) ? 1.0 : -1.0;
  }
  return LogisticDataset::from_features(X, y);
}

template <typename Fn>
double time_best_of(int reps, Fn&& fn) {
  double best = 1e300;
  for (int r = 0; r < reps; ++r) {
    const double t0 = now_seconds();
    fn();
    best = std::min(best, now_seconds() - t0);
  }
  return best;
}

}  // namespace

int main() {
#ifdef _OPENMP
  std::printf("OpenMP enabled, max threads = %d\n", omp_get_max_threads());
#else
  std::printf("OpenMP disabled (serial build)\n");
#endif
  std::printf("%-28s %10s %12s %12s %9s %s\n", "workload", "samples",
              "serial[ms]", "parallel[ms]", "speedup", "bitwise");

  Rng rng(42);
  for (const auto& [n_rows, dim] : {std::pair<long, int>{200, 8},
                                    {768, 8},
                                    {569, 30}}) {
    const LogisticDataset data = synthetic_dataset(n_rows, dim, rng);
    const LogisticModelSpec spec;
    const ObjectiveSplit split =
        logistic_objective(data, spec, LogisticCv::taylor);
    GaussianVariational q = GaussianVariational::isotropic(data.dim(), 0.1);
    const ControlVariate cv = split.make_cv(q);

    for (const long S : {256L, 2048L, 16384L}) {
      const std::vector<Vec> samples = draw_samples(q, S, rng);
      SampleBatch serial, parallel;
      const double t_serial = time_best_of(3, [&] {
        serial = evaluate_batch_serial(split.f, &cv.g, q, samples);
      });
      const double t_parallel = time_best_of(3, [&] {
        parallel = evaluate_batch(split.f, &cv.g, q, samples);
      });
      const bool bitwise = serial.f == parallel.f && serial.g == parallel.g &&
                           serial.scores == parallel.scores;
      std::printf("N=%-5ld d=%-3d %12ld %12.2f %12.2f %9.2fx %s\n", n_rows,
                  dim + 1, S, t_serial * 1e3, t_parallel * 1e3,
                  t_serial / t_parallel, bitwise ? "yes" : "NO");
      if (!bitwise) return 1;
    }
  }
  return 0;
}
