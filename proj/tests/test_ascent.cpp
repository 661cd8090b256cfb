#include <doctest.h>

#include <cmath>
#include <limits>

#include "ssvb/ascent.hpp"
#include "ssvb/gaussian.hpp"

using namespace ssvb;

TEST_CASE("step schedule formula") {
  CHECK(StepSchedule{1.0, 0.0, 1.0}.step_size(1) == doctest::Approx(1.0));
  CHECK(StepSchedule{1.0, 0.0, 1.0}.step_size(4) == doctest::Approx(0.25));
  CHECK(StepSchedule{1.0, 10.0, 0.75}.step_size(6) ==
        doctest::Approx(0.125).epsilon(1e-12));
}

TEST_CASE("step schedule validation") {
  CHECK_THROWS_AS((StepSchedule{1.0, 0.0, 0.5}.validate()),
                  std::invalid_argument);
  CHECK_THROWS_AS((StepSchedule{1.0, 0.0, 1.1}.validate()),
                  std::invalid_argument);
  CHECK_THROWS_AS((StepSchedule{1.0, -1.0, 0.8}.validate()),
                  std::invalid_argument);
  CHECK_THROWS_AS((StepSchedule{0.0, 0.0, 0.8}.validate()),
                  std::invalid_argument);
  CHECK_NOTHROW((StepSchedule{0.5, 0.0, 1.0}.validate()));
  CHECK_THROWS_AS((StepSchedule{1.0, 0.0, 1.0}.step_size(0)),
                  std::invalid_argument);
}

TEST_CASE("convergence monitor") {
  ConvergenceMonitor monitor(3, 1e-3);
  CHECK_FALSE(monitor.update(1.0));
  CHECK_FALSE(monitor.update(2.0));
  CHECK_FALSE(monitor.update(3.0));  // window filled, no previous mean yet
  CHECK_FALSE(monitor.update(3.0));  // mean 2.67 vs 2.0
  CHECK_FALSE(monitor.update(3.0));  // mean 3.0 vs 2.67
  CHECK(monitor.update(3.0));        // mean settled
}

namespace {

// Conjugate Gaussian mean model: the whole ELBO is tractable (f = 0) and the
// optimum is the closed-form posterior.
struct ConjugateFixture {
  double posterior_mean;
  double posterior_var;
  ObjectiveSplit split;

  explicit ConjugateFixture(double prior_var = 10.0, double noise_var = 1.0) {
    const int n = 20;
    const double sum_x = 41.3;  // synthetic sufficient statistic
    posterior_var = 1.0 / (1.0 / prior_var + n / noise_var);
    posterior_mean = posterior_var * (sum_x / noise_var);

    split.f = [](const Vec&) { return 0.0; };
    const double pm = posterior_mean, pv = posterior_var;
    // -KL(q || posterior) up to a constant
    split.h = [pm, pv](const VariationalFamily& fam) {
      const auto& q = dynamic_cast<const GaussianVariational&>(fam);
      const double m = q.mean()[0];
      const double s = q.factor()(0, 0);
      return std::log(s) - (s * s + (m - pm) * (m - pm)) / (2.0 * pv);
    };
    split.h_grad = [pm, pv](const VariationalFamily& fam) {
      const auto& q = dynamic_cast<const GaussianVariational&>(fam);
      const double m = q.mean()[0];
      const double s = q.factor()(0, 0);
      Vec grad(2);
      grad << -(m - pm) / pv, 1.0 / s - s / pv;
      return grad;
    };
  }
};

}  // namespace

TEST_CASE("ascent converges to the conjugate posterior") {
  ConjugateFixture fixture;
  GaussianVariational q = GaussianVariational::standard(1);
  AscentOptions opts;
  opts.schedule = StepSchedule{0.05, 10.0, 0.6};
  opts.max_iterations = 2000;
  opts.monitor_samples = 16;  // f = 0, monitoring is exact
  opts.convergence_rel_tol = 1e-9;
  Rng rng(301);
  const AscentTrace result = run_ascent(fixture.split, q, opts, rng);
  CHECK(std::abs(q.mean()[0] - fixture.posterior_mean) < 1e-3);
  CHECK(std::abs(q.factor()(0, 0) - std::sqrt(fixture.posterior_var)) < 1e-2);
  CHECK(result.records.size() > 0);
  // f == 0 means zero pilot variance, so every iteration uses the floor
  for (const auto& rec : result.records) {
    CHECK(rec.sample_count ==
          opts.clamp.min_samples + opts.pilot_samples);
  }
}

TEST_CASE("zero iteration budget leaves parameters untouched") {
  ConjugateFixture fixture;
  GaussianVariational q = GaussianVariational::standard(1);
  const Vec before = q.psi();
  AscentOptions opts;
  opts.max_iterations = 0;
  Rng rng(303);
  const AscentTrace trace = run_ascent(fixture.split, q, opts, rng);
  CHECK(trace.empty());
  CHECK(trace.stop_reason == "zero iteration budget");
  CHECK((q.psi() - before).norm() == 0.0);
}

TEST_CASE("identical seeds give identical traces") {
  ConjugateFixture fixture;
  AscentOptions opts;
  opts.schedule = StepSchedule{0.05, 10.0, 0.6};
  opts.max_iterations = 50;
  opts.monitor_samples = 16;

  GaussianVariational q1 = GaussianVariational::standard(1);
  GaussianVariational q2 = GaussianVariational::standard(1);
  Rng rng1(305), rng2(305);
  const AscentTrace t1 = run_ascent(fixture.split, q1, opts, rng1);
  const AscentTrace t2 = run_ascent(fixture.split, q2, opts, rng2);
  REQUIRE(t1.records.size() == t2.records.size());
  for (size_t i = 0; i < t1.records.size(); ++i) {
    CHECK(t1.records[i].elbo == t2.records[i].elbo);
    CHECK(t1.records[i].sample_count == t2.records[i].sample_count);
  }
  CHECK((q1.psi() - q2.psi()).norm() == 0.0);
}

TEST_CASE("non-finite parameters abort with the trace retained") {
  ConjugateFixture fixture;
  fixture.split.h_grad = [](const VariationalFamily&) {
    return Vec::Constant(2, std::numeric_limits<double>::infinity());
  };
  GaussianVariational q = GaussianVariational::standard(1);
  AscentOptions opts;
  opts.max_iterations = 10;
  opts.max_step = 0.0;  // no clipping; let the step overflow
  Rng rng(307);
  const AscentTrace trace = run_ascent(fixture.split, q, opts, rng);
  CHECK(trace.stop_reason == "non-finite parameters");
  CHECK(trace.records.size() == 1);
}

TEST_CASE("max total sample budget stops the loop") {
  ConjugateFixture fixture;
  GaussianVariational q = GaussianVariational::standard(1);
  AscentOptions opts;
  opts.schedule = StepSchedule{0.01, 10.0, 0.6};
  opts.max_iterations = 1000;
  opts.monitor_samples = 16;
  opts.max_total_samples = 100;
  Rng rng(309);
  const AscentTrace trace = run_ascent(fixture.split, q, opts, rng);
  CHECK(trace.stop_reason == "sample budget exhausted");
  CHECK(trace.records.size() < 10);
}
