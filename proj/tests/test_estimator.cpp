#include <doctest.h>

#include <cmath>

#include "ssvb/ascent.hpp"
#include "ssvb/dirichlet.hpp"
#include "ssvb/estimator.hpp"
#include "ssvb/gaussian.hpp"
#include "test_support.hpp"

using namespace ssvb;

TEST_CASE("raw score gradient: linear f under a standard normal") {
  const auto q = GaussianVariational::standard(1);
  Rng rng(201);
  const auto samples = draw_samples(q, 1000000, rng);
  const Vec grad = score_gradient_raw([](const Vec& t) { return t[0]; }, q,
                                      samples);
  // d/dmu E[theta] = 1
  CHECK(std::abs(grad[0] - 1.0) < 0.01);
}

TEST_CASE("raw score gradient: constant f has zero expectation") {
  const auto q = GaussianVariational::standard(1);
  Rng rng(203);
  const auto samples = draw_samples(q, 1000000, rng);
  const Vec grad = score_gradient_raw([](const Vec&) { return 3.0; }, q,
                                      samples);
  // score identity: sd of 3 * score_mu is 3, so 5 sigma / sqrt(S)
  CHECK(std::abs(grad[0]) < 5.0 * 3.0 / 1000.0);
}

TEST_CASE("raw score gradient: quadratic f recovers the sigma gradient") {
  const auto q = GaussianVariational::standard(1);
  Rng rng(205);
  const auto samples = draw_samples(q, 1000000, rng);
  const Vec grad = score_gradient_raw(
      [](const Vec& t) { return t[0] * t[0]; }, q, samples);
  // E[theta^2] = mu^2 + L^2: d/dmu = 0 at mu=0, d/dL = 2L = 2 at L=1
  CHECK(std::abs(grad[0]) < 0.02);
  CHECK(std::abs(grad[1] - 2.0) < 0.03);
}

TEST_CASE("non-finite evaluation reports the offending sample") {
  const auto q = GaussianVariational::standard(1);
  std::vector<Vec> samples(5, Vec::Constant(1, 0.5));
  samples[3][0] = -1.0;
  const ThetaFn f = [](const Vec& t) { return std::log(t[0]); };
  try {
    score_gradient_raw(f, q, samples);
    FAIL("expected NumericalError");
  } catch (const NumericalError& e) {
    CHECK(e.sample_index == 3);
  }
}

TEST_CASE("pilot statistics") {
  const auto q = GaussianVariational::standard(2);
  Rng rng(207);
  const auto samples = draw_samples(q, 64, rng);
  const ThetaFn f = [](const Vec& t) { return t[0] + 0.3 * t[1] * t[1]; };

  SUBCASE("g = f makes all three sums identical") {
    const SampleStats stats = pilot_stats(f, f, q, samples);
    CHECK(stats.alpha == stats.beta);
    CHECK(stats.alpha == stats.gamma);
    CHECK(stats.residual() == doctest::Approx(0.0).epsilon(1e-12));
  }

  SUBCASE("g = 0 is an uninformative control variate") {
    const ThetaFn zero = [](const Vec&) { return 0.0; };
    const SampleStats stats = pilot_stats(f, zero, q, samples);
    CHECK(stats.beta == 0.0);
    CHECK_FALSE(stats.cv_informative());
    CHECK_THROWS_WITH_AS(optimal_scale(stats),
                         "control variate uninformative", std::domain_error);
  }

  SUBCASE("needs two samples") {
    const std::vector<Vec> one(samples.begin(), samples.begin() + 1);
    CHECK_THROWS_AS(pilot_stats(f, f, q, one), std::invalid_argument);
  }
}

TEST_CASE("optimal scale arithmetic") {
  SampleStats stats;
  stats.alpha = 3.0;
  stats.beta = 2.0;
  stats.gamma = 10.0;
  CHECK(optimal_scale(stats) == doctest::Approx(1.5));
  stats.alpha = stats.beta = 4.0;
  CHECK(optimal_scale(stats) == doctest::Approx(1.0));
}

TEST_CASE("required samples") {
  SampleStats stats;
  stats.alpha = 3.0;
  stats.beta = 2.0;
  stats.gamma = 10.0;

  SUBCASE("worked example") {
    CHECK(required_samples(stats, 0.1, 5, SampleClamp{1, 100000}) == 11);
  }
  SUBCASE("perfect control variate clamps to the floor") {
    SampleStats perfect;
    perfect.alpha = perfect.beta = perfect.gamma = 7.0;
    CHECK(required_samples(perfect, 0.1, 5) == 8);
  }
  SUBCASE("cap") {
    CHECK(required_samples(stats, 1e-9, 5, SampleClamp{8, 50000}) == 50000);
  }
  SUBCASE("inconsistent statistics rejected") {
    SampleStats bad;
    bad.alpha = 10.0;
    bad.beta = 1.0;
    bad.gamma = 1.0;  // gamma - alpha^2/beta = -99
    CHECK_THROWS_WITH_AS(required_samples(bad, 0.1, 5),
                         "inconsistent pilot statistics", std::domain_error);
  }
  SUBCASE("counterfactual raw requirement") {
    CHECK(required_samples_raw(stats, 0.1, 5) == doctest::Approx(20.0));
  }
}

TEST_CASE("cv_gradient") {
  const auto q = GaussianVariational::standard(2);
  Rng rng(211);
  const ThetaFn f = [](const Vec& t) { return t[0] * t[0] + 0.5 * t[1]; };

  SUBCASE("a = 0 reduces exactly to the raw estimator") {
    const auto samples = draw_samples(q, 512, rng);
    const SampleBatch batch = evaluate_batch(f, &f, q, samples);
    const Vec raw = score_gradient_raw(batch);
    const Vec cv = cv_gradient(batch, 0.0, Vec::Zero(q.psi_dim()));
    CHECK((raw - cv).norm() == 0.0);
  }

  SUBCASE("g = f with a = 1 returns the analytic gradient exactly") {
    const auto samples = draw_samples(q, 512, rng);
    const SampleBatch batch = evaluate_batch(f, &f, q, samples);
    Vec analytic = Vec::Zero(q.psi_dim());
    analytic[0] = 0.0;   // d/dmu0 E[theta0^2] = 2 mu0 = 0
    analytic[1] = 0.5;   // d/dmu1
    analytic[2] = 2.0;   // d/dL00 = 2 L00
    const Vec got = cv_gradient(batch, 1.0, analytic);
    CHECK((got - analytic).norm() < 1e-12);
  }

  SUBCASE("unbiased against the analytic gradient (quadratic fixture)") {
    // f = theta^2 under N(mu, L^2), d = 1; CV is the shifted quadratic
    // g = (theta - 0.3)^2 with analytic expectation and gradient.
    const GaussianVariational q1(Vec::Constant(1, 0.4),
                                 Mat::Constant(1, 1, 0.8));
    const ThetaFn f1 = [](const Vec& t) { return t[0] * t[0]; };
    const ThetaFn g1 = [](const Vec& t) {
      return (t[0] - 0.3) * (t[0] - 0.3);
    };
    // E[g] = (mu-0.3)^2 + L^2; grad = (2(mu-0.3), 2L)
    Vec eg_grad(2);
    eg_grad << 2.0 * (0.4 - 0.3), 2.0 * 0.8;
    Vec want(2);
    want << 2.0 * 0.4, 2.0 * 0.8;

    Rng rng2(213);
    const int R = 10000, S = 8;
    Vec sum = Vec::Zero(2), sum_sq = Vec::Zero(2);
    for (int r = 0; r < R; ++r) {
      const auto samples = draw_samples(q1, S, rng2);
      const SampleBatch batch = evaluate_batch(f1, &g1, q1, samples);
      const Vec est = cv_gradient(batch, 1.0, eg_grad);
      sum += est;
      sum_sq += est.cwiseProduct(est);
    }
    const Vec mean = sum / R;
    for (int k = 0; k < 2; ++k) {
      const double se =
          std::sqrt((sum_sq[k] / R - mean[k] * mean[k]) / R);
      CHECK(std::abs(mean[k] - want[k]) < 3.0 * se);
    }
  }
}

TEST_CASE("cv and raw estimators agree in expectation (paired replication)") {
  // same f and q; the corrected estimator must keep the raw estimator's mean
  const GaussianVariational q(Vec::Constant(1, 0.2), Mat::Constant(1, 1, 0.7));
  const ThetaFn f = [](const Vec& t) { return std::sin(t[0]) + t[0] * t[0]; };
  const ThetaFn g = [](const Vec& t) { return t[0] + 0.5 * t[0] * t[0]; };
  // E[g] = mu + (mu^2 + L^2)/2; grad = (1 + mu, L)
  Vec eg_grad(2);
  eg_grad << 1.0 + 0.2, 0.7;

  Rng rng(229);
  const int R = 8000, S = 8;
  Vec sum_raw = Vec::Zero(2), sq_raw = Vec::Zero(2);
  Vec sum_cv = Vec::Zero(2), sq_cv = Vec::Zero(2);
  for (int r = 0; r < R; ++r) {
    const auto samples = draw_samples(q, S, rng);
    const SampleBatch batch = evaluate_batch(f, &g, q, samples);
    const Vec raw = score_gradient_raw(batch);
    const Vec cv = cv_gradient(batch, 0.9, eg_grad);
    sum_raw += raw;
    sq_raw += raw.cwiseProduct(raw);
    sum_cv += cv;
    sq_cv += cv.cwiseProduct(cv);
  }
  const Vec mean_raw = sum_raw / R, mean_cv = sum_cv / R;
  for (int k = 0; k < 2; ++k) {
    const double se_raw =
        std::sqrt((sq_raw[k] / R - mean_raw[k] * mean_raw[k]) / R);
    const double se_cv = std::sqrt((sq_cv[k] / R - mean_cv[k] * mean_cv[k]) / R);
    const double combined = std::sqrt(se_raw * se_raw + se_cv * se_cv);
    CHECK(std::abs(mean_raw[k] - mean_cv[k]) < 4.0 * combined);
    // and the control variate actually reduces the spread here
    CHECK(se_cv < se_raw);
  }
}

TEST_CASE("variance reduction ratio") {
  SUBCASE("identical series gives zero") {
    Vec f(4);
    f << 1.0, 2.0, 3.0, 4.0;
    CHECK(variance_reduction_ratio(f, f) == doctest::Approx(0.0));
  }

  SUBCASE("independent series approaches one") {
    Rng rng(217);
    std::normal_distribution<double> normal(0.0, 1.0);
    const long S = 100000;
    Vec f(S), g(S);
    for (long s = 0; s < S; ++s) {
      f[s] = normal(rng);
      g[s] = normal(rng);
    }
    CHECK(variance_reduction_ratio(f, g) > 0.99);
  }

  SUBCASE("sin(theta) vs theta at small variance") {
    // Stein: Cov(theta, sin theta) = s^2 e^{-s^2/2}; Var(sin) =
    // (1 - e^{-2 s^2}) / 2, so 1 - corr^2 has a closed form.
    const double s2 = 0.01;
    const double corr2 = 2.0 * s2 * std::exp(-s2) / (1.0 - std::exp(-2.0 * s2));
    const double want = 1.0 - corr2;

    Rng rng(219);
    std::normal_distribution<double> normal(0.0, std::sqrt(s2));
    const long S = 1000000;
    Vec f(S), g(S);
    for (long s = 0; s < S; ++s) {
      g[s] = normal(rng);
      f[s] = std::sin(g[s]);
    }
    const double got = variance_reduction_ratio(f, g);
    CHECK(got < 1e-3);
    CHECK(std::abs(got - want) < 2e-5);
  }

  SUBCASE("zero-variance g rejected") {
    Vec f(3), g(3);
    f << 1.0, 2.0, 3.0;
    g << 5.0, 5.0, 5.0;
    CHECK_THROWS_AS(variance_reduction_ratio(f, g), std::domain_error);
  }
}

TEST_CASE("parallel evaluation is bitwise identical to the serial reference") {
  Rng rng(223);
  const auto q = GaussianVariational::standard(3);
  const auto samples = draw_samples(q, 1000, rng);
  const ThetaFn f = [](const Vec& t) { return std::sin(t[0]) + t[1] * t[2]; };
  const ThetaFn g = [](const Vec& t) { return t.squaredNorm(); };

  const SampleBatch serial = evaluate_batch_serial(f, &g, q, samples);
  const SampleBatch parallel = evaluate_batch(f, &g, q, samples);
  CHECK(serial.f == parallel.f);
  CHECK(serial.g == parallel.g);
  CHECK(serial.scores == parallel.scores);

  const Vec fs = evaluate_f_serial(f, samples);
  const Vec fp = evaluate_f(f, samples);
  CHECK(fs == fp);
}

TEST_CASE("pilot statistics on a logistic-style fixture are finite") {
  // Cauchy-Schwarz on the summed statistics: alpha^2 <= beta gamma.
  Rng rng(227);
  const auto q = GaussianVariational::standard(3);
  const auto samples = draw_samples(q, 24, rng);
  const ThetaFn f = [](const Vec& t) {
    return -std::log1p(std::exp(-t.sum()));
  };
  const ThetaFn g = [](const Vec& t) { return -0.1 * t.squaredNorm(); };
  const SampleStats stats = pilot_stats(f, g, q, samples);
  CHECK(std::isfinite(stats.alpha));
  CHECK(stats.beta > 0.0);
  CHECK(stats.gamma > 0.0);
  CHECK(stats.alpha * stats.alpha <= stats.beta * stats.gamma * (1.0 + 1e-12));
  CHECK(stats.residual() >= -1e-9 * stats.gamma);
}
