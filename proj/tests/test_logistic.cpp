#include <doctest.h>

#include <cmath>

#include "ssvb/logistic.hpp"
#include "ssvb/special_functions.hpp"
#include "test_support.hpp"

using namespace ssvb;

namespace {

LogisticDataset toy_dataset() {
  Mat features(4, 2);
  features << 1.0, 0.5, -0.8, 1.2, 0.3, -1.5, -1.1, -0.2;
  Vec labels(4);
  labels << 1.0, 0.0, 1.0, 0.0;
  return LogisticDataset::from_features(features, labels);
}

GaussianVariational from_psi(const Vec& psi, int d) {
  Vec mu = psi.head(d);
  Mat L = Mat::Zero(d, d);
  for (int j = 0; j < d; ++j) {
    for (int i = j; i < d; ++i) {
      L(i, j) = psi[d + GaussianVariational::vech_index(i, j, d)];
    }
  }
  return GaussianVariational(mu, L);
}

GaussianVariational random_gaussian(int d, Rng& rng) {
  std::normal_distribution<double> normal(0.0, 0.6);
  std::uniform_real_distribution<double> unif(0.3, 1.2);
  Vec mu(d);
  Mat L = Mat::Zero(d, d);
  for (int i = 0; i < d; ++i) {
    mu[i] = normal(rng);
    L(i, i) = unif(rng);
    for (int j = 0; j < i; ++j) L(i, j) = 0.3 * normal(rng);
  }
  return GaussianVariational(mu, L);
}

}  // namespace

TEST_CASE("dataset construction") {
  const LogisticDataset data = toy_dataset();
  CHECK(data.dim() == 3);  // offset appended
  CHECK(data.X.col(2).isOnes());
  CHECK(data.y[0] == 1.0);
  CHECK(data.y[1] == -1.0);  // 0 mapped to -1

  Vec bad_labels(4);
  bad_labels << 1.0, 2.0, 0.0, 1.0;
  CHECK_THROWS_AS(LogisticDataset::from_features(Mat::Zero(4, 2), bad_labels),
                  std::invalid_argument);
}

TEST_CASE("log sigmoid likelihood terms") {
  const LogisticDataset data = toy_dataset();
  Vec theta = Vec::Zero(3);
  // y x^T theta = 0 -> -ln 2 per observation
  CHECK(log_sigmoid_term(data, 0, theta) ==
        doctest::Approx(-std::log(2.0)).epsilon(1e-14));
  CHECK(log_likelihood(data, theta) ==
        doctest::Approx(-4.0 * std::log(2.0)).epsilon(1e-12));

  // saturation without overflow
  Vec big = Vec::Zero(3);
  big[2] = 100.0;  // offset weight dominates
  CHECK(log_sigmoid_term(data, 0, big) == doctest::Approx(0.0).epsilon(1e-10));
  Vec neg = Vec::Zero(3);
  neg[2] = -100.0;
  CHECK(log_sigmoid_term(data, 0, neg) ==
        doctest::Approx(-100.0).epsilon(1e-10));
}

TEST_CASE("JJ lambda") {
  CHECK(jj_lambda(1e-6) == doctest::Approx(0.125).epsilon(1e-9));
  CHECK(jj_lambda(2.0) ==
        doctest::Approx((2.0 * sigmoid(2.0) - 1.0) / 8.0).epsilon(1e-12));
  CHECK_THROWS_AS(jj_lambda(0.0), std::domain_error);
  CHECK_THROWS_AS(jj_lambda(-1.0), std::domain_error);
}

TEST_CASE("JJ bound is tight at xi = |x^T theta|") {
  const LogisticDataset data = toy_dataset();
  Rng rng(401);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    Vec theta(3);
    for (int i = 0; i < 3; ++i) theta[i] = normal(rng);
    for (long n = 0; n < data.n_rows(); ++n) {
      const double z = data.X.row(n).dot(theta);
      const double xi = std::abs(z) + 1e-12;
      CHECK(jj_term(data, n, theta, xi) ==
            doctest::Approx(log_sigmoid_term(data, n, theta)).epsilon(1e-9));
    }
  }
}

TEST_CASE("JJ bound dominance: g <= f pointwise") {
  const LogisticDataset data = toy_dataset();
  Rng rng(403);
  std::normal_distribution<double> normal(0.0, 2.0);
  std::uniform_real_distribution<double> xi_dist(1e-3, 8.0);
  for (int trial = 0; trial < 100000; ++trial) {
    Vec theta(3);
    for (int i = 0; i < 3; ++i) theta[i] = normal(rng);
    const long n = trial % data.n_rows();
    const double xi = xi_dist(rng);
    CHECK(jj_term(data, n, theta, xi) <=
          log_sigmoid_term(data, n, theta) + 1e-12);
  }
}

TEST_CASE("JJ expectation gradient matches finite differences") {
  const LogisticDataset data = toy_dataset();
  Rng rng(405);
  for (int trial = 0; trial < 25; ++trial) {
    const GaussianVariational q = random_gaussian(3, rng);
    const Vec xi = jj_xi_update(data, q);
    const Vec analytic = jj_expectation_grad(data, q, xi);
    const Vec fd = ssvb::testing::gradient_fd(
        [&](const Vec& psi) {
          return jj_expectation(data, from_psi(psi, 3), xi);
        },
        q.psi(), 1e-6);
    CHECK(ssvb::testing::max_rel_error(analytic, fd, 1e-4) < 1e-5);
  }
}

TEST_CASE("JJ expectation agrees with Monte Carlo") {
  const LogisticDataset data = toy_dataset();
  Rng rng(407);
  const GaussianVariational q = random_gaussian(3, rng);
  const Vec xi = jj_xi_update(data, q);
  const double analytic = jj_expectation(data, q, xi);
  const long S = 200000;
  double sum = 0.0, sum_sq = 0.0;
  for (long s = 0; s < S; ++s) {
    const double g = jj_bound_sum(data, q.sample(rng), xi);
    sum += g;
    sum_sq += g * g;
  }
  const double mean = sum / S;
  const double se = std::sqrt((sum_sq / S - mean * mean) / S);
  CHECK(std::abs(mean - analytic) < 4.0 * se);
}

TEST_CASE("xi update") {
  SUBCASE("unit case") {
    const auto q = GaussianVariational::standard(1);
    Mat features(1, 0);  // no real features; x = offset only
    Vec labels(1);
    labels << 1.0;
    const LogisticDataset data =
        LogisticDataset::from_features(features, labels);
    const Vec xi = jj_xi_update(data, q);
    CHECK(xi[0] == doctest::Approx(1.0).epsilon(1e-12));
  }

  SUBCASE("degenerate q gives |x^T mu|") {
    Vec mu = Vec::Constant(1, 3.0);
    Mat L = Mat::Constant(1, 1, 1e-8);
    const GaussianVariational q(mu, L);
    Mat features(1, 0);
    Vec labels(1);
    labels << 1.0;
    const LogisticDataset data =
        LogisticDataset::from_features(features, labels);
    CHECK(jj_xi_update(data, q)[0] == doctest::Approx(3.0).epsilon(1e-8));
  }

  SUBCASE("update maximizes the bound in xi") {
    const LogisticDataset data = toy_dataset();
    Rng rng(409);
    const GaussianVariational q = random_gaussian(3, rng);
    const Vec xi = jj_xi_update(data, q);
    const double at_update = jj_expectation(data, q, xi);
    CHECK(jj_expectation(data, q, 1.1 * xi) < at_update);
    CHECK(jj_expectation(data, q, 0.9 * xi) < at_update);
  }
}

TEST_CASE("Taylor control variate") {
  const LogisticDataset data = toy_dataset();
  Rng rng(411);
  const GaussianVariational q = random_gaussian(3, rng);
  const Vec mu_hat = q.mean();

  SUBCASE("matches f at the expansion point") {
    for (long n = 0; n < data.n_rows(); ++n) {
      CHECK(taylor_term(data, n, mu_hat, mu_hat) ==
            doctest::Approx(log_sigmoid_term(data, n, mu_hat)).epsilon(1e-12));
    }
  }

  SUBCASE("first derivative matches at the expansion point") {
    for (long n = 0; n < data.n_rows(); ++n) {
      const Vec grad_g = ssvb::testing::gradient_fd(
          [&](const Vec& t) { return taylor_term(data, n, t, mu_hat); },
          mu_hat, 1e-6);
      const Vec grad_f = ssvb::testing::gradient_fd(
          [&](const Vec& t) { return log_sigmoid_term(data, n, t); }, mu_hat,
          1e-6);
      CHECK((grad_g - grad_f).norm() < 1e-6 * (1.0 + grad_f.norm()));
    }
  }

  SUBCASE("is not a bound: probes above f exist") {
    Rng rng2(413);
    std::normal_distribution<double> normal(0.0, 3.0);
    bool found_above = false;
    for (int trial = 0; trial < 100000 && !found_above; ++trial) {
      Vec theta(3);
      for (int i = 0; i < 3; ++i) theta[i] = normal(rng2);
      const long n = trial % data.n_rows();
      if (taylor_term(data, n, theta, mu_hat) >
          log_sigmoid_term(data, n, theta) + 1e-9) {
        found_above = true;
      }
    }
    CHECK(found_above);
  }

  SUBCASE("expectation gradient matches finite differences") {
    for (int trial = 0; trial < 25; ++trial) {
      const GaussianVariational qt = random_gaussian(3, rng);
      const Vec mh = qt.mean();
      const Vec analytic = taylor_expectation_grad(data, qt, mh);
      const Vec fd = ssvb::testing::gradient_fd(
          [&](const Vec& psi) {
            return taylor_expectation(data, from_psi(psi, 3), mh);
          },
          qt.psi(), 1e-6);
      CHECK(ssvb::testing::max_rel_error(analytic, fd, 1e-4) < 1e-5);
    }
  }
}

TEST_CASE("Figure-1 regime: Taylor approximates better than JJ near q") {
  // mu = 3, sigma^2 = 3, x = 1, y = 1
  Mat features(1, 0);
  Vec labels(1);
  labels << 1.0;
  const LogisticDataset data = LogisticDataset::from_features(features, labels);
  const GaussianVariational q(Vec::Constant(1, 3.0),
                              Mat::Constant(1, 1, std::sqrt(3.0)));
  const Vec xi = jj_xi_update(data, q);
  const Vec mu_hat = q.mean();

  Rng rng(417);
  double max_taylor = 0.0, max_jj = 0.0;
  for (int s = 0; s < 100; ++s) {
    const Vec theta = q.sample(rng);
    const double f = log_sigmoid_term(data, 0, theta);
    max_taylor =
        std::max(max_taylor, std::abs(f - taylor_term(data, 0, theta, mu_hat)));
    max_jj = std::max(max_jj, std::abs(f - jj_term(data, 0, theta, xi[0])));
  }
  CHECK(max_taylor < max_jj);
}

TEST_CASE("ELBO decomposition edge cases") {
  SUBCASE("prior-only q has zero KL") {
    // q = prior: E[ln p] + H = 0 exactly for matching Gaussians
    const LogisticModelSpec spec{1.0};
    const auto q = GaussianVariational::standard(1);
    CHECK(gaussian_prior_entropy_term(q, spec) ==
          doctest::Approx(0.0).epsilon(1e-12));
    const Vec grad = gaussian_prior_entropy_grad(q, spec);
    CHECK(grad.norm() == doctest::Approx(0.0).epsilon(1e-12));
  }

  SUBCASE("prior/entropy gradient matches finite differences") {
    Rng rng(419);
    const LogisticModelSpec spec{2.5};
    for (int trial = 0; trial < 25; ++trial) {
      const GaussianVariational q = random_gaussian(3, rng);
      const Vec analytic = gaussian_prior_entropy_grad(q, spec);
      const Vec fd = ssvb::testing::gradient_fd(
          [&](const Vec& psi) {
            return gaussian_prior_entropy_term(from_psi(psi, 3), spec);
          },
          q.psi(), 1e-6);
      CHECK(ssvb::testing::max_rel_error(analytic, fd, 1e-4) < 1e-5);
    }
  }

  SUBCASE("MC ELBO with likelihood") {
    const LogisticDataset data = toy_dataset();
    const LogisticModelSpec spec{1.0};
    const auto q = GaussianVariational::standard(3);
    Rng rng(421);
    const ElboEstimate est = logistic_elbo_mc(q, data, spec, 20000, rng);
    CHECK(std::isfinite(est.value));
    CHECK(est.std_error > 0.0);
    // value = MC likelihood average only (KL part vanishes at q = prior)
    CHECK(est.value < 0.0);
    CHECK(est.value > -4.0 * 2.0);  // each term is bounded by ~-2 here
  }
}

TEST_CASE("Laplace fit") {
  SUBCASE("symmetric data gives zero mode") {
    Mat features(2, 1);
    features << 1.0, 1.0;
    Vec labels(2);
    labels << 1.0, 0.0;
    const LogisticDataset data =
        LogisticDataset::from_features(features, labels);
    const GaussianVariational q = laplace_fit(data, LogisticModelSpec{1.0});
    CHECK(q.mean().norm() < 1e-8);
  }

  SUBCASE("separable single observation pushes the mode out") {
    Mat features(1, 0);
    Vec labels(1);
    labels << 1.0;
    const LogisticDataset data =
        LogisticDataset::from_features(features, labels);
    const GaussianVariational q = laplace_fit(data, LogisticModelSpec{1e4});
    CHECK(q.mean()[0] > 3.0);  // prior-limited magnitude, far from zero
  }

  SUBCASE("mode maximizes the log posterior") {
    const LogisticDataset data = toy_dataset();
    const LogisticModelSpec spec{1.0};
    const GaussianVariational q = laplace_fit(data, spec);
    const Vec mode = q.mean();
    auto log_post = [&](const Vec& t) {
      return log_likelihood(data, t) - t.squaredNorm() / 2.0;
    };
    const double at_mode = log_post(mode);
    Rng rng(423);
    std::normal_distribution<double> normal(0.0, 0.1);
    for (int trial = 0; trial < 50; ++trial) {
      Vec perturbed = mode;
      for (int i = 0; i < 3; ++i) perturbed[i] += normal(rng);
      CHECK(log_post(perturbed) <= at_mode + 1e-10);
    }
  }
}

TEST_CASE("JJ coordinate ascent VB") {
  const LogisticDataset data = toy_dataset();
  const LogisticModelSpec spec{1.0};
  const JJFitResult fit = jj_coordinate_vb(data, spec);

  SUBCASE("bound improves monotonically") {
    // re-run and track the bound sequence
    double prev = -1e300;
    Vec xi = Vec::Ones(data.n_rows());
    for (int iter = 0; iter < 30; ++iter) {
      Vec lam(xi.size());
      for (Eigen::Index n = 0; n < xi.size(); ++n) lam[n] = jj_lambda(xi[n]);
      Mat precision = 2.0 * (data.X.transpose() * lam.asDiagonal() * data.X);
      precision.diagonal().array() += 1.0;
      const Mat sigma = precision.llt().solve(Mat::Identity(3, 3));
      const Vec mu = sigma * (0.5 * (data.X.transpose() * data.y));
      const Mat L = sigma.llt().matrixL();
      const GaussianVariational q(mu, L);
      xi = jj_xi_update(data, q);
      const double bound =
          jj_expectation(data, q, xi) + gaussian_prior_entropy_term(q, spec);
      CHECK(bound >= prev - 1e-10);
      prev = bound;
    }
  }

  SUBCASE("bound lies below the MC estimate of the true ELBO") {
    Rng rng(427);
    const ElboEstimate elbo =
        logistic_elbo_mc(fit.q, data, spec, 200000, rng);
    CHECK(fit.bound <= elbo.value + 3.0 * elbo.std_error);
  }
}

TEST_CASE("objective split wiring") {
  const LogisticDataset data = toy_dataset();
  const LogisticModelSpec spec{1.0};

  const ObjectiveSplit raw = logistic_objective(data, spec, LogisticCv::none);
  CHECK_FALSE(raw.has_cv());

  for (LogisticCv cv : {LogisticCv::jj, LogisticCv::taylor}) {
    const ObjectiveSplit split = logistic_objective(data, spec, cv);
    REQUIRE(split.has_cv());
    Rng rng(431);
    const GaussianVariational q = random_gaussian(3, rng);
    const ControlVariate bound_cv = split.make_cv(q);

    // closure g agrees with the per-term reference implementations
    const Vec theta = q.sample(rng);
    const double via_closure = bound_cv.g(theta);
    const double via_terms =
        cv == LogisticCv::jj
            ? jj_bound_sum(data, theta, jj_xi_update(data, q))
            : taylor_sum(data, theta, q.mean());
    CHECK(via_closure == doctest::Approx(via_terms).epsilon(1e-12));

    // E[g] consistent with the gradient used by the estimator
    CHECK(bound_cv.expected_grad.size() == q.psi_dim());
    CHECK(std::isfinite(bound_cv.expected_value));
  }
}
