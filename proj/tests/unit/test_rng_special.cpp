#include <doctest.h>

#include <cmath>
#include <vector>

#include "oracles.hpp"
#include "spsurv/rng.hpp"
#include "spsurv/special.hpp"

using namespace spsurv;

TEST_CASE("streams are reproducible and distinct") {
  auto a = Rng::stream(42, 3);
  auto b = Rng::stream(42, 3);
  auto c = Rng::stream(42, 4);
  for (int i = 0; i < 100; ++i) {
    const auto x = a();
    CHECK(x == b());
    CHECK(x != c());
  }
}

TEST_CASE("uniform is strictly inside (0,1)") {
  Rng r(7);
  for (int i = 0; i < 100000; ++i) {
    const double u = r.uniform();
    REQUIRE(u > 0.0);
    REQUIRE(u < 1.0);
  }
}

TEST_CASE("normal draws pass a KS test") {
  Rng r(11);
  std::vector<double> xs(20000);
  for (auto& x : xs) x = r.normal();
  const double d = oracle::ks_distance(xs, oracle::phi_cdf);
  CHECK(oracle::ks_pvalue(d, xs.size()) > 0.001);
}

TEST_CASE("gamma moments") {
  Rng r(5);
  for (double shape : {0.3, 1.0, 4.5}) {
    const double rate = 2.0;
    std::vector<double> xs(200000);
    for (auto& x : xs) x = r.gamma(shape, rate);
    CHECK(oracle::mean(xs) == doctest::Approx(shape / rate).epsilon(0.02));
    CHECK(oracle::variance(xs) == doctest::Approx(shape / (rate * rate)).epsilon(0.05));
  }
}

TEST_CASE("poisson and beta moments") {
  Rng r(9);
  std::vector<double> p(100000), b(100000);
  for (auto& x : p) x = r.poisson(2.0);
  for (auto& x : b) x = r.beta(2.0, 3.0);
  CHECK(oracle::mean(p) == doctest::Approx(2.0).epsilon(0.02));
  CHECK(oracle::variance(p) == doctest::Approx(2.0).epsilon(0.03));
  CHECK(oracle::mean(b) == doctest::Approx(0.4).epsilon(0.01));
}

TEST_CASE("mvnormal covariance") {
  Rng r(13);
  Eigen::Matrix2d cov;
  cov << 2.0, 0.6, 0.6, 1.0;
  const Eigen::MatrixXd L = Eigen::LLT<Eigen::Matrix2d>(cov).matrixL();
  Eigen::Matrix2d acc = Eigen::Matrix2d::Zero();
  const int n = 100000;
  for (int i = 0; i < n; ++i) {
    const Eigen::VectorXd x = r.mvnormal(Eigen::Vector2d::Zero(), L);
    acc += x * x.transpose();
  }
  acc /= n;
  CHECK(acc(0, 0) == doctest::Approx(2.0).epsilon(0.03));
  CHECK(acc(0, 1) == doctest::Approx(0.6).epsilon(0.05));
  CHECK(acc(1, 1) == doctest::Approx(1.0).epsilon(0.03));
}

TEST_CASE("normal cdf, tail and quantile") {
  for (double x : {-8.0, -3.0, -0.5, 0.0, 0.7, 2.5, 6.0}) {
    CHECK(normal_cdf(x) == doctest::Approx(oracle::phi_cdf(x)).epsilon(1e-13));
    CHECK(normal_sf(x) == doctest::Approx(oracle::phi_cdf(-x)).epsilon(1e-13));
  }
  for (double p : {1e-12, 1e-4, 0.1, 0.5, 0.9, 0.999999}) CHECK(normal_cdf(normal_quantile(p)) == doctest::Approx(p).epsilon(1e-12));
  CHECK(normal_quantile(0.9) == doctest::Approx(1.2815515655446004).epsilon(1e-14));
}

TEST_CASE("log_sum_exp and pairwise_sum") {
  std::vector<double> v{1000.0, 1000.0};
  CHECK(log_sum_exp(v) == doctest::Approx(1000.0 + std::log(2.0)));
  std::vector<double> w(1001, 0.1);
  CHECK(pairwise_sum(w) == doctest::Approx(100.1).epsilon(1e-14));
  CHECK(pairwise_sum(std::vector<double>{}) == 0.0);
}

TEST_CASE("mvn density flags singular covariance") {
  Eigen::MatrixXd cov = Eigen::MatrixXd::Ones(2, 2);
  const auto r = mvn_log_density(Eigen::Vector2d(0.1, 0.1), Eigen::Vector2d::Zero(), cov);
  CHECK(r.ridged);
  Eigen::MatrixXd id = Eigen::MatrixXd::Identity(2, 2);
  const auto s = mvn_log_density(Eigen::Vector2d(1.0, 0.0), Eigen::Vector2d::Zero(), id);
  CHECK_FALSE(s.ridged);
  CHECK(s.log_density == doctest::Approx(-std::log(2.0 * M_PI) - 0.5));
}
