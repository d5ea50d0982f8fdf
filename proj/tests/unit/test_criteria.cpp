#include <doctest.h>

#include <cmath>
#include <numeric>
#include <vector>

#include "spsurv/criteria.hpp"
#include "spsurv/log.hpp"
#include "spsurv/rng.hpp"
#include "spsurv/sampler.hpp"

using namespace spsurv;

namespace {
Eigen::MatrixXd random_loglik(int L, int n, std::uint64_t seed) {
  Rng r(seed);
  Eigen::MatrixXd m(L, n);
  for (int i = 0; i < n; ++i) {
    const double c = r.normal(-1.5, 0.5);
    for (int l = 0; l < L; ++l) m(l, i) = c + 0.3 * r.normal();
  }
  return m;
}
}  // namespace

TEST_CASE("DIC hand values") {
  const std::vector<double> totals{-10.0, -11.0, -12.0};
  const auto d = dic(totals, -10.5);
  CHECK(d.p_d == doctest::Approx(1.0));
  // -2(-10.5) + 2(1) = 23, equivalently mean deviance 22 plus p_D.
  CHECK(d.dic == doctest::Approx(23.0));
  const std::vector<double> same(5, -7.0);
  const auto z = dic(same, -7.0);
  CHECK(z.p_d == 0.0);
  CHECK(z.dic == doctest::Approx(14.0));
}

TEST_CASE("LPML hand values") {
  Eigen::MatrixXd ll(2, 1);
  ll << -1.0, -3.0;
  const double e = std::exp(1.0), e3 = std::exp(3.0);
  const double cap = std::sqrt(2.0) * (e + e3) / 2.0;
  const double w2 = std::min(e3, cap);
  const double cpo = (std::exp(-1.0) * e + std::exp(-3.0) * w2) / (e + w2);
  CHECK(lpml(ll).lpml == doctest::Approx(std::log(cpo)).epsilon(1e-13));
  CHECK(lpml(ll, false).lpml == doctest::Approx(std::log(2.0 / (e + e3))).epsilon(1e-13));

  Eigen::MatrixXd flat = Eigen::MatrixXd::Constant(50, 3, -2.0);
  const auto f = lpml(flat);
  for (int i = 0; i < 3; ++i) CHECK(f.log_cpo[i] == doctest::Approx(-2.0).epsilon(1e-14));
  CHECK(lpml(flat, false).lpml == doctest::Approx(f.lpml).epsilon(1e-14));
}

TEST_CASE("WAIC hand values") {
  Eigen::MatrixXd ll(2, 1);
  ll << -1.0, -3.0;
  const auto w = waic(ll);
  CHECK(w.p_w == doctest::Approx(2.0));
  CHECK(w.waic == doctest::Approx(-2.0 * std::log(0.5 * (std::exp(-1.0) + std::exp(-3.0))) + 4.0).epsilon(1e-13));
  Eigen::MatrixXd flat = Eigen::MatrixXd::Constant(10, 4, -0.5);
  CHECK(waic(flat).p_w == 0.0);
  CHECK(waic(flat).waic == doctest::Approx(4.0));
  CHECK_THROWS(waic(Eigen::MatrixXd::Zero(1, 3)));
}

TEST_CASE("pseudo Bayes factor") {
  CHECK(pseudo_bayes_factor(-206.0, -211.0) == doctest::Approx(std::exp(5.0)));
  CHECK(pseudo_bayes_factor(-206.0, -211.0) > 148.0);
}

TEST_CASE("criteria are permutation invariant and additive") {
  const auto ll = random_loglik(400, 20, 3);
  Eigen::MatrixXd perm = ll.colwise().reverse();
  CHECK(lpml(perm).lpml == doctest::Approx(lpml(ll).lpml).epsilon(1e-12));
  CHECK(waic(perm).waic == doctest::Approx(waic(ll).waic).epsilon(1e-12));

  Eigen::MatrixXd twice(400, 40);
  twice << ll, ll;
  CHECK(lpml(twice).lpml == doctest::Approx(2.0 * lpml(ll).lpml).epsilon(1e-12));
  CHECK(waic(twice).waic == doctest::Approx(2.0 * waic(ll).waic).epsilon(1e-12));
  CHECK(waic(twice).p_w == doctest::Approx(2.0 * waic(ll).p_w).epsilon(1e-12));
  const Eigen::VectorXd t1 = ll.rowwise().sum(), t2 = twice.rowwise().sum();
  const auto d1 = dic({t1.data(), 400}, t1.mean() + 1.0), d2 = dic({t2.data(), 400}, 2.0 * (t1.mean() + 1.0));
  CHECK(d2.dic == doctest::Approx(2.0 * d1.dic).epsilon(1e-12));
}

TEST_CASE("effective sample size") {
  Rng r(10);
  std::vector<double> iid(5000), ar(5000), alt(5000), con(5000, 3.0);
  double x = 0.0;
  for (std::size_t i = 0; i < 5000; ++i) {
    iid[i] = r.normal();
    x = 0.9 * x + r.normal();
    ar[i] = x;
    alt[i] = i % 2 ? 1.0 : -1.0;
  }
  const auto a = ess(iid);
  CHECK(a.ess >= 4000.0);
  CHECK(a.ess <= 5000.0);
  const double theory = 5000.0 * 0.1 / 1.9;
  CHECK(ess(ar).ess == doctest::Approx(theory).epsilon(0.4));
  const auto b = ess(alt);
  CHECK(b.clamped);
  CHECK(b.ess == 5000.0);
  const auto c = ess(con);
  CHECK(c.zero_variance);
  CHECK(c.ess == 5000.0);
}

TEST_CASE("Savage-Dickey test for the parametric baseline") {
  PosteriorArchive a;
  a.layout = ParameterLayout::make(0, false, 0, 4, FrailtyKind::None, 0);
  Rng r(2);
  const int L = 4000;
  a.draws = Eigen::MatrixXd::Zero(L, a.layout.width);
  for (int l = 0; l < L; ++l) {
    for (int j = 0; j < 3; ++j) a.draws(l, a.layout.z + j) = 0.01 * r.normal();
    a.draws(l, a.layout.alpha) = 1.0;
  }
  CHECK(bf_parametric(a).log_bf10 < -5.0);

  // Far from zero with unit spread: evidence against equal weights.
  for (int l = 0; l < L; ++l)
    for (int j = 0; j < 3; ++j) a.draws(l, a.layout.z + j) = 4.0 + 0.3 * r.normal();
  const auto far = bf_parametric(a);
  CHECK(far.log_bf10 > 5.0);

  // Hand value with a diagonal posterior.
  Eigen::VectorXd mean;
  Eigen::MatrixXd cov;
  column_moments(a.draws.middleCols(a.layout.z, 3), mean, cov);
  const double denom = mvn_log_density(Eigen::VectorXd::Zero(3), mean, cov).log_density;
  CHECK(far.log_bf10 == doctest::Approx(alpha_log_prior_at_zero(1.0, 4) - denom).epsilon(1e-10));
}

TEST_CASE("Savage-Dickey test for linearity with posterior equal to prior") {
  Rng r(6);
  std::vector<CensoredObservation> obs;
  for (int i = 0; i < 200; ++i) {
    CensoredObservation o;
    o.a = o.b = 1.0 + r.uniform();
    o.x = {r.normal()};
    obs.push_back(o);
  }
  const Dataset data(obs, 1, {"x"});
  const ModelContext ctx(data, ModelKind::PH, CenteringFamily::LogLogistic, 3, {0}, 4);
  PosteriorArchive a;
  a.layout = ParameterLayout::make(1, false, ctx.nxi(), 3, FrailtyKind::None, 0);
  const Eigen::MatrixXd cov = spline_prior_covariance(ctx.splines()[0]);
  a.priors.W0 = Eigen::MatrixXd::Identity(1 + ctx.nxi(), 1 + ctx.nxi());
  a.priors.W0.bottomRightCorner(ctx.nxi(), ctx.nxi()) = cov;
  const Eigen::MatrixXd L = Eigen::LLT<Eigen::MatrixXd>(cov).matrixL();
  const int n = 40000;
  a.draws = Eigen::MatrixXd::Zero(n, a.layout.width);
  for (int l = 0; l < n; ++l) a.draws.row(l).segment(a.layout.xi, ctx.nxi()) = r.mvnormal(Eigen::VectorXd::Zero(ctx.nxi()), L).transpose();
  CHECK(std::abs(bf_linearity(a, ctx, 0).log_bf10) < 0.1);
}
