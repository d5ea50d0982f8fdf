#include "spsurv/criteria.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "spsurv/log.hpp"
#include "spsurv/special.hpp"

namespace spsurv {

DicResult dic(std::span<const double> totals, double at_mean) {
  if (totals.empty()) throw std::invalid_argument("DIC needs at least one draw");
  const double mean = pairwise_sum(totals) / static_cast<double>(totals.size());
  DicResult r;
  r.p_d = 2.0 * (at_mean - mean);
  r.dic = -2.0 * at_mean + 2.0 * r.p_d;
  return r;
}

DicResult dic(const PosteriorArchive& archive) {
  return dic({archive.loglik_total.data(), static_cast<std::size_t>(archive.loglik_total.size())}, archive.loglik_at_mean);
}

LpmlResult lpml(const Eigen::MatrixXd& loglik, bool truncate) {
  const auto L = loglik.rows();
  if (L < 2) throw std::invalid_argument("LPML needs at least two draws");
  const double log_l = std::log(static_cast<double>(L));
  LpmlResult r;
  r.log_cpo.resize(loglik.cols());
  std::vector<double> lw(static_cast<std::size_t>(L)), num(static_cast<std::size_t>(L));
  for (Eigen::Index i = 0; i < loglik.cols(); ++i) {
    for (Eigen::Index l = 0; l < L; ++l) lw[static_cast<std::size_t>(l)] = -loglik(l, i);
    if (truncate) {
      const double cap = 0.5 * log_l + log_sum_exp(lw) - log_l;
      for (double& w : lw) w = std::min(w, cap);
    }
    for (Eigen::Index l = 0; l < L; ++l) num[static_cast<std::size_t>(l)] = loglik(l, i) + lw[static_cast<std::size_t>(l)];
    r.log_cpo[i] = log_sum_exp(num) - log_sum_exp(lw);
  }
  r.lpml = pairwise_sum({r.log_cpo.data(), static_cast<std::size_t>(r.log_cpo.size())});
  return r;
}

WaicResult waic(const Eigen::MatrixXd& loglik) {
  const auto L = loglik.rows();
  if (L < 2) throw std::invalid_argument("WAIC needs at least two draws");
  const double log_l = std::log(static_cast<double>(L));
  std::vector<double> col(static_cast<std::size_t>(L));
  double lppd = 0.0, pw = 0.0;
  for (Eigen::Index i = 0; i < loglik.cols(); ++i) {
    for (Eigen::Index l = 0; l < L; ++l) col[static_cast<std::size_t>(l)] = loglik(l, i);
    lppd += log_sum_exp(col) - log_l;
    const double m = pairwise_sum(col) / static_cast<double>(L);
    double ss = 0.0;
    for (double x : col) ss += (x - m) * (x - m);
    pw += ss / static_cast<double>(L - 1);
  }
  return {-2.0 * lppd + 2.0 * pw, pw};
}

double pseudo_bayes_factor(double lpml_a, double lpml_b) { return std::exp(lpml_a - lpml_b); }

void column_moments(const Eigen::MatrixXd& draws, Eigen::VectorXd& mean, Eigen::MatrixXd& cov) {
  mean = draws.colwise().mean().transpose();
  const Eigen::MatrixXd centered = draws.rowwise() - mean.transpose();
  cov = centered.transpose() * centered / static_cast<double>(std::max<Eigen::Index>(draws.rows() - 1, 1));
}

BayesFactor bf_parametric(const PosteriorArchive& archive) {
  const auto& l = archive.layout;
  if (l.J < 2) throw std::invalid_argument("the parametric Bayes factor needs J >= 2");
  if (archive.draws.rows() < 2) throw std::invalid_argument("the parametric Bayes factor needs at least two draws");
  const double alpha_hat = archive.draws.col(l.alpha).mean();
  Eigen::VectorXd m;
  Eigen::MatrixXd s;
  column_moments(archive.draws.middleCols(l.z, l.J - 1), m, s);
  const auto post = mvn_log_density(Eigen::VectorXd::Zero(l.J - 1), m, s);
  if (post.ridged) warn("posterior covariance of z is singular; ridge added");
  return {alpha_log_prior_at_zero(alpha_hat, l.J) - post.log_density, post.ridged};
}

BayesFactor bf_linearity(const PosteriorArchive& archive, const ModelContext& ctx, int term) {
  if (term < 0 || term >= static_cast<int>(ctx.splines().size())) throw std::invalid_argument("no such spline term");
  int offset = 0;
  for (int k = 0; k < term; ++k) offset += ctx.splines()[static_cast<std::size_t>(k)].K;
  const int K = ctx.splines()[static_cast<std::size_t>(term)].K;
  const auto& l = archive.layout;
  const Eigen::MatrixXd prior_cov = archive.priors.W0.block(l.p + offset, l.p + offset, K, K);
  const auto prior = mvn_log_density(Eigen::VectorXd::Zero(K), Eigen::VectorXd::Zero(K), prior_cov);
  Eigen::VectorXd m;
  Eigen::MatrixXd s;
  column_moments(archive.draws.middleCols(l.xi + offset, K), m, s);
  const auto post = mvn_log_density(Eigen::VectorXd::Zero(K), m, s);
  if (post.ridged) warn("posterior covariance of spline coefficients is singular; ridge added");
  return {prior.log_density - post.log_density, post.ridged || prior.ridged};
}

EssResult ess(std::span<const double> x) {
  const auto n = x.size();
  if (n < 10) throw std::invalid_argument("ESS needs at least 10 draws");
  const double L = static_cast<double>(n);
  double mean = 0.0;
  for (double v : x) mean += v;
  mean /= L;
  const auto acov = [&](std::size_t k) {
    double s = 0.0;
    for (std::size_t t = 0; t + k < n; ++t) s += (x[t] - mean) * (x[t + k] - mean);
    return s / L;
  };
  const double g0 = acov(0);
  EssResult r;
  if (!(g0 > 1e-300 * std::max(1.0, mean * mean))) {
    r.ess = L;
    r.zero_variance = true;
    return r;
  }
  // Sum of autocovariance pairs while positive, forced to be non-increasing.
  double sum = 0.0, prev = kInf;
  for (std::size_t m = 0; 2 * m + 1 < n; ++m) {
    double pair = acov(2 * m) + acov(2 * m + 1);
    if (pair <= 0.0) break;
    pair = std::min(pair, prev);
    sum += pair;
    prev = pair;
  }
  const double tau = (-g0 + 2.0 * sum) / g0;
  double e = tau > 0.0 ? L / tau : kInf;
  if (!(e >= 1.0 && e <= L)) {
    r.clamped = true;
    e = std::clamp(e, 1.0, L);
  }
  r.ess = e;
  return r;
}

}  // namespace spsurv
