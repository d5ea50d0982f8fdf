#include "spsurv/splines.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "spsurv/log.hpp"
#include "spsurv/special.hpp"

namespace spsurv {

double default_g(int dim, double M, double q) {
  const double r = std::log(M) / normal_quantile(q);
  return r * r / dim;
}

double quantile_sorted(std::span<const double> sorted, double prob) {
  if (sorted.empty()) throw std::invalid_argument("quantile of empty sample");
  const double h = (static_cast<double>(sorted.size()) - 1.0) * prob;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

std::vector<double> raw_basis(const SplineTerm& term, double x, bool* clamped) {
  constexpr int p = SplineTerm::kDegree;
  const auto& t = term.knots;
  const int nb = term.raw_count();
  bool c = false;
  if (x < term.lo) x = term.lo, c = true;
  if (x > term.hi) x = term.hi, c = true;
  if (clamped) *clamped = c;

  // Knot span: t[mu] <= x < t[mu+1], with the right boundary folded into the last span.
  int mu = nb - 1;
  if (x < term.hi) {
    mu = static_cast<int>(std::upper_bound(t.begin(), t.end(), x) - t.begin()) - 1;
    mu = std::clamp(mu, p, nb - 1);
  }

  double left[p + 1], right[p + 1], n[p + 1];
  n[0] = 1.0;
  for (int j = 1; j <= p; ++j) {
    left[j] = x - t[static_cast<std::size_t>(mu + 1 - j)];
    right[j] = t[static_cast<std::size_t>(mu + j)] - x;
    double saved = 0.0;
    for (int r = 0; r < j; ++r) {
      const double tmp = n[r] / (right[r + 1] + left[j - r]);
      n[r] = saved + right[r + 1] * tmp;
      saved = left[j - r] * tmp;
    }
    n[j] = saved;
  }
  std::vector<double> out(static_cast<std::size_t>(nb), 0.0);
  for (int j = 0; j <= p; ++j) out[static_cast<std::size_t>(mu - p + j)] = n[j];
  return out;
}

SplineTerm build_basis(std::span<const double> values, int K, int covariate) {
  if (K < 2) throw std::invalid_argument("spline basis needs K >= 2 retained functions");
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  const auto distinct = std::unique(sorted.begin(), sorted.end()) - sorted.begin();
  if (distinct < K + 5) throw std::invalid_argument("too few distinct values for the spline basis");
  sorted.assign(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());

  SplineTerm term;
  term.covariate = covariate;
  term.K = K;
  term.lo = sorted.front();
  term.hi = sorted.back();
  const int interior = K - 2;
  for (int i = 0; i <= SplineTerm::kDegree; ++i) term.knots.push_back(term.lo);
  for (int i = 1; i <= interior; ++i) term.knots.push_back(quantile_sorted(sorted, static_cast<double>(i) / (interior + 1)));
  for (int i = 0; i <= SplineTerm::kDegree; ++i) term.knots.push_back(term.hi);

  const auto n = static_cast<Eigen::Index>(values.size());
  Eigen::MatrixXd raw(n, K);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto b = raw_basis(term, values[static_cast<std::size_t>(i)]);
    for (int k = 0; k < K; ++k) raw(i, k) = b[static_cast<std::size_t>(k + 1)];
  }
  term.column_means = raw.colwise().mean().transpose();
  term.design = raw.rowwise() - term.column_means.transpose();
  term.g = default_g(K);
  return term;
}

Eigen::VectorXd basis_row(const SplineTerm& term, double x) {
  bool clamped = false;
  const auto b = raw_basis(term, x, &clamped);
  if (clamped) warn("spline covariate value outside the fitted range was clamped");
  Eigen::VectorXd row(term.K);
  for (int k = 0; k < term.K; ++k) row[k] = b[static_cast<std::size_t>(k + 1)] - term.column_means[k];
  return row;
}

double eval_term(const SplineTerm& term, double x, const Eigen::VectorXd& xi) { return basis_row(term, x).dot(xi); }

Eigen::MatrixXd spline_prior_covariance(const SplineTerm& term) {
  const double n = static_cast<double>(term.design.rows());
  Eigen::MatrixXd xtx = term.design.transpose() * term.design;
  Eigen::LLT<Eigen::MatrixXd> llt(xtx);
  if (llt.info() != Eigen::Success || llt.rcond() < 1e-12) {
    warn("spline design is numerically singular; adding a ridge");
    xtx.diagonal().array() += 1e-8 * std::max(xtx.diagonal().maxCoeff(), 1.0);
    llt.compute(xtx);
  }
  return term.g * n * llt.solve(Eigen::MatrixXd::Identity(term.K, term.K));
}

}  // namespace spsurv
