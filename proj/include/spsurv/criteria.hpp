#pragma once

#include <span>
#include <vector>

#include <Eigen/Dense>

#include "spsurv/sampler.hpp"

namespace spsurv {

struct DicResult {
  double dic = 0.0;
  double p_d = 0.0;
};

// totals: log L(D|draw) per retained draw; at_mean: log L(D|posterior mean).
DicResult dic(std::span<const double> totals, double at_mean);
DicResult dic(const PosteriorArchive& archive);

struct LpmlResult {
  double lpml = 0.0;
  Eigen::VectorXd log_cpo;
};

// Harmonic-mean CPO with importance weights capped at sqrt(L) times their
// mean, all in log space. loglik is L x n.
LpmlResult lpml(const Eigen::MatrixXd& loglik, bool truncate = true);

struct WaicResult {
  double waic = 0.0;
  double p_w = 0.0;
};

WaicResult waic(const Eigen::MatrixXd& loglik);

// exp(lpml_a - lpml_b)
double pseudo_bayes_factor(double lpml_a, double lpml_b);

struct BayesFactor {
  double log_bf10 = 0.0;
  bool ridged = false;
  double bf10() const { return std::exp(log_bf10); }
};

// Savage-Dickey ratio for H0: all Bernstein weights equal (z = 0).
BayesFactor bf_parametric(const PosteriorArchive& archive);
// Savage-Dickey ratio for H0: spline coefficients of term `term` are zero.
BayesFactor bf_linearity(const PosteriorArchive& archive, const ModelContext& ctx, int term);

struct EssResult {
  double ess = 0.0;
  bool zero_variance = false;
  bool clamped = false;
};

// Initial monotone sequence estimator; clamped to [1, L].
EssResult ess(std::span<const double> series);

// Column mean and sample covariance of a block of draws.
void column_moments(const Eigen::MatrixXd& draws, Eigen::VectorXd& mean, Eigen::MatrixXd& cov);

}  // namespace spsurv
