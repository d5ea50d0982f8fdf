#pragma once

#include <limits>
#include <span>
#include <string>

#include <Eigen/Dense>

namespace spsurv {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

double normal_cdf(double x);
// Upper tail 1 - Phi(x), accurate for large x.
double normal_sf(double x);
double normal_pdf(double x);
double log_normal_pdf(double x);
// Inverse standard normal cdf (Wichura's AS 241, ~1e-16 relative accuracy).
double normal_quantile(double p);

double log_sum_exp(std::span<const double> values);

// Fixed-order pairwise summation. The result depends only on the input order,
// never on how the values were produced.
double pairwise_sum(std::span<const double> values);

struct MvnDensity {
  double log_density = 0.0;
  bool ridged = false;
};

// log N_k(x; mean, cov). A singular covariance gets a 1e-10 ridge on the
// diagonal and the result is flagged.
MvnDensity mvn_log_density(const Eigen::VectorXd& x, const Eigen::VectorXd& mean,
                           const Eigen::MatrixXd& cov);

// Lower Cholesky factor with escalating diagonal jitter for nearly singular
// input. Throws if the matrix cannot be made positive definite.
Eigen::MatrixXd robust_cholesky(const Eigen::MatrixXd& a, double initial_jitter = 1e-10);

}  // namespace spsurv
