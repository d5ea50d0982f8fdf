#pragma once

#include <span>
#include <vector>

#include <Eigen/Dense>

namespace spsurv {

// Cubic B-spline term u(x) = sum_k xi_k B_k(x) for a partially linear predictor.
// The raw basis has K+2 functions; the first and last are dropped and the
// remaining K columns are centered over the fitting data.
struct SplineTerm {
  static constexpr int kDegree = 3;

  int covariate = -1;          // column of the dataset design
  int K = 0;                   // retained basis functions
  double lo = 0.0, hi = 0.0;   // boundary knots
  std::vector<double> knots;   // full clamped knot vector
  Eigen::VectorXd column_means;
  Eigen::MatrixXd design;      // n x K centered design
  double g = 0.0;

  int raw_count() const { return K + 2; }
};

// g = [log 10 / Phi^{-1}(0.9)]^2 / dim
double default_g(int dim, double M = 10.0, double q = 0.9);

// Raw (pre-drop, uncentered) basis at x by the triangular de Boor recursion.
// Values outside [lo, hi] are clamped; `clamped` reports it.
std::vector<double> raw_basis(const SplineTerm& term, double x, bool* clamped = nullptr);

SplineTerm build_basis(std::span<const double> values, int K, int covariate = -1);

// Centered retained basis row at x.
Eigen::VectorXd basis_row(const SplineTerm& term, double x);
double eval_term(const SplineTerm& term, double x, const Eigen::VectorXd& xi);

// Prior covariance g n (X'X)^{-1}; a ridge is added when X'X is numerically singular.
Eigen::MatrixXd spline_prior_covariance(const SplineTerm& term);

// Type-7 sample quantile of sorted data.
double quantile_sorted(std::span<const double> sorted, double prob);

}  // namespace spsurv
