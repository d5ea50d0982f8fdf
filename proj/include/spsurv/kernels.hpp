#pragma once

#include <span>
#include <vector>

#include <Eigen/Dense>

#include "spsurv/baseline.hpp"
#include "spsurv/data.hpp"
#include "spsurv/models.hpp"

namespace spsurv {

// Per-observation log-likelihood over the whole dataset. Each writes out[i]
// for every record and returns the fixed-order pairwise sum of `out`, so the
// serial reference and the OpenMP kernel agree bit for bit.
double loglik_serial(ModelKind model, const Dataset& data, std::span<const double> eta, const TbpBaseline& base,
                     std::span<double> out);
double loglik_parallel(ModelKind model, const Dataset& data, std::span<const double> eta, const TbpBaseline& base,
                       std::span<double> out);

// Recomputes out[i] only for the listed records (a location's subjects).
void loglik_subset(ModelKind model, const Dataset& data, std::span<const int> rows, std::span<const double> eta,
                   const TbpBaseline& base, std::span<double> out);

// eta_i = x_i' beta_eff + offset_i + v[location(i)]; offset carries spline terms.
void linear_predictor(const Dataset& data, const Eigen::VectorXd& beta_eff, const Eigen::VectorXd& offset,
                      const Eigen::VectorXd& frailty, std::span<double> eta);

std::size_t count_nonfinite(std::span<const double> values);

// Threads used by the parallel kernel; 0 restores the OpenMP default.
void set_kernel_threads(int threads);
int kernel_threads();

}  // namespace spsurv
