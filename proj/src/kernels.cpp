#include "spsurv/kernels.hpp"

#include <atomic>
#include <cmath>

#include <omp.h>

#include "spsurv/special.hpp"

namespace spsurv {

namespace {
std::atomic<int> g_threads{0};
}

void set_kernel_threads(int threads) { g_threads = threads < 0 ? 0 : threads; }

int kernel_threads() {
  const int t = g_threads.load();
  return t > 0 ? t : omp_get_max_threads();
}

double loglik_serial(ModelKind model, const Dataset& data, std::span<const double> eta, const TbpBaseline& base,
                     std::span<double> out) {
  const auto& obs = data.observations();
  for (std::size_t i = 0; i < obs.size(); ++i) out[i] = obs_loglik(model, obs[i], eta[i], base);
  return pairwise_sum(out.first(obs.size()));
}

double loglik_parallel(ModelKind model, const Dataset& data, std::span<const double> eta, const TbpBaseline& base,
                       std::span<double> out) {
  const auto& obs = data.observations();
  const auto n = static_cast<std::ptrdiff_t>(obs.size());
  // Small problems are not worth waking the thread team.
  const int threads = n < 256 ? 1 : kernel_threads();
#pragma omp parallel for schedule(static) num_threads(threads)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const auto k = static_cast<std::size_t>(i);
    out[k] = obs_loglik(model, obs[k], eta[k], base);
  }
  return pairwise_sum(out.first(obs.size()));
}

void loglik_subset(ModelKind model, const Dataset& data, std::span<const int> rows, std::span<const double> eta,
                   const TbpBaseline& base, std::span<double> out) {
  const auto& obs = data.observations();
  for (int r : rows) {
    const auto k = static_cast<std::size_t>(r);
    out[k] = obs_loglik(model, obs[k], eta[k], base);
  }
}

void linear_predictor(const Dataset& data, const Eigen::VectorXd& beta_eff, const Eigen::VectorXd& offset,
                      const Eigen::VectorXd& frailty, std::span<double> eta) {
  const auto n = static_cast<Eigen::Index>(data.n());
  Eigen::Map<Eigen::VectorXd> e(eta.data(), n);
  if (data.p() > 0)
    e.noalias() = data.design() * beta_eff;
  else
    e.setZero();
  if (offset.size() == n) e += offset;
  if (frailty.size() > 0) {
    const auto& obs = data.observations();
    for (Eigen::Index i = 0; i < n; ++i) e[i] += frailty[obs[static_cast<std::size_t>(i)].location];
  }
}

std::size_t count_nonfinite(std::span<const double> values) {
  std::size_t c = 0;
  for (double v : values) c += !std::isfinite(v);
  return c;
}

}  // namespace spsurv
