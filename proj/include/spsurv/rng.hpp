#pragma once

#include <cstdint>
#include <limits>

#include <Eigen/Dense>

namespace spsurv {

// xoshiro256++ with SplitMix64 seeding. Streams are derived by hashing
// (seed, stream id), so every sampler block and every Monte Carlo replicate
// owns an independent generator whose output does not depend on how work is
// scheduled across threads.
class Rng {
 public:
  using result_type = std::uint64_t;

  explicit Rng(std::uint64_t seed = 0x5eedULL);

  static Rng stream(std::uint64_t seed, std::uint64_t stream_id);

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }
  result_type operator()();

  // Uniform on the open interval (0,1).
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  double normal();
  double normal(double mean, double sd) { return mean + sd * normal(); }
  double exponential(double rate);
  // Shape/rate parameterization.
  double gamma(double shape, double rate);
  double beta(double a, double b);
  int poisson(double mean);
  bool bernoulli(double p) { return uniform() < p; }
  std::size_t uniform_index(std::size_t n);

  // Draw from N(mean, L L') given the lower Cholesky factor L.
  Eigen::VectorXd mvnormal(const Eigen::VectorXd& mean, const Eigen::MatrixXd& chol_lower);

 private:
  std::uint64_t s_[4];
};

std::uint64_t splitmix64(std::uint64_t& state);

}  // namespace spsurv
