// Independent reference computations shared by the tests.
#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include <boost/math/special_functions/beta.hpp>
#include <boost/math/special_functions/erf.hpp>

namespace oracle {

inline double phi_cdf(double x) { return 0.5 * boost::math::erfc(-x / std::sqrt(2.0)); }

// Kolmogorov-Smirnov distance between a sample and a continuous cdf.
inline double ks_distance(std::vector<double> xs, const std::function<double(double)>& cdf) {
  std::sort(xs.begin(), xs.end());
  const double n = static_cast<double>(xs.size());
  double d = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double f = cdf(xs[i]);
    d = std::max({d, std::abs(f - static_cast<double>(i) / n), std::abs(static_cast<double>(i + 1) / n - f)});
  }
  return d;
}

// Asymptotic p-value of sqrt(n) D.
inline double ks_pvalue(double d, std::size_t n) {
  const double t = std::sqrt(static_cast<double>(n)) * d;
  double s = 0.0;
  for (int k = 1; k < 200; ++k) s += (k % 2 ? 1.0 : -1.0) * std::exp(-2.0 * k * k * t * t);
  return std::clamp(2.0 * s, 0.0, 1.0);
}

// Bernstein cdf as a weighted sum of regularized incomplete beta functions:
// sum_j w_j I_x(j, J - j + 1).
inline double bernstein_cdf(double x, const std::vector<double>& w) {
  const int J = static_cast<int>(w.size());
  double s = 0.0;
  for (int j = 1; j <= J; ++j) s += w[static_cast<std::size_t>(j - 1)] * boost::math::ibeta(j, J - j + 1, x);
  return s;
}

inline double bernstein_pdf(double x, const std::vector<double>& w) {
  const int J = static_cast<int>(w.size());
  double s = 0.0;
  for (int j = 1; j <= J; ++j) s += w[static_cast<std::size_t>(j - 1)] * boost::math::ibeta_derivative(j, J - j + 1, x);
  return s;
}

inline double mean(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

inline double variance(const std::vector<double>& v) {
  const double m = mean(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return s / static_cast<double>(v.size() - 1);
}

inline double correlation(const std::vector<double>& a, const std::vector<double>& b) {
  const double ma = mean(a), mb = mean(b);
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  return sab / std::sqrt(saa * sbb);
}

}  // namespace oracle
