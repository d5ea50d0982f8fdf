#include "spsurv/baseline.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "spsurv/special.hpp"

namespace spsurv {

const char* to_string(CenteringFamily family) {
  switch (family) {
    case CenteringFamily::LogLogistic: return "loglogistic";
    case CenteringFamily::LogNormal: return "lognormal";
    case CenteringFamily::Weibull: return "weibull";
  }
  return "?";
}

CenteringFamily parse_family(const std::string& name) {
  if (name == "loglogistic" || name == "log-logistic") return CenteringFamily::LogLogistic;
  if (name == "lognormal" || name == "log-normal") return CenteringFamily::LogNormal;
  if (name == "weibull") return CenteringFamily::Weibull;
  throw std::invalid_argument("unknown centering family '" + name + "'");
}

namespace {

inline double softplus(double z) { return z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }

}  // namespace

CenteringValue centering_eval(CenteringFamily family, double theta1, double theta2, double t) {
  if (t <= 0.0) return {1.0, 0.0, -kInf};
  if (std::isinf(t)) return {0.0, 1.0, -kInf};
  const double scale = std::exp(theta2);
  const double logt = std::log(t);
  const double z = scale * (logt + theta1);
  const double jac = theta2 - logt;
  switch (family) {
    case CenteringFamily::LogLogistic: {
      const double sp = softplus(z);
      return {std::exp(-sp), std::exp(z - sp), jac + z - 2.0 * sp};
    }
    case CenteringFamily::LogNormal:
      return {normal_sf(z), normal_cdf(z), jac + log_normal_pdf(z)};
    case CenteringFamily::Weibull: {
      const double ez = std::exp(z);
      return {std::exp(-ez), -std::expm1(-ez), jac + z - ez};
    }
  }
  return {1.0, 0.0, -kInf};
}

namespace {

// Calls f(k, C(N,k) x^k xc^(N-k)) for k = 0..N, starting from the end where the
// terms are largest so the ratio recursion never starts from an underflow.
template <class F>
inline void for_each_binomial(int N, double x, double xc, F&& f) {
  if (N == 0) {
    f(0, 1.0);
    return;
  }
  if (x <= xc) {
    const double r = x / xc;
    double b = std::pow(xc, N);
    for (int k = 0; k <= N; ++k) {
      f(k, b);
      b *= r * static_cast<double>(N - k) / static_cast<double>(k + 1);
    }
  } else {
    const double r = xc / x;
    double b = std::pow(x, N);
    for (int k = N; k >= 0; --k) {
      f(k, b);
      b *= r * static_cast<double>(k) / static_cast<double>(N - k + 1);
    }
  }
}

void check_simplex(std::span<const double> w) {
  if (w.empty()) throw std::invalid_argument("Bernstein weights are empty");
  double s = 0.0;
  for (double v : w) {
    if (!(v >= 0.0)) throw std::invalid_argument("Bernstein weights must be nonnegative");
    s += v;
  }
  if (std::abs(s - 1.0) > 1e-10) throw std::invalid_argument("Bernstein weights do not sum to 1");
}

std::vector<double> cumulative(std::span<const double> w) {
  std::vector<double> c(w.size());
  std::partial_sum(w.begin(), w.end(), c.begin());
  return c;
}

}  // namespace

BernsteinValue bernstein_eval(double x, double xc, std::span<const double> w, std::span<const double> cumw,
                              bool need_pdf) {
  const int J = static_cast<int>(w.size());
  // D(x) = sum_j w_j Delta_j(x) with Delta_j = sum_{k>=j} b_k, regrouped as
  // sum_k b_k (w_1 + ... + w_k).
  double cdf = 0.0, sf = 0.0;
  for_each_binomial(J, x, xc, [&](int k, double b) {
    const double below = k > 0 ? cumw[static_cast<std::size_t>(k - 1)] : 0.0;
    cdf += b * below;
    sf += b * (1.0 - below);
  });
  double pdf = 0.0;
  if (need_pdf) {
    for_each_binomial(J - 1, x, xc, [&](int k, double c) { pdf += c * w[static_cast<std::size_t>(k)]; });
    pdf *= J;
  }
  return {cdf, sf, pdf};
}

double bernstein_cdf(double x, std::span<const double> w) {
  if (!(x >= 0.0 && x <= 1.0)) throw std::domain_error("bernstein_cdf: x outside [0,1]");
  check_simplex(w);
  const auto c = cumulative(w);
  return bernstein_eval(x, 1.0 - x, w, c, false).cdf;
}

double bernstein_pdf(double x, std::span<const double> w) {
  if (!(x >= 0.0 && x <= 1.0)) throw std::domain_error("bernstein_pdf: x outside [0,1]");
  check_simplex(w);
  const auto c = cumulative(w);
  return bernstein_eval(x, 1.0 - x, w, c, true).pdf;
}

TbpBaseline::TbpBaseline(CenteringFamily family, double theta1, double theta2, std::vector<double> weights)
    : family_(family), theta1_(theta1), theta2_(theta2), w_(std::move(weights)) {
  check_simplex(w_);
  cumw_ = cumulative(w_);
}

TbpBaseline TbpBaseline::from_logits(CenteringFamily family, double theta1, double theta2,
                                     std::span<const double> z) {
  return TbpBaseline(family, theta1, theta2, weights_from_logits(z));
}

TbpBaseline TbpBaseline::centered(CenteringFamily family, double theta1, double theta2, int J) {
  if (J < 1) throw std::invalid_argument("Bernstein degree must be positive");
  return TbpBaseline(family, theta1, theta2, std::vector<double>(static_cast<std::size_t>(J), 1.0 / J));
}

std::vector<double> TbpBaseline::logits() const {
  std::vector<double> z(w_.size() - 1);
  const double last = std::log(w_.back());
  for (std::size_t j = 0; j + 1 < w_.size(); ++j) z[j] = std::log(w_[j]) - last;
  return z;
}

TbpBaseline::Value TbpBaseline::eval(double t, bool need_density) const {
  if (t <= 0.0) return {1.0, 0.0, -kInf};
  if (std::isinf(t)) return {0.0, 1.0, -kInf};
  const CenteringValue c = centering_eval(family_, theta1_, theta2_, t);
  const double x = std::clamp(c.surv, kClamp, 1.0 - kClamp);
  const double xc = std::clamp(c.cdf, kClamp, 1.0 - kClamp);
  const BernsteinValue b = bernstein_eval(x, xc, w_, cumw_, need_density);
  return {b.cdf, b.sf, need_density ? std::log(b.pdf) + c.log_dens : -kInf};
}

double TbpBaseline::dens(double t) const {
  const double ld = eval(t, true).log_dens;
  return std::exp(ld);
}

std::vector<double> weights_from_logits(std::span<const double> z) {
  std::vector<double> ext(z.begin(), z.end());
  ext.push_back(0.0);
  const double lse = log_sum_exp(ext);
  for (double& v : ext) v = std::exp(v - lse);
  return ext;
}

double tbp_log_prior(std::span<const double> z, double alpha) {
  if (!(alpha > 0.0)) throw std::domain_error("tbp_log_prior: alpha must be positive");
  std::vector<double> ext(z.begin(), z.end());
  ext.push_back(0.0);
  const double lse = log_sum_exp(ext);
  const double J = static_cast<double>(ext.size());
  double s = 0.0;
  for (double v : ext) s += v - lse;
  return std::lgamma(alpha * J) - J * std::lgamma(alpha) + alpha * s;
}

double alpha_log_prior_at_zero(double alpha, int J) {
  if (!(alpha > 0.0)) throw std::domain_error("alpha_log_prior_at_zero: alpha must be positive");
  const double Jd = J;
  return std::lgamma(alpha * Jd) - Jd * (alpha * std::log(Jd) + std::lgamma(alpha));
}

}  // namespace spsurv
