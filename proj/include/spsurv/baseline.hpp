#pragma once

#include <span>
#include <string>
#include <vector>

namespace spsurv {

enum class CenteringFamily { LogLogistic, LogNormal, Weibull };

const char* to_string(CenteringFamily family);
CenteringFamily parse_family(const std::string& name);

// Survival, distribution and log density of the centering family at t > 0.
// With z = exp(theta2) * (log t + theta1):
//   log-logistic S = 1/(1+e^z), log-normal S = 1-Phi(z), Weibull S = exp(-e^z).
struct CenteringValue {
  double surv;
  double cdf;
  double log_dens;
};

CenteringValue centering_eval(CenteringFamily family, double theta1, double theta2, double t);

// Bernstein mixture of Beta(j, J-j+1) distributions with weights w (J = w.size()).
double bernstein_cdf(double x, std::span<const double> w);
double bernstein_pdf(double x, std::span<const double> w);

// Unchecked kernel for the hot loop. x and xc = 1-x are passed separately so
// that either tail keeps relative precision; cumw[k] = w_1 + ... + w_{k+1}.
struct BernsteinValue {
  double cdf;
  double sf;  // 1 - cdf, summed directly
  double pdf;
};

BernsteinValue bernstein_eval(double x, double xc, std::span<const double> w, std::span<const double> cumw,
                              bool need_pdf);

// Transformed Bernstein polynomial baseline S0(t) = D(S_theta(t) | J, w).
class TbpBaseline {
 public:
  static constexpr double kClamp = 1e-15;

  TbpBaseline() = default;
  TbpBaseline(CenteringFamily family, double theta1, double theta2, std::vector<double> weights);

  // J = z.size() + 1 with the last logit pinned at 0.
  static TbpBaseline from_logits(CenteringFamily family, double theta1, double theta2, std::span<const double> z);
  // Equal weights, which reproduces the centering family exactly.
  static TbpBaseline centered(CenteringFamily family, double theta1, double theta2, int J);

  int J() const { return static_cast<int>(w_.size()); }
  CenteringFamily family() const { return family_; }
  double theta1() const { return theta1_; }
  double theta2() const { return theta2_; }
  const std::vector<double>& weights() const { return w_; }
  std::vector<double> logits() const;

  struct Value {
    double surv;
    double cdf;
    double log_dens;  // -inf when not requested
  };

  Value eval(double t, bool need_density) const;
  double surv(double t) const { return eval(t, false).surv; }
  double dens(double t) const;

 private:
  CenteringFamily family_ = CenteringFamily::LogLogistic;
  double theta1_ = 0.0;
  double theta2_ = 0.0;
  std::vector<double> w_{1.0};
  std::vector<double> cumw_{1.0};
};

// Softmax with the last logit fixed at zero.
std::vector<double> weights_from_logits(std::span<const double> z);

// log of the Dirichlet(alpha,...,alpha) density pushed to the logit scale
// (includes the Jacobian prod w_j).
double tbp_log_prior(std::span<const double> z, double alpha);

// log p(z = 0 | alpha) = log Gamma(alpha J) - J (alpha log J + log Gamma(alpha)).
double alpha_log_prior_at_zero(double alpha, int J);

}  // namespace spsurv
