#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "spsurv/baseline.hpp"
#include "spsurv/data.hpp"
#include "spsurv/frailty.hpp"
#include "spsurv/models.hpp"
#include "spsurv/rng.hpp"

namespace spsurv {

// Baseline used to generate data: the two-component lognormal mixture
// S0(t) = 1 - 0.5[Phi(2(log t + 1)) + Phi(2(log t - 1))], or a centering family.
struct TruthBaseline {
  enum class Kind { Bimodal, Parametric } kind = Kind::Bimodal;
  CenteringFamily family = CenteringFamily::LogLogistic;
  double theta1 = 0.0, theta2 = 0.0;

  static TruthBaseline bimodal() { return {}; }
  static TruthBaseline parametric(CenteringFamily f, double t1, double t2) { return {Kind::Parametric, f, t1, t2}; }

  struct Value {
    double surv, cdf, log_dens;
  };
  Value eval(double t, bool need_density = true) const;
  double surv(double t) const { return eval(t, false).surv; }
};

// Solves F_x(t) = u by geometric bracket expansion from [1e-10, 1e3] and a
// bracketing root finder on log t.
double sample_survival_time(ModelKind model, double eta, const TruthBaseline& base, double u);

struct CensoringScheme {
  enum class Kind { None, Mixed } kind = Kind::Mixed;
  double right_fraction = 0.5;            // share sent to the right-censoring arm
  double censor_lo = 2.0, censor_hi = 6.0; // Uniform censoring times
  double visits_mean = 2.0;               // (N - 1) ~ Poisson
  double gap_rate = 1.0;                  // inspection gaps ~ Exp
};

struct CensoredTime {
  double a, b;
};

// Half right-censored by Uniform(2,6) times (exact when the event comes
// first), half inspected at Poisson-many exponential gaps.
std::vector<CensoredTime> apply_censoring(std::span<const double> times, const CensoringScheme& scheme, Rng& rng);

// ICAR: N(0, tau2 (D - E)^+), centered. GRF: N(0, tau2 R(phi, nu)).
Eigen::VectorXd gen_frailty_truth(const FrailtySpec& spec, double tau2, double phi, Rng& rng);

enum class CovariateDesign { Sim1, Sim4Ex1, Sim4Ex2, Sim4Ex3 };

CovariateDesign parse_covariate_design(const std::string& name);
const char* to_string(CovariateDesign d);
std::vector<std::string> covariate_names(CovariateDesign d);
Eigen::MatrixXd gen_covariates(CovariateDesign design, int n, Rng& rng);

// The bundled 37-region adjacency.
Eigen::MatrixXd builtin_adjacency37();

struct SimDesign {
  std::string name = "sim1";
  ModelKind model = ModelKind::PH;
  CovariateDesign covariates = CovariateDesign::Sim1;
  Eigen::VectorXd beta;
  TruthBaseline baseline;
  FrailtyKind frailty = FrailtyKind::ICAR;
  int m = 37, per_location = 20;
  double tau2 = 1.0, phi = 1.0, nu = 1.0;
  double region = 10.0;  // GRF sites uniform on [0, region]^2
  CensoringScheme censoring;

  // sim1, sim3, sim4ex1, sim4ex2, sim4ex3, parametric
  static SimDesign preset(const std::string& name, ModelKind model);
};

struct SimulatedData {
  Dataset data;
  FrailtySpec frailty;
  Eigen::VectorXd v;               // true frailties
  std::vector<double> true_times;
};

SimulatedData simulate(const SimDesign& design, std::uint64_t seed);

}  // namespace spsurv
