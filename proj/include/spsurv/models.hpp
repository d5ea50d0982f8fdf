#pragma once

#include <algorithm>
#include <cmath>
#include <concepts>
#include <string>

#include "spsurv/baseline.hpp"
#include "spsurv/data.hpp"
#include "spsurv/special.hpp"

namespace spsurv {

enum class ModelKind { AFT, PH, PO };

const char* to_string(ModelKind kind);
ModelKind parse_model(const std::string& name);

// Any type with `Value eval(double t, bool need_density) const` returning
// {surv, cdf, log_dens} can act as the baseline, e.g. TbpBaseline or a
// closed-form simulation truth.
template <class B>
concept BaselineLike = requires(const B& b, double t) {
  { b.eval(t, true).surv } -> std::convertible_to<double>;
  { b.eval(t, true).cdf } -> std::convertible_to<double>;
  { b.eval(t, true).log_dens } -> std::convertible_to<double>;
};

struct ModelValue {
  double surv;
  double cdf;
  double log_dens;  // -inf when not requested
};

inline double log_surv_of(double surv, double cdf) { return surv > 0.5 ? std::log1p(-cdf) : std::log(surv); }

// Survival, distribution and log density of a subject with linear predictor eta.
//   AFT: S0(e^eta t);  PH: S0(t)^{e^eta};  PO: e^{-eta} S0 / (1 + (e^{-eta}-1) S0).
template <BaselineLike B>
ModelValue model_eval(ModelKind model, double t, double eta, const B& base, bool need_density) {
  if (t <= 0.0) return {1.0, 0.0, -kInf};
  if (std::isinf(t)) return {0.0, 1.0, -kInf};
  const double c = std::exp(eta);
  switch (model) {
    case ModelKind::AFT: {
      const auto v = base.eval(c * t, need_density);
      return {v.surv, v.cdf, need_density ? eta + v.log_dens : -kInf};
    }
    case ModelKind::PH: {
      const auto v = base.eval(t, need_density);
      const double log_s0 = log_surv_of(v.surv, v.cdf);
      const double log_s = c * log_s0;
      return {std::exp(log_s), -std::expm1(log_s), need_density ? eta + (c - 1.0) * log_s0 + v.log_dens : -kInf};
    }
    case ModelKind::PO: {
      const auto v = base.eval(t, need_density);
      // Multiplying through by e^eta gives S = S0 / (S0 + e^eta F0).
      const double den = v.surv + c * v.cdf;
      return {v.surv / den, c * v.cdf / den, need_density ? eta + v.log_dens - 2.0 * std::log(den) : -kInf};
    }
  }
  return {1.0, 0.0, -kInf};
}

template <BaselineLike B>
double model_surv(ModelKind model, double t, double eta, const B& base) {
  return model_eval(model, t, eta, base, false).surv;
}

template <BaselineLike B>
double model_dens(ModelKind model, double t, double eta, const B& base) {
  return std::exp(model_eval(model, t, eta, base, true).log_dens);
}

template <BaselineLike B>
double model_hazard(ModelKind model, double t, double eta, const B& base) {
  const auto v = model_eval(model, t, eta, base, true);
  return std::exp(v.log_dens) / v.surv;
}

inline constexpr double kMassFloor = 1e-300;

// Log-likelihood contribution of one record. Interval mass is formed as a
// difference of probabilities (from whichever tail is smaller) and floored at
// 1e-300; an interval with exactly zero mass yields -inf.
template <BaselineLike B>
double obs_loglik(ModelKind model, const CensoredObservation& o, double eta, const B& base) {
  double ll;
  switch (o.kind()) {
    case CensoringKind::Exact:
      ll = model_eval(model, o.a, eta, base, true).log_dens;
      break;
    case CensoringKind::Right: {
      const auto va = model_eval(model, o.a, eta, base, false);
      ll = log_surv_of(va.surv, va.cdf);
      break;
    }
    default: {
      const auto va = model_eval(model, o.a, eta, base, false);
      const auto vb = model_eval(model, o.b, eta, base, false);
      const double mass = va.surv <= 0.5 ? va.surv - vb.surv : vb.cdf - va.cdf;
      if (!(mass > 0.0)) return -kInf;
      ll = std::log(std::max(mass, kMassFloor));
      break;
    }
  }
  if (o.u > 0.0) {
    const auto vu = model_eval(model, o.u, eta, base, false);
    ll -= log_surv_of(vu.surv, vu.cdf);
  }
  return ll;
}

}  // namespace spsurv
